#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spectemp/baselines.hpp"
#include "spectemp/matio.hpp"
#include "spectemp/tempering.hpp"
#include "spectemp/types.hpp"

namespace spectemp::evalhar {

enum class Similarity { cosine, dot };
enum class Metric { mrr_at_10, ndcg_at_10, recall_at_k };

/// Embeddings plus aligned string ids, the unit the searcher operates on.
struct LabeledMatrix {
  EmbeddingMatrix vectors;
  std::vector<std::string> ids;
};

/// Ranked lists per query, sorted by score descending with ties broken by
/// doc id ascending; at most `cutoff` entries each.
struct RetrievalRun {
  std::map<std::string, std::vector<std::pair<std::string, double>>> ranked;
  std::size_t cutoff = 10;
  Similarity similarity = Similarity::cosine;
};

struct MetricResult {
  double value = 0.0;
  std::size_t evaluated = 0;  // queries contributing to the mean
  std::size_t skipped = 0;    // run queries missing from the qrels
};

/// Synthetic retrieval task description: spiked covariance documents, each
/// query a noisy copy of one document.
struct SynthSpec {
  std::size_t n_docs = 0;
  std::size_t n_queries = 0;
  std::size_t dim = 0;
  std::vector<std::pair<std::size_t, double>> spikes;  // (count, variance)
  double noise_variance = 1.0;
  double query_perturbation = 0.0;  // tau
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthTask {
  LabeledMatrix docs;
  LabeledMatrix queries;
  matio::QrelsTable qrels;
};

/// One evaluated cell of the method x dim x seed grid.
struct EvalRow {
  std::string method;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  Metric metric = Metric::ndcg_at_10;
  double value = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  // Config snapshot echoed into exports.
  double tail_fraction = 0.10;
  std::size_t sample_cap = 0;
  Similarity similarity = Similarity::cosine;
  bool l2_normalize = true;

  /// Mean across seeds for one (method, k, metric) cell.
  double cell_mean(const std::string& method, std::size_t k, Metric metric) const;
  std::string to_csv() const;
};

/// Method selector for run_matrix: either the adaptive tempering transform
/// or one of the baselines.
struct MethodSpec {
  bool adaptive = false;  // true = derived gamma(k)
  baselines::Kind kind = baselines::Kind::pca;
  double gamma_fixed = 0.5;

  std::string name() const;
};

struct GridResult {
  double best_gamma = 0.0;
  double best_score = 0.0;
  std::vector<std::pair<double, double>> curve;  // (gamma, score)

  std::string curve_csv() const;
};

/// Exhaustive top-`cutoff` search. Scores are plain double dot products (or
/// cosine); ranked lists are deterministic including tie handling.
RetrievalRun exact_search(const LabeledMatrix& docs, const LabeledMatrix& queries,
                          Similarity similarity, std::size_t cutoff);

MetricResult mrr_at_10(const RetrievalRun& run, const matio::QrelsTable& qrels);
MetricResult ndcg_at_10(const RetrievalRun& run, const matio::QrelsTable& qrels);
/// Recall within the run cutoff (fraction of judged-positive docs retrieved).
MetricResult recall_at_cutoff(const RetrievalRun& run, const matio::QrelsTable& qrels);

MetricResult compute_metric(Metric metric, const RetrievalRun& run,
                            const matio::QrelsTable& qrels);

SynthTask generate_synthetic(const SynthSpec& spec);

/// Grid search over gamma in {0, step, ..., 1}; ties resolve to the smallest
/// gamma. Scoring uses the same transform + search pathway as everything
/// else so the curve is directly comparable to the adaptive result.
GridResult grid_search_gamma(const tempering::SpectralModel& model, const LabeledMatrix& docs,
                             const LabeledMatrix& queries, const matio::QrelsTable& qrels,
                             std::size_t k, double grid_step, Metric metric,
                             Similarity similarity, bool l2_normalize, std::size_t cutoff);

/// Full method x dim x seed grid over one task.
EvalReport run_matrix(const std::vector<MethodSpec>& methods, const std::vector<std::size_t>& dims,
                      const tempering::SpectralModel& model, const LabeledMatrix& docs,
                      const LabeledMatrix& queries, const matio::QrelsTable& qrels,
                      const std::vector<std::uint64_t>& seeds, Similarity similarity,
                      bool l2_normalize, std::size_t cutoff);

std::string metric_name(Metric metric);
std::string similarity_name(Similarity similarity);

}  // namespace spectemp::evalhar
