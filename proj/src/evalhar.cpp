#include "spectemp/evalhar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "spectemp/parallel.hpp"
#include "spectemp/rng.hpp"

namespace spectemp::evalhar {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Sequential double-precision dot product over float32 rows. Every scoring
// path (including the tiled kernel below) accumulates in exactly this order
// so results match a naive reference loop bit-for-bit.
double dot_f32(const float* a, const float* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double row_norm(const float* a, std::size_t n) { return std::sqrt(dot_f32(a, a, n)); }

// One ranked-list slot during selection.
struct Hit {
  double score;
  std::size_t doc;
};

}  // namespace

void SynthSpec::validate() const {
  if (n_docs == 0 || n_queries == 0 || dim == 0) {
    throw config_error("synthetic spec: counts and dim must be positive");
  }
  std::size_t total = 0;
  for (const auto& [count, variance] : spikes) {
    if (variance <= 0.0) throw config_error("synthetic spec: spike variances must be positive");
    total += count;
  }
  if (total > dim) {
    throw config_error("synthetic spec: spike counts exceed the dimension");
  }
  if (noise_variance <= 0.0) {
    throw config_error("synthetic spec: noise variance must be positive");
  }
  if (query_perturbation < 0.0) {
    throw config_error("synthetic spec: query perturbation must be non-negative");
  }
}

RetrievalRun exact_search(const LabeledMatrix& docs, const LabeledMatrix& queries,
                          Similarity similarity, std::size_t cutoff) {
  docs.vectors.require_valid();
  queries.vectors.require_valid();
  if (docs.vectors.cols != queries.vectors.cols) {
    throw shape_error("exact_search: docs dim " + std::to_string(docs.vectors.cols) +
                      " vs queries dim " + std::to_string(queries.vectors.cols));
  }
  if (docs.ids.size() != docs.vectors.rows || queries.ids.size() != queries.vectors.rows) {
    throw shape_error("exact_search: id list does not match matrix rows");
  }
  if (cutoff == 0) throw config_error("exact_search: cutoff must be positive");

  const std::size_t nd = docs.vectors.rows;
  const std::size_t nq = queries.vectors.rows;
  const std::size_t k = docs.vectors.cols;
  const std::size_t keep = std::min(cutoff, nd);

  // Dimension-major copy of the docs so the kernel streams doc values for a
  // fixed dimension contiguously.
  std::vector<float> docs_t(nd * k);
  for (std::size_t i = 0; i < nd; ++i) {
    const float* row = docs.vectors.row(i);
    for (std::size_t j = 0; j < k; ++j) docs_t[j * nd + i] = row[j];
  }

  std::vector<double> doc_norms(nd, 0.0);
  if (similarity == Similarity::cosine) {
    for (std::size_t i = 0; i < nd; ++i) doc_norms[i] = row_norm(docs.vectors.row(i), k);
  }

  auto tie_less = [&](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return docs.ids[a.doc] < docs.ids[b.doc];
  };

  // Queries are processed in blocks so the transposed doc matrix is streamed
  // once per block instead of once per query. Each (query, doc) dot product
  // still accumulates sequentially over dimensions into its own slot, so
  // every score equals dot_f32(query, doc) bit-for-bit.
  constexpr std::size_t kQueryBlock = 16;
  constexpr std::size_t kDocTile = 16;
  const std::size_t n_blocks = (nq + kQueryBlock - 1) / kQueryBlock;

  std::vector<std::vector<Hit>> results(nq);
  parallel_blocks(n_blocks, [&](std::size_t block_begin, std::size_t block_end) {
    std::vector<double> scores(kQueryBlock * nd);
    std::vector<double> qblock(kQueryBlock * k);
    for (std::size_t blk = block_begin; blk < block_end; ++blk) {
      const std::size_t q0 = blk * kQueryBlock;
      const std::size_t q1 = std::min(nq, q0 + kQueryBlock);
      const std::size_t qb = q1 - q0;

      for (std::size_t q = 0; q < qb; ++q) {
        const float* row = queries.vectors.row(q0 + q);
        for (std::size_t j = 0; j < k; ++j) qblock[j * kQueryBlock + q] = row[j];
      }

      for (std::size_t t0 = 0; t0 < nd; t0 += kDocTile) {
        const std::size_t tb = std::min(kDocTile, nd - t0);
        double acc[kQueryBlock][kDocTile] = {};
        for (std::size_t j = 0; j < k; ++j) {
          const float* col = docs_t.data() + j * nd + t0;
          const double* qv = qblock.data() + j * kQueryBlock;
          for (std::size_t q = 0; q < qb; ++q) {
            for (std::size_t t = 0; t < tb; ++t) {
              acc[q][t] += qv[q] * static_cast<double>(col[t]);
            }
          }
        }
        for (std::size_t q = 0; q < qb; ++q) {
          for (std::size_t t = 0; t < tb; ++t) scores[q * nd + t0 + t] = acc[q][t];
        }
      }

      for (std::size_t q = 0; q < qb; ++q) {
        double* qscores = scores.data() + q * nd;
        if (similarity == Similarity::cosine) {
          const double qn = row_norm(queries.vectors.row(q0 + q), k);
          for (std::size_t i = 0; i < nd; ++i) {
            const double denom = qn * doc_norms[i];
            qscores[i] = denom > 0.0 ? qscores[i] / denom : 0.0;
          }
        }

        // Bounded insertion selection of the top `keep` hits.
        std::vector<Hit>& top = results[q0 + q];
        top.reserve(keep + 1);
        for (std::size_t i = 0; i < nd; ++i) {
          const Hit hit{qscores[i], i};
          if (top.size() == keep && !tie_less(hit, top.back())) continue;
          auto pos = std::upper_bound(top.begin(), top.end(), hit, tie_less);
          top.insert(pos, hit);
          if (top.size() > keep) top.pop_back();
        }
      }
    }
  });

  RetrievalRun run;
  run.cutoff = cutoff;
  run.similarity = similarity;
  for (std::size_t q = 0; q < nq; ++q) {
    auto& list = run.ranked[queries.ids[q]];
    list.reserve(results[q].size());
    for (const Hit& hit : results[q]) list.emplace_back(docs.ids[hit.doc], hit.score);
  }
  return run;
}

namespace {

template <typename PerQuery>
MetricResult mean_over_queries(const RetrievalRun& run, const matio::QrelsTable& qrels,
                               PerQuery&& per_query) {
  MetricResult out;
  double sum = 0.0;
  for (const auto& [qid, list] : run.ranked) {
    const auto it = qrels.entries.find(qid);
    if (it == qrels.entries.end()) {
      ++out.skipped;
      continue;
    }
    sum += per_query(list, it->second);
    ++out.evaluated;
  }
  out.value = out.evaluated > 0 ? sum / static_cast<double>(out.evaluated) : 0.0;
  return out;
}

int relevance_of(const std::vector<std::pair<std::string, int>>& judged,
                 const std::string& docid) {
  for (const auto& [doc, rel] : judged) {
    if (doc == docid) return rel;
  }
  return 0;
}

}  // namespace

MetricResult mrr_at_10(const RetrievalRun& run, const matio::QrelsTable& qrels) {
  return mean_over_queries(run, qrels, [](const auto& list, const auto& judged) {
    const std::size_t depth = std::min<std::size_t>(10, list.size());
    for (std::size_t r = 0; r < depth; ++r) {
      if (relevance_of(judged, list[r].first) > 0) {
        return 1.0 / static_cast<double>(r + 1);
      }
    }
    return 0.0;
  });
}

MetricResult ndcg_at_10(const RetrievalRun& run, const matio::QrelsTable& qrels) {
  return mean_over_queries(run, qrels, [](const auto& list, const auto& judged) {
    const std::size_t depth = std::min<std::size_t>(10, list.size());
    double dcg = 0.0;
    for (std::size_t r = 0; r < depth; ++r) {
      const int rel = relevance_of(judged, list[r].first);
      if (rel > 0) {
        dcg += (std::exp2(static_cast<double>(rel)) - 1.0) / std::log2(static_cast<double>(r + 2));
      }
    }
    std::vector<int> rels;
    rels.reserve(judged.size());
    for (const auto& [doc, rel] : judged) {
      if (rel > 0) rels.push_back(rel);
    }
    std::sort(rels.rbegin(), rels.rend());
    double idcg = 0.0;
    for (std::size_t r = 0; r < std::min<std::size_t>(10, rels.size()); ++r) {
      idcg += (std::exp2(static_cast<double>(rels[r])) - 1.0) /
              std::log2(static_cast<double>(r + 2));
    }
    return idcg > 0.0 ? dcg / idcg : 0.0;
  });
}

MetricResult recall_at_cutoff(const RetrievalRun& run, const matio::QrelsTable& qrels) {
  return mean_over_queries(run, qrels, [](const auto& list, const auto& judged) {
    std::size_t total = 0;
    for (const auto& [doc, rel] : judged) {
      if (rel > 0) ++total;
    }
    if (total == 0) return 0.0;
    std::size_t found = 0;
    for (const auto& [doc, score] : list) {
      if (relevance_of(judged, doc) > 0) ++found;
    }
    return static_cast<double>(found) / static_cast<double>(total);
  });
}

MetricResult compute_metric(Metric metric, const RetrievalRun& run,
                            const matio::QrelsTable& qrels) {
  switch (metric) {
    case Metric::mrr_at_10: return mrr_at_10(run, qrels);
    case Metric::ndcg_at_10: return ndcg_at_10(run, qrels);
    case Metric::recall_at_k: return recall_at_cutoff(run, qrels);
  }
  throw config_error("unknown metric");
}

SynthTask generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  const std::size_t d = spec.dim;
  Rng rng(spec.seed);

  // Per-dimension variances before rotation: spikes first, noise floor after.
  std::vector<double> variances(d, spec.noise_variance);
  std::size_t next = 0;
  for (const auto& [count, variance] : spec.spikes) {
    for (std::size_t i = 0; i < count; ++i) variances[next++] = variance;
  }

  // Seeded random rotation via Gram-Schmidt on a Gaussian matrix,
  // column-major: column c is the image of canonical axis c.
  std::vector<double> rot(d * d);
  for (double& v : rot) v = rng.normal();
  for (std::size_t c = 0; c < d; ++c) {
    double* col = rot.data() + c * d;
    for (std::size_t p = 0; p < c; ++p) {
      const double* prev = rot.data() + p * d;
      double proj = 0.0;
      for (std::size_t r = 0; r < d; ++r) proj += col[r] * prev[r];
      for (std::size_t r = 0; r < d; ++r) col[r] -= proj * prev[r];
    }
    double nrm = 0.0;
    for (std::size_t r = 0; r < d; ++r) nrm += col[r] * col[r];
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) throw numerical_error("generate_synthetic: degenerate rotation column");
    for (std::size_t r = 0; r < d; ++r) col[r] /= nrm;
  }

  std::vector<double> stddev(d);
  for (std::size_t j = 0; j < d; ++j) stddev[j] = std::sqrt(variances[j]);

  auto id_of = [](const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%07zu", prefix, i);
    return std::string(buf);
  };

  SynthTask task;
  task.docs.vectors = EmbeddingMatrix(spec.n_docs, d);
  task.docs.vectors.label = "synthetic-docs";
  task.docs.ids.reserve(spec.n_docs);
  std::vector<double> z(d);
  for (std::size_t i = 0; i < spec.n_docs; ++i) {
    for (std::size_t j = 0; j < d; ++j) z[j] = rng.normal() * stddev[j];
    float* row = task.docs.vectors.row(i);
    for (std::size_t r = 0; r < d; ++r) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += rot[j * d + r] * z[j];
      row[r] = static_cast<float>(acc);
    }
    task.docs.ids.push_back(id_of("d", i));
  }

  // Source doc per query: without replacement while docs last, then uniform.
  std::vector<std::size_t> sources;
  if (spec.n_queries <= spec.n_docs) {
    std::vector<std::size_t> perm(spec.n_docs);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < spec.n_queries; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(spec.n_docs - i));
      std::swap(perm[i], perm[j]);
    }
    sources.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(spec.n_queries));
  } else {
    sources.resize(spec.n_queries);
    for (auto& s : sources) s = static_cast<std::size_t>(rng.below(spec.n_docs));
  }

  task.queries.vectors = EmbeddingMatrix(spec.n_queries, d);
  task.queries.vectors.label = "synthetic-queries";
  task.queries.ids.reserve(spec.n_queries);
  for (std::size_t i = 0; i < spec.n_queries; ++i) {
    const float* src = task.docs.vectors.row(sources[i]);
    float* row = task.queries.vectors.row(i);
    for (std::size_t r = 0; r < d; ++r) {
      row[r] = static_cast<float>(static_cast<double>(src[r]) +
                                  spec.query_perturbation * rng.normal());
    }
    const std::string qid = id_of("q", i);
    task.queries.ids.push_back(qid);
    task.qrels.entries[qid].emplace_back(task.docs.ids[sources[i]], 1);
  }
  return task;
}

GridResult grid_search_gamma(const tempering::SpectralModel& model, const LabeledMatrix& docs,
                             const LabeledMatrix& queries, const matio::QrelsTable& qrels,
                             std::size_t k, double grid_step, Metric metric,
                             Similarity similarity, bool l2_normalize, std::size_t cutoff) {
  if (!(grid_step > 0.0 && grid_step <= 1.0)) {
    throw config_error("grid step must lie in (0, 1]");
  }
  const double steps_real = 1.0 / grid_step;
  const auto steps = static_cast<std::size_t>(std::llround(steps_real));
  if (std::fabs(steps_real - static_cast<double>(steps)) > 1e-9) {
    throw config_error("grid step must divide 1.0 into an integer number of steps");
  }

  GridResult out;
  out.best_score = -1.0;
  for (std::size_t s = 0; s <= steps; ++s) {
    const double gamma = std::min(1.0, static_cast<double>(s) * grid_step);
    const tempering::TemperingPlan plan = tempering::build_plan(model, k, gamma, l2_normalize);
    LabeledMatrix tdocs{tempering::transform(plan, docs.vectors), docs.ids};
    LabeledMatrix tqueries{tempering::transform(plan, queries.vectors), queries.ids};
    const RetrievalRun run = exact_search(tdocs, tqueries, similarity, cutoff);
    const double score = compute_metric(metric, run, qrels).value;

    out.curve.emplace_back(gamma, score);
    if (score > out.best_score) {  // strict: ties keep the smaller gamma
      out.best_score = score;
      out.best_gamma = gamma;
    }
  }
  return out;
}

std::string GridResult::curve_csv() const {
  std::ostringstream csv;
  csv << "gamma,score\n";
  for (const auto& [gamma, score] : curve) {
    csv << format_double(gamma) << "," << format_double(score) << "\n";
  }
  return csv.str();
}

std::string MethodSpec::name() const {
  if (adaptive) return "spectemp";
  if (kind == baselines::Kind::fixed_gamma) {
    std::ostringstream s;
    s << "fixed_gamma_" << gamma_fixed;
    return s.str();
  }
  return baselines::kind_name(kind);
}

EvalReport run_matrix(const std::vector<MethodSpec>& methods, const std::vector<std::size_t>& dims,
                      const tempering::SpectralModel& model, const LabeledMatrix& docs,
                      const LabeledMatrix& queries, const matio::QrelsTable& qrels,
                      const std::vector<std::uint64_t>& seeds, Similarity similarity,
                      bool l2_normalize, std::size_t cutoff) {
  for (std::size_t k : dims) {
    if (k > docs.vectors.cols) {
      throw config_error("run_matrix: target dim " + std::to_string(k) +
                         " exceeds source dim " + std::to_string(docs.vectors.cols));
    }
  }
  if (methods.empty() || dims.empty() || seeds.empty()) {
    throw config_error("run_matrix: methods, dims and seeds must be non-empty");
  }

  EvalReport report;
  report.similarity = similarity;
  report.l2_normalize = l2_normalize;
  report.tail_fraction = model.profile.tail_fraction;
  report.sample_cap = model.sample_cap;

  for (const MethodSpec& method : methods) {
    for (std::size_t k : dims) {
      for (std::uint64_t seed : seeds) {
        LabeledMatrix tdocs;
        LabeledMatrix tqueries;
        if (method.adaptive) {
          const tempering::TemperingPlan plan =
              tempering::build_plan(model, k, std::nullopt, l2_normalize);
          tdocs = {tempering::transform(plan, docs.vectors), docs.ids};
          tqueries = {tempering::transform(plan, queries.vectors), queries.ids};
        } else {
          baselines::BaselineSpec spec;
          spec.kind = method.kind;
          spec.k = k;
          spec.seed = seed;
          spec.gamma_fixed = method.gamma_fixed;
          spec.l2_normalize = l2_normalize;
          tdocs = {baselines::apply(spec, &model, docs.vectors), docs.ids};
          tqueries = {baselines::apply(spec, &model, queries.vectors), queries.ids};
        }
        const RetrievalRun run = exact_search(tdocs, tqueries, similarity, cutoff);
        for (Metric metric : {Metric::mrr_at_10, Metric::ndcg_at_10, Metric::recall_at_k}) {
          report.rows.push_back(
              {method.name(), k, seed, metric, compute_metric(metric, run, qrels).value});
        }
      }
    }
  }
  return report;
}

double EvalReport::cell_mean(const std::string& method, std::size_t k, Metric metric) const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const EvalRow& row : rows) {
    if (row.method == method && row.k == k && row.metric == metric) {
      sum += row.value;
      ++count;
    }
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

std::string EvalReport::to_csv() const {
  std::ostringstream csv;
  csv << "method,k,seed,metric,value\n";
  for (const EvalRow& row : rows) {
    csv << row.method << "," << row.k << "," << row.seed << "," << metric_name(row.metric)
        << "," << format_double(row.value) << "\n";
  }
  return csv.str();
}

std::string metric_name(Metric metric) {
  switch (metric) {
    case Metric::mrr_at_10: return "mrr_at_10";
    case Metric::ndcg_at_10: return "ndcg_at_10";
    case Metric::recall_at_k: return "recall_at_k";
  }
  return "unknown";
}

std::string similarity_name(Similarity similarity) {
  return similarity == Similarity::cosine ? "cosine" : "dot";
}

}  // namespace spectemp::evalhar
