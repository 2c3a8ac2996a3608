// Command-line frontend: fit, report, transform, eval, grid, synth and
// sensitivity subcommands over EMBF/STM1/qrels files.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spectemp/baselines.hpp"
#include "spectemp/evalhar.hpp"
#include "spectemp/matio.hpp"
#include "spectemp/tempering.hpp"

using nlohmann::json;
using namespace spectemp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitFormat = 3;
constexpr int kExitData = 4;
constexpr int kExitNumerical = 5;
constexpr int kExitIo = 6;
constexpr int kExitShape = 7;

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw config_error(std::string(what) + ": `" + item + "` is not a valid count");
    }
  }
  if (out.empty()) throw config_error(std::string(what) + ": empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      const double v = std::stod(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw config_error(std::string(what) + ": `" + item + "` is not a number");
    }
  }
  if (out.empty()) throw config_error(std::string(what) + ": empty list");
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (std::size_t v : parse_size_list(text, "--seeds")) out.push_back(v);
  return out;
}

// "count:variance,count:variance,..."
std::vector<std::pair<std::size_t, double>> parse_spikes(const std::string& text) {
  std::vector<std::pair<std::size_t, double>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos) {
      throw config_error("--spikes: expected count:variance, got `" + item + "`");
    }
    try {
      std::size_t pos = 0;
      const unsigned long long count = std::stoull(item.substr(0, colon), &pos);
      const std::string var_text = item.substr(colon + 1);
      std::size_t vpos = 0;
      const double variance = std::stod(var_text, &vpos);
      if (pos != colon || vpos != var_text.size()) throw std::invalid_argument(item);
      out.emplace_back(static_cast<std::size_t>(count), variance);
    } catch (const config_error&) {
      throw;
    } catch (const std::exception&) {
      throw config_error("--spikes: cannot parse `" + item + "`");
    }
  }
  if (out.empty()) throw config_error("--spikes: empty list");
  return out;
}

evalhar::Similarity parse_similarity(const std::string& text) {
  if (text == "cosine") return evalhar::Similarity::cosine;
  if (text == "dot") return evalhar::Similarity::dot;
  throw config_error("--similarity must be `cosine` or `dot`, got `" + text + "`");
}

evalhar::Metric parse_metric(const std::string& text) {
  if (text == "mrr") return evalhar::Metric::mrr_at_10;
  if (text == "ndcg") return evalhar::Metric::ndcg_at_10;
  if (text == "recall") return evalhar::Metric::recall_at_k;
  throw config_error("--metric must be `mrr`, `ndcg` or `recall`, got `" + text + "`");
}

void check_tail_fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) {
    throw config_error("--tail-fraction must lie in (0, 1), got " + std::to_string(f));
  }
}

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string csv_double(double v) { return fmt(v, "%.10g"); }

evalhar::LabeledMatrix load_labeled(const std::string& path, const char* prefix) {
  evalhar::LabeledMatrix out;
  out.vectors = matio::load_embeddings(path);
  out.ids.reserve(out.vectors.rows);
  for (std::size_t i = 0; i < out.vectors.rows; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%07zu", prefix, i);
    out.ids.emplace_back(buf);
  }
  return out;
}

void check_dims_against_model(const std::vector<std::size_t>& dims, std::size_t d) {
  for (std::size_t k : dims) {
    if (k < 1 || k > d) {
      throw config_error("--dims: " + std::to_string(k) + " is outside [1, " +
                         std::to_string(d) + "]");
    }
  }
}

std::string grid_csv_path(const std::string& base, std::size_t k, bool multiple) {
  if (!multiple) return base;
  const std::size_t dot = base.rfind('.');
  if (dot == std::string::npos || dot == 0) return base + ".k" + std::to_string(k);
  return base.substr(0, dot) + ".k" + std::to_string(k) + base.substr(dot);
}

struct FitOptions {
  std::string input;
  std::string output;
  double tail_fraction = 0.10;
  std::size_t sample_cap = 1000000;
  std::uint64_t seed = 1999;
};

int cmd_fit(const FitOptions& opt) {
  check_tail_fraction(opt.tail_fraction);
  if (opt.sample_cap == 0) throw config_error("--sample-cap must be at least 1");

  const EmbeddingMatrix corpus = matio::load_embeddings(opt.input);
  const tempering::SpectralModel model =
      tempering::fit_model(corpus, opt.sample_cap, opt.seed, opt.tail_fraction);
  matio::save_model(model, opt.output);

  std::cout << "dim           " << model.dim() << "\n"
            << "rows used     " << model.spectrum.sample_count << "\n"
            << "noise floor   " << fmt(model.profile.noise_floor) << "\n"
            << "knee rank     " << model.profile.knee_index << "\n"
            << "reference snr " << fmt(model.profile.reference_snr) << "\n"
            << "model         " << opt.output << "\n";
  return kExitOk;
}

struct ReportOptions {
  std::string model;
  std::string dims_text;
  bool as_json = false;
  std::string csv_path;
  std::string gamma_csv_path;
};

int cmd_report(const ReportOptions& opt) {
  const tempering::SpectralModel model = matio::load_model(opt.model);
  const std::size_t d = model.dim();

  std::vector<std::size_t> dims;
  if (!opt.dims_text.empty()) {
    dims = parse_size_list(opt.dims_text, "--dims");
    check_dims_against_model(dims, d);
  }
  std::vector<double> gammas;
  gammas.reserve(dims.size());
  for (std::size_t k : dims) {
    gammas.push_back(tempering::derive_gamma(model.profile.snr, model.profile.knee_index, k));
  }

  if (!opt.csv_path.empty()) {
    std::ostringstream csv;
    csv << "rank,eigenvalue,snr\n";
    for (std::size_t i = 0; i < d; ++i) {
      csv << (i + 1) << "," << csv_double(model.spectrum.eigenvalues[i]) << ","
          << csv_double(model.profile.snr[i]) << "\n";
    }
    matio::write_text_file(opt.csv_path, csv.str());
  }
  if (!opt.gamma_csv_path.empty()) {
    if (dims.empty()) throw config_error("--gamma-csv requires --dims");
    std::ostringstream csv;
    csv << "k,gamma\n";
    for (std::size_t i = 0; i < dims.size(); ++i) {
      csv << dims[i] << "," << csv_double(gammas[i]) << "\n";
    }
    matio::write_text_file(opt.gamma_csv_path, csv.str());
  }

  if (opt.as_json) {
    json out;
    out["dim"] = d;
    out["rows_used"] = model.spectrum.sample_count;
    out["tail_fraction"] = model.profile.tail_fraction;
    out["noise_floor"] = model.profile.noise_floor;
    out["knee_rank"] = model.profile.knee_index;
    out["reference_snr"] = model.profile.reference_snr;
    out["eigenvalues"] = model.spectrum.eigenvalues;
    out["snr"] = model.profile.snr;
    json gamma_rows = json::array();
    for (std::size_t i = 0; i < dims.size(); ++i) {
      gamma_rows.push_back({{"k", dims[i]}, {"gamma", gammas[i]}});
    }
    out["gamma"] = gamma_rows;
    std::cout << out.dump(2) << "\n";
    return kExitOk;
  }

  std::cout << "dim " << d << ", rows used " << model.spectrum.sample_count
            << ", tail fraction " << fmt(model.profile.tail_fraction, "%.2f") << "\n"
            << "noise floor " << fmt(model.profile.noise_floor) << ", knee rank "
            << model.profile.knee_index << ", reference snr "
            << fmt(model.profile.reference_snr) << "\n\n"
            << "rank  eigenvalue      snr\n";
  for (std::size_t i = 0; i < d; ++i) {
    std::cout << fmt(static_cast<double>(i + 1), "%4.0f") << "  "
              << fmt(model.spectrum.eigenvalues[i], "%12.6f") << "  "
              << fmt(model.profile.snr[i], "%12.6f") << "\n";
  }
  if (!dims.empty()) {
    std::cout << "\n   k   gamma\n";
    for (std::size_t i = 0; i < dims.size(); ++i) {
      std::cout << fmt(static_cast<double>(dims[i]), "%4.0f") << "  "
                << fmt(gammas[i], "%.4f") << "\n";
    }
  }
  return kExitOk;
}

struct TransformOptions {
  std::string model;
  std::string input;
  std::string output;
  std::size_t k = 0;
  std::optional<double> gamma;
  bool no_normalize = false;
};

int cmd_transform(const TransformOptions& opt) {
  const tempering::SpectralModel model = matio::load_model(opt.model);
  const EmbeddingMatrix input = matio::load_embeddings(opt.input);
  const tempering::TemperingPlan plan =
      tempering::build_plan(model, opt.k, opt.gamma, !opt.no_normalize);
  const EmbeddingMatrix output = tempering::transform(plan, input);
  matio::save_embeddings(output, opt.output);
  std::cout << "wrote " << output.rows << "x" << output.cols << " (gamma "
            << fmt(plan.gamma, "%.4f") << ") to " << opt.output << "\n";
  return kExitOk;
}

struct SynthOptions {
  std::string docs;
  std::string queries;
  std::string qrels;
  std::size_t n_docs = 0;
  std::size_t n_queries = 0;
  std::size_t dim = 0;
  std::string spikes_text;
  double noise = 1.0;
  double tau = 0.0;
  std::uint64_t seed = 1999;
};

int cmd_synth(const SynthOptions& opt) {
  evalhar::SynthSpec spec;
  spec.n_docs = opt.n_docs;
  spec.n_queries = opt.n_queries;
  spec.dim = opt.dim;
  spec.spikes = parse_spikes(opt.spikes_text);
  spec.noise_variance = opt.noise;
  spec.query_perturbation = opt.tau;
  spec.seed = opt.seed;

  const evalhar::SynthTask task = evalhar::generate_synthetic(spec);
  matio::save_embeddings(task.docs.vectors, opt.docs);
  matio::save_embeddings(task.queries.vectors, opt.queries);

  std::ostringstream qrels;
  for (const auto& [qid, docs] : task.qrels.entries) {
    for (const auto& [docid, rel] : docs) {
      qrels << qid << " 0 " << docid << " " << rel << "\n";
    }
  }
  matio::write_text_file(opt.qrels, qrels.str());

  std::cout << "wrote " << task.docs.vectors.rows << " docs, " << task.queries.vectors.rows
            << " queries, " << task.qrels.entries.size() << " judged queries\n";
  return kExitOk;
}

struct EvalOptions {
  std::string docs;
  std::string queries;
  std::string qrels;
  std::string model;
  std::string methods_text = "spectemp,pca,whitening";
  std::string dims_text;
  std::string seeds_text = "1999";
  std::string similarity_text = "cosine";
  double fixed_gamma = 0.5;
  double tail_fraction = 0.10;
  std::size_t sample_cap = 1000000;
  std::uint64_t fit_seed = 1999;
  std::size_t cutoff = 10;
  bool no_normalize = false;
  std::string csv_path;
};

std::vector<evalhar::MethodSpec> parse_methods(const std::string& text, double fixed_gamma) {
  std::vector<evalhar::MethodSpec> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    evalhar::MethodSpec spec;
    spec.gamma_fixed = fixed_gamma;
    if (item == "spectemp") {
      spec.adaptive = true;
    } else if (item == "prefix_truncate") {
      spec.kind = baselines::Kind::prefix_truncate;
    } else if (item == "random_truncate") {
      spec.kind = baselines::Kind::random_truncate;
    } else if (item == "random_project") {
      spec.kind = baselines::Kind::random_project;
    } else if (item == "pca") {
      spec.kind = baselines::Kind::pca;
    } else if (item == "whitening") {
      spec.kind = baselines::Kind::whitening;
    } else if (item == "fixed_gamma") {
      spec.kind = baselines::Kind::fixed_gamma;
    } else {
      throw config_error("--methods: unknown method `" + item + "`");
    }
    out.push_back(spec);
  }
  if (out.empty()) throw config_error("--methods: empty list");
  return out;
}

tempering::SpectralModel model_for_eval(const std::string& model_path,
                                        const EmbeddingMatrix& docs, double tail_fraction,
                                        std::size_t cap, std::uint64_t seed) {
  if (!model_path.empty()) return matio::load_model(model_path);
  return tempering::fit_model(docs, cap, seed, tail_fraction);
}

int cmd_eval(const EvalOptions& opt) {
  check_tail_fraction(opt.tail_fraction);
  if (opt.fixed_gamma < 0.0 || opt.fixed_gamma > 1.0) {
    throw config_error("--fixed-gamma must lie in [0, 1]");
  }
  const evalhar::LabeledMatrix docs = load_labeled(opt.docs, "d");
  const evalhar::LabeledMatrix queries = load_labeled(opt.queries, "q");
  const matio::QrelsTable qrels = matio::load_qrels(opt.qrels);
  const tempering::SpectralModel model =
      model_for_eval(opt.model, docs.vectors, opt.tail_fraction, opt.sample_cap, opt.fit_seed);

  const std::vector<evalhar::MethodSpec> methods =
      parse_methods(opt.methods_text, opt.fixed_gamma);
  const std::vector<std::size_t> dims = parse_size_list(opt.dims_text, "--dims");
  check_dims_against_model(dims, model.dim());
  const std::vector<std::uint64_t> seeds = parse_seed_list(opt.seeds_text);
  const evalhar::Similarity similarity = parse_similarity(opt.similarity_text);

  const evalhar::EvalReport report =
      evalhar::run_matrix(methods, dims, model, docs, queries, qrels, seeds, similarity,
                          !opt.no_normalize, opt.cutoff);
  if (!opt.csv_path.empty()) matio::write_text_file(opt.csv_path, report.to_csv());

  // Cell means (over seeds) per metric, method rows x dim columns (0-100).
  for (const evalhar::Metric metric :
       {evalhar::Metric::mrr_at_10, evalhar::Metric::ndcg_at_10, evalhar::Metric::recall_at_k}) {
    std::cout << evalhar::metric_name(metric) << " (mean over " << seeds.size() << " seed"
              << (seeds.size() == 1 ? "" : "s") << ", 0-100)\n";
    std::cout << "method            ";
    for (std::size_t k : dims) std::cout << fmt(static_cast<double>(k), "%10.0f");
    std::cout << "\n";
    for (const evalhar::MethodSpec& method : methods) {
      const std::string name = method.name();
      std::cout << name << std::string(name.size() < 18 ? 18 - name.size() : 1, ' ');
      for (std::size_t k : dims) {
        std::cout << fmt(100.0 * report.cell_mean(name, k, metric), "%10.2f");
      }
      std::cout << "\n";
    }
    std::cout << "\n";
  }
  if (!opt.csv_path.empty()) std::cout << "csv " << opt.csv_path << "\n";
  return kExitOk;
}

struct GridOptions {
  std::string docs;
  std::string queries;
  std::string qrels;
  std::string model;
  std::string dims_text;
  double step = 0.05;
  std::string metric_text = "ndcg";
  std::string similarity_text = "cosine";
  double tail_fraction = 0.10;
  std::size_t sample_cap = 1000000;
  std::uint64_t fit_seed = 1999;
  std::size_t cutoff = 10;
  bool no_normalize = false;
  std::string csv_path;
};

int cmd_grid(const GridOptions& opt) {
  check_tail_fraction(opt.tail_fraction);
  const evalhar::LabeledMatrix docs = load_labeled(opt.docs, "d");
  const evalhar::LabeledMatrix queries = load_labeled(opt.queries, "q");
  const matio::QrelsTable qrels = matio::load_qrels(opt.qrels);
  const tempering::SpectralModel model =
      model_for_eval(opt.model, docs.vectors, opt.tail_fraction, opt.sample_cap, opt.fit_seed);

  const std::vector<std::size_t> dims = parse_size_list(opt.dims_text, "--k");
  check_dims_against_model(dims, model.dim());
  const evalhar::Metric metric = parse_metric(opt.metric_text);
  const evalhar::Similarity similarity = parse_similarity(opt.similarity_text);

  for (std::size_t k : dims) {
    const evalhar::GridResult grid =
        evalhar::grid_search_gamma(model, docs, queries, qrels, k, opt.step, metric,
                                   similarity, !opt.no_normalize, opt.cutoff);
    const double predicted =
        tempering::derive_gamma(model.profile.snr, model.profile.knee_index, k);
    std::cout << "k=" << k << "  best gamma " << fmt(grid.best_gamma, "%.2f") << "  score "
              << fmt(100.0 * grid.best_score, "%.2f") << "  predicted gamma "
              << fmt(predicted, "%.2f") << "\n";
    for (const auto& [gamma, score] : grid.curve) {
      std::cout << "  " << fmt(gamma, "%.2f") << "  " << fmt(100.0 * score, "%8.2f") << "\n";
    }
    if (!opt.csv_path.empty()) {
      matio::write_text_file(grid_csv_path(opt.csv_path, k, dims.size() > 1),
                             grid.curve_csv());
    }
  }
  return kExitOk;
}

struct SensitivityOptions {
  std::string docs;
  std::string queries;
  std::string qrels;
  std::string dims_text;
  std::string fractions_text = "0.05,0.10,0.15,0.20";
  std::string metric_text = "ndcg";
  std::string similarity_text = "cosine";
  std::size_t sample_cap = 1000000;
  std::uint64_t fit_seed = 1999;
  std::size_t cutoff = 10;
  bool no_normalize = false;
  std::string csv_path;
};

int cmd_sensitivity(const SensitivityOptions& opt) {
  const evalhar::LabeledMatrix docs = load_labeled(opt.docs, "d");
  const evalhar::LabeledMatrix queries = load_labeled(opt.queries, "q");
  const matio::QrelsTable qrels = matio::load_qrels(opt.qrels);

  const std::vector<std::size_t> dims = parse_size_list(opt.dims_text, "--dims");
  const std::vector<double> fractions = parse_double_list(opt.fractions_text, "--fractions");
  for (double f : fractions) check_tail_fraction(f);
  const evalhar::Metric metric = parse_metric(opt.metric_text);
  const evalhar::Similarity similarity = parse_similarity(opt.similarity_text);

  // score[fraction][k]
  std::vector<std::vector<double>> scores(fractions.size(), std::vector<double>(dims.size()));
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    const tempering::SpectralModel model =
        tempering::fit_model(docs.vectors, opt.sample_cap, opt.fit_seed, fractions[fi]);
    check_dims_against_model(dims, model.dim());
    for (std::size_t ki = 0; ki < dims.size(); ++ki) {
      const tempering::TemperingPlan plan =
          tempering::build_plan(model, dims[ki], std::nullopt, !opt.no_normalize);
      const evalhar::LabeledMatrix tdocs{tempering::transform(plan, docs.vectors), docs.ids};
      const evalhar::LabeledMatrix tqueries{tempering::transform(plan, queries.vectors),
                                            queries.ids};
      const evalhar::RetrievalRun run =
          evalhar::exact_search(tdocs, tqueries, similarity, opt.cutoff);
      scores[fi][ki] = evalhar::compute_metric(metric, run, qrels).value;
    }
  }

  std::ostringstream csv;
  csv << "fraction,k,metric,value\n";
  std::cout << "fraction";
  for (std::size_t k : dims) std::cout << fmt(static_cast<double>(k), "%10.0f");
  std::cout << "\n";
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    std::cout << fmt(fractions[fi], "%.2f") << "    ";
    for (std::size_t ki = 0; ki < dims.size(); ++ki) {
      std::cout << fmt(100.0 * scores[fi][ki], "%10.2f");
      csv << csv_double(fractions[fi]) << "," << dims[ki] << ","
          << evalhar::metric_name(metric) << "," << csv_double(scores[fi][ki]) << "\n";
    }
    std::cout << "\n";
  }

  double worst_spread = 0.0;
  std::cout << "spread  ";
  for (std::size_t ki = 0; ki < dims.size(); ++ki) {
    double lo = scores[0][ki];
    double hi = scores[0][ki];
    for (std::size_t fi = 1; fi < fractions.size(); ++fi) {
      lo = std::min(lo, scores[fi][ki]);
      hi = std::max(hi, scores[fi][ki]);
    }
    const double spread = 100.0 * (hi - lo);
    worst_spread = std::max(worst_spread, spread);
    std::cout << fmt(spread, "%10.2f");
  }
  std::cout << "\nmax spread " << fmt(worst_spread, "%.4f") << " (0-100 scale)\n";

  if (!opt.csv_path.empty()) {
    matio::write_text_file(opt.csv_path, csv.str());
    std::cout << "csv " << opt.csv_path << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral tempering toolkit for embedding compression"};
  app.require_subcommand(1);

  FitOptions fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a spectral model from an EMBF corpus");
  fit_cmd->add_option("--input", fit.input, "Corpus EMBF file")->required();
  fit_cmd->add_option("--output", fit.output, "Output STM1 model file")->required();
  fit_cmd->add_option("--tail-fraction", fit.tail_fraction, "Spectral tail fraction");
  fit_cmd->add_option("--sample-cap", fit.sample_cap, "Row cap for the fit sample");
  fit_cmd->add_option("--seed", fit.seed, "Subsampling seed");

  ReportOptions report;
  CLI::App* report_cmd = app.add_subcommand("report", "Print spectrum, SNR and gamma values");
  report_cmd->add_option("--model", report.model, "STM1 model file")->required();
  report_cmd->add_option("--dims", report.dims_text, "Comma-separated target dims");
  report_cmd->add_flag("--json", report.as_json, "Emit JSON instead of text");
  report_cmd->add_option("--csv", report.csv_path, "Write rank,eigenvalue,snr CSV");
  report_cmd->add_option("--gamma-csv", report.gamma_csv_path, "Write k,gamma CSV");

  TransformOptions transform;
  CLI::App* transform_cmd = app.add_subcommand("transform", "Compress an EMBF file");
  transform_cmd->add_option("--model", transform.model, "STM1 model file")->required();
  transform_cmd->add_option("--input", transform.input, "Input EMBF file")->required();
  transform_cmd->add_option("--output", transform.output, "Output EMBF file")->required();
  transform_cmd->add_option("--k", transform.k, "Target dimensionality")->required();
  double gamma_value = -1.0;
  CLI::Option* gamma_opt =
      transform_cmd->add_option("--gamma", gamma_value, "Override the derived exponent");
  transform_cmd->add_flag("--no-normalize", transform.no_normalize, "Skip L2 normalization");

  SynthOptions synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic retrieval task");
  synth_cmd->add_option("--docs", synth.docs, "Output docs EMBF")->required();
  synth_cmd->add_option("--queries", synth.queries, "Output queries EMBF")->required();
  synth_cmd->add_option("--qrels", synth.qrels, "Output qrels file")->required();
  synth_cmd->add_option("--n-docs", synth.n_docs, "Number of documents")->required();
  synth_cmd->add_option("--n-queries", synth.n_queries, "Number of queries")->required();
  synth_cmd->add_option("--dim", synth.dim, "Embedding dimension")->required();
  synth_cmd->add_option("--spikes", synth.spikes_text, "count:variance list")->required();
  synth_cmd->add_option("--noise", synth.noise, "Noise floor variance");
  synth_cmd->add_option("--tau", synth.tau, "Query perturbation scale");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");

  EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Run the method x dim x seed matrix");
  eval_cmd->add_option("--docs", eval.docs, "Docs EMBF")->required();
  eval_cmd->add_option("--queries", eval.queries, "Queries EMBF")->required();
  eval_cmd->add_option("--qrels", eval.qrels, "Qrels file")->required();
  eval_cmd->add_option("--model", eval.model, "STM1 model (fitted on docs when omitted)");
  eval_cmd->add_option("--methods", eval.methods_text, "Comma-separated method list");
  eval_cmd->add_option("--dims", eval.dims_text, "Comma-separated target dims")->required();
  eval_cmd->add_option("--seeds", eval.seeds_text, "Comma-separated seeds");
  eval_cmd->add_option("--similarity", eval.similarity_text, "cosine or dot");
  eval_cmd->add_option("--fixed-gamma", eval.fixed_gamma, "Exponent for fixed_gamma");
  eval_cmd->add_option("--tail-fraction", eval.tail_fraction, "Tail fraction when fitting");
  eval_cmd->add_option("--sample-cap", eval.sample_cap, "Fit sample cap");
  eval_cmd->add_option("--seed", eval.fit_seed, "Fit subsampling seed");
  eval_cmd->add_option("--cutoff", eval.cutoff, "Ranked list cutoff");
  eval_cmd->add_flag("--no-normalize", eval.no_normalize, "Skip L2 normalization");
  eval_cmd->add_option("--csv", eval.csv_path, "Write per-seed rows CSV");

  GridOptions grid;
  CLI::App* grid_cmd = app.add_subcommand("grid", "Grid-search the tempering exponent");
  grid_cmd->add_option("--docs", grid.docs, "Docs EMBF")->required();
  grid_cmd->add_option("--queries", grid.queries, "Queries EMBF")->required();
  grid_cmd->add_option("--qrels", grid.qrels, "Qrels file")->required();
  grid_cmd->add_option("--model", grid.model, "STM1 model (fitted on docs when omitted)");
  grid_cmd->add_option("--k", grid.dims_text, "Comma-separated target dims")->required();
  grid_cmd->add_option("--step", grid.step, "Grid step over [0, 1]");
  grid_cmd->add_option("--metric", grid.metric_text, "mrr, ndcg or recall");
  grid_cmd->add_option("--similarity", grid.similarity_text, "cosine or dot");
  grid_cmd->add_option("--tail-fraction", grid.tail_fraction, "Tail fraction when fitting");
  grid_cmd->add_option("--sample-cap", grid.sample_cap, "Fit sample cap");
  grid_cmd->add_option("--seed", grid.fit_seed, "Fit subsampling seed");
  grid_cmd->add_option("--cutoff", grid.cutoff, "Ranked list cutoff");
  grid_cmd->add_flag("--no-normalize", grid.no_normalize, "Skip L2 normalization");
  grid_cmd->add_option("--csv", grid.csv_path, "Write gamma,score CSV (per k)");

  SensitivityOptions sens;
  CLI::App* sens_cmd =
      app.add_subcommand("sensitivity", "Refit across tail fractions and compare scores");
  sens_cmd->add_option("--docs", sens.docs, "Docs EMBF")->required();
  sens_cmd->add_option("--queries", sens.queries, "Queries EMBF")->required();
  sens_cmd->add_option("--qrels", sens.qrels, "Qrels file")->required();
  sens_cmd->add_option("--dims", sens.dims_text, "Comma-separated target dims")->required();
  sens_cmd->add_option("--fractions", sens.fractions_text, "Tail fractions to sweep");
  sens_cmd->add_option("--metric", sens.metric_text, "mrr, ndcg or recall");
  sens_cmd->add_option("--similarity", sens.similarity_text, "cosine or dot");
  sens_cmd->add_option("--sample-cap", sens.sample_cap, "Fit sample cap");
  sens_cmd->add_option("--seed", sens.fit_seed, "Fit subsampling seed");
  sens_cmd->add_option("--cutoff", sens.cutoff, "Ranked list cutoff");
  sens_cmd->add_flag("--no-normalize", sens.no_normalize, "Skip L2 normalization");
  sens_cmd->add_option("--csv", sens.csv_path, "Write fraction,k,metric,value CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit);
    if (*report_cmd) return cmd_report(report);
    if (*transform_cmd) {
      if (gamma_opt->count() > 0) {
        if (gamma_value < 0.0 || gamma_value > 1.0) {
          throw config_error("--gamma must lie in [0, 1]");
        }
        transform.gamma = gamma_value;
      }
      return cmd_transform(transform);
    }
    if (*synth_cmd) return cmd_synth(synth);
    if (*eval_cmd) return cmd_eval(eval);
    if (*grid_cmd) return cmd_grid(grid);
    if (*sens_cmd) return cmd_sensitivity(sens);
    std::cerr << "no subcommand selected\n";
    return kExitConfig;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const format_error& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const shape_error& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return kExitShape;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
