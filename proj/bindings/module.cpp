#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "spectemp/baselines.hpp"
#include "spectemp/evalhar.hpp"
#include "spectemp/matio.hpp"
#include "spectemp/tempering.hpp"

namespace py = pybind11;
using namespace spectemp;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

EmbeddingMatrix to_matrix(const FloatArray& array) {
  if (array.ndim() != 2) throw shape_error("expected a 2-d float array");
  EmbeddingMatrix m(static_cast<std::size_t>(array.shape(0)),
                    static_cast<std::size_t>(array.shape(1)));
  std::copy(array.data(), array.data() + m.data.size(), m.data.begin());
  return m;
}

py::array_t<float> to_numpy(const EmbeddingMatrix& m) {
  py::array_t<float> out({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

evalhar::LabeledMatrix to_labeled(const FloatArray& array,
                                  const std::optional<std::vector<std::string>>& ids,
                                  const char* prefix) {
  evalhar::LabeledMatrix out;
  out.vectors = to_matrix(array);
  if (ids) {
    if (ids->size() != out.vectors.rows) {
      throw shape_error("id list length does not match the number of rows");
    }
    out.ids = *ids;
  } else {
    out.ids.reserve(out.vectors.rows);
    for (std::size_t i = 0; i < out.vectors.rows; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%s%07zu", prefix, i);
      out.ids.emplace_back(buf);
    }
  }
  return out;
}

matio::QrelsTable to_qrels(const std::map<std::string, std::vector<std::pair<std::string, int>>>& entries) {
  matio::QrelsTable table;
  table.entries = entries;
  return table;
}

evalhar::Similarity similarity_of(const std::string& name) {
  if (name == "cosine") return evalhar::Similarity::cosine;
  if (name == "dot") return evalhar::Similarity::dot;
  throw config_error("similarity must be 'cosine' or 'dot'");
}

evalhar::Metric metric_of(const std::string& name) {
  if (name == "mrr") return evalhar::Metric::mrr_at_10;
  if (name == "ndcg") return evalhar::Metric::ndcg_at_10;
  if (name == "recall") return evalhar::Metric::recall_at_k;
  throw config_error("metric must be 'mrr', 'ndcg' or 'recall'");
}

}  // namespace

PYBIND11_MODULE(_spectemp, m) {
  m.doc() = "SNR-adaptive spectral tempering for embedding compression";

  py::register_exception<config_error>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<format_error>(m, "FormatError", PyExc_ValueError);
  py::register_exception<data_error>(m, "DataError", PyExc_ValueError);
  py::register_exception<numerical_error>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<shape_error>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<io_error>(m, "IoError", PyExc_OSError);

  py::class_<tempering::SpectralModel>(m, "Model")
      .def_property_readonly("dim", &tempering::SpectralModel::dim)
      .def_property_readonly("sample_count",
                             [](const tempering::SpectralModel& s) { return s.spectrum.sample_count; })
      .def_property_readonly("noise_floor",
                             [](const tempering::SpectralModel& s) { return s.profile.noise_floor; })
      .def_property_readonly("knee_index",
                             [](const tempering::SpectralModel& s) { return s.profile.knee_index; })
      .def_property_readonly("reference_snr",
                             [](const tempering::SpectralModel& s) { return s.profile.reference_snr; })
      .def_property_readonly("tail_fraction",
                             [](const tempering::SpectralModel& s) { return s.profile.tail_fraction; })
      .def_property_readonly("eigenvalues",
                             [](const tempering::SpectralModel& s) { return s.spectrum.eigenvalues; })
      .def_property_readonly("mean",
                             [](const tempering::SpectralModel& s) { return s.spectrum.mean; })
      .def_property_readonly("snr",
                             [](const tempering::SpectralModel& s) { return s.profile.snr; })
      .def("gamma",
           [](const tempering::SpectralModel& s, std::size_t k) {
             return tempering::derive_gamma(s.profile.snr, s.profile.knee_index, k);
           },
           py::arg("k"))
      .def("transform",
           [](const tempering::SpectralModel& s, const FloatArray& x, std::size_t k,
              std::optional<double> gamma, bool normalize) {
             const tempering::TemperingPlan plan = tempering::build_plan(s, k, gamma, normalize);
             return to_numpy(tempering::transform(plan, to_matrix(x)));
           },
           py::arg("x"), py::arg("k"), py::arg("gamma") = std::nullopt,
           py::arg("normalize") = true)
      .def("save", [](const tempering::SpectralModel& s, const std::string& path) {
        matio::save_model(s, path);
      });

  m.def("fit",
        [](const FloatArray& corpus, std::size_t sample_cap, std::uint64_t seed,
           double tail_fraction) {
          return tempering::fit_model(to_matrix(corpus), sample_cap, seed, tail_fraction);
        },
        py::arg("corpus"), py::arg("sample_cap") = 1000000, py::arg("seed") = 1999,
        py::arg("tail_fraction") = 0.10);

  m.def("load_model", &matio::load_model, py::arg("path"));
  m.def("load_embeddings",
        [](const std::string& path) { return to_numpy(matio::load_embeddings(path)); },
        py::arg("path"));
  m.def("save_embeddings",
        [](const FloatArray& x, const std::string& path) {
          matio::save_embeddings(to_matrix(x), path);
        },
        py::arg("x"), py::arg("path"));

  m.def("prefix_truncate",
        [](const FloatArray& x, std::size_t k, bool normalize) {
          return to_numpy(baselines::prefix_truncate(to_matrix(x), k, normalize));
        },
        py::arg("x"), py::arg("k"), py::arg("normalize") = true);
  m.def("random_truncate",
        [](const FloatArray& x, std::size_t k, std::uint64_t seed, bool normalize) {
          return to_numpy(baselines::random_truncate(to_matrix(x), k, seed, normalize));
        },
        py::arg("x"), py::arg("k"), py::arg("seed"), py::arg("normalize") = true);
  m.def("random_project",
        [](const FloatArray& x, std::size_t k, std::uint64_t seed, bool normalize) {
          return to_numpy(baselines::random_project(to_matrix(x), k, seed, normalize));
        },
        py::arg("x"), py::arg("k"), py::arg("seed"), py::arg("normalize") = true);

  m.def("exact_search",
        [](const FloatArray& docs, const FloatArray& queries, const std::string& similarity,
           std::size_t cutoff, std::optional<std::vector<std::string>> doc_ids,
           std::optional<std::vector<std::string>> query_ids) {
          const evalhar::RetrievalRun run =
              evalhar::exact_search(to_labeled(docs, doc_ids, "d"),
                                    to_labeled(queries, query_ids, "q"),
                                    similarity_of(similarity), cutoff);
          return run.ranked;
        },
        py::arg("docs"), py::arg("queries"), py::arg("similarity") = "cosine",
        py::arg("cutoff") = 10, py::arg("doc_ids") = std::nullopt,
        py::arg("query_ids") = std::nullopt);

  m.def("metric",
        [](const std::string& name,
           const std::map<std::string, std::vector<std::pair<std::string, double>>>& ranked,
           const std::map<std::string, std::vector<std::pair<std::string, int>>>& qrels) {
          evalhar::RetrievalRun run;
          run.ranked = ranked;
          const evalhar::MetricResult r =
              evalhar::compute_metric(metric_of(name), run, to_qrels(qrels));
          return py::make_tuple(r.value, r.evaluated, r.skipped);
        },
        py::arg("name"), py::arg("ranked"), py::arg("qrels"));

  m.def("generate_synthetic",
        [](std::size_t n_docs, std::size_t n_queries, std::size_t dim,
           const std::vector<std::pair<std::size_t, double>>& spikes, double noise_variance,
           double query_perturbation, std::uint64_t seed) {
          evalhar::SynthSpec spec;
          spec.n_docs = n_docs;
          spec.n_queries = n_queries;
          spec.dim = dim;
          spec.spikes = spikes;
          spec.noise_variance = noise_variance;
          spec.query_perturbation = query_perturbation;
          spec.seed = seed;
          const evalhar::SynthTask task = evalhar::generate_synthetic(spec);
          return py::make_tuple(to_numpy(task.docs.vectors), to_numpy(task.queries.vectors),
                                task.qrels.entries);
        },
        py::arg("n_docs"), py::arg("n_queries"), py::arg("dim"), py::arg("spikes"),
        py::arg("noise_variance") = 1.0, py::arg("query_perturbation") = 0.0,
        py::arg("seed") = 1999);

  m.def("grid_search_gamma",
        [](const tempering::SpectralModel& model, const FloatArray& docs,
           const FloatArray& queries,
           const std::map<std::string, std::vector<std::pair<std::string, int>>>& qrels,
           std::size_t k, double step, const std::string& metric, const std::string& similarity,
           bool normalize, std::size_t cutoff) {
          const evalhar::GridResult r = evalhar::grid_search_gamma(
              model, to_labeled(docs, std::nullopt, "d"), to_labeled(queries, std::nullopt, "q"),
              to_qrels(qrels), k, step, metric_of(metric), similarity_of(similarity), normalize,
              cutoff);
          return py::make_tuple(r.best_gamma, r.best_score, r.curve);
        },
        py::arg("model"), py::arg("docs"), py::arg("queries"), py::arg("qrels"), py::arg("k"),
        py::arg("step") = 0.05, py::arg("metric") = "ndcg", py::arg("similarity") = "cosine",
        py::arg("normalize") = true, py::arg("cutoff") = 10);
}
