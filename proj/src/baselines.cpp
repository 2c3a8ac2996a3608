#include "spectemp/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "spectemp/parallel.hpp"
#include "spectemp/rng.hpp"

namespace spectemp::baselines {

namespace {

void check_k(std::size_t k, std::size_t d) {
  if (k < 1 || k > d) {
    throw config_error("baseline: k=" + std::to_string(k) + " out of range [1, " +
                       std::to_string(d) + "]");
  }
}

void normalize_rows(EmbeddingMatrix& m) {
  parallel_rows(m.rows, [&](std::size_t i) {
    float* row = m.row(i);
    double nrm = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) {
      nrm += static_cast<double>(row[j]) * static_cast<double>(row[j]);
    }
    nrm = std::sqrt(nrm);
    if (nrm > 0.0) {
      for (std::size_t j = 0; j < m.cols; ++j) {
        row[j] = static_cast<float>(static_cast<double>(row[j]) / nrm);
      }
    }
  });
}

}  // namespace

EmbeddingMatrix prefix_truncate(const EmbeddingMatrix& x, std::size_t k, bool l2_normalize) {
  x.require_valid();
  check_k(k, x.cols);
  EmbeddingMatrix out(x.rows, k);
  out.label = x.label;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const float* src = x.row(i);
    std::copy(src, src + k, out.row(i));
  }
  if (l2_normalize) normalize_rows(out);
  return out;
}

EmbeddingMatrix random_truncate(const EmbeddingMatrix& x, std::size_t k, std::uint64_t seed,
                                bool l2_normalize) {
  x.require_valid();
  check_k(k, x.cols);
  // The column set depends only on (d, k, seed), never on the data.
  Rng rng(seed);
  const std::vector<std::size_t> cols = rng.sample_without_replacement(x.cols, k);

  EmbeddingMatrix out(x.rows, k);
  out.label = x.label;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const float* src = x.row(i);
    float* dst = out.row(i);
    for (std::size_t j = 0; j < k; ++j) dst[j] = src[cols[j]];
  }
  if (l2_normalize) normalize_rows(out);
  return out;
}

EmbeddingMatrix random_project(const EmbeddingMatrix& x, std::size_t k, std::uint64_t seed,
                               bool l2_normalize) {
  x.require_valid();
  check_k(k, x.cols);
  const std::size_t d = x.cols;

  // R is d x k with i.i.d. N(0, 1/k) entries so expected norms are kept.
  Rng rng(seed);
  std::vector<double> r(d * k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  for (double& v : r) v = rng.normal() * scale;

  EmbeddingMatrix out(x.rows, k);
  out.label = x.label;
  parallel_blocks(x.rows, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const float* src = x.row(i);
      float* dst = out.row(i);
      for (std::size_t j = 0; j < k; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) acc += static_cast<double>(src[c]) * r[c * k + j];
        dst[j] = static_cast<float>(acc);
      }
    }
  });
  if (l2_normalize) normalize_rows(out);
  return out;
}

EmbeddingMatrix pca_project(const tempering::SpectralModel& model, const EmbeddingMatrix& x,
                            std::size_t k, bool l2_normalize) {
  return tempering::transform(tempering::build_plan(model, k, 0.0, l2_normalize), x);
}

EmbeddingMatrix whiten(const tempering::SpectralModel& model, const EmbeddingMatrix& x,
                       std::size_t k, bool l2_normalize) {
  return tempering::transform(tempering::build_plan(model, k, 1.0, l2_normalize), x);
}

EmbeddingMatrix fixed_gamma(const tempering::SpectralModel& model, const EmbeddingMatrix& x,
                            std::size_t k, double gamma, bool l2_normalize) {
  return tempering::transform(tempering::build_plan(model, k, gamma, l2_normalize), x);
}

EmbeddingMatrix apply(const BaselineSpec& spec, const tempering::SpectralModel* model,
                      const EmbeddingMatrix& x) {
  switch (spec.kind) {
    case Kind::prefix_truncate:
      return prefix_truncate(x, spec.k, spec.l2_normalize);
    case Kind::random_truncate:
      return random_truncate(x, spec.k, spec.seed, spec.l2_normalize);
    case Kind::random_project:
      return random_project(x, spec.k, spec.seed, spec.l2_normalize);
    case Kind::pca:
    case Kind::whitening:
    case Kind::fixed_gamma:
      break;
  }
  if (model == nullptr) {
    throw config_error("baseline " + kind_name(spec.kind) + " requires a fitted model");
  }
  switch (spec.kind) {
    case Kind::pca:
      return pca_project(*model, x, spec.k, spec.l2_normalize);
    case Kind::whitening:
      return whiten(*model, x, spec.k, spec.l2_normalize);
    default:
      return fixed_gamma(*model, x, spec.k, spec.gamma_fixed, spec.l2_normalize);
  }
}

std::string kind_name(Kind kind) {
  switch (kind) {
    case Kind::prefix_truncate: return "prefix_truncate";
    case Kind::random_truncate: return "random_truncate";
    case Kind::random_project: return "random_project";
    case Kind::pca: return "pca";
    case Kind::whitening: return "whitening";
    case Kind::fixed_gamma: return "fixed_gamma";
  }
  return "unknown";
}

}  // namespace spectemp::baselines
