#pragma once

#include <cstdint>
#include <string>

#include "spectemp/tempering.hpp"
#include "spectemp/types.hpp"

namespace spectemp::baselines {

enum class Kind {
  prefix_truncate,
  random_truncate,
  random_project,
  pca,
  whitening,
  fixed_gamma,
};

/// One compression method instance, sharing the transform interface of the
/// tempering module. Random kinds are pure functions of (input, k, seed).
struct BaselineSpec {
  Kind kind = Kind::pca;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  double gamma_fixed = 0.5;  // fixed_gamma only
  bool l2_normalize = true;
};

EmbeddingMatrix prefix_truncate(const EmbeddingMatrix& x, std::size_t k, bool l2_normalize);

/// Keeps k column indices drawn without replacement from (d, k, seed) only,
/// so queries and documents compressed with the same seed stay aligned.
EmbeddingMatrix random_truncate(const EmbeddingMatrix& x, std::size_t k, std::uint64_t seed,
                                bool l2_normalize);

/// x * R with R ~ N(0, 1/k) i.i.d., no centering.
EmbeddingMatrix random_project(const EmbeddingMatrix& x, std::size_t k, std::uint64_t seed,
                               bool l2_normalize);

// Spectral baselines are thin wrappers over tempering::build_plan with a
// pinned exponent, so equivalence with the adaptive path is structural.
EmbeddingMatrix pca_project(const tempering::SpectralModel& model, const EmbeddingMatrix& x,
                            std::size_t k, bool l2_normalize);
EmbeddingMatrix whiten(const tempering::SpectralModel& model, const EmbeddingMatrix& x,
                       std::size_t k, bool l2_normalize);
EmbeddingMatrix fixed_gamma(const tempering::SpectralModel& model, const EmbeddingMatrix& x,
                            std::size_t k, double gamma, bool l2_normalize);

/// Dispatch by spec; model may be null for the non-spectral kinds.
EmbeddingMatrix apply(const BaselineSpec& spec, const tempering::SpectralModel* model,
                      const EmbeddingMatrix& x);

std::string kind_name(Kind kind);

}  // namespace spectemp::baselines
