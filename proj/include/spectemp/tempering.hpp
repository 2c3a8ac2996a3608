#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "spectemp/spectral.hpp"
#include "spectemp/types.hpp"

namespace spectemp::tempering {

/// Noise-floor / SNR statistics derived from a sorted eigenvalue spectrum.
///
/// `knee_index` is a 1-based rank; 0 is the documented "no reliable knee"
/// sentinel used when the SNR curve has fewer than three positive entries,
/// in which case `reference_snr` is 0 and the derived exponent is 0
/// everywhere (pure PCA).
struct SnrProfile {
  double noise_floor = 0.0;
  std::vector<double> snr;
  double tail_fraction = 0.10;
  std::size_t knee_index = 0;
  double reference_snr = 0.0;
};

/// Fitted artifact: spectrum plus derived SNR statistics. This is what the
/// STM1 container persists.
struct SpectralModel {
  spectral::CovarianceSpectrum spectrum;
  SnrProfile profile;
  std::size_t sample_cap = 0;  // cap requested at fit time

  std::size_t dim() const { return spectrum.dim; }
};

/// Per-target-k projection: y = (x - mean)^T W, optionally L2-normalized.
struct TemperingPlan {
  std::size_t k = 0;
  double gamma = 0.0;
  std::vector<double> w;  // dim x k, column-major (column j = u_j * lam_j^{-gamma/2})
  std::vector<double> mean;
  bool l2_normalize = true;
};

/// Mean of the trailing ceil(tail_fraction * d) eigenvalues.
double noise_floor(const std::vector<double>& eigenvalues, double tail_fraction);

/// SNR(i) = max(0, (lam_i - floor) / floor). A floor of exactly zero gets a
/// finite surrogate (lam_i over the smallest positive eigenvalue) so that the
/// ratio-based exponent below still saturates at 1 on the signal prefix.
std::vector<double> snr_profile(const std::vector<double>& eigenvalues, double floor);

/// Kneedle knee detection on the positive prefix of a non-increasing SNR
/// curve (sensitivity 1.0, no smoothing). Returns a 1-based rank. Throws
/// data_error when fewer than three entries are positive.
std::size_t detect_knee(const std::vector<double>& snr);

/// gamma(k) = min(1, SNR(k) / SNR(k_knee)); 0 when the reference is empty.
double derive_gamma(const std::vector<double>& snr, std::size_t knee_index, std::size_t k);

/// Derives the SnrProfile for a fitted spectrum (floor, SNR curve, knee).
SnrProfile derive_profile(const spectral::CovarianceSpectrum& spectrum, double tail_fraction);

/// Convenience composition: fit_spectrum + derive_profile.
SpectralModel fit_model(const EmbeddingMatrix& corpus, std::size_t cap, std::uint64_t seed,
                        double tail_fraction);

/// Builds the d x k projection for a target dimensionality. gamma_override,
/// when given, replaces the derived exponent (0 = PCA, 1 = whitening).
TemperingPlan build_plan(const SpectralModel& model, std::size_t k,
                         std::optional<double> gamma_override, bool l2_normalize);

/// Applies a plan to queries or documents: (x - mean)^T W per row, then
/// row-wise L2 normalization when the plan says so. Zero rows stay zero.
EmbeddingMatrix transform(const TemperingPlan& plan, const EmbeddingMatrix& x);

}  // namespace spectemp::tempering
