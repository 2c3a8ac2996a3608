#include "spectemp/tempering.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spectemp/parallel.hpp"

namespace spectemp::tempering {

double noise_floor(const std::vector<double>& eigenvalues, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) {
    throw config_error("noise_floor: tail fraction must lie in (0, 1), got " +
                       std::to_string(tail_fraction));
  }
  const std::size_t d = eigenvalues.size();
  if (d < 2) throw config_error("noise_floor: need at least 2 eigenvalues");

  const auto tail = static_cast<std::size_t>(
      std::ceil(tail_fraction * static_cast<double>(d)));
  double sum = 0.0;
  for (std::size_t i = d - tail; i < d; ++i) sum += eigenvalues[i];
  return sum / static_cast<double>(tail);
}

std::vector<double> snr_profile(const std::vector<double>& eigenvalues, double floor) {
  if (floor < 0.0) throw config_error("snr_profile: negative noise floor");
  std::vector<double> snr(eigenvalues.size(), 0.0);
  if (floor > 0.0) {
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
      snr[i] = std::max(0.0, (eigenvalues[i] - floor) / floor);
    }
    return snr;
  }
  // Exactly noiseless spectrum: substitute the smallest positive eigenvalue
  // as the unit so the profile stays finite and strictly ordered.
  double smallest_positive = 0.0;
  for (auto it = eigenvalues.rbegin(); it != eigenvalues.rend(); ++it) {
    if (*it > 0.0) {
      smallest_positive = *it;
      break;
    }
  }
  if (smallest_positive > 0.0) {
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
      snr[i] = eigenvalues[i] > 0.0 ? eigenvalues[i] / smallest_positive : 0.0;
    }
  }
  return snr;
}

std::size_t detect_knee(const std::vector<double>& snr) {
  // Work on the strictly positive prefix (the curve is non-increasing).
  std::size_t p = 0;
  while (p < snr.size() && snr[p] > 0.0) ++p;
  if (p < 3) {
    throw data_error("detect_knee: need at least 3 positive SNR entries, got " +
                     std::to_string(p));
  }

  // Min-max normalize both axes, flip y so the curve is concave increasing,
  // then look at the gap between the curve and the diagonal.
  const double y_max = snr[0];
  const double y_min = snr[p - 1];
  const double y_span = y_max - y_min;
  std::vector<double> diff(p);
  for (std::size_t i = 0; i < p; ++i) {
    const double xn = static_cast<double>(i) / static_cast<double>(p - 1);
    const double yn = y_span > 0.0 ? (snr[i] - y_min) / y_span : 0.0;
    diff[i] = (1.0 - yn) - xn;
  }

  // Kneedle with sensitivity S = 1: a local maximum of the difference curve
  // is the knee once the curve drops below its threshold before the next
  // local maximum appears.
  const double spacing = 1.0 / static_cast<double>(p - 1);
  const double sensitivity = 1.0;
  bool have_candidate = false;
  std::size_t candidate = 0;
  double threshold = 0.0;

  auto is_local_max = [&](std::size_t i) {
    return i > 0 && i + 1 < p && diff[i] >= diff[i - 1] && diff[i] > diff[i + 1];
  };

  for (std::size_t i = 1; i < p; ++i) {
    if (is_local_max(i)) {
      candidate = i;
      threshold = diff[i] - sensitivity * spacing;
      have_candidate = true;
      continue;
    }
    if (have_candidate && diff[i] < threshold) {
      return candidate + 1;  // 1-based rank in the original index space
    }
  }

  // No local maximum cleared its threshold (e.g. a straight line): fall back
  // to the global argmax of the difference curve.
  std::size_t best = 0;
  for (std::size_t i = 1; i < p; ++i) {
    if (diff[i] > diff[best]) best = i;
  }
  return best + 1;
}

double derive_gamma(const std::vector<double>& snr, std::size_t knee_index, std::size_t k) {
  if (k < 1 || k > snr.size()) {
    throw config_error("derive_gamma: k out of range [1, d]");
  }
  constexpr double kEpsRef = 1e-12;
  const double s_ref =
      (knee_index >= 1 && knee_index <= snr.size()) ? snr[knee_index - 1] : 0.0;
  if (s_ref <= kEpsRef) return 0.0;
  return std::min(1.0, snr[k - 1] / s_ref);
}

SnrProfile derive_profile(const spectral::CovarianceSpectrum& spectrum, double tail_fraction) {
  SnrProfile profile;
  profile.tail_fraction = tail_fraction;
  profile.noise_floor = noise_floor(spectrum.eigenvalues, tail_fraction);
  profile.snr = snr_profile(spectrum.eigenvalues, profile.noise_floor);

  std::size_t positive = 0;
  for (double v : profile.snr) {
    if (v > 0.0) ++positive;
  }
  if (positive >= 3) {
    profile.knee_index = detect_knee(profile.snr);
    profile.reference_snr = profile.snr[profile.knee_index - 1];
  } else {
    // Degenerate spectrum: no knee to anchor on, exponent falls back to 0.
    profile.knee_index = 0;
    profile.reference_snr = 0.0;
  }
  return profile;
}

SpectralModel fit_model(const EmbeddingMatrix& corpus, std::size_t cap, std::uint64_t seed,
                        double tail_fraction) {
  SpectralModel model;
  model.spectrum = spectral::fit_spectrum(corpus, cap, seed);
  model.profile = derive_profile(model.spectrum, tail_fraction);
  model.sample_cap = cap;
  return model;
}

TemperingPlan build_plan(const SpectralModel& model, std::size_t k,
                         std::optional<double> gamma_override, bool l2_normalize) {
  const std::size_t d = model.dim();
  if (k < 1 || k > d) {
    throw config_error("build_plan: k=" + std::to_string(k) + " out of range [1, " +
                       std::to_string(d) + "]");
  }
  if (gamma_override && !(*gamma_override >= 0.0 && *gamma_override <= 1.0)) {
    throw config_error("build_plan: gamma override must lie in [0, 1]");
  }

  TemperingPlan plan;
  plan.k = k;
  plan.gamma = gamma_override ? *gamma_override
                              : derive_gamma(model.profile.snr, model.profile.knee_index, k);
  plan.mean = model.spectrum.mean;
  plan.l2_normalize = l2_normalize;

  // Clamp eigenvalues away from zero before the -gamma/2 power so
  // rank-deficient tails cannot overflow the scale factors.
  const double lambda_1 = model.spectrum.eigenvalues.empty() ? 0.0
                                                             : model.spectrum.eigenvalues[0];
  const double eps_lambda = lambda_1 > 0.0 ? 1e-12 * lambda_1 : 1e-30;

  plan.w.resize(d * k);
  for (std::size_t j = 0; j < k; ++j) {
    const double lam = std::max(model.spectrum.eigenvalues[j], eps_lambda);
    const double scale = plan.gamma == 0.0 ? 1.0 : std::pow(lam, -plan.gamma / 2.0);
    const double* u = model.spectrum.eigenvectors.data() + j * d;
    double* w = plan.w.data() + j * d;
    for (std::size_t r = 0; r < d; ++r) w[r] = u[r] * scale;
  }
  return plan;
}

EmbeddingMatrix transform(const TemperingPlan& plan, const EmbeddingMatrix& x) {
  x.require_valid();
  const std::size_t d = plan.mean.size();
  if (x.cols != d) {
    throw shape_error("transform: input dim " + std::to_string(x.cols) +
                      " does not match model dim " + std::to_string(d));
  }

  EmbeddingMatrix out(x.rows, plan.k);
  out.label = x.label;
  parallel_blocks(x.rows, [&](std::size_t begin, std::size_t end) {
    std::vector<double> centered(d);
    std::vector<double> y(plan.k);
    for (std::size_t i = begin; i < end; ++i) {
      const float* src = x.row(i);
      for (std::size_t j = 0; j < d; ++j) {
        centered[j] = static_cast<double>(src[j]) - plan.mean[j];
      }
      for (std::size_t c = 0; c < plan.k; ++c) {
        const double* w = plan.w.data() + c * d;
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += centered[j] * w[j];
        y[c] = acc;
      }
      if (plan.l2_normalize) {
        double nrm = 0.0;
        for (double v : y) nrm += v * v;
        nrm = std::sqrt(nrm);
        if (nrm > 0.0) {
          for (double& v : y) v /= nrm;
        }
      }
      float* dst = out.row(i);
      for (std::size_t c = 0; c < plan.k; ++c) dst[c] = static_cast<float>(y[c]);
    }
  });
  return out;
}

}  // namespace spectemp::tempering
