#include <cmath>
#include <vector>

#include "doctest.h"
#include "spectemp/rng.hpp"
#include "spectemp/spectral.hpp"
#include "spectemp/tempering.hpp"

using namespace spectemp;
using namespace spectemp::tempering;

namespace {

// Independent knee oracle: the point of maximum distance to the chord
// between the curve endpoints, both axes min-max normalized.
std::size_t chord_distance_knee(const std::vector<double>& y) {
  const std::size_t p = y.size();
  const double y_min = y[p - 1];
  const double y_span = y[0] - y_min;
  double best = -1.0;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < p; ++i) {
    const double xn = static_cast<double>(i) / static_cast<double>(p - 1);
    const double yn = y_span > 0.0 ? (y[i] - y_min) / y_span : 0.0;
    // Chord runs from (0, 1) to (1, 0); |x + y - 1| / sqrt(2) is the
    // perpendicular distance.
    const double dist = std::fabs(xn + yn - 1.0);
    if (dist > best) {
      best = dist;
      best_i = i;
    }
  }
  return best_i + 1;
}

SpectralModel model_from_gaussian(std::size_t n, std::size_t d, const std::vector<double>& stddev,
                                  std::uint64_t seed, double tail_fraction = 0.10) {
  Rng rng(seed);
  EmbeddingMatrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      m.at(i, j) = static_cast<float>(rng.normal() * stddev[j]);
    }
  }
  return fit_model(m, n, seed, tail_fraction);
}

}  // namespace

TEST_CASE("noise floor over the trailing eigenvalues") {
  CHECK(noise_floor({10, 8, 6, 4, 2, 1, 1, 1, 1, 1}, 0.10) == doctest::Approx(1.0));
  CHECK(noise_floor({5, 4, 3, 2, 1}, 0.40) == doctest::Approx(1.5));
  CHECK(noise_floor({0, 0, 0, 0}, 0.10) == doctest::Approx(0.0));
}

TEST_CASE("noise floor rejects a bad tail fraction") {
  CHECK_THROWS_AS(noise_floor({3, 2, 1}, 0.0), config_error);
  CHECK_THROWS_AS(noise_floor({3, 2, 1}, 1.0), config_error);
  CHECK_THROWS_AS(noise_floor({3, 2, 1}, 1.5), config_error);
}

TEST_CASE("snr formula and clamping") {
  const std::vector<double> snr = snr_profile({3.0, 1.0, 0.5}, 1.0);
  CHECK(snr[0] == doctest::Approx(2.0));
  CHECK(snr[1] == doctest::Approx(0.0));
  CHECK(snr[2] == doctest::Approx(0.0));
}

TEST_CASE("snr with a zero floor uses a finite surrogate") {
  const std::vector<double> snr = snr_profile({8.0, 2.0, 0.0}, 0.0);
  CHECK(snr[0] == doctest::Approx(4.0));
  CHECK(snr[1] == doctest::Approx(1.0));
  CHECK(snr[2] == 0.0);
}

TEST_CASE("knee detection tracks the chord oracle on 1/x curves") {
  for (const double scale : {1.0, 5.0, 120.0}) {
    for (const double shift : {0.0, 2.0}) {
      std::vector<double> snr;
      for (int x = 1; x <= 100; ++x) snr.push_back(scale / (static_cast<double>(x) + shift));
      const std::size_t knee = detect_knee(snr);
      const std::size_t oracle = chord_distance_knee(snr);
      const auto gap = knee > oracle ? knee - oracle : oracle - knee;
      INFO("scale=", scale, " shift=", shift, " knee=", knee, " oracle=", oracle);
      CHECK(gap <= 2);
    }
  }
}

TEST_CASE("knee detection finds a piecewise-linear breakpoint") {
  // Steep slope through rank 10, then nearly flat.
  std::vector<double> snr;
  double v = 1000.0;
  for (int i = 0; i < 100; ++i) {
    snr.push_back(v);
    v -= i < 9 ? 10.0 : 0.01;
  }
  const std::size_t knee = detect_knee(snr);
  CHECK(knee >= 9);
  CHECK(knee <= 11);
}

TEST_CASE("knee detection on a straight line falls back to the argmax") {
  std::vector<double> snr;
  for (int i = 0; i < 50; ++i) snr.push_back(100.0 - static_cast<double>(i));
  CHECK_NOTHROW(detect_knee(snr));
  CHECK(detect_knee(snr) >= 1);
  CHECK(detect_knee(snr) <= 50);
}

TEST_CASE("knee detection needs three positive entries") {
  CHECK_THROWS_AS(detect_knee({5.0, 1.0, 0.0, 0.0}), data_error);
}

TEST_CASE("gamma saturates at one inside the knee and decays with snr") {
  const std::vector<double> snr = {40.0, 20.0, 10.0, 5.0, 0.0};
  const std::size_t knee = 2;  // reference snr 20
  CHECK(derive_gamma(snr, knee, 1) == doctest::Approx(1.0));
  CHECK(derive_gamma(snr, knee, 2) == doctest::Approx(1.0));
  CHECK(derive_gamma(snr, knee, 3) == doctest::Approx(0.5));
  CHECK(derive_gamma(snr, knee, 4) == doctest::Approx(0.25));
  CHECK(derive_gamma(snr, knee, 5) == doctest::Approx(0.0));
}

TEST_CASE("gamma is zero when the reference is empty") {
  const std::vector<double> snr = {0.0, 0.0, 0.0};
  CHECK(derive_gamma(snr, 0, 1) == 0.0);
  CHECK(derive_gamma(snr, 0, 3) == 0.0);
}

TEST_CASE("gamma is non-increasing in k across random spiked models") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    std::vector<double> stddev(24, 1.0);
    Rng rng(seed);
    for (std::size_t j = 0; j < 6; ++j) stddev[j] = 3.0 + 4.0 * rng.uniform();
    const SpectralModel model = model_from_gaussian(3000, 24, stddev, 100 + seed);

    double prev = 2.0;
    for (std::size_t k = 1; k <= model.dim(); ++k) {
      const double g = derive_gamma(model.profile.snr, model.profile.knee_index, k);
      CHECK(g <= prev + 1e-12);
      CHECK(g >= 0.0);
      CHECK(g <= 1.0);
      prev = g;
    }
    // Full whitening throughout the high-confidence prefix.
    for (std::size_t k = 1; k <= model.profile.knee_index; ++k) {
      CHECK(derive_gamma(model.profile.snr, model.profile.knee_index, k) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("gamma profile is invariant under uniform spectrum rescale") {
  const SpectralModel model = model_from_gaussian(2000, 16, {4, 4, 3, 3, 2, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1}, 3);

  SpectralModel scaled = model;
  for (double& v : scaled.spectrum.eigenvalues) v *= 4.0;  // exact in binary
  scaled.profile = derive_profile(scaled.spectrum, scaled.profile.tail_fraction);

  CHECK(scaled.profile.knee_index == model.profile.knee_index);
  for (std::size_t k = 1; k <= model.dim(); ++k) {
    const double a = derive_gamma(model.profile.snr, model.profile.knee_index, k);
    const double b = derive_gamma(scaled.profile.snr, scaled.profile.knee_index, k);
    CHECK(a == b);  // bitwise: the floor scales by the same power of two
  }

  // Uniform rescale multiplies every projection column by the same factor,
  // so cosine orderings of transformed vectors are unchanged.
  Rng rng(99);
  EmbeddingMatrix x(12, 16);
  for (auto& v : x.data) v = static_cast<float>(rng.normal() * 2.0);
  const std::size_t k = 5;
  const EmbeddingMatrix ya = transform(build_plan(model, k, std::nullopt, true), x);
  const EmbeddingMatrix yb = transform(build_plan(scaled, k, std::nullopt, true), x);
  auto cosine = [&](const EmbeddingMatrix& m, std::size_t a, std::size_t b) {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) {
      dot += static_cast<double>(m.at(a, j)) * m.at(b, j);
      na += static_cast<double>(m.at(a, j)) * m.at(a, j);
      nb += static_cast<double>(m.at(b, j)) * m.at(b, j);
    }
    return dot / std::sqrt(na * nb);
  };
  for (std::size_t a = 0; a < x.rows; ++a) {
    for (std::size_t b = a + 1; b < x.rows; ++b) {
      CHECK(cosine(ya, a, b) == doctest::Approx(cosine(yb, a, b)).epsilon(1e-9));
    }
  }
}

TEST_CASE("build_plan with zero exponent reproduces the eigenvector prefix") {
  const SpectralModel model = model_from_gaussian(500, 8, {4, 3, 2, 2, 1, 1, 1, 1}, 21);
  const TemperingPlan plan = build_plan(model, 3, 0.0, true);
  REQUIRE(plan.w.size() == 8 * 3);
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t r = 0; r < 8; ++r) {
      CHECK(plan.w[j * 8 + r] == model.spectrum.eigenvector(r, j));
    }
  }
}

TEST_CASE("build_plan with full whitening scales by the inverse square root") {
  const SpectralModel model = model_from_gaussian(500, 8, {4, 3, 2, 2, 1, 1, 1, 1}, 22);
  const TemperingPlan plan = build_plan(model, 4, 1.0, false);
  for (std::size_t j = 0; j < 4; ++j) {
    const double expected = 1.0 / std::sqrt(model.spectrum.eigenvalues[j]);
    for (std::size_t r = 0; r < 8; ++r) {
      CHECK(plan.w[j * 8 + r] ==
            doctest::Approx(model.spectrum.eigenvector(r, j) * expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("build_plan validates k and the override range") {
  const SpectralModel model = model_from_gaussian(200, 4, {2, 1, 1, 1}, 5);
  CHECK_THROWS_AS(build_plan(model, 0, 0.5, true), config_error);
  CHECK_THROWS_AS(build_plan(model, 5, 0.5, true), config_error);
  CHECK_THROWS_AS(build_plan(model, 2, 1.5, true), config_error);
  CHECK_THROWS_AS(build_plan(model, 2, -0.1, true), config_error);
}

TEST_CASE("whitening the fitting sample yields an identity covariance") {
  Rng rng(33);
  const std::size_t n = 4000;
  const std::size_t d = 16;
  EmbeddingMatrix corpus(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      corpus.at(i, j) = static_cast<float>(rng.normal() * (1.0 + static_cast<double>(j % 5)));
    }
  }
  const SpectralModel model = fit_model(corpus, n, 1, 0.10);
  const TemperingPlan plan = build_plan(model, d, 1.0, false);
  const EmbeddingMatrix out = transform(plan, corpus);

  const spectral::Centered centered = spectral::center(out);
  const std::vector<double> cov = spectral::covariance(centered.matrix);
  double worst = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double target = i == j ? 1.0 : 0.0;
      worst = std::max(worst, std::fabs(cov[i * d + j] - target));
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("transform maps the mean to zero and normalizes nonzero rows") {
  // Exact centering identity needs a mean that is representable in the
  // float32 input, so use a hand-built model; rows that project to exactly
  // zero must stay zero rather than being normalized.
  SpectralModel exact;
  exact.spectrum.dim = 3;
  exact.spectrum.mean = {0.25, -1.5, 3.0};
  exact.spectrum.eigenvalues = {4.0, 2.0, 1.0};
  exact.spectrum.eigenvectors = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  exact.spectrum.sample_count = 3;
  exact.profile = derive_profile(exact.spectrum, 0.4);

  EmbeddingMatrix at_mean(1, 3);
  at_mean.at(0, 0) = 0.25f;
  at_mean.at(0, 1) = -1.5f;
  at_mean.at(0, 2) = 3.0f;
  const EmbeddingMatrix zero = transform(build_plan(exact, 2, std::nullopt, true), at_mean);
  CHECK(zero.at(0, 0) == 0.0f);
  CHECK(zero.at(0, 1) == 0.0f);

  // Against a fitted model the cancellation is only float32-exact, so check
  // the un-normalized projection instead.
  const SpectralModel model = model_from_gaussian(300, 6, {3, 2, 2, 1, 1, 1}, 8);
  EmbeddingMatrix near_mean(1, 6);
  for (std::size_t j = 0; j < 6; ++j) {
    near_mean.at(0, j) = static_cast<float>(model.spectrum.mean[j]);
  }
  const TemperingPlan raw_plan = build_plan(model, 4, std::nullopt, false);
  const EmbeddingMatrix small = transform(raw_plan, near_mean);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(std::fabs(small.at(0, j)) <= 1e-5);
  }

  const TemperingPlan plan = build_plan(model, 4, std::nullopt, true);
  Rng rng(77);
  EmbeddingMatrix x(20, 6);
  for (auto& v : x.data) v = static_cast<float>(rng.normal());
  const EmbeddingMatrix y = transform(plan, x);
  for (std::size_t i = 0; i < y.rows; ++i) {
    double nrm = 0.0;
    for (std::size_t j = 0; j < y.cols; ++j) {
      nrm += static_cast<double>(y.at(i, j)) * static_cast<double>(y.at(i, j));
    }
    nrm = std::sqrt(nrm);
    if (nrm > 0.0) CHECK(nrm == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("full-width rotation preserves pairwise distances") {
  const std::size_t d = 8;
  const SpectralModel model = model_from_gaussian(600, d, {4, 3, 3, 2, 2, 1, 1, 1}, 91);
  const TemperingPlan plan = build_plan(model, d, 0.0, false);

  Rng rng(5);
  EmbeddingMatrix x(10, d);
  for (auto& v : x.data) v = static_cast<float>(rng.normal() * 2.0);
  const EmbeddingMatrix y = transform(plan, x);

  for (std::size_t a = 0; a < x.rows; ++a) {
    for (std::size_t b = a + 1; b < x.rows; ++b) {
      double dx = 0.0;
      double dy = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double vx = static_cast<double>(x.at(a, j)) - static_cast<double>(x.at(b, j));
        const double vy = static_cast<double>(y.at(a, j)) - static_cast<double>(y.at(b, j));
        dx += vx * vx;
        dy += vy * vy;
      }
      CHECK(std::sqrt(dy) == doctest::Approx(std::sqrt(dx)).epsilon(1e-5));
    }
  }
}

TEST_CASE("transform output is independent of the worker count") {
  const SpectralModel model = model_from_gaussian(500, 10, {5, 4, 3, 2, 2, 1, 1, 1, 1, 1}, 17);
  const TemperingPlan plan = build_plan(model, 6, std::nullopt, true);
  Rng rng(51);
  EmbeddingMatrix x(600, 10);
  for (auto& v : x.data) v = static_cast<float>(rng.normal());

  setenv("SPECTEMP_THREADS", "1", 1);
  const EmbeddingMatrix serial = transform(plan, x);
  setenv("SPECTEMP_THREADS", "3", 1);
  const EmbeddingMatrix threaded = transform(plan, x);
  unsetenv("SPECTEMP_THREADS");
  CHECK(serial.same_contents(threaded));
}

TEST_CASE("transform rejects mismatched dimensions") {
  const SpectralModel model = model_from_gaussian(100, 4, {2, 1, 1, 1}, 2);
  const TemperingPlan plan = build_plan(model, 2, 0.5, true);
  EmbeddingMatrix wrong(3, 5);
  wrong.data.assign(wrong.data.size(), 1.0f);
  CHECK_THROWS_AS(transform(plan, wrong), shape_error);
}

TEST_CASE("noise floor recovers the generating variance on spiked data") {
  // Rank-4 signal plus isotropic noise, sampled generously so the tail
  // eigenvalues hug the population floor.
  const std::size_t d = 16;
  const std::size_t n = 32000;
  const double sigma2 = 1.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(500 + seed);
    EmbeddingMatrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      double signal[4];
      for (double& s : signal) s = rng.normal() * 5.0;
      for (std::size_t j = 0; j < d; ++j) {
        double v = rng.normal() * std::sqrt(sigma2);
        if (j < 4) v += signal[j];
        m.at(i, j) = static_cast<float>(v);
      }
    }
    const SpectralModel model = fit_model(m, n, seed, 0.10);
    CHECK(model.profile.noise_floor == doctest::Approx(sigma2).epsilon(0.10));
  }
}
