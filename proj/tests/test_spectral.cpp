#include <cmath>
#include <vector>

#include "doctest.h"
#include "spectemp/rng.hpp"
#include "spectemp/spectral.hpp"

using namespace spectemp;
using namespace spectemp::spectral;

namespace {

// Independent 2x2 oracle: eigenvalues straight from the characteristic
// polynomial of [[a, b], [b, c]].
std::pair<double, double> eigenvalues_2x2(double a, double b, double c) {
  const double tr = a + c;
  const double disc = std::sqrt((a - c) * (a - c) + 4.0 * b * b);
  return {(tr + disc) / 2.0, (tr - disc) / 2.0};
}

EmbeddingMatrix gaussian_matrix(std::size_t n, std::size_t d, const std::vector<double>& stddev,
                                std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingMatrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    float* row = m.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = static_cast<float>(rng.normal() * stddev[j]);
    }
  }
  return m;
}

double max_abs_offdiag_error(const std::vector<double>& m, std::size_t d) {
  double worst = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double target = i == j ? 1.0 : 0.0;
      worst = std::max(worst, std::fabs(m[i * d + j] - target));
    }
  }
  return worst;
}

std::vector<double> gram_of_columns(const std::vector<double>& u, std::size_t d) {
  std::vector<double> g(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < d; ++r) acc += u[i * d + r] * u[j * d + r];
      g[i * d + j] = acc;
    }
  }
  return g;
}

}  // namespace

TEST_CASE("subsample keeps small inputs untouched") {
  EmbeddingMatrix m(5, 3);
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = static_cast<float>(i);
  const EmbeddingMatrix out = subsample(m, 10, 7);
  CHECK(out.same_contents(m));
}

TEST_CASE("subsample draws distinct original rows deterministically") {
  EmbeddingMatrix m(5, 3);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 3; ++j) m.at(i, j) = static_cast<float>(10 * i + j);
  }
  const EmbeddingMatrix a = subsample(m, 3, 7);
  const EmbeddingMatrix b = subsample(m, 3, 7);
  REQUIRE(a.rows == 3);
  CHECK(a.same_contents(b));

  // Every output row must be one of the input rows, all distinct.
  std::vector<int> seen;
  for (std::size_t i = 0; i < a.rows; ++i) {
    const int tag = static_cast<int>(a.at(i, 0)) / 10;
    CHECK(a.at(i, 1) == doctest::Approx(10.0 * tag + 1));
    for (int s : seen) CHECK(s != tag);
    seen.push_back(tag);
  }
}

TEST_CASE("center subtracts the column mean") {
  EmbeddingMatrix m(2, 1);
  m.at(0, 0) = 1.0f;
  m.at(1, 0) = 3.0f;
  const Centered c = center(m);
  CHECK(c.mean[0] == doctest::Approx(2.0));
  CHECK(c.matrix.at(0, 0) == doctest::Approx(-1.0));
  CHECK(c.matrix.at(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("center of a single row is zero") {
  EmbeddingMatrix m(1, 4);
  for (std::size_t j = 0; j < 4; ++j) m.at(0, j) = static_cast<float>(j) + 0.5f;
  const Centered c = center(m);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(c.mean[j] == doctest::Approx(static_cast<double>(j) + 0.5));
    CHECK(c.matrix.at(0, j) == 0.0f);
  }
}

TEST_CASE("centered columns sum to nearly zero at scale") {
  const std::size_t n = 20000;
  const std::size_t d = 8;
  std::vector<double> stddev(d, 2.0);
  const EmbeddingMatrix m = gaussian_matrix(n, d, stddev, 314);
  const Centered c = center(m);
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += c.matrix.at(i, j);
    CHECK(std::fabs(sum) <= 1e-4 * static_cast<double>(n));
  }
}

TEST_CASE("center hand example in two dimensions") {
  EmbeddingMatrix m(2, 2);
  m.at(0, 0) = 1.0f; m.at(0, 1) = 0.0f;
  m.at(1, 0) = 0.0f; m.at(1, 1) = 1.0f;
  const Centered c = center(m);
  CHECK(c.mean[0] == doctest::Approx(0.5));
  CHECK(c.mean[1] == doctest::Approx(0.5));
  CHECK(c.matrix.at(0, 0) == doctest::Approx(0.5));
  CHECK(c.matrix.at(0, 1) == doctest::Approx(-0.5));
  CHECK(c.matrix.at(1, 0) == doctest::Approx(-0.5));
  CHECK(c.matrix.at(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("covariance hand examples") {
  EmbeddingMatrix m(2, 1);
  m.at(0, 0) = -1.0f;
  m.at(1, 0) = 1.0f;
  CHECK(covariance(m)[0] == doctest::Approx(2.0));

  EmbeddingMatrix two(2, 2);
  two.at(0, 0) = 0.5f;  two.at(0, 1) = -0.5f;
  two.at(1, 0) = -0.5f; two.at(1, 1) = 0.5f;
  const std::vector<double> c = covariance(two);
  CHECK(c[0] == doctest::Approx(0.5));
  CHECK(c[1] == doctest::Approx(-0.5));
  CHECK(c[2] == doctest::Approx(-0.5));
  CHECK(c[3] == doctest::Approx(0.5));
}

TEST_CASE("covariance rejects a single row") {
  EmbeddingMatrix m(1, 2);
  CHECK_THROWS_AS(covariance(m), data_error);
}

TEST_CASE("eigendecompose diagonal matrix") {
  const std::vector<double> c = {3.0, 0.0, 0.0, 1.0};
  const EigenResult r = eigendecompose(c, 2);
  CHECK(r.eigenvalues[0] == doctest::Approx(3.0));
  CHECK(r.eigenvalues[1] == doctest::Approx(1.0));
  // Canonical signs make the eigenvector matrix exactly a permutation.
  CHECK(r.eigenvectors[0] == doctest::Approx(1.0));
  CHECK(r.eigenvectors[1] == doctest::Approx(0.0));
  CHECK(r.eigenvectors[2] == doctest::Approx(0.0));
  CHECK(r.eigenvectors[3] == doctest::Approx(1.0));
}

TEST_CASE("eigendecompose matches the characteristic polynomial oracle") {
  const std::vector<double> c = {2.0, 1.0, 1.0, 2.0};
  const auto [lo1, lo2] = eigenvalues_2x2(2.0, 1.0, 2.0);
  CHECK(lo1 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(lo2 == doctest::Approx(1.0).epsilon(1e-12));

  const EigenResult r = eigendecompose(c, 2);
  CHECK(r.eigenvalues[0] == doctest::Approx(lo1).epsilon(1e-12));
  CHECK(r.eigenvalues[1] == doctest::Approx(lo2).epsilon(1e-12));

  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(r.eigenvectors[0] == doctest::Approx(inv_sqrt2));
  CHECK(r.eigenvectors[1] == doctest::Approx(inv_sqrt2));
  CHECK(r.eigenvectors[2] == doctest::Approx(inv_sqrt2));
  CHECK(r.eigenvectors[3] == doctest::Approx(-inv_sqrt2));
}

TEST_CASE("eigendecompose zero matrix") {
  const std::vector<double> c(9, 0.0);
  const EigenResult r = eigendecompose(c, 3);
  for (double v : r.eigenvalues) CHECK(v == 0.0);
  CHECK(max_abs_offdiag_error(gram_of_columns(r.eigenvectors, 3), 3) <= 1e-12);
}

TEST_CASE("eigendecompose random PSD matrices satisfy the spectral contracts") {
  Rng rng(42);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t d = 2 + rng.below(30);
    // PSD by construction: B^T B scaled.
    std::vector<double> b(d * d);
    for (double& v : b) v = rng.normal();
    std::vector<double> c(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        for (std::size_t r = 0; r < d; ++r) acc += b[r * d + i] * b[r * d + j];
        c[i * d + j] = acc / static_cast<double>(d);
      }
    }

    const EigenResult r = eigendecompose(c, d);

    for (std::size_t i = 1; i < d; ++i) CHECK(r.eigenvalues[i] <= r.eigenvalues[i - 1]);
    for (double v : r.eigenvalues) CHECK(v >= 0.0);

    CHECK(max_abs_offdiag_error(gram_of_columns(r.eigenvectors, d), d) <= 1e-6);

    // Reconstruction against the input.
    const double scale = std::max(1.0, r.eigenvalues[0]);
    double worst = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          acc += r.eigenvectors[k * d + i] * r.eigenvalues[k] * r.eigenvectors[k * d + j];
        }
        worst = std::max(worst, std::fabs(acc - c[i * d + j]));
      }
    }
    CHECK(worst <= 1e-6 * scale);

    // Trace preservation.
    double trace = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      trace += c[i * d + i];
      sum += r.eigenvalues[i];
    }
    CHECK(sum == doctest::Approx(trace).epsilon(1e-6));
  }
}

TEST_CASE("eigendecompose rejects clearly non-PSD input") {
  const std::vector<double> c = {1.0, 0.0, 0.0, -1.0};
  CHECK_THROWS_AS(eigendecompose(c, 2), numerical_error);
}

TEST_CASE("fit_spectrum on rank-1 data has a single nonzero eigenvalue") {
  EmbeddingMatrix m(8, 2);
  for (std::size_t i = 0; i < 8; ++i) {
    const float v = i < 4 ? 1.0f : -1.0f;
    m.at(i, 0) = v;
    m.at(i, 1) = 2.0f * v;
  }
  const CovarianceSpectrum s = fit_spectrum(m, 100, 1);
  CHECK(s.eigenvalues[0] > 0.0);
  CHECK(s.eigenvalues[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("fit_spectrum recovers a diagonal population covariance") {
  // Monte Carlo: 50k draws from N(0, diag(4, 1)); sampling error at this n
  // stays well inside the +-5% band.
  const EmbeddingMatrix m = gaussian_matrix(50000, 2, {2.0, 1.0}, 1234);
  const CovarianceSpectrum s = fit_spectrum(m, 100000, 9);
  CHECK(s.eigenvalues[0] == doctest::Approx(4.0).epsilon(0.05));
  CHECK(s.eigenvalues[1] == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("fit_spectrum honors the sampling cap") {
  const EmbeddingMatrix m = gaussian_matrix(50, 3, {1.0, 1.0, 1.0}, 5);
  const CovarianceSpectrum s = fit_spectrum(m, 2, 11);
  CHECK(s.sample_count == 2);
  CHECK(s.sample_seed == 11);
}

TEST_CASE("fit_spectrum eigenvalues are rotation equivariant") {
  const std::size_t d = 6;
  const EmbeddingMatrix m = gaussian_matrix(400, d, {3.0, 2.5, 2.0, 1.5, 1.0, 0.5}, 77);

  // Random rotation built from Gram-Schmidt on a Gaussian matrix.
  Rng rng(13);
  std::vector<double> q(d * d);
  for (double& v : q) v = rng.normal();
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t p = 0; p < c; ++p) {
      double proj = 0.0;
      for (std::size_t r = 0; r < d; ++r) proj += q[c * d + r] * q[p * d + r];
      for (std::size_t r = 0; r < d; ++r) q[c * d + r] -= proj * q[p * d + r];
    }
    double nrm = 0.0;
    for (std::size_t r = 0; r < d; ++r) nrm += q[c * d + r] * q[c * d + r];
    nrm = std::sqrt(nrm);
    for (std::size_t r = 0; r < d; ++r) q[c * d + r] /= nrm;
  }

  EmbeddingMatrix rotated(m.rows, d);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (std::size_t r = 0; r < d; ++r) {
        acc += static_cast<double>(m.at(i, r)) * q[c * d + r];
      }
      rotated.at(i, c) = static_cast<float>(acc);
    }
  }

  const CovarianceSpectrum a = fit_spectrum(m, m.rows, 0);
  const CovarianceSpectrum b = fit_spectrum(rotated, m.rows, 0);
  for (std::size_t i = 0; i < d; ++i) {
    // float32 storage of the rotated inputs perturbs the spectrum slightly
    // beyond pure reassociation, so the bound is loose but still tight
    // relative to the eigenvalue spacing.
    CHECK(b.eigenvalues[i] == doctest::Approx(a.eigenvalues[i]).epsilon(1e-4));
  }
}
