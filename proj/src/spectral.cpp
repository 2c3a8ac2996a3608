#include "spectemp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "spectemp/rng.hpp"

namespace spectemp::spectral {

namespace {

double hypot_stable(double a, double b) {
  const double absa = std::fabs(a);
  const double absb = std::fabs(b);
  if (absa > absb) {
    const double r = absb / absa;
    return absa * std::sqrt(1.0 + r * r);
  }
  if (absb == 0.0) return 0.0;
  const double r = absa / absb;
  return absb * std::sqrt(1.0 + r * r);
}

double sign_like(double a, double b) { return b >= 0.0 ? std::fabs(a) : -std::fabs(a); }

// Householder reduction of a symmetric matrix to tridiagonal form.
// On exit `a` (column-major accumulator, d x d) holds the orthogonal
// transform Q, `diag` the diagonal and `off` the subdiagonal (off[0] unused).
void tridiagonalize(std::vector<double>& a, std::size_t n, std::vector<double>& diag,
                    std::vector<double>& off) {
  auto at = [&](std::size_t r, std::size_t c) -> double& { return a[c * n + r]; };

  for (std::size_t i = n - 1; i >= 1; --i) {
    const std::size_t l = i - 1;
    double h = 0.0;
    double scale = 0.0;
    if (l > 0) {
      for (std::size_t k = 0; k <= l; ++k) scale += std::fabs(at(i, k));
      if (scale == 0.0) {
        off[i] = at(i, l);
      } else {
        for (std::size_t k = 0; k <= l; ++k) {
          at(i, k) /= scale;
          h += at(i, k) * at(i, k);
        }
        double f = at(i, l);
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        off[i] = scale * g;
        h -= f * g;
        at(i, l) = f - g;
        f = 0.0;
        for (std::size_t j = 0; j <= l; ++j) {
          at(j, i) = at(i, j) / h;
          g = 0.0;
          for (std::size_t k = 0; k <= j; ++k) g += at(j, k) * at(i, k);
          for (std::size_t k = j + 1; k <= l; ++k) g += at(k, j) * at(i, k);
          off[j] = g / h;
          f += off[j] * at(i, j);
        }
        const double hh = f / (h + h);
        for (std::size_t j = 0; j <= l; ++j) {
          f = at(i, j);
          g = off[j] - hh * f;
          off[j] = g;
          for (std::size_t k = 0; k <= j; ++k) at(j, k) -= f * off[k] + g * at(i, k);
        }
      }
    } else {
      off[i] = at(i, l);
    }
    diag[i] = h;
  }
  diag[0] = 0.0;
  off[0] = 0.0;

  // Accumulate the product of Householder reflectors into a.
  for (std::size_t i = 0; i < n; ++i) {
    if (diag[i] != 0.0) {
      for (std::size_t j = 0; j < i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k < i; ++k) g += at(i, k) * at(k, j);
        for (std::size_t k = 0; k < i; ++k) at(k, j) -= g * at(k, i);
      }
    }
    diag[i] = at(i, i);
    at(i, i) = 1.0;
    for (std::size_t j = 0; j < i; ++j) {
      at(j, i) = 0.0;
      at(i, j) = 0.0;
    }
  }
}

// Implicit-shift QL on a tridiagonal matrix; rotations are accumulated into
// the column-major matrix `z` so its columns end up as eigenvectors.
void ql_implicit(std::vector<double>& diag, std::vector<double>& off, std::size_t n,
                 std::vector<double>& z) {
  auto zt = [&](std::size_t r, std::size_t c) -> double& { return z[c * n + r]; };
  constexpr int kMaxSweeps = 50;

  for (std::size_t i = 1; i < n; ++i) off[i - 1] = off[i];
  off[n - 1] = 0.0;

  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m = l;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::fabs(diag[m]) + std::fabs(diag[m + 1]);
        if (std::fabs(off[m]) + dd == dd) break;
      }
      if (m != l) {
        if (iter++ == kMaxSweeps) {
          throw numerical_error("eigendecompose: QL iteration did not converge after " +
                                std::to_string(kMaxSweeps) + " sweeps");
        }
        double g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
        double r = hypot_stable(g, 1.0);
        g = diag[m] - diag[l] + off[l] / (g + sign_like(r, g));
        double s = 1.0;
        double c = 1.0;
        double p = 0.0;
        bool underflowed = false;
        for (std::size_t i = m; i-- > l;) {
          double f = s * off[i];
          const double b = c * off[i];
          r = hypot_stable(f, g);
          off[i + 1] = r;
          if (r == 0.0) {
            diag[i + 1] -= p;
            off[m] = 0.0;
            underflowed = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = diag[i + 1] - p;
          r = (diag[i] - g) * s + 2.0 * c * b;
          p = s * r;
          diag[i + 1] = g + p;
          g = c * r - b;
          for (std::size_t k = 0; k < n; ++k) {
            f = zt(k, i + 1);
            zt(k, i + 1) = s * zt(k, i) + c * f;
            zt(k, i) = c * zt(k, i) - s * f;
          }
        }
        if (underflowed) continue;
        diag[l] -= p;
        off[l] = g;
        off[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace

EmbeddingMatrix subsample(const EmbeddingMatrix& m, std::size_t cap, std::uint64_t seed) {
  m.require_valid();
  if (cap == 0) throw config_error("subsample: cap must be at least 1");
  if (m.rows <= cap) return m;

  Rng rng(seed);
  const std::vector<std::size_t> keep = rng.sample_without_replacement(m.rows, cap);
  EmbeddingMatrix out(cap, m.cols);
  out.label = m.label;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const float* src = m.row(keep[i]);
    std::copy(src, src + m.cols, out.row(i));
  }
  return out;
}

Centered center(const EmbeddingMatrix& m) {
  m.require_valid();
  const std::size_t n = m.rows;
  const std::size_t d = m.cols;

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float* row = m.row(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  }
  for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);

  Centered out;
  out.mean = std::move(mean);
  out.matrix = EmbeddingMatrix(n, d);
  out.matrix.label = m.label;
  for (std::size_t i = 0; i < n; ++i) {
    const float* src = m.row(i);
    float* dst = out.matrix.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      dst[j] = static_cast<float>(static_cast<double>(src[j]) - out.mean[j]);
    }
  }
  return out;
}

std::vector<double> covariance(const EmbeddingMatrix& centered) {
  centered.require_valid();
  const std::size_t n = centered.rows;
  const std::size_t d = centered.cols;
  if (n < 2) {
    throw data_error("covariance: need at least 2 rows, got " + std::to_string(n));
  }

  // Upper triangle of X^T X in double, then mirrored.
  std::vector<double> c(d * d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const float* row = centered.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = row[i];
      if (xi == 0.0) continue;
      double* ci = c.data() + i * d;
      for (std::size_t j = i; j < d; ++j) ci[j] += xi * static_cast<double>(row[j]);
    }
  }
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      const double v = c[i * d + j] / denom;
      c[i * d + j] = v;
      c[j * d + i] = v;
    }
  }
  return c;
}

EigenResult eigendecompose(const std::vector<double>& c, std::size_t d) {
  if (d == 0 || c.size() != d * d) {
    throw shape_error("eigendecompose: expected a d*d matrix");
  }
  for (double v : c) {
    if (!std::isfinite(v)) throw data_error("eigendecompose: non-finite matrix entry");
  }

  // Copy into the column-major working buffer (symmetric, so the transpose
  // is free) and run tred2 + tql2.
  std::vector<double> work(c);
  std::vector<double> diag(d, 0.0);
  std::vector<double> off(d, 0.0);
  if (d == 1) {
    diag[0] = c[0];
    work[0] = 1.0;
  } else {
    tridiagonalize(work, d, diag, off);
    ql_implicit(diag, off, d, work);
  }

  // Sort descending; ties keep their original (ascending) solver index so
  // repeated eigenvalues come out in a stable order.
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return diag[a] > diag[b]; });

  EigenResult out;
  out.eigenvalues.resize(d);
  out.eigenvectors.resize(d * d);
  for (std::size_t k = 0; k < d; ++k) {
    out.eigenvalues[k] = diag[order[k]];
    const double* src = work.data() + order[k] * d;
    double* dst = out.eigenvectors.data() + k * d;
    std::copy(src, src + d, dst);
    // Sign canonicalization: first nonzero component non-negative.
    for (std::size_t r = 0; r < d; ++r) {
      if (dst[r] != 0.0) {
        if (dst[r] < 0.0) {
          for (std::size_t q = 0; q < d; ++q) dst[q] = -dst[q];
        }
        break;
      }
    }
  }

  // Covariance matrices are PSD in exact arithmetic: clamp roundoff-level
  // negatives, reject anything larger as a solver failure.
  const double lambda_max = out.eigenvalues.empty() ? 0.0 : std::max(out.eigenvalues[0], 0.0);
  const double neg_tol = 1e-6 * lambda_max;
  for (double& v : out.eigenvalues) {
    if (v < 0.0) {
      if (v < -neg_tol) {
        throw numerical_error("eigendecompose: eigenvalue " + std::to_string(v) +
                              " below PSD tolerance");
      }
      v = 0.0;
    }
  }
  return out;
}

CovarianceSpectrum fit_spectrum(const EmbeddingMatrix& corpus, std::size_t cap,
                                std::uint64_t seed) {
  const EmbeddingMatrix sample = subsample(corpus, cap, seed);
  Centered centered = center(sample);
  const std::vector<double> c = covariance(centered.matrix);
  EigenResult eig = eigendecompose(c, sample.cols);

  CovarianceSpectrum spectrum;
  spectrum.dim = sample.cols;
  spectrum.mean = std::move(centered.mean);
  spectrum.eigenvalues = std::move(eig.eigenvalues);
  spectrum.eigenvectors = std::move(eig.eigenvectors);
  spectrum.sample_count = sample.rows;
  spectrum.sample_seed = seed;
  return spectrum;
}

}  // namespace spectemp::spectral
