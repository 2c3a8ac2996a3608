#pragma once

#include <cstdint>
#include <vector>

#include "spectemp/types.hpp"

namespace spectemp::spectral {

/// Eigendecomposition of a corpus covariance matrix.
///
/// Eigenvalues are sorted descending and clamped at zero; eigenvectors are
/// stored column-major (column i pairs with eigenvalue i) so the top-k block
/// is a contiguous prefix. Each eigenvector's first nonzero component is
/// made non-negative, which fixes the sign freedom and makes fits
/// reproducible bit-for-bit.
struct CovarianceSpectrum {
  std::size_t dim = 0;
  std::vector<double> mean;          // length dim
  std::vector<double> eigenvalues;   // length dim, descending, >= 0
  std::vector<double> eigenvectors;  // dim*dim, column-major
  std::size_t sample_count = 0;      // rows actually used for the fit
  std::uint64_t sample_seed = 0;

  double eigenvector(std::size_t row, std::size_t col) const {
    return eigenvectors[col * dim + row];
  }
};

/// Uniform row subsample without replacement. Returns the input unchanged
/// when it already fits under `cap`; original row order is preserved.
EmbeddingMatrix subsample(const EmbeddingMatrix& m, std::size_t cap, std::uint64_t seed);

/// Column-mean removal. The mean is accumulated in double; the centered
/// matrix is stored back as float32.
struct Centered {
  EmbeddingMatrix matrix;
  std::vector<double> mean;
};
Centered center(const EmbeddingMatrix& m);

/// Sample covariance (1/(n-1)) of an already-centered matrix, accumulated in
/// double. Throws data_error when fewer than two rows are available.
std::vector<double> covariance(const EmbeddingMatrix& centered);

/// Symmetric eigendecomposition C = U diag(L) U^T via Householder
/// tridiagonalization followed by implicit-shift QL. Input is a dense d x d
/// row-major symmetric matrix. Eigenvalues below -1e-6 * lambda_max indicate
/// a non-PSD input and raise numerical_error; small negatives are clamped.
struct EigenResult {
  std::vector<double> eigenvalues;   // descending
  std::vector<double> eigenvectors;  // column-major
};
EigenResult eigendecompose(const std::vector<double>& c, std::size_t d);

/// Full fit: subsample -> center -> covariance -> eigendecompose.
CovarianceSpectrum fit_spectrum(const EmbeddingMatrix& corpus, std::size_t cap,
                                std::uint64_t seed);

}  // namespace spectemp::spectral
