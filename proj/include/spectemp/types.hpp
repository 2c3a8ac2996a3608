#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "spectemp/errors.hpp"

namespace spectemp {

/// Dense n x d matrix of corpus or query embeddings, row-major float32.
/// This is the payload type of the EMBF container; all model math happens
/// in double and only the stored vectors are single precision.
struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;  // rows * cols, row-major
  std::string label;        // provenance tag, not persisted

  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t n, std::size_t d)
      : rows(n), cols(d), data(n * d, 0.0f) {}

  float* row(std::size_t i) { return data.data() + i * cols; }
  const float* row(std::size_t i) const { return data.data() + i * cols; }

  float& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  float at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool same_contents(const EmbeddingMatrix& other) const {
    return rows == other.rows && cols == other.cols && data == other.data;
  }

  void require_valid() const {
    if (rows == 0 || cols == 0) {
      throw data_error("embedding matrix must have at least one row and one column");
    }
    if (data.size() != rows * cols) {
      throw data_error("embedding matrix payload size does not match rows*cols");
    }
  }
};

}  // namespace spectemp
