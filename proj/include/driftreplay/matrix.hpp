#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "driftreplay/error.hpp"

namespace driftreplay {

/// Dense row-major matrix of doubles. Vectors are n x 1 matrices.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::size_t size() const { return data.size(); }

  std::span<double> row(std::size_t r) {
    if (r >= rows) fail(ErrorKind::IdOutOfRange, "matrix row " + std::to_string(r));
    return {data.data() + r * cols, cols};
  }
  std::span<const double> row(std::size_t r) const {
    if (r >= rows) fail(ErrorKind::IdOutOfRange, "matrix row " + std::to_string(r));
    return {data.data() + r * cols, cols};
  }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    for (double x : data)
      if (!std::isfinite(x)) return false;
    return true;
  }

  bool operator==(const Matrix& o) const = default;
};

}  // namespace driftreplay
