#include "norton/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace norton {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows * cols, "matrix data size does not match shape");
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) {
      t.at(c, r) = at(r, c);
    }
  }
  return t;
}

double Matrix::min_value() const {
  require(!data_.empty(), "min of empty matrix");
  return *std::min_element(data_.begin(), data_.end());
}

double Matrix::max_value() const {
  require(!data_.empty(), "max of empty matrix");
  return *std::max_element(data_.begin(), data_.end());
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double compensated_sum(std::span<const double> values) {
  KahanAccumulator acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

double compensated_dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot product size mismatch");
  KahanAccumulator acc;
  for (std::size_t i = 0; i < a.size(); ++i) acc.add(a[i] * b[i]);
  return acc.value();
}

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace norton
