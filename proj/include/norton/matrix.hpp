#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace norton {

// Dense row-major matrix of doubles. All numerical modules operate on this
// one representation; token matrices, similarity matrices, cost matrices and
// transport plans are shape-checked views of it.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  Matrix transposed() const;

  double min_value() const;
  double max_value() const;
  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Token matrices are rows of embedding coordinates, similarity/cost matrices
// are clip-by-caption grids. The aliases keep signatures close to the domain.
using TokenMatrix = Matrix;
using SimilarityMatrix = Matrix;
using CostMatrix = Matrix;

// Neumaier-compensated sum; evaluation order is fixed (index ascending) so
// reductions are reproducible regardless of call site or thread count.
double compensated_sum(std::span<const double> values);

// Compensated dot product over two equally sized spans.
double compensated_dot(std::span<const double> a, std::span<const double> b);

// Accumulator form for loops that cannot materialize a span.
class KahanAccumulator {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

void require(bool condition, const std::string& message);

}  // namespace norton
