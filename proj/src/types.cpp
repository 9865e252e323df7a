#include "norton/types.hpp"

#include <cmath>

namespace norton {

TokenMatrix l2_normalize_rows(const TokenMatrix& t) {
  validate_token_matrix(t, "l2_normalize_rows");
  TokenMatrix out(t.rows(), t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    double norm = std::sqrt(compensated_dot(t.row(r), t.row(r)));
    if (norm == 0.0) throw std::invalid_argument("zero row cannot be normalized");
    for (std::size_t c = 0; c < t.cols(); ++c) {
      out.at(r, c) = t.at(r, c) / norm;
    }
  }
  return out;
}

std::vector<double> mean_pool(const TokenMatrix& t) {
  validate_token_matrix(t, "mean_pool");
  std::vector<double> pooled(t.cols(), 0.0);
  for (std::size_t c = 0; c < t.cols(); ++c) {
    KahanAccumulator acc;
    for (std::size_t r = 0; r < t.rows(); ++r) acc.add(t.at(r, c));
    pooled[c] = acc.value() / static_cast<double>(t.rows());
  }
  return pooled;
}

void validate_token_matrix(const TokenMatrix& t, const std::string& context) {
  require(t.rows() >= 1 && t.cols() >= 1, context + ": empty token matrix");
  require(t.all_finite(), context + ": non-finite token value");
}

void validate_marginals(const Marginals& m, double tolerance) {
  require(!m.mu.empty() && !m.nu.empty(), "empty marginals");
  for (double v : m.mu) require(v >= 0.0 && std::isfinite(v), "negative mu entry");
  for (double v : m.nu) require(v >= 0.0 && std::isfinite(v), "negative nu entry");
  double mu_sum = compensated_sum(m.mu);
  double nu_sum = compensated_sum(m.nu);
  require(std::abs(mu_sum - 1.0) <= tolerance, "mu does not sum to 1");
  require(std::abs(nu_sum - 1.0) <= tolerance, "nu does not sum to 1");
}

}  // namespace norton
