#include "norton/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace norton {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Max-shifted log(sum(exp(v))) over a strided slice; tolerates -inf entries.
double stable_lse(const std::vector<double>& v, std::size_t offset, std::size_t stride,
                  std::size_t count) {
  double hi = kNegInf;
  for (std::size_t k = 0; k < count; ++k) {
    hi = std::max(hi, v[offset + k * stride]);
  }
  if (hi == kNegInf) return kNegInf;
  double sum = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    sum += std::exp(v[offset + k * stride] - hi);
  }
  return hi + std::log(sum);
}

Matrix plan_from_potentials(const SimilarityMatrix& S, const std::vector<double>& f,
                            const std::vector<double>& g, double eps) {
  const std::size_t n = S.rows();
  const std::size_t m = S.cols();
  Matrix q(n, m);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      double e = (S.at(a, b) + f[a] + g[b]) / eps;
      q.at(a, b) = (f[a] == kNegInf || g[b] == kNegInf) ? 0.0 : std::exp(e);
    }
  }
  return q;
}

std::pair<Matrix, SolverState> solve_log_domain(const SimilarityMatrix& S,
                                                const Marginals& marg,
                                                const SolverConfig& cfg) {
  const std::size_t n = S.rows();
  const std::size_t m = S.cols();
  const double eps = cfg.epsilon;

  std::vector<double> log_mu(n), log_nu(m);
  for (std::size_t a = 0; a < n; ++a) {
    log_mu[a] = marg.mu[a] > 0.0 ? std::log(marg.mu[a]) : kNegInf;
  }
  for (std::size_t b = 0; b < m; ++b) {
    log_nu[b] = marg.nu[b] > 0.0 ? std::log(marg.nu[b]) : kNegInf;
  }

  // Potentials f, g such that Q_ab = exp((S_ab + f_a + g_b) / eps).
  std::vector<double> f(n, 0.0), g(m, 0.0);
  std::vector<double> scaled(n * m);  // (S_ab + g_b)/eps, refreshed per half-step

  SolverState state;
  double violation = std::numeric_limits<double>::infinity();
  int iter = 0;
  while (iter < cfg.max_iters) {
    ++iter;
    // Row update: rows become exact given current g.
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        scaled[a * m + b] = (S.at(a, b) + g[b]) / eps;
      }
    }
    for (std::size_t a = 0; a < n; ++a) {
      double lse = stable_lse(scaled, a * m, 1, m);
      f[a] = log_mu[a] == kNegInf ? kNegInf : eps * (log_mu[a] - lse);
    }
    // Column update: columns become exact given current f.
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        scaled[a * m + b] = (S.at(a, b) + f[a]) / eps;
      }
    }
    for (std::size_t b = 0; b < m; ++b) {
      double lse = stable_lse(scaled, b, m, n);
      g[b] = log_nu[b] == kNegInf ? kNegInf : eps * (log_nu[b] - lse);
    }

    // Columns are exact here; the violation is driven by the row side.
    violation = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      double row_sum = 0.0;
      for (std::size_t b = 0; b < m; ++b) {
        double e = (S.at(a, b) + f[a] + g[b]) / eps;
        row_sum += (f[a] == kNegInf || g[b] == kNegInf) ? 0.0 : std::exp(e);
      }
      violation = std::max(violation, std::abs(row_sum - marg.mu[a]));
    }
    if (violation <= cfg.tol) break;
  }

  Matrix q = plan_from_potentials(S, f, g, eps);
  state.iterations_run = iter;
  state.final_marginal_error = marginal_violation(q, marg);
  state.log_kappa1.resize(n);
  state.log_kappa2.resize(m);
  for (std::size_t a = 0; a < n; ++a) state.log_kappa1[a] = f[a] / eps;
  for (std::size_t b = 0; b < m; ++b) state.log_kappa2[b] = g[b] / eps;
  return {std::move(q), std::move(state)};
}

std::pair<Matrix, SolverState> solve_direct(const SimilarityMatrix& S,
                                            const Marginals& marg,
                                            const SolverConfig& cfg) {
  const std::size_t n = S.rows();
  const std::size_t m = S.cols();
  Matrix kernel(n, m);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      kernel.at(a, b) = std::exp(S.at(a, b) / cfg.epsilon);
    }
  }

  std::vector<double> k1(n, 1.0), k2(m, 1.0);
  double violation = std::numeric_limits<double>::infinity();
  int iter = 0;
  while (iter < cfg.max_iters) {
    ++iter;
    for (std::size_t a = 0; a < n; ++a) {
      double denom = 0.0;
      for (std::size_t b = 0; b < m; ++b) denom += kernel.at(a, b) * k2[b];
      k1[a] = denom > 0.0 ? marg.mu[a] / denom : 0.0;
    }
    for (std::size_t b = 0; b < m; ++b) {
      double denom = 0.0;
      for (std::size_t a = 0; a < n; ++a) denom += kernel.at(a, b) * k1[a];
      k2[b] = denom > 0.0 ? marg.nu[b] / denom : 0.0;
    }

    violation = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      double row_sum = 0.0;
      for (std::size_t b = 0; b < m; ++b) {
        row_sum += k1[a] * kernel.at(a, b) * k2[b];
      }
      violation = std::max(violation, std::abs(row_sum - marg.mu[a]));
    }
    if (violation <= cfg.tol) break;
  }

  Matrix q(n, m);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      q.at(a, b) = k1[a] * kernel.at(a, b) * k2[b];
    }
  }
  require(q.all_finite(), "numerical breakdown in direct-domain Sinkhorn");

  SolverState state;
  state.iterations_run = iter;
  state.final_marginal_error = marginal_violation(q, marg);
  state.log_kappa1.resize(n);
  state.log_kappa2.resize(m);
  for (std::size_t a = 0; a < n; ++a) {
    state.log_kappa1[a] = k1[a] > 0.0 ? std::log(k1[a]) : kNegInf;
  }
  for (std::size_t b = 0; b < m; ++b) {
    state.log_kappa2[b] = k2[b] > 0.0 ? std::log(k2[b]) : kNegInf;
  }
  return {std::move(q), std::move(state)};
}

}  // namespace

Marginals uniform_marginals(std::size_t n, std::size_t m) {
  require(n >= 1 && m >= 1, "marginal counts must be positive");
  Marginals marg;
  marg.mu.assign(n, 1.0 / static_cast<double>(n));
  marg.nu.assign(m, 1.0 / static_cast<double>(m));
  return marg;
}

std::pair<TransportPlan, SolverState> sinkhorn_plan(const SimilarityMatrix& S,
                                                    const Marginals& marg,
                                                    const SolverConfig& cfg) {
  require(S.rows() >= 1 && S.cols() >= 1, "empty similarity matrix");
  require(S.all_finite(), "non-finite similarity matrix");
  require(cfg.epsilon > 0.0, "epsilon must be positive");
  require(cfg.max_iters >= 1, "max_iters must be at least 1");
  require(cfg.tol > 0.0, "tol must be positive");
  require(marg.mu.size() == S.rows() && marg.nu.size() == S.cols(),
          "marginal sizes do not match similarity matrix");
  validate_marginals(marg);

  auto [values, state] =
      cfg.log_domain ? solve_log_domain(S, marg, cfg) : solve_direct(S, marg, cfg);

  TransportPlan plan;
  plan.values = std::move(values);
  plan.marginals = marg;
  plan.epsilon = cfg.epsilon;
  return {std::move(plan), std::move(state)};
}

double transport_objective(const TransportPlan& plan, const SimilarityMatrix& S,
                           double epsilon) {
  require(plan.values.same_shape(S), "plan and similarity shapes differ");
  KahanAccumulator value;
  KahanAccumulator entropy;
  for (std::size_t i = 0; i < S.size(); ++i) {
    double q = plan.values.data()[i];
    require(q >= 0.0, "negative transport plan entry");
    value.add(q * S.data()[i]);
    if (q > 0.0) entropy.add(-q * std::log(q));
  }
  return value.value() + epsilon * entropy.value();
}

double ot_similarity(const Matrix& plan_values, const SimilarityMatrix& S) {
  require(plan_values.same_shape(S), "plan and similarity shapes differ");
  KahanAccumulator acc;
  for (std::size_t i = 0; i < S.size(); ++i) {
    acc.add(plan_values.data()[i] * S.data()[i]);
  }
  return acc.value();
}

double marginal_violation(const Matrix& plan_values, const Marginals& marg) {
  double worst = 0.0;
  for (std::size_t a = 0; a < plan_values.rows(); ++a) {
    double row_sum = compensated_sum(plan_values.row(a));
    worst = std::max(worst, std::abs(row_sum - marg.mu[a]));
  }
  for (std::size_t b = 0; b < plan_values.cols(); ++b) {
    KahanAccumulator acc;
    for (std::size_t a = 0; a < plan_values.rows(); ++a) {
      acc.add(plan_values.at(a, b));
    }
    worst = std::max(worst, std::abs(acc.value() - marg.nu[b]));
  }
  return worst;
}

}  // namespace norton
