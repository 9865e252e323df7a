#include "norton/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "norton/rng.hpp"
#include "norton/sinkhorn.hpp"
#include "norton/tempalign.hpp"

namespace norton {
namespace oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void enumerate_dtw_paths(const CostMatrix& cost, std::size_t i, std::size_t j,
                         double acc, double& best) {
  acc += cost.at(i, j);
  if (i + 1 == cost.rows() && j + 1 == cost.cols()) {
    best = std::min(best, acc);
    return;
  }
  if (i + 1 < cost.rows() && j + 1 < cost.cols()) {
    enumerate_dtw_paths(cost, i + 1, j + 1, acc, best);
  }
  if (i + 1 < cost.rows()) enumerate_dtw_paths(cost, i + 1, j, acc, best);
  if (j + 1 < cost.cols()) enumerate_dtw_paths(cost, i, j + 1, acc, best);
}

void enumerate_window_paths(const CostMatrix& cost, std::size_t i, std::size_t j,
                            double acc, double& best) {
  acc += cost.at(i, j);
  if (i + 1 == cost.rows()) {
    best = std::min(best, acc);
    return;
  }
  enumerate_window_paths(cost, i + 1, j, acc, best);
  if (j + 1 < cost.cols()) enumerate_window_paths(cost, i + 1, j + 1, acc, best);
}

}  // namespace

AssignmentResult brute_force_assignment(const SimilarityMatrix& S, std::size_t max_n) {
  require(S.rows() == S.cols(), "assignment oracle needs a square matrix");
  require(S.rows() >= 1 && S.rows() <= max_n, "assignment oracle size cap exceeded");

  const std::size_t n = S.rows();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  AssignmentResult best;
  best.best_mean = -kInf;
  do {
    double total = 0.0;
    for (std::size_t a = 0; a < n; ++a) total += S.at(a, perm[a]);
    double mean = total / static_cast<double>(n);
    if (mean > best.best_mean) {
      best.best_mean = mean;
      best.permutation = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double brute_force_dtw(const CostMatrix& cost) {
  require(cost.rows() >= 1 && cost.cols() >= 1, "empty cost matrix");
  require(cost.rows() + cost.cols() <= 12, "dtw oracle size cap exceeded");
  double best = kInf;
  enumerate_dtw_paths(cost, 0, 0, 0.0, best);
  return best;
}

double brute_force_otam(const CostMatrix& cost) {
  require(cost.rows() >= 1 && cost.cols() >= 1, "empty cost matrix");
  require(cost.rows() + cost.cols() <= 16, "otam oracle size cap exceeded");
  double best = kInf;
  for (std::size_t j0 = 0; j0 < cost.cols(); ++j0) {
    enumerate_window_paths(cost, 0, j0, 0.0, best);
  }
  return best;
}

Matrix reference_sinkhorn(const SimilarityMatrix& S, const Marginals& marg,
                          double epsilon, double tol, int max_iters) {
  const std::size_t n = S.rows();
  const std::size_t m = S.cols();
  require(marg.mu.size() == n && marg.nu.size() == m, "marginal size mismatch");

  // Independent log-domain iteration, written as its own loop on purpose.
  std::vector<double> f(n, 0.0), g(m, 0.0);
  auto row_violation = [&]() {
    double worst = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      double sum = 0.0;
      for (std::size_t b = 0; b < m; ++b) {
        sum += std::exp((S.at(a, b) + f[a] + g[b]) / epsilon);
      }
      worst = std::max(worst, std::abs(sum - marg.mu[a]));
    }
    return worst;
  };

  for (int iter = 0; iter < max_iters; ++iter) {
    for (std::size_t a = 0; a < n; ++a) {
      double hi = -kInf;
      for (std::size_t b = 0; b < m; ++b) hi = std::max(hi, (S.at(a, b) + g[b]) / epsilon);
      double sum = 0.0;
      for (std::size_t b = 0; b < m; ++b) sum += std::exp((S.at(a, b) + g[b]) / epsilon - hi);
      f[a] = epsilon * (std::log(marg.mu[a]) - hi - std::log(sum));
    }
    for (std::size_t b = 0; b < m; ++b) {
      double hi = -kInf;
      for (std::size_t a = 0; a < n; ++a) hi = std::max(hi, (S.at(a, b) + f[a]) / epsilon);
      double sum = 0.0;
      for (std::size_t a = 0; a < n; ++a) sum += std::exp((S.at(a, b) + f[a]) / epsilon - hi);
      g[b] = epsilon * (std::log(marg.nu[b]) - hi - std::log(sum));
    }
    if (row_violation() <= tol) {
      Matrix q(n, m);
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
          q.at(a, b) = std::exp((S.at(a, b) + f[a] + g[b]) / epsilon);
        }
      }
      return q;
    }
  }
  throw std::runtime_error("reference Sinkhorn failed to reach tolerance");
}

Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& loss,
                                  const Matrix& at, double h) {
  require(h > 0.0, "finite-difference step must be positive");
  Matrix grad(at.rows(), at.cols());
  Matrix probe = at;
  for (std::size_t i = 0; i < at.size(); ++i) {
    double original = probe.data()[i];
    probe.data()[i] = original + h;
    double up = loss(probe);
    probe.data()[i] = original - h;
    double down = loss(probe);
    probe.data()[i] = original;
    require(std::isfinite(up) && std::isfinite(down),
            "non-finite loss during finite differences");
    grad.data()[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

std::vector<SuiteResult> run_check_suites(const OracleConfig& cfg) {
  std::vector<SuiteResult> results;

  {
    SuiteResult r{"constant_similarity_product_plan", false, ""};
    SimilarityMatrix S(3, 4, 0.7);
    Marginals marg = uniform_marginals(3, 4);
    Matrix q = reference_sinkhorn(S, marg, 1.0, cfg.ref_tol, cfg.ref_iters);
    double worst = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = 0; b < 4; ++b) {
        worst = std::max(worst, std::abs(q.at(a, b) - marg.mu[a] * marg.nu[b]));
      }
    }
    r.passed = worst <= 1e-12;
    r.detail = "max deviation " + std::to_string(worst);
    results.push_back(r);
  }

  {
    SuiteResult r{"symmetric_2x2_closed_form", false, ""};
    SimilarityMatrix S(2, 2);
    S.at(0, 0) = 1.0;
    S.at(1, 1) = 1.0;
    Matrix q = reference_sinkhorn(S, uniform_marginals(2, 2), 0.1, cfg.ref_tol,
                                  cfg.ref_iters);
    double expected = 0.5 * std::exp(10.0) / (std::exp(10.0) + 1.0);
    double err = std::max(std::abs(q.at(0, 0) - expected), std::abs(q.at(1, 1) - expected));
    r.passed = err <= 1e-10;
    r.detail = "diagonal error " + std::to_string(err);
    results.push_back(r);
  }

  {
    SuiteResult r{"dtw_cross_check", false, ""};
    bool ok = true;
    for (int s = 0; s < 25 && ok; ++s) {
      Rng rng(cfg.seed + static_cast<std::uint64_t>(s));
      std::size_t n = 1 + rng.index(5);
      std::size_t m = 1 + rng.index(5);
      CostMatrix cost = rng.uniform_matrix(n, m, 0.0, 1.0);
      auto [dist, path] = dtw(cost);
      ok = dist == brute_force_dtw(cost);
    }
    r.passed = ok;
    r.detail = ok ? "25 seeded matrices agree" : "mismatch against enumeration";
    results.push_back(r);
  }

  {
    SuiteResult r{"finite_difference_quadratic", false, ""};
    Rng rng(cfg.seed);
    Matrix at = rng.uniform_matrix(3, 3, -1.0, 1.0);
    auto quad = [](const Matrix& x) {
      double s = 0.0;
      for (double v : x.data()) s += v * v;
      return s;
    };
    Matrix grad = finite_difference_gradient(quad, at, cfg.fd_step);
    double worst = 0.0;
    for (std::size_t i = 0; i < at.size(); ++i) {
      worst = std::max(worst, std::abs(grad.data()[i] - 2.0 * at.data()[i]));
    }
    r.passed = worst <= 1e-6;
    r.detail = "max deviation " + std::to_string(worst);
    results.push_back(r);
  }

  return results;
}

}  // namespace oracle
}  // namespace norton
