#include <cmath>
#include <limits>

#include "doctest.h"
#include "norton/oracle.hpp"
#include "norton/rng.hpp"
#include "norton/sinkhorn.hpp"

using namespace norton;

TEST_CASE("uniform_marginals") {
  Marginals m = uniform_marginals(2, 2);
  CHECK(m.mu == std::vector<double>{0.5, 0.5});
  CHECK(m.nu == std::vector<double>{0.5, 0.5});

  Marginals r = uniform_marginals(1, 4);
  CHECK(r.mu == std::vector<double>{1.0});
  CHECK(r.nu == std::vector<double>(4, 0.25));

  CHECK_THROWS_AS(uniform_marginals(0, 3), std::invalid_argument);
}

TEST_CASE("constant similarity yields the product plan exactly") {
  SimilarityMatrix S(2, 2, 0.0);
  auto [plan, state] = sinkhorn_plan(S, uniform_marginals(2, 2), SolverConfig{});
  for (std::size_t i = 0; i < plan.values.size(); ++i) {
    CHECK(std::abs(plan.values.data()[i] - 0.25) <= 1e-12);
  }

  SimilarityMatrix S2(3, 5, -0.7);
  Marginals marg = uniform_marginals(3, 5);
  auto [plan2, state2] = sinkhorn_plan(S2, marg, SolverConfig{});
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 5; ++b) {
      CHECK(std::abs(plan2.values.at(a, b) - marg.mu[a] * marg.nu[b]) <= 1e-12);
    }
  }
}

TEST_CASE("symmetric 2x2 closed form") {
  SimilarityMatrix S(2, 2, 0.0);
  S.at(0, 0) = 1.0;
  S.at(1, 1) = 1.0;
  SolverConfig cfg;
  cfg.epsilon = 0.1;
  cfg.max_iters = 1000;
  cfg.tol = 1e-13;
  auto [plan, state] = sinkhorn_plan(S, uniform_marginals(2, 2), cfg);

  double diag = 0.5 * std::exp(10.0) / (std::exp(10.0) + 1.0);
  double off = 0.5 / (std::exp(10.0) + 1.0);
  CHECK(std::abs(plan.values.at(0, 0) - diag) <= 1e-10);
  CHECK(std::abs(plan.values.at(1, 1) - diag) <= 1e-10);
  CHECK(std::abs(plan.values.at(0, 1) - off) <= 1e-10);
  CHECK(std::abs(plan.values.at(1, 0) - off) <= 1e-10);
}

TEST_CASE("marginal feasibility and solver state") {
  Rng rng(17);
  SimilarityMatrix S = rng.uniform_matrix(6, 9, -1.0, 1.0);
  Marginals marg = uniform_marginals(6, 9);
  SolverConfig cfg;
  cfg.max_iters = 1000;
  auto [plan, state] = sinkhorn_plan(S, marg, cfg);

  // Columns were updated last: exact to machine precision.
  for (std::size_t b = 0; b < 9; ++b) {
    KahanAccumulator acc;
    for (std::size_t a = 0; a < 6; ++a) acc.add(plan.values.at(a, b));
    CHECK(std::abs(acc.value() - marg.nu[b]) <= 1e-14);
  }
  // Rows within the configured tolerance.
  for (std::size_t a = 0; a < 6; ++a) {
    CHECK(std::abs(compensated_sum(plan.values.row(a)) - marg.mu[a]) <= cfg.tol);
  }
  CHECK(state.iterations_run >= 1);
  CHECK(state.final_marginal_error <= cfg.tol);
  CHECK(plan.values.min_value() >= 0.0);
}

TEST_CASE("near-zero epsilon approaches the best assignment") {
  Rng rng(42);
  SimilarityMatrix S = rng.uniform_matrix(5, 5, -1.0, 1.0);
  SolverConfig cfg;
  cfg.epsilon = 1e-3;
  cfg.max_iters = 200000;
  cfg.tol = 1e-11;
  auto [plan, state] = sinkhorn_plan(S, uniform_marginals(5, 5), cfg);

  auto oracle = oracle::brute_force_assignment(S);
  double plan_value = ot_similarity(plan.values, S);
  CHECK(std::abs(plan_value - oracle.best_mean) <= 1e-3);
}

TEST_CASE("epsilon to infinity approaches the product plan") {
  Rng rng(21);
  SimilarityMatrix S = rng.uniform_matrix(4, 6, -1.0, 1.0);
  Marginals marg = uniform_marginals(4, 6);
  SolverConfig cfg;
  cfg.epsilon = 1e6;
  cfg.max_iters = 2000;
  cfg.tol = 1e-12;
  auto [plan, state] = sinkhorn_plan(S, marg, cfg);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 6; ++b) {
      CHECK(std::abs(plan.values.at(a, b) - marg.mu[a] * marg.nu[b]) <= 1e-6);
    }
  }
}

TEST_CASE("row and column shifts leave the plan unchanged") {
  Rng rng(33);
  SimilarityMatrix S = rng.uniform_matrix(5, 7, -1.0, 1.0);
  Marginals marg = uniform_marginals(5, 7);
  SolverConfig cfg;
  cfg.max_iters = 5000;
  cfg.tol = 1e-12;
  auto [base, s0] = sinkhorn_plan(S, marg, cfg);

  SimilarityMatrix shifted = S;
  for (std::size_t a = 0; a < 5; ++a) {
    double ca = rng.uniform(-2.0, 2.0);
    for (std::size_t b = 0; b < 7; ++b) shifted.at(a, b) += ca;
  }
  for (std::size_t b = 0; b < 7; ++b) {
    double cb = rng.uniform(-2.0, 2.0);
    for (std::size_t a = 0; a < 5; ++a) shifted.at(a, b) += cb;
  }
  auto [moved, s1] = sinkhorn_plan(shifted, marg, cfg);
  for (std::size_t i = 0; i < base.values.size(); ++i) {
    CHECK(std::abs(base.values.data()[i] - moved.values.data()[i]) <= 1e-8);
  }
}

TEST_CASE("entropic objective is maximized at the matching epsilon") {
  Rng rng(55);
  for (int trial = 0; trial < 5; ++trial) {
    SimilarityMatrix S = rng.uniform_matrix(4, 4, -1.0, 1.0);
    Marginals marg = uniform_marginals(4, 4);
    SolverConfig cfg;
    cfg.epsilon = 0.1;
    cfg.max_iters = 20000;
    cfg.tol = 1e-12;
    auto [best, s0] = sinkhorn_plan(S, marg, cfg);

    for (double other_eps : {0.05, 0.5, 1.0}) {
      SolverConfig other = cfg;
      other.epsilon = other_eps;
      auto [candidate, s1] = sinkhorn_plan(S, marg, other);
      CHECK(transport_objective(best, S, cfg.epsilon) + 1e-9 >=
            transport_objective(candidate, S, cfg.epsilon));
    }
  }
}

TEST_CASE("log-domain and direct-domain solvers agree") {
  Rng rng(66);
  SimilarityMatrix S = rng.uniform_matrix(5, 5, -1.0, 1.0);
  Marginals marg = uniform_marginals(5, 5);
  SolverConfig log_cfg;
  log_cfg.epsilon = 0.5;
  log_cfg.max_iters = 5000;
  log_cfg.tol = 1e-12;
  SolverConfig direct_cfg = log_cfg;
  direct_cfg.log_domain = false;

  auto [log_plan, s0] = sinkhorn_plan(S, marg, log_cfg);
  auto [direct_plan, s1] = sinkhorn_plan(S, marg, direct_cfg);
  for (std::size_t i = 0; i < log_plan.values.size(); ++i) {
    CHECK(std::abs(log_plan.values.data()[i] - direct_plan.values.data()[i]) <= 1e-8);
  }
}

TEST_CASE("transport_objective") {
  TransportPlan plan;
  plan.values = Matrix(2, 2, 0.25);
  plan.marginals = uniform_marginals(2, 2);
  plan.epsilon = 0.1;

  SimilarityMatrix zero(2, 2, 0.0);
  CHECK(transport_objective(plan, zero, 0.1) ==
        doctest::Approx(0.1 * std::log(4.0)).epsilon(1e-12));

  SimilarityMatrix constant(2, 2, 3.0);
  CHECK(transport_objective(plan, constant, 0.1) ==
        doctest::Approx(3.0 + 0.1 * std::log(4.0)).epsilon(1e-12));

  TransportPlan bad = plan;
  bad.values.at(0, 0) = -0.1;
  CHECK_THROWS_AS(transport_objective(bad, zero, 0.1), std::invalid_argument);
}

TEST_CASE("ot_similarity") {
  Marginals marg = uniform_marginals(3, 3);
  Matrix product(3, 3);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) product.at(a, b) = marg.mu[a] * marg.nu[b];
  }
  SimilarityMatrix constant(3, 3, 2.5);
  CHECK(ot_similarity(product, constant) == doctest::Approx(2.5).epsilon(1e-12));

  Matrix scaled_identity(3, 3, 0.0);
  SimilarityMatrix identity(3, 3, 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    scaled_identity.at(i, i) = 1.0 / 3.0;
    identity.at(i, i) = 1.0;
  }
  CHECK(ot_similarity(scaled_identity, identity) == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(8);
  Matrix q = rng.uniform_matrix(3, 3, 0.0, 1.0);
  Matrix s = rng.uniform_matrix(3, 3, -1.0, 1.0);
  double naive = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) naive += q.at(a, b) * s.at(a, b);
  }
  CHECK(std::abs(ot_similarity(q, s) - naive) <= 1e-12);

  Matrix wrong(2, 3, 0.0);
  CHECK_THROWS_AS(ot_similarity(wrong, s), std::invalid_argument);
}

TEST_CASE("solver input validation") {
  SimilarityMatrix S(2, 2, 0.0);
  Marginals bad;
  bad.mu = {0.9, 0.2};  // sums to 1.1
  bad.nu = {0.5, 0.5};
  CHECK_THROWS_AS(sinkhorn_plan(S, bad, SolverConfig{}), std::invalid_argument);

  SimilarityMatrix inf_s(2, 2, 0.0);
  inf_s.at(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(sinkhorn_plan(inf_s, uniform_marginals(2, 2), SolverConfig{}),
                  std::invalid_argument);

  SolverConfig bad_eps;
  bad_eps.epsilon = 0.0;
  CHECK_THROWS_AS(sinkhorn_plan(S, uniform_marginals(2, 2), bad_eps),
                  std::invalid_argument);
}
