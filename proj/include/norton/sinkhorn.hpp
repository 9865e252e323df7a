#pragma once

#include <utility>
#include <vector>

#include "norton/types.hpp"

namespace norton {

struct SolverConfig {
  double epsilon = 0.1;   // entropic regularization strength
  int max_iters = 50;     // one iteration = one row update + one column update
  double tol = 1e-9;      // L-inf marginal violation target (floor, not guarantee)
  bool log_domain = true; // iterate dual potentials instead of raw scalings
};

struct SolverState {
  // Log of the left/right scaling vectors of Q = Diag(k1) exp(S/eps) Diag(k2).
  std::vector<double> log_kappa1;
  std::vector<double> log_kappa2;
  int iterations_run = 0;
  double final_marginal_error = 0.0;
};

// mu = 1/n, nu = 1/m.
Marginals uniform_marginals(std::size_t n, std::size_t m);

// Entropic OT: maximize <Q,S> + eps*H(Q) subject to the given marginals.
// Columns are exact at return (last-updated side); rows are within the
// achieved tolerance recorded in SolverState. Deterministic for fixed input.
std::pair<TransportPlan, SolverState> sinkhorn_plan(const SimilarityMatrix& S,
                                                    const Marginals& marg,
                                                    const SolverConfig& cfg);

// <Q,S> + eps*H(Q) with H(Q) = -sum Q log Q and 0*log 0 := 0.
double transport_objective(const TransportPlan& plan, const SimilarityMatrix& S,
                           double epsilon);

// tr(Q^T S): the transport similarity used by the video-paragraph contrast.
double ot_similarity(const Matrix& plan_values, const SimilarityMatrix& S);

// L-inf violation of the plan's row/column sums against the marginals.
double marginal_violation(const Matrix& plan_values, const Marginals& marg);

}  // namespace norton
