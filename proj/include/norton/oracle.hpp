#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "norton/types.hpp"

namespace norton {
namespace oracle {

// Slow, obviously-correct references used by tests and acceptance checks.
// None of these share loops or tables with the production implementations.

struct OracleConfig {
  std::size_t max_n = 7;       // cap for factorial enumeration
  double fd_step = 1e-5;       // central-difference step
  double ref_tol = 1e-12;      // reference Sinkhorn tolerance
  int ref_iters = 100000;      // reference Sinkhorn iteration cap
  std::uint64_t seed = 42;
};

struct AssignmentResult {
  std::vector<std::size_t> permutation;  // row a -> column permutation[a]
  double best_mean = 0.0;                // max over perms of mean similarity
};

// Exhaustive scan over all n! permutations of a square similarity matrix,
// lexicographic tie-break.
AssignmentResult brute_force_assignment(const SimilarityMatrix& S,
                                        std::size_t max_n = 7);

// Exact DTW minimum by recursive enumeration of every monotone path under
// moves {(1,0),(0,1),(1,1)} from (0,0) to (n-1,m-1). Requires n+m <= 12.
double brute_force_dtw(const CostMatrix& cost);

// Exact window-relaxed alignment minimum by enumerating every start column
// and every {stay, advance} column step sequence.
double brute_force_otam(const CostMatrix& cost);

// Log-domain Sinkhorn at reference tolerance; throws if the tolerance is not
// reached within the iteration cap.
Matrix reference_sinkhorn(const SimilarityMatrix& S, const Marginals& marg,
                          double epsilon, double tol = 1e-12, int max_iters = 100000);

// Central finite differences of a scalar function of a matrix.
Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& loss,
                                  const Matrix& at, double h);

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Self-consistency suites surfaced by the `oracle-check` CLI command.
std::vector<SuiteResult> run_check_suites(const OracleConfig& cfg);

}  // namespace oracle
}  // namespace norton
