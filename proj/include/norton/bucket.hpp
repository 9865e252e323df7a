#pragma once

#include <optional>
#include <string>
#include <vector>

#include "norton/sinkhorn.hpp"
#include "norton/types.hpp"

namespace norton {

enum class MarginalScheme {
  kMatchedMass,  // bucket row/column weighted by the opposite side's count
  kUniform,      // 1/(n+1) and 1/(m+1) everywhere
};

struct BucketConfig {
  std::optional<double> p;  // explicit prompt value; wins over quantile
  double quantile = 0.3;    // estimated from originally aligned pair sims
  MarginalScheme scheme = MarginalScheme::kMatchedMass;
};

// S with one extra row and column holding the prompt value p everywhere.
struct AugmentedSimilarity {
  SimilarityMatrix base;
  double p = 0.0;
  SimilarityMatrix values;  // (n+1) x (m+1)
};

// Interior block of a bucket-augmented transport plan plus the mass each
// real clip/caption sent to the bucket.
struct FilteredPlan {
  Matrix interior;                     // n x m, sub-stochastic
  std::vector<double> bucket_row_mass; // per clip a: mass at (a, m+1)
  std::vector<double> bucket_col_mass; // per caption b: mass at (n+1, b)
  double corner_mass = 0.0;            // mass at (n+1, m+1)
  double p = 0.0;
  MarginalScheme scheme = MarginalScheme::kMatchedMass;
};

struct NortonResult {
  FilteredPlan plan;
  double distance = 0.0;  // sum over interior of Q * S
  SolverState solver_state;
};

enum class RealignStrategy { kRowArgmax, kThreshold };

struct AlignmentMap {
  struct Pair {
    std::size_t clip = 0;
    std::size_t caption = 0;
    double mass = 0.0;
  };
  std::vector<Pair> pairs;
  std::vector<std::size_t> dropped_clips;
  std::vector<std::size_t> dropped_captions;
};

// Nearest-rank lower quantile: sort ascending, take element at
// ceil(quantile * len) - 1.
double estimate_prompt_value(std::vector<double> diagonal_sims, double quantile);

// Prompt-bucket augmentation: interior equals S bit-for-bit, the appended
// row/column and corner all hold p.
AugmentedSimilarity augment_similarity(const SimilarityMatrix& S, double p);

// Marginals for the augmented (n+1) x (m+1) problem under the given scheme.
Marginals augmented_marginals(std::size_t n, std::size_t m, MarginalScheme scheme);

// Solve the bucket-augmented transport problem and keep the interior block.
// The transport distance scores only real clip-caption mass.
NortonResult norton_distance(const SimilarityMatrix& S, const BucketConfig& bucket,
                             const SolverConfig& solver);

// Mass each real clip/caption aligned to the bucket: everything in the
// bucket row and column except the corner.
double bucket_involved_mass(const FilteredPlan& plan);

// Row-argmax: each clip maps to its max-mass caption; a clip (caption) is
// dropped when its bucket mass strictly exceeds every real mass in its row
// (column), or when the row (column) holds no mass at all. Threshold: every
// pair with mass >= t (and > 0) is listed; the drop rule is unchanged.
AlignmentMap extract_realignment(const FilteredPlan& plan, RealignStrategy strategy,
                                 double threshold = 0.0);

// {"pairs": [[a, b, mass]...], "dropped_clips": [...], "dropped_captions": [...]}
std::string alignment_map_to_json(const AlignmentMap& map);

}  // namespace norton
