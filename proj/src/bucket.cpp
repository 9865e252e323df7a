#include "norton/bucket.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "norton/io.hpp"

namespace norton {

double estimate_prompt_value(std::vector<double> diagonal_sims, double quantile) {
  require(!diagonal_sims.empty(), "no aligned-pair similarities to estimate p from");
  require(quantile > 0.0 && quantile < 1.0, "quantile must lie in (0,1)");
  std::sort(diagonal_sims.begin(), diagonal_sims.end());
  double rank = std::ceil(quantile * static_cast<double>(diagonal_sims.size()));
  std::size_t idx = static_cast<std::size_t>(rank);
  idx = std::min(std::max<std::size_t>(idx, 1), diagonal_sims.size()) - 1;
  return diagonal_sims[idx];
}

AugmentedSimilarity augment_similarity(const SimilarityMatrix& S, double p) {
  require(S.rows() >= 1 && S.cols() >= 1, "empty similarity matrix");
  require(S.all_finite(), "non-finite similarity matrix");
  require(std::isfinite(p), "non-finite prompt value");

  AugmentedSimilarity aug;
  aug.base = S;
  aug.p = p;
  aug.values = SimilarityMatrix(S.rows() + 1, S.cols() + 1, p);
  for (std::size_t a = 0; a < S.rows(); ++a) {
    for (std::size_t b = 0; b < S.cols(); ++b) {
      aug.values.at(a, b) = S.at(a, b);
    }
  }
  return aug;
}

Marginals augmented_marginals(std::size_t n, std::size_t m, MarginalScheme scheme) {
  require(n >= 1 && m >= 1, "marginal counts must be positive");
  Marginals marg;
  if (scheme == MarginalScheme::kMatchedMass) {
    double denom = static_cast<double>(n + m);
    marg.mu.assign(n + 1, 1.0 / denom);
    marg.mu[n] = static_cast<double>(m) / denom;
    marg.nu.assign(m + 1, 1.0 / denom);
    marg.nu[m] = static_cast<double>(n) / denom;
  } else {
    marg.mu.assign(n + 1, 1.0 / static_cast<double>(n + 1));
    marg.nu.assign(m + 1, 1.0 / static_cast<double>(m + 1));
  }
  return marg;
}

NortonResult norton_distance(const SimilarityMatrix& S, const BucketConfig& bucket,
                             const SolverConfig& solver) {
  const std::size_t n = S.rows();
  const std::size_t m = S.cols();

  double p;
  if (bucket.p.has_value()) {
    p = *bucket.p;
  } else {
    std::vector<double> diag;
    for (std::size_t i = 0; i < std::min(n, m); ++i) diag.push_back(S.at(i, i));
    p = estimate_prompt_value(std::move(diag), bucket.quantile);
  }

  AugmentedSimilarity aug = augment_similarity(S, p);
  Marginals marg = augmented_marginals(n, m, bucket.scheme);
  auto [plan, state] = sinkhorn_plan(aug.values, marg, solver);

  NortonResult result;
  result.plan.p = p;
  result.plan.scheme = bucket.scheme;
  result.plan.interior = Matrix(n, m);
  result.plan.bucket_row_mass.resize(n);
  result.plan.bucket_col_mass.resize(m);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      result.plan.interior.at(a, b) = plan.values.at(a, b);
    }
    result.plan.bucket_row_mass[a] = plan.values.at(a, m);
  }
  for (std::size_t b = 0; b < m; ++b) {
    result.plan.bucket_col_mass[b] = plan.values.at(n, b);
  }
  result.plan.corner_mass = plan.values.at(n, m);
  result.distance = ot_similarity(result.plan.interior, S);
  result.solver_state = std::move(state);
  return result;
}

double bucket_involved_mass(const FilteredPlan& plan) {
  KahanAccumulator acc;
  for (double v : plan.bucket_row_mass) acc.add(v);
  for (double v : plan.bucket_col_mass) acc.add(v);
  return acc.value();
}

AlignmentMap extract_realignment(const FilteredPlan& plan, RealignStrategy strategy,
                                 double threshold) {
  const Matrix& q = plan.interior;
  require(q.rows() >= 1 && q.cols() >= 1, "empty plan");
  for (double v : q.data()) require(v >= 0.0, "negative plan mass");

  const std::size_t n = q.rows();
  const std::size_t m = q.cols();
  AlignmentMap map;

  std::vector<double> row_max(n, 0.0);
  std::vector<std::size_t> row_arg(n, 0);
  std::vector<double> col_max(m, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      double v = q.at(a, b);
      if (v > row_max[a]) {
        row_max[a] = v;
        row_arg[a] = b;
      }
      col_max[b] = std::max(col_max[b], v);
    }
  }

  auto row_bucket = [&](std::size_t a) {
    return plan.bucket_row_mass.empty() ? 0.0 : plan.bucket_row_mass[a];
  };
  auto col_bucket = [&](std::size_t b) {
    return plan.bucket_col_mass.empty() ? 0.0 : plan.bucket_col_mass[b];
  };

  for (std::size_t a = 0; a < n; ++a) {
    if (row_bucket(a) > row_max[a] || row_max[a] <= 0.0) {
      map.dropped_clips.push_back(a);
    }
  }
  for (std::size_t b = 0; b < m; ++b) {
    if (col_bucket(b) > col_max[b] || col_max[b] <= 0.0) {
      map.dropped_captions.push_back(b);
    }
  }

  if (strategy == RealignStrategy::kRowArgmax) {
    std::vector<bool> dropped(n, false);
    for (std::size_t a : map.dropped_clips) dropped[a] = true;
    for (std::size_t a = 0; a < n; ++a) {
      if (!dropped[a]) {
        map.pairs.push_back({a, row_arg[a], row_max[a]});
      }
    }
  } else {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        double v = q.at(a, b);
        if (v > 0.0 && v >= threshold) {
          map.pairs.push_back({a, b, v});
        }
      }
    }
  }
  return map;
}

std::string alignment_map_to_json(const AlignmentMap& map) {
  std::ostringstream out;
  out << "{\"pairs\": [";
  for (std::size_t i = 0; i < map.pairs.size(); ++i) {
    if (i) out << ", ";
    out << '[' << map.pairs[i].clip << ", " << map.pairs[i].caption << ", "
        << format_g9(map.pairs[i].mass) << ']';
  }
  out << "], \"dropped_clips\": [";
  for (std::size_t i = 0; i < map.dropped_clips.size(); ++i) {
    if (i) out << ", ";
    out << map.dropped_clips[i];
  }
  out << "], \"dropped_captions\": [";
  for (std::size_t i = 0; i < map.dropped_captions.size(); ++i) {
    if (i) out << ", ";
    out << map.dropped_captions[i];
  }
  out << "]}";
  return out.str();
}

}  // namespace norton
