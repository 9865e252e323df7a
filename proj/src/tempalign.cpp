#include "norton/tempalign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace norton {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

CostMatrix cost_from_similarity(const SimilarityMatrix& sims) {
  require(sims.all_finite(), "non-finite similarity matrix");
  CostMatrix cost(sims.rows(), sims.cols());
  for (std::size_t i = 0; i < sims.size(); ++i) {
    cost.data()[i] = 1.0 - sims.data()[i];
  }
  return cost;
}

AlignResult dtw(const CostMatrix& cost) {
  require(cost.rows() >= 1 && cost.cols() >= 1, "empty cost matrix");
  require(cost.all_finite(), "non-finite cost matrix");
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();

  Matrix acc(n, m, kInf);
  acc.at(0, 0) = cost.at(0, 0);
  for (std::size_t j = 1; j < m; ++j) acc.at(0, j) = acc.at(0, j - 1) + cost.at(0, j);
  for (std::size_t i = 1; i < n; ++i) acc.at(i, 0) = acc.at(i - 1, 0) + cost.at(i, 0);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 1; j < m; ++j) {
      double best = std::min({acc.at(i - 1, j - 1), acc.at(i - 1, j), acc.at(i, j - 1)});
      acc.at(i, j) = best + cost.at(i, j);
    }
  }

  AlignResult result;
  result.distance = acc.at(n - 1, m - 1);

  std::size_t i = n - 1, j = m - 1;
  result.path.steps.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      double d = acc.at(i - 1, j - 1);
      double v = acc.at(i - 1, j);
      double h = acc.at(i, j - 1);
      if (d <= v && d <= h) {
        --i;
        --j;
      } else if (v <= h) {
        --i;
      } else {
        --j;
      }
    } else if (i > 0) {
      --i;
    } else {
      --j;
    }
    result.path.steps.emplace_back(i, j);
  }
  std::reverse(result.path.steps.begin(), result.path.steps.end());
  return result;
}

AlignResult otam(const CostMatrix& cost) {
  require(cost.rows() >= 1 && cost.cols() >= 1, "empty cost matrix");
  require(cost.all_finite(), "non-finite cost matrix");
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();

  // acc(i, j): cheapest window alignment of query rows 0..i ending at column j.
  Matrix acc(n, m, kInf);
  for (std::size_t j = 0; j < m; ++j) acc.at(0, j) = cost.at(0, j);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double best = acc.at(i - 1, j);  // vertical: same column
      if (j > 0) best = std::min(best, acc.at(i - 1, j - 1));
      acc.at(i, j) = best + cost.at(i, j);
    }
  }

  std::size_t end = 0;
  for (std::size_t j = 1; j < m; ++j) {
    if (acc.at(n - 1, j) < acc.at(n - 1, end)) end = j;
  }

  AlignResult result;
  result.distance = acc.at(n - 1, end);

  std::size_t i = n - 1, j = end;
  result.path.steps.emplace_back(i, j);
  while (i > 0) {
    // Prefer diagonal, then vertical, matching the DTW tie-break order.
    if (j > 0 && acc.at(i - 1, j - 1) <= acc.at(i - 1, j)) {
      --j;
    }
    --i;
    result.path.steps.emplace_back(i, j);
  }
  std::reverse(result.path.steps.begin(), result.path.steps.end());
  return result;
}

double normalized_distance(const AlignResult& result) {
  require(!result.path.steps.empty(), "empty alignment path");
  return result.distance / static_cast<double>(result.path.steps.size());
}

std::vector<std::size_t> cap_avg(const VideoDocument& query_captions,
                                 const Dataset& candidates,
                                 const SimilarityConfig& sim_cfg) {
  require(!query_captions.clips.empty(), "empty query");
  require(!candidates.videos.empty(), "empty candidate set");

  std::vector<std::size_t> counts(candidates.videos.size(), 0);
  for (const ClipRecord& query : query_captions.clips) {
    double best_sim = -kInf;
    std::size_t best_video = 0;
    for (std::size_t v = 0; v < candidates.videos.size(); ++v) {
      const VideoDocument& video = candidates.videos[v];
      for (std::size_t c = 0; c < video.clips.size(); ++c) {
        double sim =
            sim_cfg.mode == SimilarityMode::kFineGrained
                ? fine_grained_similarity(video.clips[c].clip_tokens,
                                          query.caption_tokens, sim_cfg)
                : mean_pool_similarity(video.clips[c].clip_tokens, query.caption_tokens);
        if (sim > best_sim) {
          best_sim = sim;
          best_video = v;
        }
      }
    }
    ++counts[best_video];
  }
  return counts;
}

}  // namespace norton
