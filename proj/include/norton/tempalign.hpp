#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "norton/similarity.hpp"
#include "norton/types.hpp"

namespace norton {

// Monotone alignment path; 0-based (row, column) index pairs.
struct AlignPath {
  std::vector<std::pair<std::size_t, std::size_t>> steps;
};

struct AlignResult {
  double distance = 0.0;
  AlignPath path;
};

// cost = 1 - similarity, the cosine-scale conversion used for DTW/OTAM.
CostMatrix cost_from_similarity(const SimilarityMatrix& sims);

// Classic DTW with moves {(1,0),(0,1),(1,1)} from (0,0) to (n-1,m-1).
// Backtracking tie-break prefers diagonal, then vertical, then horizontal.
AlignResult dtw(const CostMatrix& cost);

// Boundary-relaxed alignment: every query row (axis 0) is matched once, the
// matched candidate columns form a contiguous window that may start and end
// anywhere (free entry/exit at the candidate boundary). Interior moves are
// {(1,0),(1,1)}. Tie-breaks prefer the lowest start/end column and diagonal
// over vertical.
AlignResult otam(const CostMatrix& cost);

// Accumulated cost divided by the number of path steps.
double normalized_distance(const AlignResult& result);

// For each query caption: the globally most similar clip across all
// candidate videos, ties to the lower (video, clip) index. Returns, per
// candidate video, how many captions chose one of its clips.
std::vector<std::size_t> cap_avg(const VideoDocument& query_captions,
                                 const Dataset& candidates,
                                 const SimilarityConfig& sim_cfg);

}  // namespace norton
