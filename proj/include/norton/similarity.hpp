#pragma once

#include <span>

#include "norton/types.hpp"

namespace norton {

enum class SimilarityMode { kFineGrained, kMeanPool };

struct SimilarityConfig {
  double alpha = 1.0;  // log-sum-exp smoothness; ->0 approaches hard max
  SimilarityMode mode = SimilarityMode::kFineGrained;
};

// Token-level similarity grid: entry (i, j) = dot(clip row i, caption row j).
Matrix frame_word_matrix(const TokenMatrix& clip, const TokenMatrix& caption);

// alpha * log(sum_j exp(x_j / alpha)), computed with max-shift so that
// |x_j / alpha| up to 700 cannot overflow. Soft upper bound of max(x):
// max(x) <= result <= max(x) + alpha * log(len(x)).
double log_sum_exp(std::span<const double> x, double alpha);

// Clip-caption similarity that soft-maxes over words per frame and over
// frames per word, then averages the two directions.
double fine_grained_similarity(const TokenMatrix& clip, const TokenMatrix& caption,
                               const SimilarityConfig& cfg);

// Dot product of the mean-pooled token vectors.
double mean_pool_similarity(const TokenMatrix& clip, const TokenMatrix& caption);

// n x m similarity matrix between the clips of `video` and the captions of
// `paragraph`, each cell per cfg.mode.
SimilarityMatrix clip_caption_matrix(const VideoDocument& video,
                                     const VideoDocument& paragraph,
                                     const SimilarityConfig& cfg);

}  // namespace norton
