#include "norton/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "norton/parallel.hpp"

namespace norton {

Matrix frame_word_matrix(const TokenMatrix& clip, const TokenMatrix& caption) {
  validate_token_matrix(clip, "frame_word_matrix clip");
  validate_token_matrix(caption, "frame_word_matrix caption");
  require(clip.cols() == caption.cols(), "embedding dimension mismatch");

  Matrix sims(clip.rows(), caption.rows());
  for (std::size_t i = 0; i < clip.rows(); ++i) {
    for (std::size_t j = 0; j < caption.rows(); ++j) {
      sims.at(i, j) = compensated_dot(clip.row(i), caption.row(j));
    }
  }
  return sims;
}

double log_sum_exp(std::span<const double> x, double alpha) {
  require(!x.empty(), "log_sum_exp of empty vector");
  require(alpha > 0.0, "alpha must be positive");

  double hi = x[0];
  for (double v : x) {
    require(std::isfinite(v), "non-finite log_sum_exp input");
    hi = std::max(hi, v);
  }
  KahanAccumulator acc;
  for (double v : x) acc.add(std::exp((v - hi) / alpha));
  return hi + alpha * std::log(acc.value());
}

double fine_grained_similarity(const TokenMatrix& clip, const TokenMatrix& caption,
                               const SimilarityConfig& cfg) {
  Matrix sims = frame_word_matrix(clip, caption);
  const std::size_t f = sims.rows();
  const std::size_t w = sims.cols();

  KahanAccumulator frame_terms;
  for (std::size_t i = 0; i < f; ++i) {
    frame_terms.add(log_sum_exp(sims.row(i), cfg.alpha));
  }

  KahanAccumulator word_terms;
  std::vector<double> column(f);
  for (std::size_t j = 0; j < w; ++j) {
    for (std::size_t i = 0; i < f; ++i) column[i] = sims.at(i, j);
    word_terms.add(log_sum_exp(column, cfg.alpha));
  }

  return 0.5 * (frame_terms.value() / static_cast<double>(f) +
                word_terms.value() / static_cast<double>(w));
}

double mean_pool_similarity(const TokenMatrix& clip, const TokenMatrix& caption) {
  require(clip.cols() == caption.cols(), "embedding dimension mismatch");
  std::vector<double> a = mean_pool(clip);
  std::vector<double> b = mean_pool(caption);
  return compensated_dot(a, b);
}

SimilarityMatrix clip_caption_matrix(const VideoDocument& video,
                                     const VideoDocument& paragraph,
                                     const SimilarityConfig& cfg) {
  require(!video.clips.empty(), "empty video");
  require(!paragraph.clips.empty(), "empty paragraph");
  require(cfg.alpha > 0.0, "alpha must be positive");

  const std::size_t n = video.clips.size();
  const std::size_t m = paragraph.clips.size();
  SimilarityMatrix sims(n, m);
  parallel_for(n * m, [&](std::size_t cell) {
    std::size_t a = cell / m;
    std::size_t b = cell % m;
    const TokenMatrix& clip = video.clips[a].clip_tokens;
    const TokenMatrix& caption = paragraph.clips[b].caption_tokens;
    sims.at(a, b) = cfg.mode == SimilarityMode::kFineGrained
                        ? fine_grained_similarity(clip, caption, cfg)
                        : mean_pool_similarity(clip, caption);
  });
  return sims;
}

}  // namespace norton
