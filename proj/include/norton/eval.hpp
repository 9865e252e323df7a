#pragma once

#include <map>
#include <string>
#include <vector>

#include "norton/bucket.hpp"
#include "norton/similarity.hpp"
#include "norton/sinkhorn.hpp"
#include "norton/types.hpp"

namespace norton {

enum class RetrievalMeasure { kCapAvg, kDtw, kOtam, kOtNorton };

std::string measure_name(RetrievalMeasure measure);

enum class BucketScope { kGlobal, kPerVideo };

// capavg scoring: count globally argmaxed clips, or average each caption's
// best within-candidate clip similarity.
enum class CapAvgScope { kGlobalArgmax, kPerCandidate };

struct RetrievalConfig {
  RetrievalMeasure measure = RetrievalMeasure::kOtNorton;
  SimilarityConfig sim_cfg{1.0, SimilarityMode::kMeanPool};
  SolverConfig solver{0.1, 50, 1e-9, true};
  BucketConfig bucket;
  BucketScope bucket_scope = BucketScope::kGlobal;
  bool use_bucket = true;          // ot_norton falls back to plain OT when false
  CapAvgScope capavg_scope = CapAvgScope::kGlobalArgmax;
  bool normalize_distance = false; // divide dtw/otam distances by path length
  std::vector<std::size_t> ks{1, 5, 10};
};

struct RecallReport {
  std::map<std::size_t, double> per_k;
  std::vector<std::size_t> ranks;  // 1-based rank of the true video per query
  std::string measure;
  double runtime_s = 0.0;
};

// For each paragraph (the captions of each video), scores every candidate
// video under the configured measure and records the true video's rank.
// Candidate ties sort by video id, so reports do not depend on ingestion
// order. Queries are evaluated in parallel; reports are bit-identical for
// any thread count.
std::vector<std::size_t> rank_videos(const Dataset& dataset,
                                     const RetrievalConfig& cfg);

RecallReport recall_at_k(const std::vector<std::size_t>& ranks,
                         const std::vector<std::size_t>& ks);

// JSON per the report schema; runtime_s is volatile, so callers that need
// byte-stable artifacts leave it out.
std::string recall_report_to_json(const RecallReport& report, bool include_runtime);

// Prompt values for ot_norton retrieval, estimated from the originally
// timestamp-aligned pair similarities at the configured quantile.
double global_prompt_value(const Dataset& dataset, const SimilarityConfig& sim_cfg,
                           double quantile);
double video_prompt_value(const VideoDocument& video, const SimilarityConfig& sim_cfg,
                          double quantile);

struct GroundTruthSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  bool alignable = true;
};

// Per-frame similarity between a video's frame tokens and one sentence
// vector, computed over sliding windows with overlap averaging. Frame t is
// the token at row t (one token per second).
std::vector<double> sliding_window_similarity(const TokenMatrix& frame_tokens,
                                              const std::vector<double>& sentence_vec,
                                              std::size_t window_s, std::size_t step_s);

// Fraction of alignable sentences whose argmax frame (earliest on ties)
// falls inside the annotated segment.
double alignment_recall(const std::vector<std::vector<double>>& per_sentence_sims,
                        const std::vector<GroundTruthSegment>& segments);

}  // namespace norton
