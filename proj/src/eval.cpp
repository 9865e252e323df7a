#include "norton/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "norton/io.hpp"
#include "norton/parallel.hpp"
#include "norton/tempalign.hpp"

namespace norton {

std::string measure_name(RetrievalMeasure measure) {
  switch (measure) {
    case RetrievalMeasure::kCapAvg:
      return "capavg";
    case RetrievalMeasure::kDtw:
      return "dtw";
    case RetrievalMeasure::kOtam:
      return "otam";
    case RetrievalMeasure::kOtNorton:
      return "ot_norton";
  }
  return "unknown";
}

namespace {

std::vector<double> aligned_pair_sims(const VideoDocument& video,
                                      const SimilarityConfig& sim_cfg) {
  std::vector<double> sims;
  sims.reserve(video.clips.size());
  for (const ClipRecord& rec : video.clips) {
    sims.push_back(sim_cfg.mode == SimilarityMode::kFineGrained
                       ? fine_grained_similarity(rec.clip_tokens, rec.caption_tokens,
                                                 sim_cfg)
                       : mean_pool_similarity(rec.clip_tokens, rec.caption_tokens));
  }
  return sims;
}

// Scores one (query paragraph, candidate video) pair; higher is better.
double score_pair(const VideoDocument& candidate, const VideoDocument& query,
                  const RetrievalConfig& cfg, double prompt_value) {
  switch (cfg.measure) {
    case RetrievalMeasure::kCapAvg: {
      // Per-candidate variant: mean best-clip similarity per caption. The
      // global-argmax variant is handled by the caller.
      SimilarityMatrix sims = clip_caption_matrix(candidate, query, cfg.sim_cfg);
      KahanAccumulator total;
      for (std::size_t b = 0; b < sims.cols(); ++b) {
        double best = sims.at(0, b);
        for (std::size_t a = 1; a < sims.rows(); ++a) best = std::max(best, sims.at(a, b));
        total.add(best);
      }
      return total.value() / static_cast<double>(sims.cols());
    }
    case RetrievalMeasure::kDtw: {
      SimilarityMatrix sims = clip_caption_matrix(candidate, query, cfg.sim_cfg);
      AlignResult result = dtw(cost_from_similarity(sims));
      return -(cfg.normalize_distance ? normalized_distance(result) : result.distance);
    }
    case RetrievalMeasure::kOtam: {
      SimilarityMatrix sims = clip_caption_matrix(candidate, query, cfg.sim_cfg);
      AlignResult result = otam(cost_from_similarity(sims));
      return -(cfg.normalize_distance ? normalized_distance(result) : result.distance);
    }
    case RetrievalMeasure::kOtNorton: {
      SimilarityMatrix sims = clip_caption_matrix(candidate, query, cfg.sim_cfg);
      if (!cfg.use_bucket) {
        auto [plan, state] = sinkhorn_plan(
            sims, uniform_marginals(sims.rows(), sims.cols()), cfg.solver);
        return ot_similarity(plan.values, sims);
      }
      BucketConfig bucket = cfg.bucket;
      bucket.p = prompt_value;
      return norton_distance(sims, bucket, cfg.solver).distance;
    }
  }
  return 0.0;
}

// 1-based rank of `truth` among scores, descending, ties by video id.
std::size_t rank_of_truth(const std::vector<double>& scores,
                          const std::vector<std::string>& ids, std::size_t truth) {
  std::size_t rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j == truth) continue;
    if (scores[j] > scores[truth] ||
        (scores[j] == scores[truth] && ids[j] < ids[truth])) {
      ++rank;
    }
  }
  return rank;
}

}  // namespace

double global_prompt_value(const Dataset& dataset, const SimilarityConfig& sim_cfg,
                           double quantile) {
  std::vector<double> sims;
  for (const VideoDocument& video : dataset.videos) {
    std::vector<double> video_sims = aligned_pair_sims(video, sim_cfg);
    sims.insert(sims.end(), video_sims.begin(), video_sims.end());
  }
  return estimate_prompt_value(std::move(sims), quantile);
}

double video_prompt_value(const VideoDocument& video, const SimilarityConfig& sim_cfg,
                          double quantile) {
  return estimate_prompt_value(aligned_pair_sims(video, sim_cfg), quantile);
}

std::vector<std::size_t> rank_videos(const Dataset& dataset,
                                     const RetrievalConfig& cfg) {
  const std::size_t N = dataset.videos.size();
  require(N >= 2, "retrieval needs at least two videos");

  std::vector<std::string> ids(N);
  for (std::size_t v = 0; v < N; ++v) ids[v] = dataset.videos[v].id;

  double global_p = 0.0;
  if (cfg.measure == RetrievalMeasure::kOtNorton && cfg.use_bucket &&
      !cfg.bucket.p.has_value() && cfg.bucket_scope == BucketScope::kGlobal) {
    global_p = global_prompt_value(dataset, cfg.sim_cfg, cfg.bucket.quantile);
  }

  std::vector<std::size_t> ranks(N, 0);
  parallel_for(N, [&](std::size_t q) {
    const VideoDocument& query = dataset.videos[q];
    std::vector<double> scores(N, 0.0);
    if (cfg.measure == RetrievalMeasure::kCapAvg &&
        cfg.capavg_scope == CapAvgScope::kGlobalArgmax) {
      std::vector<std::size_t> counts = cap_avg(query, dataset, cfg.sim_cfg);
      for (std::size_t v = 0; v < N; ++v) scores[v] = static_cast<double>(counts[v]);
    } else {
      double p = global_p;
      if (cfg.measure == RetrievalMeasure::kOtNorton && cfg.use_bucket) {
        if (cfg.bucket.p.has_value()) {
          p = *cfg.bucket.p;
        } else if (cfg.bucket_scope == BucketScope::kPerVideo) {
          p = video_prompt_value(query, cfg.sim_cfg, cfg.bucket.quantile);
        }
      }
      for (std::size_t v = 0; v < N; ++v) {
        scores[v] = score_pair(dataset.videos[v], query, cfg, p);
      }
    }
    ranks[q] = rank_of_truth(scores, ids, q);
  });
  return ranks;
}

RecallReport recall_at_k(const std::vector<std::size_t>& ranks,
                         const std::vector<std::size_t>& ks) {
  require(!ranks.empty(), "no ranks to aggregate");
  RecallReport report;
  report.ranks = ranks;
  for (std::size_t k : ks) {
    require(k >= 1, "recall K must be at least 1");
    std::size_t hits = 0;
    for (std::size_t r : ranks) {
      if (r <= k) ++hits;
    }
    report.per_k[k] = static_cast<double>(hits) / static_cast<double>(ranks.size());
  }
  return report;
}

std::string recall_report_to_json(const RecallReport& report, bool include_runtime) {
  std::ostringstream out;
  out << "{\"measure\": \"" << report.measure << "\", \"recall\": {";
  bool first = true;
  for (const auto& [k, value] : report.per_k) {
    if (!first) out << ", ";
    first = false;
    out << '"' << k << "\": " << format_g9(value);
  }
  out << "}, \"ranks\": [";
  for (std::size_t i = 0; i < report.ranks.size(); ++i) {
    if (i) out << ", ";
    out << report.ranks[i];
  }
  out << "], \"score\": "
      << (report.measure == "dtw" || report.measure == "otam"
              ? "\"negated_distance\""
              : "\"similarity\"");
  if (include_runtime) {
    out << ", \"runtime_s\": " << format_g9(report.runtime_s);
  }
  out << "}";
  return out.str();
}

std::vector<double> sliding_window_similarity(const TokenMatrix& frame_tokens,
                                              const std::vector<double>& sentence_vec,
                                              std::size_t window_s, std::size_t step_s) {
  validate_token_matrix(frame_tokens, "sliding_window_similarity");
  require(sentence_vec.size() == frame_tokens.cols(), "sentence dimension mismatch");
  require(step_s >= 1 && window_s >= step_s, "need window_s >= step_s >= 1");

  const std::size_t frames = frame_tokens.rows();
  std::vector<double> score_sum(frames, 0.0);
  std::vector<std::size_t> cover_count(frames, 0);

  for (std::size_t start = 0; start < frames; start += step_s) {
    std::size_t end = std::min(start + window_s, frames);
    std::vector<double> pooled(frame_tokens.cols(), 0.0);
    for (std::size_t t = start; t < end; ++t) {
      for (std::size_t c = 0; c < frame_tokens.cols(); ++c) {
        pooled[c] += frame_tokens.at(t, c);
      }
    }
    for (double& v : pooled) v /= static_cast<double>(end - start);
    double sim = compensated_dot(pooled, sentence_vec);
    for (std::size_t t = start; t < end; ++t) {
      score_sum[t] += sim;
      ++cover_count[t];
    }
    if (end == frames) break;
  }

  std::vector<double> result(frames, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    result[t] = score_sum[t] / static_cast<double>(cover_count[t]);
  }
  return result;
}

double alignment_recall(const std::vector<std::vector<double>>& per_sentence_sims,
                        const std::vector<GroundTruthSegment>& segments) {
  require(per_sentence_sims.size() == segments.size(),
          "sentence similarity and segment counts differ");
  std::size_t alignable = 0;
  std::size_t recalled = 0;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (!segments[s].alignable) continue;
    require(segments[s].start_s < segments[s].end_s, "segment must have start < end");
    const std::vector<double>& sims = per_sentence_sims[s];
    require(!sims.empty(), "empty similarity vector for alignable sentence");
    ++alignable;
    std::size_t best = 0;
    for (std::size_t t = 1; t < sims.size(); ++t) {
      if (sims[t] > sims[best]) best = t;  // earliest frame wins ties
    }
    double frame_time = static_cast<double>(best);
    if (frame_time >= segments[s].start_s && frame_time <= segments[s].end_s) {
      ++recalled;
    }
  }
  require(alignable > 0, "no alignable sentences");
  return static_cast<double>(recalled) / static_cast<double>(alignable);
}

}  // namespace norton
