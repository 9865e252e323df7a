#pragma once

#include <filesystem>
#include <vector>

#include "norton/sinkhorn.hpp"
#include "norton/types.hpp"

namespace norton {

struct LossConfig {
  double tau = 0.07;          // softmax temperature
  double beta = 0.3;          // faulty-negative blend weight
  double lambda = 0.1;        // video-loss weight in the combined loss
  double epsilon_clip = 1.0;  // entropy for the batch realignment plan
  double epsilon_video = 0.1; // entropy for the sequence transport plan
  // Row-stochastic convention: rescale the realignment plan by B so the
  // blended target has unit row sums. Off reproduces the literal blend.
  bool rescale_realignment = true;
};

// B x B soft contrastive target.
struct TargetMatrix {
  Matrix values;
};

struct LossReport {
  double value = 0.0;
  Matrix grad;  // d(loss)/d(similarity entry)
};

// One (similarity, transport) cell of the N x N video-paragraph grid. The
// plan is a constant during differentiation (stop-gradient).
struct VideoPair {
  SimilarityMatrix similarity;
  Matrix plan;
};

using VideoPairGrid = std::vector<std::vector<VideoPair>>;  // [i][j], N x N

struct VideoLossReport {
  double value = 0.0;
  std::vector<std::vector<Matrix>> grads;  // same layout as the input grid
};

// Symmetric InfoNCE over transport similarities <Q_ij, S_ij>/tau; gradients
// are with respect to each S_ij with Q_ij held constant.
VideoLossReport video_paragraph_loss(const VideoPairGrid& grid, double tau);

// Helper shared with evaluation code: the logit matrix <Q_ij, S_ij>.
Matrix transport_logits(const VideoPairGrid& grid);

// Soft targets from the within-batch realignment plan:
// T = (1 - beta) I + beta * (B * Q*), with Q* solved at epsilon_clip.
TargetMatrix faulty_negative_targets(const SimilarityMatrix& S_hat,
                                     const LossConfig& cfg);

// Soft-target symmetric cross-entropy over rows and columns of S_hat/tau.
LossReport clip_caption_loss(const SimilarityMatrix& S_hat, const TargetMatrix& T,
                             double tau);

double combined_loss(double clip_loss, double video_loss, double lambda);

// Writes the gradient as CSV next to a JSON stub {"value": v, "grad_path": p}.
std::string loss_report_to_json(const LossReport& report,
                                const std::filesystem::path& grad_csv_path);

// Indices of the k nearest neighbours by cosine similarity for each pooled
// video vector, self excluded, ties to the lower index.
std::vector<std::vector<std::size_t>> mine_hard_negatives(
    const std::vector<std::vector<double>>& video_reps, std::size_t k);

}  // namespace norton
