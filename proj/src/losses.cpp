#include "norton/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "norton/io.hpp"

namespace norton {

namespace {

// Row-wise softmax of logits / tau, max-shifted.
Matrix softmax_rows(const Matrix& logits, double tau) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    double hi = logits.at(i, 0);
    for (std::size_t j = 1; j < logits.cols(); ++j) hi = std::max(hi, logits.at(i, j));
    KahanAccumulator denom;
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      double e = std::exp((logits.at(i, j) - hi) / tau);
      p.at(i, j) = e;
      denom.add(e);
    }
    double d = denom.value();
    for (std::size_t j = 0; j < logits.cols(); ++j) p.at(i, j) /= d;
  }
  return p;
}

// -log softmax over a row/column at the given position, computed stably.
double neg_log_softmax(const Matrix& logits, double tau, std::size_t i, std::size_t j,
                       bool over_rows) {
  const std::size_t count = over_rows ? logits.cols() : logits.rows();
  double hi = over_rows ? logits.at(i, 0) : logits.at(0, j);
  for (std::size_t k = 1; k < count; ++k) {
    double v = over_rows ? logits.at(i, k) : logits.at(k, j);
    hi = std::max(hi, v);
  }
  KahanAccumulator denom;
  for (std::size_t k = 0; k < count; ++k) {
    double v = over_rows ? logits.at(i, k) : logits.at(k, j);
    denom.add(std::exp((v - hi) / tau));
  }
  return -(logits.at(i, j) - hi) / tau + std::log(denom.value());
}

}  // namespace

Matrix transport_logits(const VideoPairGrid& grid) {
  const std::size_t N = grid.size();
  require(N >= 1, "empty pair grid");
  Matrix logits(N, N);
  for (std::size_t i = 0; i < N; ++i) {
    require(grid[i].size() == N, "pair grid is not square");
    for (std::size_t j = 0; j < N; ++j) {
      require(grid[i][j].similarity.same_shape(grid[i][j].plan),
              "plan and similarity shapes differ in pair grid");
      logits.at(i, j) = ot_similarity(grid[i][j].plan, grid[i][j].similarity);
    }
  }
  return logits;
}

VideoLossReport video_paragraph_loss(const VideoPairGrid& grid, double tau) {
  require(tau > 0.0, "tau must be positive");
  const std::size_t N = grid.size();
  Matrix logits = transport_logits(grid);

  KahanAccumulator value;
  for (std::size_t i = 0; i < N; ++i) {
    value.add(neg_log_softmax(logits, tau, i, i, /*over_rows=*/true));
    value.add(neg_log_softmax(logits, tau, i, i, /*over_rows=*/false));
  }

  // d(value)/d(logit[a][b]) = (p_row - delta) + (p_col - delta).
  Matrix p_row = softmax_rows(logits, tau);
  Matrix p_col = softmax_rows(logits.transposed(), tau).transposed();
  Matrix logit_grad(N, N);
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      double delta = a == b ? 1.0 : 0.0;
      logit_grad.at(a, b) = (p_row.at(a, b) - delta) + (p_col.at(a, b) - delta);
    }
  }

  VideoLossReport report;
  report.value = value.value();
  report.grads.resize(N);
  for (std::size_t a = 0; a < N; ++a) {
    report.grads[a].reserve(N);
    for (std::size_t b = 0; b < N; ++b) {
      const Matrix& q = grid[a][b].plan;
      Matrix g(q.rows(), q.cols());
      double scale = logit_grad.at(a, b) / tau;
      for (std::size_t i = 0; i < q.size(); ++i) {
        g.data()[i] = scale * q.data()[i];
      }
      report.grads[a].push_back(std::move(g));
    }
  }
  return report;
}

TargetMatrix faulty_negative_targets(const SimilarityMatrix& S_hat,
                                     const LossConfig& cfg) {
  require(S_hat.rows() == S_hat.cols(), "within-batch similarity must be square");
  require(S_hat.rows() >= 1, "empty batch");
  require(S_hat.all_finite(), "non-finite batch similarity");
  require(cfg.beta >= 0.0 && cfg.beta <= 1.0, "beta must lie in [0,1]");

  const std::size_t B = S_hat.rows();
  TargetMatrix target;
  target.values = Matrix(B, B, 0.0);
  for (std::size_t i = 0; i < B; ++i) target.values.at(i, i) = 1.0;
  if (cfg.beta == 0.0) return target;  // blend degenerates to the identity

  SolverConfig solver;
  solver.epsilon = cfg.epsilon_clip;
  solver.max_iters = 10000;
  solver.tol = 1e-13;  // tight so the blended rows sum to 1 within 1e-9
  solver.log_domain = true;
  auto [plan, state] = sinkhorn_plan(S_hat, uniform_marginals(B, B), solver);

  double plan_scale = cfg.rescale_realignment ? static_cast<double>(B) : 1.0;
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < B; ++j) {
      double identity = i == j ? 1.0 : 0.0;
      target.values.at(i, j) = (1.0 - cfg.beta) * identity +
                               cfg.beta * plan_scale * plan.values.at(i, j);
    }
  }
  return target;
}

LossReport clip_caption_loss(const SimilarityMatrix& S_hat, const TargetMatrix& T,
                             double tau) {
  require(tau > 0.0, "tau must be positive");
  require(S_hat.same_shape(T.values), "target and similarity shapes differ");
  require(S_hat.rows() == S_hat.cols(), "within-batch similarity must be square");
  const std::size_t B = S_hat.rows();

  KahanAccumulator value;
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < B; ++j) {
      double t = T.values.at(i, j);
      if (t == 0.0) continue;
      value.add(t * neg_log_softmax(S_hat, tau, i, j, /*over_rows=*/true));
      value.add(t * neg_log_softmax(S_hat, tau, i, j, /*over_rows=*/false));
    }
  }

  // Row part of the gradient: (sum_j T_aj) * p_row(a,b) - T_ab, and the
  // column part mirrors it with column sums and the column softmax.
  Matrix p_row = softmax_rows(S_hat, tau);
  Matrix p_col = softmax_rows(S_hat.transposed(), tau).transposed();
  std::vector<double> row_weight(B, 0.0), col_weight(B, 0.0);
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < B; ++j) {
      row_weight[i] += T.values.at(i, j);
      col_weight[j] += T.values.at(i, j);
    }
  }

  LossReport report;
  report.value = value.value();
  report.grad = Matrix(B, B);
  for (std::size_t a = 0; a < B; ++a) {
    for (std::size_t b = 0; b < B; ++b) {
      double t = T.values.at(a, b);
      report.grad.at(a, b) = ((row_weight[a] * p_row.at(a, b) - t) +
                              (col_weight[b] * p_col.at(a, b) - t)) /
                             tau;
    }
  }
  return report;
}

double combined_loss(double clip_loss, double video_loss, double lambda) {
  require(std::isfinite(clip_loss) && std::isfinite(video_loss) &&
              std::isfinite(lambda),
          "non-finite loss inputs");
  return clip_loss + lambda * video_loss;
}

std::string loss_report_to_json(const LossReport& report,
                                const std::filesystem::path& grad_csv_path) {
  write_csv(report.grad, grad_csv_path);
  std::ostringstream out;
  out << "{\"value\": " << format_g9(report.value) << ", \"grad_path\": \""
      << grad_csv_path.string() << "\"}";
  return out.str();
}

std::vector<std::vector<std::size_t>> mine_hard_negatives(
    const std::vector<std::vector<double>>& video_reps, std::size_t k) {
  const std::size_t N = video_reps.size();
  require(N >= 1, "no video representations");
  require(k < N, "k must be smaller than the number of videos");

  auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
    double dot = compensated_dot(a, b);
    double na = std::sqrt(compensated_dot(a, a));
    double nb = std::sqrt(compensated_dot(b, b));
    require(na > 0.0 && nb > 0.0, "zero-norm video representation");
    return dot / (na * nb);
  };

  std::vector<std::vector<std::size_t>> result(N);
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(N - 1);
    for (std::size_t j = 0; j < N; ++j) {
      if (j == i) continue;
      require(video_reps[j].size() == video_reps[i].size(),
              "video representation dimension mismatch");
      scored.emplace_back(cosine(video_reps[i], video_reps[j]), j);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    result[i].reserve(k);
    for (std::size_t r = 0; r < k; ++r) result[i].push_back(scored[r].second);
  }
  return result;
}

}  // namespace norton
