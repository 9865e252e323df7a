#include <cmath>

#include "doctest.h"
#include "norton/io.hpp"
#include "norton/losses.hpp"
#include "norton/oracle.hpp"
#include "norton/rng.hpp"
#include "support.hpp"

using namespace norton;

namespace {

// Random N x N grid of (similarity, plan) pairs with plans from real solves.
VideoPairGrid random_grid(Rng& rng, std::size_t N, std::size_t n, std::size_t m) {
  SolverConfig solver;
  solver.epsilon = 0.1;
  solver.max_iters = 2000;
  solver.tol = 1e-11;
  VideoPairGrid grid(N, std::vector<VideoPair>(N));
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      SimilarityMatrix s = rng.uniform_matrix(n, m, -1.0, 1.0);
      auto [plan, state] = sinkhorn_plan(s, uniform_marginals(n, m), solver);
      grid[i][j] = VideoPair{std::move(s), std::move(plan.values)};
    }
  }
  return grid;
}

double max_rel_err(const Matrix& analytic, const Matrix& reference) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    double denom = std::max(std::abs(reference.data()[i]), 1e-6);
    worst = std::max(worst, std::abs(analytic.data()[i] - reference.data()[i]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("video_paragraph_loss closed forms") {
  SUBCASE("single video gives zero loss") {
    Rng rng(1);
    VideoPairGrid grid = random_grid(rng, 1, 3, 3);
    VideoLossReport report = video_paragraph_loss(grid, 0.07);
    CHECK(report.value == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("two-class symmetric logits") {
    // Plans are 1x1 with unit mass, similarities are scalars, so the logit
    // matrix is exactly [[1,0],[0,1]].
    VideoPairGrid grid(2, std::vector<VideoPair>(2));
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        grid[i][j].plan = Matrix(1, 1, 1.0);
        grid[i][j].similarity = Matrix(1, 1, i == j ? 1.0 : 0.0);
      }
    }
    VideoLossReport report = video_paragraph_loss(grid, 1.0);
    double expected = 4.0 * std::log1p(std::exp(-1.0));
    CHECK(report.value == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("video_paragraph_loss gradient matches finite differences") {
  Rng rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    std::size_t N = 2 + rng.index(2);  // 2 or 3
    VideoPairGrid grid = random_grid(rng, N, 2, 3);
    double tau = 0.5;
    VideoLossReport report = video_paragraph_loss(grid, tau);

    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        auto loss_fn = [&](const Matrix& s) {
          VideoPairGrid probe = grid;
          probe[i][j].similarity = s;
          return video_paragraph_loss(probe, tau).value;
        };
        Matrix fd =
            oracle::finite_difference_gradient(loss_fn, grid[i][j].similarity, 1e-5);
        CHECK(max_rel_err(report.grads[i][j], fd) <= 1e-4);
      }
    }
  }
}

TEST_CASE("video_paragraph_loss shift and permutation invariance") {
  Rng rng(7);
  VideoPairGrid grid = random_grid(rng, 3, 2, 2);
  double base = video_paragraph_loss(grid, 0.2).value;

  // Add a constant to every logit by shifting every similarity entry of the
  // 2x2 blocks: <Q, S + c> = <Q, S> + c because the plan sums to 1.
  VideoPairGrid shifted = grid;
  for (auto& row : shifted) {
    for (auto& pair : row) {
      for (double& v : pair.similarity.data()) v += 1.7;
    }
  }
  CHECK(video_paragraph_loss(shifted, 0.2).value ==
        doctest::Approx(base).epsilon(1e-10));

  // Joint permutation of the video indices.
  std::vector<std::size_t> perm{2, 0, 1};
  VideoPairGrid permuted(3, std::vector<VideoPair>(3));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      permuted[i][j] = grid[perm[i]][perm[j]];
    }
  }
  CHECK(video_paragraph_loss(permuted, 0.2).value ==
        doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("faulty_negative_targets") {
  SUBCASE("constant similarity blends identity with the uniform plan") {
    LossConfig cfg;
    cfg.beta = 0.3;
    SimilarityMatrix S(4, 4, 0.5);
    TargetMatrix T = faulty_negative_targets(S, cfg);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        double expected = (i == j ? 0.7 : 0.0) + 0.3 / 4.0;
        CHECK(T.values.at(i, j) == doctest::Approx(expected).epsilon(1e-10));
      }
    }
  }

  SUBCASE("diagonally dominant similarity returns the identity") {
    LossConfig cfg;
    cfg.beta = 0.9;
    for (std::size_t B : {2, 5, 8}) {
      SimilarityMatrix S(B, B, 0.0);
      for (std::size_t i = 0; i < B; ++i) S.at(i, i) = 100.0;
      TargetMatrix T = faulty_negative_targets(S, cfg);
      double worst = 0.0;
      for (std::size_t i = 0; i < B; ++i) {
        for (std::size_t j = 0; j < B; ++j) {
          worst = std::max(worst, std::abs(T.values.at(i, j) - (i == j ? 1.0 : 0.0)));
        }
      }
      CHECK(worst <= 1e-6);
    }
  }

  SUBCASE("beta zero returns the exact identity") {
    Rng rng(3);
    LossConfig cfg;
    cfg.beta = 0.0;
    SimilarityMatrix S = rng.uniform_matrix(3, 3, -1.0, 1.0);
    TargetMatrix T = faulty_negative_targets(S, cfg);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(T.values.at(i, j) == (i == j ? 1.0 : 0.0));
      }
    }
  }

  SUBCASE("rows are stochastic for every beta") {
    Rng rng(5);
    SimilarityMatrix S = rng.uniform_matrix(5, 5, -1.0, 1.0);
    for (double beta : {0.0, 0.3, 1.0}) {
      LossConfig cfg;
      cfg.beta = beta;
      TargetMatrix T = faulty_negative_targets(S, cfg);
      for (std::size_t i = 0; i < 5; ++i) {
        CHECK(std::abs(compensated_sum(T.values.row(i)) - 1.0) <= 1e-9);
        for (std::size_t j = 0; j < 5; ++j) CHECK(T.values.at(i, j) >= 0.0);
      }
    }
  }

  SUBCASE("literal blend keeps the printed normalization") {
    Rng rng(6);
    SimilarityMatrix S = rng.uniform_matrix(4, 4, -1.0, 1.0);
    LossConfig cfg;
    cfg.beta = 0.4;
    cfg.rescale_realignment = false;
    TargetMatrix T = faulty_negative_targets(S, cfg);
    for (std::size_t i = 0; i < 4; ++i) {
      double row = compensated_sum(T.values.row(i));
      CHECK(row == doctest::Approx(0.6 + 0.4 / 4.0).epsilon(1e-8));
    }
  }
}

TEST_CASE("clip_caption_loss") {
  SUBCASE("identity everything reproduces the two-class closed form") {
    SimilarityMatrix S(2, 2, 0.0);
    S.at(0, 0) = 1.0;
    S.at(1, 1) = 1.0;
    TargetMatrix T;
    T.values = Matrix(2, 2, 0.0);
    T.values.at(0, 0) = 1.0;
    T.values.at(1, 1) = 1.0;
    LossReport report = clip_caption_loss(S, T, 1.0);
    CHECK(report.value == doctest::Approx(4.0 * std::log1p(std::exp(-1.0))).epsilon(1e-12));
  }

  SUBCASE("single element batch has zero loss") {
    SimilarityMatrix S(1, 1, 0.3);
    TargetMatrix T;
    T.values = Matrix(1, 1, 1.0);
    CHECK(clip_caption_loss(S, T, 0.07).value == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("loss is nonnegative and shift invariant") {
    Rng rng(8);
    SimilarityMatrix S = rng.uniform_matrix(4, 4, -1.0, 1.0);
    LossConfig cfg;
    TargetMatrix T = faulty_negative_targets(S, cfg);
    LossReport base = clip_caption_loss(S, T, 0.07);
    CHECK(base.value >= 0.0);

    SimilarityMatrix shifted = S;
    for (double& v : shifted.data()) v += 2.5;
    CHECK(clip_caption_loss(shifted, T, 0.07).value ==
          doctest::Approx(base.value).epsilon(1e-10));
  }

  SUBCASE("gradient matches finite differences") {
    Rng rng(2025);
    for (int trial = 0; trial < 5; ++trial) {
      std::size_t B = 2 + rng.index(3);  // 2..4
      SimilarityMatrix S = rng.uniform_matrix(B, B, -1.0, 1.0);
      LossConfig cfg;
      cfg.beta = 0.3;
      TargetMatrix T = faulty_negative_targets(S, cfg);
      double tau = 0.5;
      LossReport report = clip_caption_loss(S, T, tau);

      auto loss_fn = [&](const Matrix& s) {
        return clip_caption_loss(s, T, tau).value;
      };
      Matrix fd = oracle::finite_difference_gradient(loss_fn, S, 1e-5);
      CHECK(max_rel_err(report.grad, fd) <= 1e-4);
    }
  }
}

TEST_CASE("combined_loss") {
  CHECK(combined_loss(1.0, 2.0, 0.1) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(combined_loss(3.5, 99.0, 0.0) == 3.5);
  CHECK(combined_loss(0.0, 0.0, 0.42) == 0.0);
}

TEST_CASE("mine_hard_negatives") {
  SUBCASE("orthogonal vectors tie-break to the lowest index") {
    std::vector<std::vector<double>> reps{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    auto picks = mine_hard_negatives(reps, 1);
    CHECK(picks[0] == std::vector<std::size_t>{1});
    CHECK(picks[1] == std::vector<std::size_t>{0});
    CHECK(picks[2] == std::vector<std::size_t>{0});
  }

  SUBCASE("duplicates are the nearest neighbours") {
    std::vector<std::vector<double>> reps{{1, 0}, {1, 0}, {0, 1}};
    auto picks = mine_hard_negatives(reps, 1);
    CHECK(picks[0] == std::vector<std::size_t>{1});
    CHECK(picks[1] == std::vector<std::size_t>{0});
  }

  SUBCASE("k must be smaller than the corpus") {
    std::vector<std::vector<double>> reps{{1, 0}, {0, 1}};
    CHECK_THROWS_AS(mine_hard_negatives(reps, 2), std::invalid_argument);
  }
}

TEST_CASE("loss report JSON references the gradient CSV") {
  testsupport::TempDir dir("loss_json");
  Rng rng(9);
  SimilarityMatrix S = rng.uniform_matrix(3, 3, -1.0, 1.0);
  LossConfig cfg;
  TargetMatrix T = faulty_negative_targets(S, cfg);
  LossReport report = clip_caption_loss(S, T, 0.07);

  auto grad_path = dir.path() / "grad.csv";
  std::string json = loss_report_to_json(report, grad_path);
  CHECK(json.find("\"value\": ") != std::string::npos);
  CHECK(json.find(grad_path.string()) != std::string::npos);

  Matrix grad = read_csv(grad_path);
  REQUIRE(grad.same_shape(report.grad));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    CHECK(grad.data()[i] == doctest::Approx(report.grad.data()[i]).epsilon(1e-8));
  }
}
