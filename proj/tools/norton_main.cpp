// Command-line surface for the alignment library: similarity export,
// transport solves, realignment maps, retrieval reports, loss evaluation,
// oracle self-checks and plan heatmaps.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "norton/bucket.hpp"
#include "norton/eval.hpp"
#include "norton/io.hpp"
#include "norton/losses.hpp"
#include "norton/oracle.hpp"
#include "norton/similarity.hpp"
#include "norton/sinkhorn.hpp"
#include "norton/tempalign.hpp"

namespace {

using namespace norton;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

const VideoDocument& find_video(const Dataset& dataset, const std::string& id) {
  for (const VideoDocument& video : dataset.videos) {
    if (video.id == id) return video;
  }
  throw std::invalid_argument("unknown video id: " + id);
}

SimilarityConfig make_sim_cfg(const std::string& mode, double alpha) {
  require(alpha > 0.0, "alpha must be positive");
  SimilarityConfig cfg;
  cfg.alpha = alpha;
  if (mode == "fine") {
    cfg.mode = SimilarityMode::kFineGrained;
  } else if (mode == "mean") {
    cfg.mode = SimilarityMode::kMeanPool;
  } else {
    throw std::invalid_argument("unknown mode '" + mode + "' (valid: fine, mean)");
  }
  return cfg;
}

MarginalScheme make_scheme(const std::string& name) {
  if (name == "matched") return MarginalScheme::kMatchedMass;
  if (name == "uniform") return MarginalScheme::kUniform;
  throw std::invalid_argument("unknown marginal scheme '" + name +
                              "' (valid: matched, uniform)");
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw io_error("write failed: " + path.string());
}

struct BucketFlags {
  double quantile = 0.3;
  double p = 0.0;
  bool has_p = false;
  bool no_bucket = false;
  std::string marginals = "matched";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--bucket-quantile", quantile,
                    "prompt value quantile of the aligned-pair similarities");
    cmd->add_option("--bucket-p", p, "explicit prompt value")->each([this](std::string) {
      has_p = true;
    });
    cmd->add_flag("--no-bucket", no_bucket, "plain uniform-marginal transport");
    cmd->add_option("--marginals", marginals, "bucket marginal scheme: matched|uniform");
  }

  BucketConfig to_config() const {
    BucketConfig cfg;
    if (has_p) {
      cfg.p = p;
    } else {
      require(quantile > 0.0 && quantile < 1.0, "quantile must lie in (0,1)");
      cfg.quantile = quantile;
    }
    cfg.scheme = make_scheme(marginals);
    return cfg;
  }
};

int run_sim(const std::string& manifest, const std::string& video_id,
            const std::string& paragraph_id, const std::string& mode, double alpha,
            const std::string& out) {
  SimilarityConfig cfg = make_sim_cfg(mode, alpha);
  Dataset dataset = load_dataset(manifest);
  const VideoDocument& video = find_video(dataset, video_id);
  const VideoDocument& paragraph = find_video(dataset, paragraph_id);
  SimilarityMatrix sims = clip_caption_matrix(video, paragraph, cfg);
  write_csv(sims, out);
  std::cout << "similarity " << sims.rows() << "x" << sims.cols() << " (" << video_id
            << " vs " << paragraph_id << ") -> " << out << "\n";
  return kExitOk;
}

int run_ot(const std::string& sim_csv, double epsilon, int iters, double tol,
           const BucketFlags& bucket_flags, const std::string& out_plan,
           const std::string& out_distance) {
  require(epsilon > 0.0, "epsilon must be positive");
  require(iters >= 1, "iters must be at least 1");
  require(tol > 0.0, "tol must be positive");

  SimilarityMatrix S = read_csv(sim_csv);
  require(S.all_finite(), "similarity CSV contains non-finite values");

  SolverConfig solver;
  solver.epsilon = epsilon;
  solver.max_iters = iters;
  solver.tol = tol;

  Matrix plan_values;
  double distance = 0.0;
  int iterations = 0;
  double achieved = 0.0;
  if (bucket_flags.no_bucket) {
    auto [plan, state] =
        sinkhorn_plan(S, uniform_marginals(S.rows(), S.cols()), solver);
    plan_values = plan.values;
    distance = ot_similarity(plan.values, S);
    iterations = state.iterations_run;
    achieved = state.final_marginal_error;
  } else {
    NortonResult result = norton_distance(S, bucket_flags.to_config(), solver);
    plan_values = result.plan.interior;
    distance = result.distance;
    iterations = result.solver_state.iterations_run;
    achieved = result.solver_state.final_marginal_error;
  }

  if (!out_plan.empty()) write_csv(plan_values, out_plan);
  if (!out_distance.empty()) write_text_file(out_distance, format_g9(distance) + "\n");
  std::cout << "transport distance " << format_g9(distance) << " (marginal error "
            << format_g9(achieved) << " after " << iterations << " iterations)\n";
  return kExitOk;
}

int run_align(const std::string& manifest, const std::string& video_id,
              const std::string& paragraph_id, const std::string& mode, double alpha,
              double epsilon, int iters, double tol, const BucketFlags& bucket_flags,
              const std::string& strategy, double threshold, const std::string& out,
              const std::string& out_plan) {
  SimilarityConfig sim_cfg = make_sim_cfg(mode, alpha);
  require(epsilon > 0.0, "epsilon must be positive");
  require(iters >= 1, "iters must be at least 1");
  require(tol > 0.0, "tol must be positive");
  RealignStrategy strat;
  if (strategy == "argmax") {
    strat = RealignStrategy::kRowArgmax;
  } else if (strategy == "threshold") {
    strat = RealignStrategy::kThreshold;
  } else {
    throw std::invalid_argument("unknown strategy '" + strategy +
                                "' (valid: argmax, threshold)");
  }

  Dataset dataset = load_dataset(manifest);
  const VideoDocument& video = find_video(dataset, video_id);
  const VideoDocument& paragraph = find_video(dataset, paragraph_id);
  SimilarityMatrix sims = clip_caption_matrix(video, paragraph, sim_cfg);

  SolverConfig solver;
  solver.epsilon = epsilon;
  solver.max_iters = iters;
  solver.tol = tol;

  FilteredPlan plan;
  if (bucket_flags.no_bucket) {
    auto [ot_plan, state] =
        sinkhorn_plan(sims, uniform_marginals(sims.rows(), sims.cols()), solver);
    plan.interior = ot_plan.values;
    plan.bucket_row_mass.assign(sims.rows(), 0.0);
    plan.bucket_col_mass.assign(sims.cols(), 0.0);
  } else {
    plan = norton_distance(sims, bucket_flags.to_config(), solver).plan;
  }

  AlignmentMap map = extract_realignment(plan, strat, threshold);
  write_text_file(out, alignment_map_to_json(map) + "\n");
  if (!out_plan.empty()) write_csv(plan.interior, out_plan);
  std::cout << "alignment " << map.pairs.size() << " pairs, "
            << map.dropped_clips.size() << " dropped clips, "
            << map.dropped_captions.size() << " dropped captions -> " << out << "\n";
  return kExitOk;
}

int run_retrieve(const std::string& manifest, const std::string& measure,
                 const std::string& recall_list, const std::string& mode, double alpha,
                 double epsilon, int iters, double tol, const BucketFlags& bucket_flags,
                 const std::string& bucket_scope, const std::string& capavg_scope,
                 bool normalize_cost, bool timing, const std::string& out) {
  RetrievalConfig cfg;
  if (measure == "capavg") {
    cfg.measure = RetrievalMeasure::kCapAvg;
  } else if (measure == "dtw") {
    cfg.measure = RetrievalMeasure::kDtw;
  } else if (measure == "otam") {
    cfg.measure = RetrievalMeasure::kOtam;
  } else if (measure == "ot" || measure == "ot_norton") {
    cfg.measure = RetrievalMeasure::kOtNorton;
  } else {
    throw std::invalid_argument("unknown measure '" + measure +
                                "' (valid: capavg, dtw, otam, ot)");
  }
  cfg.sim_cfg = make_sim_cfg(mode, alpha);
  require(epsilon > 0.0, "epsilon must be positive");
  require(iters >= 1, "iters must be at least 1");
  require(tol > 0.0, "tol must be positive");
  cfg.solver.epsilon = epsilon;
  cfg.solver.max_iters = iters;
  cfg.solver.tol = tol;
  cfg.bucket = bucket_flags.to_config();
  cfg.use_bucket = !bucket_flags.no_bucket;
  if (bucket_scope == "global") {
    cfg.bucket_scope = BucketScope::kGlobal;
  } else if (bucket_scope == "per-video") {
    cfg.bucket_scope = BucketScope::kPerVideo;
  } else {
    throw std::invalid_argument("unknown bucket scope '" + bucket_scope +
                                "' (valid: global, per-video)");
  }
  if (capavg_scope == "global") {
    cfg.capavg_scope = CapAvgScope::kGlobalArgmax;
  } else if (capavg_scope == "per-candidate") {
    cfg.capavg_scope = CapAvgScope::kPerCandidate;
  } else {
    throw std::invalid_argument("unknown capavg scope '" + capavg_scope +
                                "' (valid: global, per-candidate)");
  }
  cfg.normalize_distance = normalize_cost;

  cfg.ks.clear();
  std::stringstream ss(recall_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int k = std::stoi(item);
    require(k >= 1, "recall K must be at least 1");
    cfg.ks.push_back(static_cast<std::size_t>(k));
  }
  require(!cfg.ks.empty(), "no recall cutoffs given");
  require(std::is_sorted(cfg.ks.begin(), cfg.ks.end()), "recall Ks must be ascending");

  Dataset dataset = load_dataset(manifest);
  auto start = std::chrono::steady_clock::now();
  std::vector<std::size_t> ranks = rank_videos(dataset, cfg);
  RecallReport report = recall_at_k(ranks, cfg.ks);
  report.measure = measure_name(cfg.measure);
  report.runtime_s = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();

  write_text_file(out, recall_report_to_json(report, timing) + "\n");
  std::cout << "retrieval (" << report.measure << ") over " << ranks.size()
            << " queries";
  for (const auto& [k, v] : report.per_k) std::cout << "  R@" << k << "=" << format_g9(v);
  std::cout << "\n";
  return kExitOk;
}

int run_loss(const std::string& manifest, double tau, double beta, double lambda,
             double epsilon_clip, double epsilon_video, const std::string& mode,
             double alpha, bool literal_blend, bool check_grad, const std::string& out,
             const std::string& out_grad) {
  require(tau > 0.0, "tau must be positive");
  require(beta >= 0.0 && beta <= 1.0, "beta must lie in [0,1]");
  require(lambda >= 0.0, "lambda must be nonnegative");
  require(epsilon_clip > 0.0 && epsilon_video > 0.0, "epsilon must be positive");
  SimilarityConfig sim_cfg = make_sim_cfg(mode, alpha);

  LossConfig cfg;
  cfg.tau = tau;
  cfg.beta = beta;
  cfg.lambda = lambda;
  cfg.epsilon_clip = epsilon_clip;
  cfg.epsilon_video = epsilon_video;
  cfg.rescale_realignment = !literal_blend;

  Dataset dataset = load_dataset(manifest);

  // Clip-caption loss over the whole dataset as one batch.
  std::vector<const ClipRecord*> batch;
  for (const VideoDocument& video : dataset.videos) {
    for (const ClipRecord& rec : video.clips) batch.push_back(&rec);
  }
  const std::size_t B = batch.size();
  SimilarityMatrix batch_sims(B, B);
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < B; ++j) {
      batch_sims.at(i, j) =
          mean_pool_similarity(batch[i]->clip_tokens, batch[j]->caption_tokens);
    }
  }
  TargetMatrix targets = faulty_negative_targets(batch_sims, cfg);
  LossReport clip_report = clip_caption_loss(batch_sims, targets, cfg.tau);

  // Video-paragraph loss over the N x N grid of transport similarities.
  const std::size_t N = dataset.videos.size();
  SolverConfig solver;
  solver.epsilon = cfg.epsilon_video;
  VideoPairGrid grid(N, std::vector<VideoPair>(N));
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      SimilarityMatrix sims =
          clip_caption_matrix(dataset.videos[i], dataset.videos[j], sim_cfg);
      auto [plan, state] =
          sinkhorn_plan(sims, uniform_marginals(sims.rows(), sims.cols()), solver);
      grid[i][j] = VideoPair{std::move(sims), std::move(plan.values)};
    }
  }
  VideoLossReport video_report = video_paragraph_loss(grid, cfg.tau);

  double total = combined_loss(clip_report.value, video_report.value, cfg.lambda);

  std::ostringstream json;
  json << "{\"clip_loss\": " << format_g9(clip_report.value)
       << ", \"video_loss\": " << format_g9(video_report.value)
       << ", \"total\": " << format_g9(total);

  if (!out_grad.empty()) {
    write_csv(clip_report.grad, out_grad);
    json << ", \"clip_grad_path\": \"" << out_grad << "\"";
  }

  if (check_grad) {
    auto clip_fn = [&](const Matrix& s) {
      return clip_caption_loss(s, targets, cfg.tau).value;
    };
    Matrix fd = oracle::finite_difference_gradient(clip_fn, batch_sims, 1e-5);
    double worst = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
      double denom = std::max(std::abs(fd.data()[i]), 1e-6);
      worst = std::max(worst, std::abs(fd.data()[i] - clip_report.grad.data()[i]) / denom);
    }
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        auto video_fn = [&](const Matrix& s) {
          VideoPairGrid probe = grid;
          probe[i][j].similarity = s;
          return video_paragraph_loss(probe, cfg.tau).value;
        };
        Matrix vfd = oracle::finite_difference_gradient(video_fn,
                                                        grid[i][j].similarity, 1e-5);
        const Matrix& analytic = video_report.grads[i][j];
        for (std::size_t c = 0; c < vfd.size(); ++c) {
          double denom = std::max(std::abs(vfd.data()[c]), 1e-6);
          worst = std::max(worst,
                           std::abs(vfd.data()[c] - analytic.data()[c]) / denom);
        }
      }
    }
    json << ", \"max_grad_rel_err\": " << format_g9(worst);
    std::cout << "max gradient relative error " << format_g9(worst) << "\n";
  }
  json << "}";

  write_text_file(out, json.str() + "\n");
  std::cout << "clip_loss " << format_g9(clip_report.value) << "  video_loss "
            << format_g9(video_report.value) << "  total " << format_g9(total) << "\n";
  return kExitOk;
}

int run_heatmap(const std::string& plan_csv, const std::string& out) {
  Matrix plan = read_csv(plan_csv);
  write_pgm(plan, out);
  std::cout << "heatmap " << plan.rows() << "x" << plan.cols() << " -> " << out << "\n";
  return kExitOk;
}

int run_oracle_check(std::uint64_t seed, const std::string& out) {
  oracle::OracleConfig cfg;
  cfg.seed = seed;
  std::vector<oracle::SuiteResult> results = oracle::run_check_suites(cfg);

  std::ostringstream json;
  json << "{";
  bool all_passed = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (i) json << ", ";
    json << '"' << results[i].name << "\": {\"passed\": "
         << (results[i].passed ? "true" : "false") << ", \"detail\": \""
         << results[i].detail << "\"}";
    all_passed = all_passed && results[i].passed;
  }
  json << "}";

  if (!out.empty()) write_text_file(out, json.str() + "\n");
  std::cout << json.str() << "\n";
  return all_passed ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noise-robust temporal alignment toolkit"};
  app.require_subcommand(1);

  std::string manifest, video_id, paragraph_id, out, out_plan, out_distance;
  std::string mode = "fine";
  double alpha = 1.0;
  double epsilon = 0.1;
  int iters = 50;
  double tol = 1e-9;
  BucketFlags bucket_flags;

  auto* sim = app.add_subcommand("sim", "export a clip-caption similarity matrix");
  sim->add_option("--manifest", manifest)->required();
  sim->add_option("--video-id", video_id)->required();
  sim->add_option("--paragraph-id", paragraph_id)->required();
  sim->add_option("--mode", mode, "fine|mean");
  sim->add_option("--alpha", alpha);
  sim->add_option("--out", out)->required();

  std::string sim_csv;
  auto* ot = app.add_subcommand("ot", "solve entropic transport on a similarity CSV");
  ot->add_option("--sim", sim_csv)->required();
  ot->add_option("--epsilon", epsilon);
  ot->add_option("--iters", iters);
  ot->add_option("--tol", tol, "marginal violation target");
  bucket_flags.add_to(ot);
  ot->add_option("--out-plan", out_plan);
  ot->add_option("--out-distance", out_distance);

  std::string strategy = "argmax";
  double threshold = 0.0;
  // Extraction reads individual plan cells, so it defaults to a converged
  // solve instead of the 50-iteration training budget.
  int align_iters = 20000;
  double align_tol = 1e-12;
  auto* align = app.add_subcommand("align", "extract a clip-caption realignment map");
  align->add_option("--manifest", manifest)->required();
  align->add_option("--video-id", video_id)->required();
  align->add_option("--paragraph-id", paragraph_id)->required();
  align->add_option("--mode", mode, "fine|mean");
  align->add_option("--alpha", alpha);
  align->add_option("--epsilon", epsilon);
  align->add_option("--iters", align_iters);
  align->add_option("--tol", align_tol, "marginal violation target");
  bucket_flags.add_to(align);
  align->add_option("--strategy", strategy, "argmax|threshold");
  align->add_option("--threshold", threshold);
  align->add_option("--out", out)->required();
  align->add_option("--out-plan", out_plan);

  std::string measure = "ot";
  std::string recall_list = "1,5,10";
  std::string bucket_scope = "global";
  std::string capavg_scope = "global";
  bool normalize_cost = false;
  bool timing = false;
  auto* retrieve = app.add_subcommand("retrieve", "video-paragraph retrieval report");
  retrieve->add_option("--manifest", manifest)->required();
  retrieve->add_option("--measure", measure, "capavg|dtw|otam|ot");
  retrieve->add_option("--recall", recall_list, "comma-separated K values");
  retrieve->add_option("--mode", mode, "fine|mean");
  retrieve->add_option("--alpha", alpha);
  retrieve->add_option("--epsilon", epsilon);
  retrieve->add_option("--iters", iters);
  retrieve->add_option("--tol", tol, "marginal violation target");
  bucket_flags.add_to(retrieve);
  retrieve->add_option("--bucket-scope", bucket_scope, "global|per-video");
  retrieve->add_option("--capavg-scope", capavg_scope, "global|per-candidate");
  retrieve->add_flag("--normalize-cost", normalize_cost,
                     "divide dtw/otam distances by path length");
  retrieve->add_flag("--timing", timing, "include runtime_s in the report JSON");
  retrieve->add_option("--out", out)->required();

  double tau = 0.07, beta = 0.3, lambda = 0.1, epsilon_clip = 1.0, epsilon_video = 0.1;
  bool check_grad = false;
  bool literal_blend = false;
  std::string out_grad;
  auto* loss = app.add_subcommand("loss", "dataset-as-one-batch loss evaluation");
  loss->add_option("--manifest", manifest)->required();
  loss->add_option("--tau", tau);
  loss->add_option("--beta", beta);
  loss->add_option("--lambda", lambda);
  loss->add_option("--epsilon-clip", epsilon_clip);
  loss->add_option("--epsilon-video", epsilon_video);
  loss->add_option("--mode", mode, "fine|mean");
  loss->add_option("--alpha", alpha);
  loss->add_flag("--literal-blend", literal_blend,
                 "blend the raw realignment plan without row rescaling");
  loss->add_flag("--check-grad", check_grad, "verify gradients by finite differences");
  loss->add_option("--out", out)->required();
  loss->add_option("--out-grad", out_grad, "write the clip-loss gradient as CSV");

  std::string plan_csv;
  auto* heatmap = app.add_subcommand("heatmap", "render a plan CSV as a PGM image");
  heatmap->add_option("--plan", plan_csv)->required();
  heatmap->add_option("--out", out)->required();

  std::uint64_t seed = 42;
  std::string oracle_out;
  auto* oracle_check = app.add_subcommand("oracle-check", "run oracle self-checks");
  oracle_check->add_option("--seed", seed);
  oracle_check->add_option("--out", oracle_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      return run_sim(manifest, video_id, paragraph_id, mode, alpha, out);
    }
    if (ot->parsed()) {
      return run_ot(sim_csv, epsilon, iters, tol, bucket_flags, out_plan, out_distance);
    }
    if (align->parsed()) {
      return run_align(manifest, video_id, paragraph_id, mode, alpha, epsilon,
                       align_iters, align_tol, bucket_flags, strategy, threshold, out,
                       out_plan);
    }
    if (retrieve->parsed()) {
      return run_retrieve(manifest, measure, recall_list, mode, alpha, epsilon, iters,
                          tol, bucket_flags, bucket_scope, capavg_scope,
                          normalize_cost, timing, out);
    }
    if (loss->parsed()) {
      return run_loss(manifest, tau, beta, lambda, epsilon_clip, epsilon_video, mode,
                      alpha, literal_blend, check_grad, out, out_grad);
    }
    if (heatmap->parsed()) {
      return run_heatmap(plan_csv, out);
    }
    if (oracle_check->parsed()) {
      return run_oracle_check(seed, oracle_out);
    }
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
