#pragma once

// Shared fixtures: synthetic noisy-correspondence datasets and small
// filesystem helpers for tests that exercise the file formats and the CLI.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "norton/io.hpp"
#include "norton/rng.hpp"
#include "norton/types.hpp"

namespace testsupport {

using norton::ClipRecord;
using norton::Dataset;
using norton::Matrix;
using norton::Rng;
using norton::TokenMatrix;
using norton::VideoDocument;

// Unit vector sampled uniformly from the sphere.
inline std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& x : v) {
      x = rng.gaussian();
      norm2 += x * x;
    }
  } while (norm2 == 0.0);
  double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

// Tokens clustered around a center: center + noise_scale * gaussian, rows
// renormalized to unit length.
inline TokenMatrix cluster_tokens(Rng& rng, const std::vector<double>& center,
                                  std::size_t rows, double noise_scale) {
  TokenMatrix t(rows, center.size());
  for (std::size_t r = 0; r < rows; ++r) {
    double norm2 = 0.0;
    for (std::size_t c = 0; c < center.size(); ++c) {
      double v = center[c] + noise_scale * rng.gaussian();
      t.at(r, c) = v;
      norm2 += v * v;
    }
    double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t c = 0; c < center.size(); ++c) t.at(r, c) *= inv;
  }
  return t;
}

struct NoisyCorpusParams {
  std::size_t videos = 50;
  std::size_t clips_per_video = 8;
  std::size_t dim = 32;
  std::size_t frames = 4;
  std::size_t words = 5;
  double token_noise = 0.15;
  double domain_bias = 0.4;         // shared component across all content
  std::size_t group_size = 5;       // videos sharing one procedure chain
  std::size_t chain_length = 5;     // ordered clips common to a group
  double permute_fraction = 0.25;   // captions moved out of order
  std::size_t permute_offset = 1;   // how far a displaced caption moves
  double noise_fraction = 0.25;     // captions replaced by unrelated content
  std::uint64_t seed = 7;
};

struct NoisyCorpus {
  Dataset dataset;
  // planted[v] maps clip index -> caption position, only for captions that
  // survived (not replaced by noise).
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> planted;
  std::vector<std::vector<std::size_t>> noise_captions;  // per video
};

// Synthetic corpus with noisy correspondence. Clip content sits on a
// corpus-wide bias direction (one domain's content looks somewhat alike),
// videos come in groups sharing an ordered procedure chain (distractors
// with clean common subsequences), and each paragraph displaces a fraction
// of captions out of chronological order and replaces another fraction
// with unrelated noise captions.
inline NoisyCorpus make_noisy_corpus(const NoisyCorpusParams& params) {
  Rng rng(params.seed);

  NoisyCorpus corpus;
  corpus.dataset.dim = params.dim;
  corpus.planted.resize(params.videos);
  corpus.noise_captions.resize(params.videos);

  std::vector<double> bias = random_unit(rng, params.dim);
  auto biased_unit = [&](Rng& r) {
    std::vector<double> v = random_unit(r, params.dim);
    double norm2 = 0.0;
    for (std::size_t c = 0; c < v.size(); ++c) {
      v[c] += params.domain_bias * bias[c];
      norm2 += v[c] * v[c];
    }
    double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
    return v;
  };

  const std::size_t n = params.clips_per_video;
  std::size_t displaced = static_cast<std::size_t>(params.permute_fraction * n);
  std::size_t offset = std::min(params.permute_offset, n > 1 ? n - 1 : 0);
  std::size_t noisy = static_cast<std::size_t>(params.noise_fraction * n);
  std::size_t chain_len = std::min(params.chain_length, n);
  std::size_t chain_start = chain_len < n ? (n - chain_len) / 2 : 0;

  std::vector<std::vector<double>> group_chain;
  for (std::size_t v = 0; v < params.videos; ++v) {
    if (params.group_size > 0 && v % params.group_size == 0) {
      group_chain.clear();
      for (std::size_t c = 0; c < chain_len; ++c) group_chain.push_back(biased_unit(rng));
    }

    VideoDocument video;
    char id_buf[16];
    std::snprintf(id_buf, sizeof(id_buf), "vid%03zu", v);
    video.id = id_buf;

    std::vector<std::vector<double>> centers(n);
    for (std::size_t a = 0; a < n; ++a) centers[a] = biased_unit(rng);
    for (std::size_t c = 0; c < chain_len && params.group_size > 0; ++c) {
      centers[chain_start + c] = group_chain[c];
    }

    // caption_source[b] = clip whose content caption position b carries,
    // before noise injection. Each swap displaces two captions by `offset`.
    std::vector<std::size_t> caption_source(n);
    for (std::size_t b = 0; b < n; ++b) caption_source[b] = b;
    if (offset > 0 && n > offset) {
      for (std::size_t swap = 0; swap < displaced / 2; ++swap) {
        std::size_t pos = rng.index(n - offset);
        std::swap(caption_source[pos], caption_source[pos + offset]);
      }
    }

    std::vector<bool> is_noise(n, false);
    std::size_t injected = 0;
    while (injected < noisy) {
      std::size_t pos = rng.index(n);
      if (!is_noise[pos]) {
        is_noise[pos] = true;
        ++injected;
      }
    }

    for (std::size_t a = 0; a < n; ++a) {
      ClipRecord rec;
      rec.start_s = static_cast<double>(a) * 10.0;
      rec.end_s = rec.start_s + 10.0;
      rec.clip_tokens =
          cluster_tokens(rng, centers[a], params.frames, params.token_noise);
      if (is_noise[a]) {
        std::vector<double> unrelated = biased_unit(rng);
        rec.caption_tokens =
            cluster_tokens(rng, unrelated, params.words, params.token_noise);
        corpus.noise_captions[v].push_back(a);
      } else {
        std::size_t source_clip = caption_source[a];
        rec.caption_tokens = cluster_tokens(rng, centers[source_clip], params.words,
                                            params.token_noise);
        corpus.planted[v].emplace_back(source_clip, a);
      }
      video.clips.push_back(std::move(rec));
    }
    corpus.dataset.videos.push_back(std::move(video));
  }
  return corpus;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("norton_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Writes the dataset as NRTN blobs plus a manifest; returns the manifest path.
inline std::filesystem::path write_dataset(const Dataset& dataset,
                                           const std::filesystem::path& dir,
                                           bool normalize = false) {
  std::ostringstream manifest;
  manifest << "{\"dim\": " << dataset.dim << ", \"normalize\": "
           << (normalize ? "true" : "false") << ", \"videos\": [";
  for (std::size_t v = 0; v < dataset.videos.size(); ++v) {
    const VideoDocument& video = dataset.videos[v];
    if (v) manifest << ", ";
    manifest << "{\"id\": \"" << video.id << "\", \"clips\": [";
    for (std::size_t c = 0; c < video.clips.size(); ++c) {
      const ClipRecord& rec = video.clips[c];
      std::string clip_name = video.id + "_clip" + std::to_string(c) + ".nrtn";
      std::string cap_name = video.id + "_cap" + std::to_string(c) + ".nrtn";
      norton::save_token_matrix(rec.clip_tokens, dir / clip_name);
      norton::save_token_matrix(rec.caption_tokens, dir / cap_name);
      if (c) manifest << ", ";
      manifest << "{\"clip\": \"" << clip_name << "\", \"caption\": \"" << cap_name
               << "\", \"start_s\": " << rec.start_s << ", \"end_s\": " << rec.end_s
               << "}";
    }
    manifest << "]}";
  }
  manifest << "]}";

  std::filesystem::path manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path);
  out << manifest.str();
  return manifest_path;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testsupport
