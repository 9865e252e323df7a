#include "norton/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace norton {

namespace {

constexpr char kMagic[4] = {'N', 'R', 'T', 'N'};

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

float f32_from_le(const unsigned char* p) {
  std::uint32_t bits = read_u32_le(p);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

void f32_to_le(float f, unsigned char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  p[0] = static_cast<unsigned char>(bits & 0xff);
  p[1] = static_cast<unsigned char>((bits >> 8) & 0xff);
  p[2] = static_cast<unsigned char>((bits >> 16) & 0xff);
  p[3] = static_cast<unsigned char>((bits >> 24) & 0xff);
}

}  // namespace

TokenMatrix load_token_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("missing token file: " + path.string());

  unsigned char header[12];
  in.read(reinterpret_cast<char*>(header), 12);
  if (in.gcount() != 12 || std::memcmp(header, kMagic, 4) != 0) {
    throw std::invalid_argument("bad magic in token file: " + path.string());
  }
  std::uint64_t rows = read_u32_le(header + 4);
  std::uint64_t dim = read_u32_le(header + 8);
  if (rows == 0 || dim == 0) {
    throw std::invalid_argument("empty token matrix in " + path.string());
  }
  std::uint64_t count = rows * dim;
  if (count > (std::uint64_t{1} << 31)) {
    throw std::invalid_argument("token matrix size overflow in " + path.string());
  }

  std::vector<unsigned char> payload(count * 4);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::uint64_t>(in.gcount()) != payload.size()) {
    throw std::invalid_argument("truncated token file: " + path.string());
  }

  TokenMatrix t(rows, dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    double v = static_cast<double>(f32_from_le(payload.data() + i * 4));
    if (!std::isfinite(v)) {
      throw std::invalid_argument("non-finite value in token file: " + path.string());
    }
    t.data()[i] = v;
  }
  return t;
}

void save_token_matrix(const TokenMatrix& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out.write(kMagic, 4);
  write_u32_le(out, static_cast<std::uint32_t>(t.rows()));
  write_u32_le(out, static_cast<std::uint32_t>(t.cols()));
  std::vector<unsigned char> payload(t.size() * 4);
  for (std::size_t i = 0; i < t.size(); ++i) {
    f32_to_le(static_cast<float>(t.data()[i]), payload.data() + i * 4);
  }
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw io_error("write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw io_error("missing manifest: " + manifest_path.string());

  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("corrupt manifest " + manifest_path.string() + ": " +
                                e.what());
  }

  Dataset dataset;
  try {
    dataset.dim = doc.at("dim").get<std::size_t>();
    bool normalize = doc.at("normalize").get<bool>();
    const auto base = manifest_path.parent_path();

    for (const auto& jvideo : doc.at("videos")) {
      VideoDocument video;
      video.id = jvideo.at("id").get<std::string>();
      double prev_start = -std::numeric_limits<double>::infinity();
      for (const auto& jclip : jvideo.at("clips")) {
        ClipRecord rec;
        rec.start_s = jclip.at("start_s").get<double>();
        rec.end_s = jclip.at("end_s").get<double>();
        if (!(rec.start_s < rec.end_s)) {
          throw std::invalid_argument("clip span must satisfy start_s < end_s in video " +
                                      video.id);
        }
        if (!(rec.start_s > prev_start)) {
          throw std::invalid_argument("non-monotone timestamps in video " + video.id);
        }
        prev_start = rec.start_s;

        rec.clip_tokens = load_token_matrix(base / jclip.at("clip").get<std::string>());
        rec.caption_tokens =
            load_token_matrix(base / jclip.at("caption").get<std::string>());
        if (rec.clip_tokens.cols() != dataset.dim ||
            rec.caption_tokens.cols() != dataset.dim) {
          throw std::invalid_argument("dimension mismatch in video " + video.id);
        }
        if (normalize) {
          rec.clip_tokens = l2_normalize_rows(rec.clip_tokens);
          rec.caption_tokens = l2_normalize_rows(rec.caption_tokens);
        }
        video.clips.push_back(std::move(rec));
      }
      if (video.clips.empty()) {
        throw std::invalid_argument("video " + video.id + " has no clips");
      }
      dataset.videos.push_back(std::move(video));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("corrupt manifest " + manifest_path.string() + ": " +
                                e.what());
  }
  if (dataset.videos.empty()) throw std::invalid_argument("manifest lists no videos");
  return dataset;
}

std::string format_g9(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

void write_csv(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_g9(m.at(r, c));
    }
    out << '\n';
  }
  if (!out) throw io_error("write failed: " + path.string());
}

Matrix read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("missing file: " + path.string());

  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t row_cols = 0;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t consumed = 0;
        double v = std::stod(cell, &consumed);
        while (consumed < cell.size() &&
               std::isspace(static_cast<unsigned char>(cell[consumed]))) {
          ++consumed;
        }
        if (consumed != cell.size()) throw std::invalid_argument(cell);
        values.push_back(v);
      } catch (const std::exception&) {
        throw std::invalid_argument("malformed CSV cell '" + cell + "' in " +
                                    path.string());
      }
      ++row_cols;
    }
    if (rows == 0) {
      cols = row_cols;
    } else if (row_cols != cols) {
      throw std::invalid_argument("ragged CSV rows in " + path.string());
    }
    ++rows;
  }
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("empty CSV: " + path.string());
  }
  return Matrix(rows, cols, std::move(values));
}

void write_pgm(const Matrix& m, const std::filesystem::path& path) {
  require(!m.empty(), "empty matrix for PGM export");
  double lo = m.min_value();
  double hi = m.max_value();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out << "P5\n" << m.cols() << ' ' << m.rows() << "\n255\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      unsigned char pixel;
      if (hi == lo) {
        pixel = 128;
      } else {
        double scaled = (m.at(r, c) - lo) / (hi - lo) * 255.0;
        pixel = static_cast<unsigned char>(std::lround(scaled));
      }
      out.write(reinterpret_cast<const char*>(&pixel), 1);
    }
  }
  if (!out) throw io_error("write failed: " + path.string());
}

}  // namespace norton
