#pragma once

#include <filesystem>
#include <string>

#include "norton/types.hpp"

namespace norton {

// NRTN v1 token blob: ASCII magic "NRTN", u32-LE row count, u32-LE dim,
// then rows*dim IEEE-754 f32-LE values in row-major order.
TokenMatrix load_token_matrix(const std::filesystem::path& path);
void save_token_matrix(const TokenMatrix& t, const std::filesystem::path& path);

// Manifest: JSON {"dim": int, "normalize": bool, "videos": [{"id": str,
// "clips": [{"clip": path, "caption": path, "start_s": f, "end_s": f}]}]}.
// Token paths are resolved relative to the manifest directory.
Dataset load_dataset(const std::filesystem::path& manifest_path);

// CSV with "%.9g" cells, one matrix row per line.
void write_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_csv(const std::filesystem::path& path);

// Binary PGM (P5), one pixel per cell, linear min-max scaling to 0..255.
// A constant matrix maps to mid-gray 128.
void write_pgm(const Matrix& m, const std::filesystem::path& path);

// The "%.9g" formatting used for all numeric text output.
std::string format_g9(double value);

}  // namespace norton
