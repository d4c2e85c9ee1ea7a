#pragma once

#include "out/chain.hpp"
#include "out/core.hpp"
#include "out/graph.hpp"
#include "out/sampler.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace out {

/// A p x T panel with series names and time labels.
struct Dataset {
  Matrix values;  // p x T
  std::vector<std::string> names;
  std::vector<std::string> time_labels;

  Index p() const { return values.rows(); }
  Index T() const { return values.cols(); }
};

enum class Orientation { SeriesInColumns, SeriesInRows };
Orientation parse_orientation(const std::string& s);

/// Strict CSV reader: a header row, then numeric cells only. Missing, empty or
/// non-numeric cells are errors that name the line and column.
///
/// SeriesInColumns: header = series names, one row per time point.
/// SeriesInRows: header = time labels, one row per series (named s1, s2, ...).
Dataset parse_csv(const std::string& text, Orientation orientation, const std::string& source = "<memory>");
Dataset ingest_csv(const std::filesystem::path& path, Orientation orientation);

/// Elementwise log (optional), `diff_order` first differences, then centering of each series.
Dataset preprocess(const Dataset& ds, bool log_transform, int diff_order);

/// Series in columns, 17 significant digits.
std::string dataset_csv(const Dataset& ds);

/// Matrix CSV with a header row; optional leading label column.
std::string matrix_csv(const Matrix& m, const std::vector<std::string>& col_names,
                       const std::vector<std::string>& row_names = {});
/// Reads back what matrix_csv writes (with or without the label column).
Matrix parse_matrix_csv(const std::string& text, bool has_row_labels);

std::string edges_csv(const EdgeSet& edges, const std::vector<std::string>& names);
std::string edges_dot(const EdgeSet& edges, const std::vector<std::string>& names);

/// Write `content` to `path` through a temporary file and a rename.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

// Columnar chain store. Layout (little-endian):
//   "OUTCHAIN" | u32 version | i64 p | i64 K | u64 seed
//   u32 n_columns, then per column: u32 name length, name, u8 type (0 f64, 1 i64),
//     i64 rows, i64 cols, values column-major
//   u32 n_blocks, per block: name, i64 attempts, accepted, sampling_attempts, sampling_accepted
//   u32 n_events, per event: i64 iteration, block, kind, f64 before, f64 after
// Columns: iteration, L, d, A, lambda, lambda_prime, theta, log_likelihood.
// Wall time is not stored, so a fixed seed gives identical bytes.
std::string serialize_chain(const ChainOutput& chain);
ChainOutput deserialize_chain(const std::string& bytes);
void write_chain(const std::filesystem::path& path, const ChainOutput& chain);
ChainOutput read_chain(const std::filesystem::path& path);

// Checkpoint: "OUTCKPT1", the sampler position, f64 wall seconds so far, then an embedded chain.
std::string serialize_checkpoint(const SamplerCheckpoint& cp);
SamplerCheckpoint deserialize_checkpoint(const std::string& bytes);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& data);
std::string hex64(std::uint64_t v);

}  // namespace out
