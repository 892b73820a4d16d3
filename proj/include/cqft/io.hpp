#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cqft/grid.hpp"
#include "cqft/spinor.hpp"

namespace cqft::io {

namespace fs = std::filesystem;

/// "# key: value" rows written above the CSV header.
using Metadata = std::vector<std::pair<std::string, std::string>>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  ///< one vector per column, equal lengths

  std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
  /// Throws std::out_of_range for an unknown column.
  const std::vector<double>& column(const std::string& name) const;
};

/// Numbers are written with 17 significant digits so they round-trip exactly.
void write_csv(const fs::path& path, const Metadata& meta, const Table& table);

struct CsvFile {
  Metadata meta;
  Table table;
};

CsvFile read_csv(const fs::path& path);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const fs::path& path);

/// Writes `doc` as indented JSON.
void write_json(const fs::path& path, const nlohmann::json& doc);

/// Adds {"path", "bytes", "sha256"} for every regular file in `dir` except
/// the manifest itself, sorted by path.
nlohmann::json list_files(const fs::path& dir, const fs::path& exclude);

/// Binary state checkpoint, little-endian:
///   char[8]  "CQFTCKP1"
///   f64      L
///   u64      N
///   f64      time
///   u64      state count
///   per state: u64 index, then 2N complex values (re, im as f64), upper then lower
struct Checkpoint {
  double L = 0.0;
  std::uint64_t N = 0;
  double time = 0.0;
  std::vector<std::uint64_t> index;
  std::vector<SpinorField> states;
};

void write_checkpoint(const fs::path& path, const Grid& grid, double time,
                      std::span<const std::uint64_t> index, std::span<const SpinorField> states);

/// Throws std::runtime_error on a bad magic, truncation or trailing bytes.
Checkpoint read_checkpoint(const fs::path& path);

}  // namespace cqft::io
