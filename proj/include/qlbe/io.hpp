// qlbe/io.hpp — deterministic text output: CSV tables, run manifests, atomic writes
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace qlbe {

// Shortest decimal string that parses back to exactly `value`.  Non-finite
// inputs are rejected: they would silently corrupt downstream tables.
std::string format_double(double value);

// Builds an in-memory CSV document with a single header row and fixed column
// count.  Numeric cells use format_double, so output is byte-stable.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& columns);
  void append_row(const std::vector<double>& values);
  std::size_t rows() const { return rows_; }
  const std::string& str() const { return buffer_; }

 private:
  std::size_t n_columns_;
  std::size_t rows_ = 0;
  std::string buffer_;
};

// Writes content to path via a sibling temporary file and rename, so readers
// never observe a partial file.  Parent directories are created on demand.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

struct OutputFileInfo {
  std::string name;
  std::size_t rows = 0;
};

// manifest.json describing one CLI run: tool version, subcommand, the fully
// resolved configuration, the seed, wall time, and every file the run
// produced.  The wall time is the only non-reproducible entry, so determinism
// comparisons exclude the manifest.
void write_run_manifest(const std::filesystem::path& out_dir, const std::string& subcommand,
                        const nlohmann::json& resolved_config, std::uint64_t seed,
                        const std::vector<OutputFileInfo>& outputs,
                        double wall_time_seconds = 0.0);

}  // namespace qlbe
