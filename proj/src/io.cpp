// io.cpp — CSV/manifest serialization and atomic file writes
#include "qlbe/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <system_error>

#include "qlbe/version.hpp"

namespace qlbe {

std::string format_double(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("format_double: non-finite value");
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::vector<std::string>& columns) : n_columns_(columns.size()) {
  if (columns.empty()) throw std::invalid_argument("CsvWriter: need at least one column");
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].find_first_of(",\"\n") != std::string::npos)
      throw std::invalid_argument("CsvWriter: column names must be plain identifiers");
    if (i) buffer_ += ',';
    buffer_ += columns[i];
  }
  buffer_ += '\n';
}

void CsvWriter::append_row(const std::vector<double>& values) {
  if (values.size() != n_columns_)
    throw std::invalid_argument("CsvWriter: row width does not match header");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += format_double(values[i]);
  }
  buffer_ += '\n';
  ++rows_;
}

void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
  const auto parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("atomic_write_file: cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("atomic_write_file: write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("atomic_write_file: rename failed for " + path.string() + ": " +
                             ec.message());
  }
}

void write_run_manifest(const std::filesystem::path& out_dir, const std::string& subcommand,
                        const nlohmann::json& resolved_config, std::uint64_t seed,
                        const std::vector<OutputFileInfo>& outputs, double wall_time_seconds) {
  nlohmann::json manifest;
  manifest["tool"] = "qlbe";
  manifest["version"] = version;
  manifest["subcommand"] = subcommand;
  manifest["config"] = resolved_config;
  manifest["seed"] = seed;
  manifest["wall_time_seconds"] = wall_time_seconds;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& out : outputs) files.push_back({{"name", out.name}, {"rows", out.rows}});
  manifest["outputs"] = files;
  atomic_write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace qlbe
