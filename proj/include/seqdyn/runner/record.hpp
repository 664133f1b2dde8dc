#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "seqdyn/errors.hpp"
#include "seqdyn/runner/config.hpp"

namespace seqdyn {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

/// Numeric result table; NaN cells are written empty.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    if (row.size() != columns.size()) throw ArgumentError("table '" + name + "' row width mismatch");
    rows.push_back(std::move(row));
  }
};

/// Shortest round-trip representation; independent of the C locale.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string schema_id(const std::string& scenario, const std::string& table) {
  return "seqdyn/" + scenario + "/" + table + " v" + std::to_string(kSchemaVersion);
}

inline std::string to_csv(const std::string& scenario, const Table& t) {
  std::string out = "# schema: " + schema_id(scenario, t.name) + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_number(row[i]);
    }
    out += '\n';
  }
  return out;
}

struct ExperimentRecord {
  ExperimentConfig config;
  std::vector<Table> tables;
  nlohmann::json fitted = nlohmann::json::object();
  std::vector<std::string> warnings;
  double wall_clock_seconds = 0.0;

  std::string csv_file(const Table& t) const { return config.name + "_" + t.name + ".csv"; }
  std::string json_file() const { return config.name + ".json"; }
};

inline nlohmann::json to_json(const ExperimentRecord& r) {
  nlohmann::json tables = nlohmann::json::object();
  for (const auto& t : r.tables) {
    tables[t.name] = {{"file", r.csv_file(t)},
                      {"schema", schema_id(r.config.scenario, t.name)},
                      {"columns", t.columns},
                      {"rows", t.rows.size()}};
  }
  return {{"schema_version", kSchemaVersion},
          {"toolkit_version", kToolkitVersion},
          {"scenario", r.config.scenario},
          {"seed", r.config.seed},
          {"config", to_json(r.config)},
          {"wall_clock_seconds", r.wall_clock_seconds},
          {"tables", tables},
          {"fitted", r.fitted},
          {"warnings", r.warnings}};
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.close();
  if (!out) throw ResourceError("failed to write " + path.string(), 0);
}

}  // namespace detail

/// Writes every CSV and the JSON summary to temporary names, then renames them
/// into place; on failure the temporaries are removed and nothing is left.
inline std::vector<std::filesystem::path> write_record(const ExperimentRecord& r, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::pair<fs::path, std::string>> files;
  for (const auto& t : r.tables) files.emplace_back(dir / r.csv_file(t), to_csv(r.config.scenario, t));
  files.emplace_back(dir / r.json_file(), to_json(r).dump(2) + "\n");
  const std::string suffix = ".tmp." + std::to_string(::getpid());
  std::vector<fs::path> temps, done;
  try {
    for (const auto& [path, content] : files) {
      temps.push_back(path.string() + suffix);
      detail::write_file(temps.back(), content);
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
      fs::rename(temps[i], files[i].first);
      done.push_back(files[i].first);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
    for (const auto& d : done) fs::remove(d, ec);
    throw;
  }
  return done;
}

}  // namespace seqdyn
