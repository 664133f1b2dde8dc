#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "seqdyn/errors.hpp"
#include "seqdyn/runner/config.hpp"
#include "seqdyn/runner/record.hpp"
#include "seqdyn/runner/scenarios.hpp"

namespace seqdyn {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitValidation = 3,
  kExitArgument = 4,
  kExitDomain = 5,
  kExitResource = 6,
  kExitUnsupported = 7,
  kExitMinoration = 8,
  kExitVerifyMismatch = 9,
  kExitIo = 10,
};

inline int exit_code_for(const std::string& error_class) {
  if (error_class == "validation") return kExitValidation;
  if (error_class == "argument") return kExitArgument;
  if (error_class == "domain") return kExitDomain;
  if (error_class == "resource") return kExitResource;
  if (error_class == "unsupported") return kExitUnsupported;
  if (error_class == "minoration") return kExitMinoration;
  if (error_class == "usage") return kExitUsage;
  if (error_class == "io") return kExitIo;
  return kExitInternal;
}

inline void report_error(std::ostream& err, const std::string& error_class, const std::string& message,
                         const std::vector<std::string>& fields = {}) {
  nlohmann::json j{{"error", error_class}, {"message", message}, {"exit_code", exit_code_for(error_class)}};
  if (!fields.empty()) j["fields"] = fields;
  err << j.dump() << '\n';
}

inline std::filesystem::path resolve_output_dir(const std::optional<std::string>& cli, const ExperimentConfig& c) {
  if (cli) return *cli;
  if (c.output) return *c.output;
  if (const char* env = std::getenv("SEQDYN_OUT"); env && *env) return env;
  return "results";
}

inline std::string list_text() {
  std::ostringstream os;
  os << std::left << std::setw(19) << "scenario" << std::setw(34) << "required" << "verifies\n";
  for (const auto& s : scenario_table()) {
    std::string req;
    for (const auto& r : s.required()) req += (req.empty() ? "" : ", ") + r;
    os << std::setw(19) << s.name << std::setw(34) << req << s.verifies << '\n';
  }
  return os.str();
}

inline nlohmann::json list_json() {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : scenario_table()) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : s.params) {
      nlohmann::json pj{{"name", p.name}, {"type", param_type_name(p.type)}, {"required", p.required}, {"help", p.help}};
      if (!p.fallback.is_null()) pj["default"] = p.fallback;
      if (!p.choices.empty()) pj["choices"] = p.choices;
      params.push_back(pj);
    }
    out.push_back({{"scenario", s.name}, {"required", s.required()}, {"verifies", s.verifies}, {"params", params}});
  }
  return out;
}

struct VerifyResult {
  bool ok = true;
  std::vector<std::string> mismatches;
};

/// Re-runs the config echoed in a record and compares tables and fitted values.
inline VerifyResult verify_record(const std::filesystem::path& record_path, std::size_t threads = 1) {
  std::ifstream in(record_path);
  if (!in) throw Error("io", "cannot read record " + record_path.string());
  nlohmann::json rec;
  try {
    rec = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError({std::string("record: ") + e.what()});
  }
  if (!rec.contains("config") || !rec.contains("tables")) throw ValidationError({"record: missing config or tables"});
  const auto cfg = parse_config(rec["config"]);
  const auto fresh = run_experiment(cfg, threads);
  VerifyResult v;
  const auto dir = record_path.parent_path();
  for (const auto& t : fresh.tables) {
    if (!rec["tables"].contains(t.name)) {
      v.mismatches.push_back("table " + t.name + " missing from record");
      continue;
    }
    const auto file = dir / rec["tables"][t.name]["file"].get<std::string>();
    std::ifstream csv(file, std::ios::binary);
    if (!csv) {
      v.mismatches.push_back("table " + t.name + ": cannot read " + file.string());
      continue;
    }
    std::stringstream buf;
    buf << csv.rdbuf();
    if (buf.str() != to_csv(cfg.scenario, t)) v.mismatches.push_back("table " + t.name + " differs");
  }
  if (rec.value("fitted", nlohmann::json::object()) != nlohmann::json::parse(fresh.fitted.dump())) {
    v.mismatches.emplace_back("fitted values differ");
  }
  v.ok = v.mismatches.empty();
  return v;
}

/// Entry point of the `seqdyn` executable.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"seqdyn: numerical experiments for sequential expanding interval maps"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::size_t threads = 1;
  std::optional<std::uint64_t> seed_override;
  auto* run = app.add_subcommand("run", "run one experiment config (TOML or JSON)");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--out", out_dir, "output directory (default: config output, $SEQDYN_OUT, ./results)");
  run->add_option("--threads", threads, "worker threads, 0 = all cores; results do not depend on it");
  run->add_option("--seed-override", seed_override, "replace the config seed");

  bool as_json = false;
  auto* list = app.add_subcommand("list", "list scenarios");
  list->add_flag("--json", as_json, "machine-readable output");

  std::string record_path;
  auto* verify = app.add_subcommand("verify", "re-run a record's config and compare outputs");
  verify->add_option("record", record_path, "record JSON written by `run`")->required();
  verify->add_option("--threads", threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (list->parsed()) {
      if (as_json) {
        out << list_json().dump(2) << '\n';
      } else {
        out << list_text();
      }
      return kExitOk;
    }
    if (run->parsed()) {
      auto cfg = load_config(config_path);
      if (seed_override) cfg.seed = *seed_override;
      const auto rec = run_experiment(cfg, threads);
      const auto files = write_record(rec, resolve_output_dir(out_dir, cfg));
      nlohmann::json summary{{"scenario", cfg.scenario}, {"record", files.back().string()}, {"fitted", rec.fitted},
                             {"warnings", rec.warnings}};
      out << summary.dump(2) << '\n';
      return kExitOk;
    }
    if (verify->parsed()) {
      const auto v = verify_record(record_path, threads);
      out << nlohmann::json{{"verified", v.ok}, {"mismatches", v.mismatches}}.dump(2) << '\n';
      return v.ok ? kExitOk : kExitVerifyMismatch;
    }
  } catch (const ValidationError& e) {
    report_error(err, e.error_class(), e.what(), e.fields());
    return exit_code_for(e.error_class());
  } catch (const Error& e) {
    report_error(err, e.error_class(), e.what());
    return exit_code_for(e.error_class());
  } catch (const std::filesystem::filesystem_error& e) {
    report_error(err, "io", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace seqdyn
