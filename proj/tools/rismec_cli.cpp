// SPDX-License-Identifier: Apache-2.0
//
// rismec — RIS-assisted secure NOMA-MEC energy minimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Command-line simulator: single runs, parameter sweeps, and baseline
// comparisons, writing CSV or JSON record files.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "rismec/experiments.hpp"

namespace {

enum class LogLevel { kQuiet = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("RISMEC_LOG");
  if (!env) return LogLevel::kInfo;
  std::string v(env);
  if (v == "quiet") return LogLevel::kQuiet;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void info(const std::string& msg) {
  if (log_level() >= LogLevel::kInfo) std::cerr << msg << "\n";
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

constexpr int kExitConfigError = 2;
constexpr int kExitRunFailure = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RIS-assisted secure NOMA-MEC energy minimization simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string mode_flag;
  int threads = 1;

  auto* run_cmd = app.add_subcommand("run", "one Monte Carlo realization");
  std::uint64_t run_seed = 0;
  std::string trace_path;
  run_cmd->add_option("--config", config_path, "configuration file")->required();
  run_cmd->add_option("--mode", mode_flag, "perfect|robust (overrides config)");
  run_cmd->add_option("--seed", run_seed, "realization index")->required();
  run_cmd->add_option("--trace", trace_path, "write the per-iteration trace CSV");
  run_cmd->add_option("--out", out_path, "record file (.csv or .json)")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "sweep one parameter axis");
  std::string axis;
  std::string values_csv;
  int sweep_seeds = 0;
  sweep_cmd->add_option("--config", config_path, "configuration file")->required();
  sweep_cmd->add_option("--mode", mode_flag, "perfect|robust (overrides config)");
  sweep_cmd->add_option("--axis", axis, "L|M|K|T|ris_x|eps_e|eps_g")->required();
  sweep_cmd->add_option("--values", values_csv, "comma-separated values")->required();
  sweep_cmd->add_option("--seeds", sweep_seeds, "number of seeds")->required();
  sweep_cmd->add_option("--threads", threads, "worker threads");
  sweep_cmd->add_option("--out", out_path, "record file (.csv or .json)")->required();

  auto* cmp_cmd = app.add_subcommand("compare", "baseline comparison");
  std::string baselines_csv = "no-ris,random-phase,optimized";
  int cmp_seeds = 0;
  cmp_cmd->add_option("--config", config_path, "configuration file")->required();
  cmp_cmd->add_option("--mode", mode_flag, "perfect|robust (overrides config)");
  cmp_cmd->add_option("--baselines", baselines_csv, "comma-separated baseline list");
  cmp_cmd->add_option("--seeds", cmp_seeds, "number of seeds")->required();
  cmp_cmd->add_option("--threads", threads, "worker threads");
  cmp_cmd->add_option("--out", out_path, "record file (.csv or .json)")->required();

  CLI11_PARSE(app, argc, argv);

  rismec::ScenarioConfig cfg;
  try {
    cfg = rismec::load_config(config_path);
    if (!mode_flag.empty()) {
      if (mode_flag == "perfect")
        cfg.mode = rismec::CsiMode::kPerfect;
      else if (mode_flag == "robust")
        cfg.mode = rismec::CsiMode::kRobust;
      else
        throw std::invalid_argument("--mode must be perfect or robust");
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    if (run_cmd->parsed()) {
      rismec::BcdTrace trace;
      rismec::RunRecord rec =
          rismec::run_scenario(cfg, run_seed, rismec::Baseline::kOptimized, &trace);
      if (!trace_path.empty()) rismec::write_trace_csv(trace, trace_path);
      rismec::write_records({rec}, out_path);
      info("run: E_total = " + std::to_string(rec.e_total_j) + " J in " +
           std::to_string(rec.iterations) + " iterations");
      if (!std::isfinite(rec.e_total_j)) return kExitRunFailure;
    } else if (sweep_cmd->parsed()) {
      std::vector<double> values;
      try {
        values = parse_values(values_csv);
        if (values.empty()) throw std::invalid_argument("empty --values list");
        if (rismec::scenario_axes().count(axis) == 0)
          throw std::invalid_argument("invalid sweep axis: " + axis);
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
      }
      auto records = rismec::sweep(cfg, axis, values, sweep_seeds, threads);
      rismec::write_records(records, out_path);
      info("sweep: wrote " + std::to_string(records.size()) + " records");
    } else if (cmp_cmd->parsed()) {
      try {
        cfg.baselines.clear();
        std::stringstream ss(baselines_csv);
        std::string tok;
        while (std::getline(ss, tok, ','))
          if (!tok.empty()) cfg.baselines.push_back(rismec::baseline_from_string(tok));
        if (cfg.baselines.empty())
          throw std::invalid_argument("empty --baselines list");
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
      }
      auto records = rismec::compare_baselines(cfg, cmp_seeds, threads);
      rismec::write_records(records, out_path);
      info("compare: wrote " + std::to_string(records.size()) + " records");
    }
  } catch (const std::exception& e) {
    std::cerr << "run failure: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return 0;
}
