// SPDX-License-Identifier: Apache-2.0
//
// rismec — RIS-assisted secure NOMA-MEC energy minimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Scenario configuration, seeded Monte Carlo execution, baseline
// comparisons, parameter sweeps, and CSV/JSON persistence.

#pragma once

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rismec/bcd_robust.hpp"

namespace rismec {

enum class Baseline { kOptimized, kRandomPhase, kNoRis };

inline const char* to_string(Baseline b) {
  switch (b) {
    case Baseline::kOptimized: return "optimized";
    case Baseline::kRandomPhase: return "random-phase";
    case Baseline::kNoRis: return "no-ris";
  }
  return "unknown";
}

inline Baseline baseline_from_string(const std::string& s) {
  if (s == "optimized") return Baseline::kOptimized;
  if (s == "random-phase") return Baseline::kRandomPhase;
  if (s == "no-ris") return Baseline::kNoRis;
  throw std::invalid_argument("unknown baseline: " + s);
}

/// Full experiment description: system, geometry, mode, baselines, sweep,
/// and seed bookkeeping. JSON with a flat documented key set is normative.
struct ScenarioConfig {
  SystemConfig sys;
  Geometry geo;
  CsiMode mode = CsiMode::kPerfect;
  std::vector<Baseline> baselines{Baseline::kOptimized};
  std::string sweep_axis;
  std::vector<double> sweep_values;
  int seeds = 50;
  std::uint64_t master_seed = 12345;

  void validate() const {
    sys.validate();
    geo.validate();
    if (seeds < 1) throw std::invalid_argument("seeds must be >= 1");
    if (baselines.empty()) throw std::invalid_argument("baselines must not be empty");
  }
};

inline const std::set<std::string>& scenario_axes() {
  static const std::set<std::string> axes{"L", "M", "K", "T", "ris_x", "eps_e", "eps_g"};
  return axes;
}

/// Applies one sweep value to a copy of the configuration.
inline ScenarioConfig apply_axis(const ScenarioConfig& cfg, const std::string& axis,
                                 double value) {
  if (scenario_axes().count(axis) == 0)
    throw std::invalid_argument("invalid sweep axis: " + axis);
  ScenarioConfig out = cfg;
  if (axis == "L") {
    out.sys.fill_user_defaults(value, cfg.sys.cycles_per_bit[0], cfg.sys.cap_coeff[0],
                               cfg.sys.power_budget_w[0]);
  } else if (axis == "M") {
    out.sys.num_ris_elements = static_cast<int>(value);
  } else if (axis == "K") {
    out.sys.num_users = static_cast<int>(value);
    out.sys.fill_user_defaults(cfg.sys.task_bits[0], cfg.sys.cycles_per_bit[0],
                               cfg.sys.cap_coeff[0], cfg.sys.power_budget_w[0]);
  } else if (axis == "T") {
    out.sys.duration_s = value;
  } else if (axis == "ris_x") {
    out.geo.ris_pos.x() = value;
  } else if (axis == "eps_e") {
    out.sys.eve_err_direct = value;
  } else if (axis == "eps_g") {
    out.sys.eve_err_cascade = value;
  }
  out.validate();
  return out;
}

// ---------- configuration (de)serialization ----------

namespace detail {

inline void config_to_json(const ScenarioConfig& cfg, nlohmann::json& j) {
  const SystemConfig& s = cfg.sys;
  const Geometry& g = cfg.geo;
  j["users"] = s.num_users;
  j["ris_elements"] = s.num_ris_elements;
  j["ap_antennas"] = s.num_ap_antennas;
  j["eve_antennas"] = s.num_eve_antennas;
  j["bandwidth_hz"] = s.bandwidth_hz;
  j["duration_s"] = s.duration_s;
  j["task_bits"] = s.task_bits[0];
  j["cycles_per_bit"] = s.cycles_per_bit[0];
  j["cap_coeff"] = s.cap_coeff[0];
  j["power_budget_w"] = s.power_budget_w[0];
  j["noise_ap_dbm"] = linear_to_db(s.noise_ap_w) + 30.0;
  j["noise_eve_dbm"] = linear_to_db(s.noise_eve_w) + 30.0;
  j["eve_err_direct"] = s.eve_err_direct;
  j["eve_err_cascade"] = s.eve_err_cascade;
  j["bcd_tol"] = s.bcd_tol;
  j["bcd_max_iters"] = s.bcd_max_iters;
  j["solver_tol"] = s.solver_tol;
  j["randomization_count"] = s.randomization_count;
  j["feasibility_tol"] = s.feasibility_tol;
  j["penalty_initial"] = s.penalty_initial;
  j["penalty_max"] = s.penalty_max;
  j["penalty_growth"] = s.penalty_growth;
  j["pcc_slack_tol"] = s.pcc_slack_tol;
  j["ap_pos"] = {g.ap_pos.x(), g.ap_pos.y()};
  j["ris_pos"] = {g.ris_pos.x(), g.ris_pos.y()};
  j["eve_pos"] = {g.eve_pos.x(), g.eve_pos.y()};
  j["user_center"] = {g.user_center.x(), g.user_center.y()};
  j["user_radius"] = g.user_radius;
  j["pl_exp_user_ap"] = g.exp_user_ap;
  j["pl_exp_user_eve"] = g.exp_user_eve;
  j["pl_exp_user_ris"] = g.exp_user_ris;
  j["pl_exp_ris_ap"] = g.exp_ris_ap;
  j["pl_exp_ris_eve"] = g.exp_ris_eve;
  j["ref_gain_db"] = linear_to_db(g.ref_gain);
  j["mode"] = cfg.mode == CsiMode::kPerfect ? "perfect" : "robust";
  std::vector<std::string> bl;
  for (Baseline b : cfg.baselines) bl.emplace_back(to_string(b));
  j["baselines"] = bl;
  j["sweep_axis"] = cfg.sweep_axis;
  j["sweep_values"] = cfg.sweep_values;
  j["seeds"] = cfg.seeds;
  j["master_seed"] = cfg.master_seed;
}

}  // namespace detail

/// Parses a scenario configuration; missing keys fall back to the
/// documented defaults, unknown keys are rejected with their path.
inline ScenarioConfig parse_config(const nlohmann::json& j) {
  ScenarioConfig cfg;
  cfg.sys.fill_user_defaults();

  static const std::set<std::string> known{
      "users", "ris_elements", "ap_antennas", "eve_antennas", "bandwidth_hz",
      "duration_s", "task_bits", "cycles_per_bit", "cap_coeff", "power_budget_w",
      "noise_ap_dbm", "noise_eve_dbm", "eve_err_direct", "eve_err_cascade",
      "bcd_tol", "bcd_max_iters", "solver_tol", "randomization_count",
      "feasibility_tol", "penalty_initial", "penalty_max", "penalty_growth",
      "pcc_slack_tol", "ap_pos", "ris_pos", "eve_pos", "user_center",
      "user_radius", "pl_exp_user_ap", "pl_exp_user_eve", "pl_exp_user_ris",
      "pl_exp_ris_ap", "pl_exp_ris_eve", "ref_gain_db", "mode", "baselines",
      "sweep_axis", "sweep_values", "seeds", "master_seed"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (known.count(it.key()) == 0)
      throw std::invalid_argument("unknown config key: " + it.key());

  auto get_pos = [&](const char* key, Vec2 fallback) {
    if (!j.contains(key)) return fallback;
    auto arr = j.at(key);
    if (!arr.is_array() || arr.size() != 2)
      throw std::invalid_argument(std::string("config key ") + key +
                                  " must be a 2-element array");
    return Vec2{arr[0].get<double>(), arr[1].get<double>()};
  };

  SystemConfig& s = cfg.sys;
  s.num_users = j.value("users", s.num_users);
  s.num_ris_elements = j.value("ris_elements", s.num_ris_elements);
  s.num_ap_antennas = j.value("ap_antennas", s.num_ap_antennas);
  s.num_eve_antennas = j.value("eve_antennas", s.num_eve_antennas);
  s.bandwidth_hz = j.value("bandwidth_hz", s.bandwidth_hz);
  s.duration_s = j.value("duration_s", s.duration_s);
  double task = j.value("task_bits", 3e5);
  double cycles = j.value("cycles_per_bit", 1000.0);
  double cap = j.value("cap_coeff", 1e-28);
  double budget = j.value("power_budget_w", 0.1);
  s.fill_user_defaults(task, cycles, cap, budget);
  if (j.contains("noise_ap_dbm")) s.noise_ap_w = dbm_to_watts(j.at("noise_ap_dbm"));
  if (j.contains("noise_eve_dbm")) s.noise_eve_w = dbm_to_watts(j.at("noise_eve_dbm"));
  s.eve_err_direct = j.value("eve_err_direct", s.eve_err_direct);
  s.eve_err_cascade = j.value("eve_err_cascade", s.eve_err_cascade);
  s.bcd_tol = j.value("bcd_tol", s.bcd_tol);
  s.bcd_max_iters = j.value("bcd_max_iters", s.bcd_max_iters);
  s.solver_tol = j.value("solver_tol", s.solver_tol);
  s.randomization_count = j.value("randomization_count", s.randomization_count);
  s.feasibility_tol = j.value("feasibility_tol", s.feasibility_tol);
  s.penalty_initial = j.value("penalty_initial", s.penalty_initial);
  s.penalty_max = j.value("penalty_max", s.penalty_max);
  s.penalty_growth = j.value("penalty_growth", s.penalty_growth);
  s.pcc_slack_tol = j.value("pcc_slack_tol", s.pcc_slack_tol);

  Geometry& g = cfg.geo;
  g.ap_pos = get_pos("ap_pos", g.ap_pos);
  g.ris_pos = get_pos("ris_pos", g.ris_pos);
  g.eve_pos = get_pos("eve_pos", g.eve_pos);
  g.user_center = get_pos("user_center", g.user_center);
  g.user_radius = j.value("user_radius", g.user_radius);
  g.exp_user_ap = j.value("pl_exp_user_ap", g.exp_user_ap);
  g.exp_user_eve = j.value("pl_exp_user_eve", g.exp_user_eve);
  g.exp_user_ris = j.value("pl_exp_user_ris", g.exp_user_ris);
  g.exp_ris_ap = j.value("pl_exp_ris_ap", g.exp_ris_ap);
  g.exp_ris_eve = j.value("pl_exp_ris_eve", g.exp_ris_eve);
  if (j.contains("ref_gain_db")) g.ref_gain = db_to_linear(j.at("ref_gain_db"));

  std::string mode = j.value("mode", std::string("perfect"));
  if (mode == "perfect")
    cfg.mode = CsiMode::kPerfect;
  else if (mode == "robust")
    cfg.mode = CsiMode::kRobust;
  else
    throw std::invalid_argument("config key mode must be 'perfect' or 'robust'");

  if (j.contains("baselines")) {
    cfg.baselines.clear();
    for (const auto& b : j.at("baselines"))
      cfg.baselines.push_back(baseline_from_string(b.get<std::string>()));
  }
  cfg.sweep_axis = j.value("sweep_axis", std::string());
  if (!cfg.sweep_axis.empty() && scenario_axes().count(cfg.sweep_axis) == 0)
    throw std::invalid_argument("invalid sweep axis: " + cfg.sweep_axis);
  if (j.contains("sweep_values"))
    cfg.sweep_values = j.at("sweep_values").get<std::vector<double>>();
  cfg.seeds = j.value("seeds", cfg.seeds);
  cfg.master_seed = j.value("master_seed", cfg.master_seed);

  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config range violation: ") + e.what());
  }
  return cfg;
}

/// Loads a configuration file; an empty (or whitespace-only) file yields
/// the full default set.
inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos)
    return parse_config(nlohmann::json::object());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

inline void save_config(const ScenarioConfig& cfg, const std::string& path) {
  nlohmann::json j;
  detail::config_to_json(cfg, j);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << j.dump(2) << "\n";
}

// ---------- run records ----------

struct RunRecord {
  std::uint64_t seed = 0;
  std::string mode = "perfect";
  std::string baseline = "optimized";
  std::string axis;
  double axis_value = 0.0;
  double e_total_j = 0.0;
  double e_local_j = 0.0;
  double e_offload_j = 0.0;
  int iterations = 0;
  bool converged = false;
  double min_margin = 0.0;
  double wall_ms = 0.0;
  std::vector<double> local_bits;
  std::vector<double> tx_power_w;
};

/// Samples channels for one realization; shared across baselines.
inline ChannelSet scenario_channels(const ScenarioConfig& cfg, std::uint64_t seed) {
  RandomStream rng(cfg.master_seed, seed, link::kGeometry);
  auto pos = sample_geometry(cfg.sys, cfg.geo, rng);
  return sample_channels(cfg.sys, cfg.geo, pos, cfg.master_seed, seed);
}

/// One end-to-end run: channels, algorithm dispatch, audit, record.
inline RunRecord run_scenario(const ScenarioConfig& cfg, std::uint64_t seed,
                              Baseline baseline = Baseline::kOptimized,
                              BcdTrace* trace_out = nullptr) {
  auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.seed = seed;
  rec.mode = cfg.mode == CsiMode::kPerfect ? "perfect" : "robust";
  rec.baseline = to_string(baseline);
  rec.axis = cfg.sweep_axis;

  try {
    ChannelSet cs = scenario_channels(cfg, seed);
    ChannelSet run_cs = baseline == Baseline::kNoRis ? cs.without_ris() : cs;

    BcdOptions opts;
    opts.master_seed = cfg.master_seed;
    opts.realization = seed;
    if (baseline == Baseline::kNoRis) {
      opts.optimize_phases = false;
      opts.initial_phases =
          PhaseVector::from_theta(RVec::Zero(cfg.sys.num_ris_elements));
    } else if (baseline == Baseline::kRandomPhase) {
      opts.optimize_phases = false;
      RandomStream prng(cfg.master_seed, seed, link::kBaselinePhases);
      RVec th(cfg.sys.num_ris_elements);
      for (int m = 0; m < th.size(); ++m) th[m] = prng.uniform_in(0.0, kTwoPi);
      opts.initial_phases = PhaseVector::from_theta(th);
    }

    Solution sol;
    BcdTrace trace;
    SolutionAudit audit;
    if (cfg.mode == CsiMode::kPerfect) {
      std::tie(sol, trace) = run_bcd_perfect(cfg.sys, run_cs, opts);
      audit = evaluate_solution(cfg.sys, run_cs, sol, CsiMode::kPerfect);
    } else {
      EveCsi csi =
          make_eve_csi(run_cs, cfg.sys.eve_err_direct, cfg.sys.eve_err_cascade);
      std::tie(sol, trace) = run_bcd_robust(cfg.sys, run_cs, csi, opts);
      audit = evaluate_solution(cfg.sys, run_cs, sol, CsiMode::kRobust, &csi);
    }

    rec.e_total_j = sol.energy.total_j;
    rec.e_local_j = sol.energy.local_j.sum();
    rec.e_offload_j = sol.energy.offload_j.sum();
    rec.iterations = trace.iteration_count;
    rec.converged = trace.converged;
    rec.min_margin = audit.min_margin;
    rec.local_bits.assign(sol.alloc.local_bits.data(),
                          sol.alloc.local_bits.data() + cfg.sys.num_users);
    rec.tx_power_w.assign(sol.alloc.tx_power_w.data(),
                          sol.alloc.tx_power_w.data() + cfg.sys.num_users);
    if (trace_out) *trace_out = trace;
  } catch (const std::exception&) {
    rec.converged = false;
    rec.e_total_j = rec.e_local_j = rec.e_offload_j =
        std::numeric_limits<double>::quiet_NaN();
  }
  rec.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();
  return rec;
}

namespace detail {

/// Runs a list of independent jobs on up to `threads` workers; results land
/// at fixed indices so the output order never depends on scheduling.
template <typename Job>
void run_jobs(const std::vector<Job>& jobs, int threads) {
  if (threads <= 1) {
    for (const auto& job : jobs) job();
    return;
  }
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      jobs[i]();
    }
  };
  std::vector<std::thread> pool;
  int n = std::min<int>(threads, static_cast<int>(jobs.size()));
  pool.reserve(n);
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// All configured baselines over the given seeds with shared channels.
inline std::vector<RunRecord> compare_baselines(const ScenarioConfig& cfg, int seeds,
                                                int threads = 1) {
  std::vector<RunRecord> records(static_cast<size_t>(seeds) * cfg.baselines.size());
  std::vector<std::function<void()>> jobs;
  for (int s = 0; s < seeds; ++s)
    for (size_t b = 0; b < cfg.baselines.size(); ++b) {
      size_t slot = static_cast<size_t>(s) * cfg.baselines.size() + b;
      jobs.emplace_back([&, s, b, slot]() {
        records[slot] =
            run_scenario(cfg, static_cast<std::uint64_t>(s), cfg.baselines[b]);
      });
    }
  detail::run_jobs(jobs, threads);
  return records;
}

/// One record per (value, seed, baseline); seeds are shared across values.
inline std::vector<RunRecord> sweep(const ScenarioConfig& cfg, const std::string& axis,
                                    const std::vector<double>& values, int seeds,
                                    int threads = 1) {
  if (scenario_axes().count(axis) == 0)
    throw std::invalid_argument("invalid sweep axis: " + axis);
  std::vector<ScenarioConfig> cfgs;
  cfgs.reserve(values.size());
  for (double v : values) cfgs.push_back(apply_axis(cfg, axis, v));

  const size_t nb = cfg.baselines.size();
  std::vector<RunRecord> records(values.size() * static_cast<size_t>(seeds) * nb);
  std::vector<std::function<void()>> jobs;
  for (size_t vi = 0; vi < values.size(); ++vi)
    for (int s = 0; s < seeds; ++s)
      for (size_t b = 0; b < nb; ++b) {
        size_t slot = (vi * seeds + s) * nb + b;
        jobs.emplace_back([&, vi, s, b, slot]() {
          RunRecord r = run_scenario(cfgs[vi], static_cast<std::uint64_t>(s),
                                     cfg.baselines[b]);
          r.axis = axis;
          r.axis_value = values[vi];
          records[slot] = r;
        });
      }
  detail::run_jobs(jobs, threads);
  return records;
}

// ---------- persistence ----------

namespace detail {

inline std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace detail

/// CSV with the fixed documented column order; floats carry 9 significant
/// digits. Per-user columns span the maximum K; shorter rows pad empty.
inline void write_records_csv(const std::vector<RunRecord>& records,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write records file: " + path);
  size_t k_max = 0;
  for (const auto& r : records) k_max = std::max(k_max, r.local_bits.size());

  out << "seed,mode,baseline,axis,axis_value,E_total_J,E_local_J,E_offload_J,"
         "iterations,converged,min_margin,wall_ms";
  for (size_t k = 1; k <= k_max; ++k) out << ",l_" << k;
  for (size_t k = 1; k <= k_max; ++k) out << ",p_" << k;
  out << "\n";

  for (const auto& r : records) {
    out << r.seed << ',' << r.mode << ',' << r.baseline << ',' << r.axis << ','
        << detail::fmt_g9(r.axis_value) << ',' << detail::fmt_g9(r.e_total_j) << ','
        << detail::fmt_g9(r.e_local_j) << ',' << detail::fmt_g9(r.e_offload_j) << ','
        << r.iterations << ',' << (r.converged ? 1 : 0) << ','
        << detail::fmt_g9(r.min_margin) << ',' << detail::fmt_g9(r.wall_ms);
    for (size_t k = 0; k < k_max; ++k)
      out << ',' << (k < r.local_bits.size() ? detail::fmt_g9(r.local_bits[k]) : "");
    for (size_t k = 0; k < k_max; ++k)
      out << ',' << (k < r.tx_power_w.size() ? detail::fmt_g9(r.tx_power_w[k]) : "");
    out << "\n";
  }
}

inline nlohmann::json records_to_json(const std::vector<RunRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json j;
    j["seed"] = r.seed;
    j["mode"] = r.mode;
    j["baseline"] = r.baseline;
    j["axis"] = r.axis;
    j["axis_value"] = r.axis_value;
    j["E_total_J"] = r.e_total_j;
    j["E_local_J"] = r.e_local_j;
    j["E_offload_J"] = r.e_offload_j;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["min_margin"] = r.min_margin;
    j["wall_ms"] = r.wall_ms;
    j["l"] = r.local_bits;
    j["p"] = r.tx_power_w;
    arr.push_back(std::move(j));
  }
  return arr;
}

inline void write_records_json(const std::vector<RunRecord>& records,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write records file: " + path);
  out << records_to_json(records).dump(2) << "\n";
}

/// Dispatches on the file extension; CSV is the default.
inline void write_records(const std::vector<RunRecord>& records,
                          const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
    write_records_json(records, path);
  else
    write_records_csv(records, path);
}

inline void write_trace_csv(const BcdTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);
  out << "iteration,E_total_J,alloc_status,alloc_accepted,detect_status,"
         "detect_accepted,phase_status,phase_accepted,min_margin,penalty_slack,"
         "wall_ms\n";
  for (size_t i = 0; i < trace.iterations.size(); ++i) {
    const auto& it = trace.iterations[i];
    out << i + 1 << ',' << detail::fmt_g9(it.energy_j) << ','
        << to_string(it.alloc_status) << ',' << (it.alloc_accepted ? 1 : 0) << ','
        << to_string(it.detect_status) << ',' << (it.detect_accepted ? 1 : 0) << ','
        << to_string(it.phase_status) << ',' << (it.phase_accepted ? 1 : 0) << ','
        << detail::fmt_g9(it.min_margin) << ',' << detail::fmt_g9(it.penalty_slack)
        << ',' << detail::fmt_g9(it.wall_ms) << "\n";
  }
}

}  // namespace rismec
