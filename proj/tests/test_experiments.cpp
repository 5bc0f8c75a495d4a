// SPDX-License-Identifier: Apache-2.0
//
// rismec — RIS-assisted secure NOMA-MEC energy minimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "rismec/experiments.hpp"

using namespace rismec;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = std::string("/tmp/rismec_test_") + name;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

ScenarioConfig fast_config() {
  // Small instance so harness tests stay quick.
  ScenarioConfig cfg = parse_config(nlohmann::json::object());
  cfg.sys.num_users = 2;
  cfg.sys.num_ris_elements = 3;
  cfg.sys.num_ap_antennas = 3;
  cfg.sys.num_eve_antennas = 2;
  cfg.sys.fill_user_defaults(1e5);
  cfg.sys.randomization_count = 30;
  return cfg;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST(Config, EmptyFileYieldsDefaults) {
  TempFile f("empty.json");
  std::ofstream(f.path) << "  \n";
  ScenarioConfig cfg = load_config(f.path);
  EXPECT_EQ(cfg.sys.num_users, 3);
  EXPECT_EQ(cfg.sys.num_ris_elements, 5);
  EXPECT_EQ(cfg.sys.num_ap_antennas, 5);
  EXPECT_EQ(cfg.sys.num_eve_antennas, 3);
  EXPECT_DOUBLE_EQ(cfg.sys.bandwidth_hz, 1e6);
  EXPECT_DOUBLE_EQ(cfg.sys.duration_s, 0.1);
  EXPECT_DOUBLE_EQ(cfg.sys.task_bits[0], 3e5);
  EXPECT_DOUBLE_EQ(cfg.sys.cycles_per_bit[0], 1000.0);
  EXPECT_DOUBLE_EQ(cfg.sys.cap_coeff[0], 1e-28);
  EXPECT_NEAR(cfg.sys.noise_ap_w, 1e-12, 1e-18);
  EXPECT_DOUBLE_EQ(cfg.sys.eve_err_direct, 0.01);
  EXPECT_DOUBLE_EQ(cfg.sys.eve_err_cascade, 0.01);
  EXPECT_DOUBLE_EQ(cfg.sys.bcd_tol, 1e-3);
  EXPECT_NEAR(cfg.geo.ref_gain, 1e-3, 1e-12);
  EXPECT_DOUBLE_EQ(cfg.geo.ris_pos.y(), 10.0);
  EXPECT_EQ(cfg.seeds, 50);
}

TEST(Config, NegativeBandwidthNamesTheKey) {
  TempFile f("bad.json");
  std::ofstream(f.path) << R"({"bandwidth_hz": -5})";
  try {
    load_config(f.path);
    FAIL() << "expected range violation";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("bandwidth_hz"), std::string::npos);
  }
}

TEST(Config, UnknownKeyRejectedWithName) {
  TempFile f("unknown.json");
  std::ofstream(f.path) << R"({"bandwidht_hz": 1e6})";
  try {
    load_config(f.path);
    FAIL() << "expected unknown-key rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("bandwidht_hz"), std::string::npos);
  }
}

TEST(Config, SaveLoadRoundTripIsIdentical) {
  TempFile f("roundtrip.json");
  ScenarioConfig cfg = parse_config(nlohmann::json::object());
  cfg.sys.num_ris_elements = 7;
  cfg.sys.fill_user_defaults(2e5, 800.0, 2e-28, 0.2);
  cfg.geo.ris_pos = Vec2{15.0, 10.0};
  cfg.mode = CsiMode::kRobust;
  cfg.baselines = {Baseline::kNoRis, Baseline::kOptimized};
  cfg.sweep_axis = "M";
  cfg.sweep_values = {5, 10};
  cfg.seeds = 7;
  cfg.master_seed = 99;
  save_config(cfg, f.path);
  ScenarioConfig back = load_config(f.path);
  EXPECT_EQ(back.sys.num_ris_elements, 7);
  EXPECT_DOUBLE_EQ(back.sys.task_bits[0], 2e5);
  EXPECT_DOUBLE_EQ(back.sys.cycles_per_bit[0], 800.0);
  EXPECT_DOUBLE_EQ(back.sys.power_budget_w[0], 0.2);
  EXPECT_DOUBLE_EQ(back.geo.ris_pos.x(), 15.0);
  EXPECT_EQ(back.mode, CsiMode::kRobust);
  ASSERT_EQ(back.baselines.size(), 2u);
  EXPECT_EQ(back.baselines[0], Baseline::kNoRis);
  EXPECT_EQ(back.sweep_axis, "M");
  EXPECT_EQ(back.sweep_values, (std::vector<double>{5, 10}));
  EXPECT_EQ(back.seeds, 7);
  EXPECT_EQ(back.master_seed, 99u);

  // Saving again must reproduce the same file bytes.
  TempFile f2("roundtrip2.json");
  save_config(back, f2.path);
  EXPECT_EQ(read_lines(f.path), read_lines(f2.path));
}

TEST(RunScenario, DeterministicAcrossCalls) {
  ScenarioConfig cfg = fast_config();
  RunRecord a = run_scenario(cfg, 3);
  RunRecord b = run_scenario(cfg, 3);
  EXPECT_EQ(a.e_total_j, b.e_total_j);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.local_bits, b.local_bits);
  EXPECT_EQ(a.tx_power_w, b.tx_power_w);
}

TEST(RunScenario, PerfectModeProducesConvergedFeasibleRecord) {
  ScenarioConfig cfg = fast_config();
  BcdTrace trace;
  RunRecord rec = run_scenario(cfg, 0, Baseline::kOptimized, &trace);
  EXPECT_TRUE(rec.converged);
  EXPECT_GE(rec.min_margin, -cfg.sys.feasibility_tol);
  for (size_t i = 1; i < trace.iterations.size(); ++i)
    EXPECT_LE(trace.iterations[i].energy_j, trace.iterations[i - 1].energy_j + 1e-6);
  EXPECT_NEAR(rec.e_total_j, rec.e_local_j + rec.e_offload_j, 1e-9);
}

TEST(RunScenario, RobustWithZeroErrorTracksPerfect) {
  ScenarioConfig cfg = fast_config();
  cfg.sys.eve_err_direct = 0.0;
  cfg.sys.eve_err_cascade = 0.0;
  RunRecord perfect = run_scenario(cfg, 1);
  cfg.mode = CsiMode::kRobust;
  RunRecord robust = run_scenario(cfg, 1);
  EXPECT_LE(std::abs(robust.e_total_j - perfect.e_total_j), 0.03 * perfect.e_total_j);
}

TEST(CompareBaselines, SharedChannelsAndDegenerateRis) {
  ScenarioConfig cfg = fast_config();
  cfg.sys.num_ris_elements = 0;
  cfg.baselines = {Baseline::kOptimized, Baseline::kNoRis};
  auto records = compare_baselines(cfg, 2);
  ASSERT_EQ(records.size(), 4u);
  // With M = 0 the optimized run equals the no-RIS record exactly.
  for (int s = 0; s < 2; ++s) {
    const RunRecord& opt = records[2 * s];
    const RunRecord& no_ris = records[2 * s + 1];
    EXPECT_EQ(opt.e_total_j, no_ris.e_total_j);
    EXPECT_EQ(opt.local_bits, no_ris.local_bits);
    EXPECT_EQ(opt.tx_power_w, no_ris.tx_power_w);
  }
}

TEST(CompareBaselines, ChannelsIdenticalAcrossBaselines) {
  ScenarioConfig cfg = fast_config();
  // Direct links must match between the raw and RIS-stripped channel sets.
  ChannelSet cs = scenario_channels(cfg, 5);
  ChannelSet stripped = cs.without_ris();
  for (int k = 0; k < cfg.sys.num_users; ++k) {
    EXPECT_TRUE(cs.h_ap[k] == stripped.h_ap[k]);
    EXPECT_TRUE(cs.h_eve[k] == stripped.h_eve[k]);
    EXPECT_TRUE(stripped.h_ris[k].isZero(0.0));
  }
  // And resampling with the same seed is bit-identical.
  ChannelSet again = scenario_channels(cfg, 5);
  for (int k = 0; k < cfg.sys.num_users; ++k)
    EXPECT_TRUE(cs.h_ap[k] == again.h_ap[k]);
  EXPECT_TRUE(cs.ris_ap == again.ris_ap);
}

TEST(Sweep, InvalidAxisThrows) {
  ScenarioConfig cfg = fast_config();
  EXPECT_THROW(sweep(cfg, "bogus", {1.0}, 1), std::invalid_argument);
}

TEST(Sweep, RecordsCarryAxisValues) {
  ScenarioConfig cfg = fast_config();
  auto records = sweep(cfg, "T", {0.1, 0.2}, 2);
  ASSERT_EQ(records.size(), 4u);
  EXPECT_EQ(records[0].axis, "T");
  EXPECT_DOUBLE_EQ(records[0].axis_value, 0.1);
  EXPECT_DOUBLE_EQ(records[3].axis_value, 0.2);
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
  ScenarioConfig cfg = fast_config();
  auto seq = sweep(cfg, "T", {0.1, 0.15}, 2, 1);
  auto par = sweep(cfg, "T", {0.1, 0.15}, 2, 4);
  ASSERT_EQ(seq.size(), par.size());
  for (size_t i = 0; i < seq.size(); ++i) {
    EXPECT_EQ(seq[i].e_total_j, par[i].e_total_j);
    EXPECT_EQ(seq[i].local_bits, par[i].local_bits);
  }
}

TEST(WriteRecords, CsvHasHeaderPlusOneLinePerRecord) {
  ScenarioConfig cfg = fast_config();
  std::vector<RunRecord> records;
  for (int s = 0; s < 10; ++s) {
    RunRecord r;
    r.seed = static_cast<std::uint64_t>(s);
    r.local_bits = {1e5, 2e5};
    r.tx_power_w = {0.01, 0.02};
    r.e_total_j = 0.123456789123;
    records.push_back(r);
  }
  TempFile f("records.csv");
  write_records_csv(records, f.path);
  auto lines = read_lines(f.path);
  ASSERT_EQ(lines.size(), 11u);
  EXPECT_EQ(lines[0],
            "seed,mode,baseline,axis,axis_value,E_total_J,E_local_J,E_offload_J,"
            "iterations,converged,min_margin,wall_ms,l_1,l_2,p_1,p_2");
}

TEST(WriteRecords, CsvRoundTripsNineSignificantDigits) {
  RunRecord r;
  r.seed = 7;
  r.e_total_j = 0.123456789123456;
  r.e_local_j = 1.9876543e-3;
  r.e_offload_j = 4.2e-2;
  r.local_bits = {123456.789};
  r.tx_power_w = {0.0123456789};
  TempFile f("roundtrip.csv");
  write_records_csv({r}, f.path);
  auto lines = read_lines(f.path);
  ASSERT_EQ(lines.size(), 2u);
  std::stringstream ss(lines[1]);
  std::vector<std::string> fields;
  std::string tok;
  while (std::getline(ss, tok, ',')) fields.push_back(tok);
  double back = std::stod(fields[5]);
  EXPECT_LE(std::abs(back - r.e_total_j), 1e-9 * r.e_total_j);
}

TEST(WriteRecords, JsonAgreesWithCsvFieldByField) {
  ScenarioConfig cfg = fast_config();
  auto records = compare_baselines(cfg, 1);
  TempFile fc("agree.csv"), fj("agree.json");
  write_records(records, fc.path);
  write_records(records, fj.path);
  auto lines = read_lines(fc.path);
  std::ifstream jin(fj.path);
  nlohmann::json arr = nlohmann::json::parse(jin);
  ASSERT_EQ(arr.size(), records.size());
  ASSERT_EQ(lines.size(), records.size() + 1);
  for (size_t i = 0; i < records.size(); ++i) {
    std::stringstream ss(lines[i + 1]);
    std::vector<std::string> fields;
    std::string tok;
    while (std::getline(ss, tok, ',')) fields.push_back(tok);
    EXPECT_EQ(std::stoull(fields[0]), arr[i]["seed"].get<std::uint64_t>());
    EXPECT_EQ(fields[1], arr[i]["mode"].get<std::string>());
    EXPECT_EQ(fields[2], arr[i]["baseline"].get<std::string>());
    double csv_e = std::stod(fields[5]);
    double json_e = arr[i]["E_total_J"].get<double>();
    EXPECT_LE(std::abs(csv_e - json_e), 1e-9 * (1.0 + std::abs(json_e)));
  }
}
