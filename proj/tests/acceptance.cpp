// SPDX-License-Identifier: Apache-2.0
//
// rismec — RIS-assisted secure NOMA-MEC energy minimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Acceptance suite: reproduces the headline behaviors as trend and
// property checks and prints one pass/fail line per criterion. The figure
// ordinates themselves are not reproducible (random channels), so
// quantitative claims are verified as orderings, monotone trends, and
// certified-robustness audits at pinned tolerances.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "rismec/experiments.hpp"

using namespace rismec;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", number,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

ScenarioConfig default_config() { return parse_config(nlohmann::json::object()); }

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Adjacent-pair violations of a monotone trend; `increasing` selects the
// expected direction.
int trend_violations(const std::vector<double>& means, bool increasing) {
  int v = 0;
  for (size_t i = 1; i < means.size(); ++i) {
    if (increasing && means[i] < means[i - 1] * (1.0 - 1e-9)) ++v;
    if (!increasing && means[i] > means[i - 1] * (1.0 + 1e-9)) ++v;
  }
  return v;
}

std::vector<double> mean_energy_per_value(const std::vector<RunRecord>& records,
                                          const std::vector<double>& values) {
  std::vector<double> means;
  for (double v : values) {
    std::vector<double> es;
    for (const auto& r : records)
      if (r.axis_value == v) es.push_back(r.e_total_j);
    means.push_back(mean_of(es));
  }
  return means;
}

struct Perturber {
  RandomStream rng;
  explicit Perturber(std::uint64_t seed) : rng(seed, 0, 987654) {}
  std::pair<CVec, CMat> draw(const EveCsi& csi, int k, int ne, int m) {
    CVec dh(ne);
    for (int i = 0; i < ne; ++i) dh[i] = rng.cgauss();
    if (dh.norm() > 0) dh *= rng.uniform() * csi.eps_direct[k] / dh.norm();
    CMat dg(ne, m);
    for (int r = 0; r < ne; ++r)
      for (int c = 0; c < m; ++c) dg(r, c) = rng.cgauss();
    if (dg.norm() > 0) dg *= rng.uniform() * csi.eps_cascade[k] / dg.norm();
    return {dh, dg};
  }
};

double lmi_best_margin(const CVec& t, double beta, double xi_e, double xi_g,
                       double norm_e_sq) {
  ConeProgram p;
  p.add_vars(3);  // mu_h, mu_g, s
  p.objective = SmoothExpr::zero(3);
  p.objective.add_linear(2, -1.0);
  const int ne = static_cast<int>(t.size());
  AffineLmi lmi;
  lmi.order = 3 * ne + 1;
  lmi.f0 = robust_eve_gain_lmi(t, beta, 0.0, 0.0, xi_e, xi_g, norm_e_sq);
  CMat f_muh = CMat::Zero(lmi.order, lmi.order);
  f_muh(0, 0) = -1.0;
  for (int i = 0; i < ne; ++i) f_muh(1 + ne + i, 1 + ne + i) = 1.0;
  CMat f_mug = CMat::Zero(lmi.order, lmi.order);
  f_mug(0, 0) = -norm_e_sq;
  for (int i = 0; i < ne; ++i) f_mug(1 + 2 * ne + i, 1 + 2 * ne + i) = 1.0;
  lmi.coeffs.emplace_back(0, f_muh);
  lmi.coeffs.emplace_back(1, f_mug);
  lmi.coeffs.emplace_back(2, CMat(-CMat::Identity(lmi.order, lmi.order)));
  p.lmis.push_back(std::move(lmi));
  for (int i = 0; i < 2; ++i) {
    SmoothExpr g = SmoothExpr::zero(3);
    g.add_linear(i, 1.0);
    p.inequalities.push_back(std::move(g));
  }
  RVec warm(3);
  warm << 0.1, 0.1, -2.0 * (1.0 + beta + t.squaredNorm());
  SolveResult r = solve_cone_program(p, warm);
  return r.status == SolveStatus::kOptimal ? r.x[2] : -1e30;
}

double bisection_min_beta(const CVec& t, double xi_e, double xi_g, double norm_e_sq) {
  double lo = 0.0;
  double hi = 4.0 * std::pow(t.norm() + xi_e + xi_g * std::sqrt(norm_e_sq) + 1.0, 2);
  for (int it = 0; it < 50; ++it) {
    double mid = 0.5 * (lo + hi);
    if (lmi_best_margin(t, mid, xi_e, xi_g, norm_e_sq) >= 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

bool fd_check_expr(const SmoothExpr& e, const RVec& x, double tol = 1e-5) {
  const double h = 1e-6;
  if (!e.in_domain(x)) return true;
  RVec g = e.gradient(x);
  for (int i = 0; i < x.size(); ++i) {
    RVec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    if (!e.in_domain(xp) || !e.in_domain(xm)) continue;
    double fd = (e.value(xp) - e.value(xm)) / (2 * h);
    if (std::abs(g[i] - fd) > tol * std::max({1.0, std::abs(fd), std::abs(g[i])}))
      return false;
  }
  return true;
}

// ---------- criteria ----------

void criterion1_convergence() {
  ScenarioConfig cfg = default_config();
  int converged15 = 0, total = 0;
  bool mono = true, runtime_ok = true;
  double worst_ms = 0.0;
  for (int seed = 0; seed < 20; ++seed) {
    for (int mode = 0; mode < 2; ++mode) {
      ScenarioConfig c = cfg;
      c.mode = mode == 0 ? CsiMode::kPerfect : CsiMode::kRobust;
      BcdTrace trace;
      RunRecord rec =
          run_scenario(c, static_cast<std::uint64_t>(seed), Baseline::kOptimized, &trace);
      ++total;
      if (rec.converged && rec.iterations <= 15) ++converged15;
      for (size_t i = 1; i < trace.iterations.size(); ++i)
        if (trace.iterations[i].energy_j > trace.iterations[i - 1].energy_j + 1e-6)
          mono = false;
      worst_ms = std::max(worst_ms, rec.wall_ms);
      if (rec.wall_ms >= 60000.0) runtime_ok = false;
    }
  }
  double frac = static_cast<double>(converged15) / total;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%.0f%% of %d runs converged within 15 iterations, traces monotone=%d, "
                "worst run %.1f s",
                100.0 * frac, total, mono ? 1 : 0, worst_ms / 1000.0);
  report(1, "convergence", frac >= 0.9 && mono && runtime_ok, buf);
}

void criterion2_ris_benefit() {
  ScenarioConfig cfg = default_config();
  cfg.baselines = {Baseline::kOptimized, Baseline::kRandomPhase, Baseline::kNoRis};
  const int seeds = 30;
  auto records = compare_baselines(cfg, seeds);
  std::vector<double> e_opt, e_rand, e_none;
  for (const auto& r : records) {
    if (r.baseline == "optimized") e_opt.push_back(r.e_total_j);
    if (r.baseline == "random-phase") e_rand.push_back(r.e_total_j);
    if (r.baseline == "no-ris") e_none.push_back(r.e_total_j);
  }
  double m_opt = mean_of(e_opt), m_rand = mean_of(e_rand), m_none = mean_of(e_none);
  bool ordering = m_opt < m_rand && m_rand < m_none;

  ScenarioConfig big = apply_axis(cfg, "M", 20.0);
  big.baselines = {Baseline::kOptimized};
  std::vector<double> e_opt20;
  for (int s = 0; s < seeds; ++s)
    e_opt20.push_back(
        run_scenario(big, static_cast<std::uint64_t>(s), Baseline::kOptimized)
            .e_total_j);
  double savings = 1.0 - mean_of(e_opt20) / m_none;

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "mean E: optimized %.4f < random-phase %.4f < no-ris %.4f (M=5); "
                "M=20 savings vs no-ris = %.0f%%",
                m_opt, m_rand, m_none, 100.0 * savings);
  report(2, "RIS benefit", ordering && savings >= 0.30, buf);
}

void criterion3_monotone_trends() {
  ScenarioConfig cfg = default_config();
  cfg.baselines = {Baseline::kOptimized};
  const int seeds = 30;
  struct Sweep {
    std::string axis;
    std::vector<double> values;
    bool increasing;
  };
  std::vector<Sweep> sweeps{{"L", {1e5, 2e5, 3e5, 4e5}, true},
                            {"K", {2, 3, 4, 5}, true},
                            {"M", {5, 10, 15, 20}, false},
                            {"T", {0.05, 0.1, 0.15, 0.2}, false}};
  bool pass = true;
  std::string detail;
  for (const auto& sw : sweeps) {
    auto records = sweep(cfg, sw.axis, sw.values, seeds);
    auto means = mean_energy_per_value(records, sw.values);
    int v = trend_violations(means, sw.increasing);
    std::ostringstream os;
    os << sw.axis << ":[";
    for (double m : means) os << detail::fmt_g9(m).substr(0, 6) << " ";
    os << "] v=" << v << "; ";
    detail += os.str();
    if (v > 1) pass = false;
  }
  report(3, "monotone trends in L, K, M, T", pass, detail);
}

void criterion4_ris_placement() {
  ScenarioConfig cfg = default_config();
  cfg.baselines = {Baseline::kOptimized};
  std::vector<double> xs{5, 20, 35, 50, 65};
  auto records = sweep(cfg, "ris_x", xs, 30);
  auto means = mean_energy_per_value(records, xs);
  size_t arg_max = 0;
  for (size_t i = 1; i < means.size(); ++i)
    if (means[i] > means[arg_max]) arg_max = i;
  bool interior = arg_max != 0 && arg_max != means.size() - 1;
  std::ostringstream os;
  os << "mean E over x: ";
  for (size_t i = 0; i < xs.size(); ++i) os << xs[i] << "->" << means[i] << " ";
  os << "(max at x=" << xs[arg_max] << ")";
  report(4, "RIS placement has interior energy maximum", interior, os.str());
}

std::vector<Solution> g_robust_solutions;  // reused by criterion 6
std::vector<EveCsi> g_robust_csis;
std::vector<PhaseVector> g_robust_phases;

void criterion5_robust_gap() {
  ScenarioConfig cfg = default_config();
  const int seeds = 30;
  std::vector<double> e_perfect, e_robust, e_perfect0, e_robust0;
  for (int s = 0; s < seeds; ++s) {
    auto seed = static_cast<std::uint64_t>(s);
    ScenarioConfig cp = cfg;
    cp.mode = CsiMode::kPerfect;
    e_perfect.push_back(run_scenario(cp, seed).e_total_j);

    // robust arm with the paper's error bounds; solutions kept for the
    // certification criterion
    ChannelSet cs = scenario_channels(cfg, seed);
    EveCsi csi = make_eve_csi(cs, cfg.sys.eve_err_direct, cfg.sys.eve_err_cascade);
    BcdOptions opts;
    opts.master_seed = cfg.master_seed;
    opts.realization = seed;
    auto [sol, trace] = run_bcd_robust(cfg.sys, cs, csi, opts);
    e_robust.push_back(sol.energy.total_j);
    g_robust_solutions.push_back(sol);
    g_robust_csis.push_back(csi);
    g_robust_phases.push_back(sol.phases);

    if (s < 20) {
      ScenarioConfig c0 = cfg;
      c0.sys.eve_err_direct = 0.0;
      c0.sys.eve_err_cascade = 0.0;
      c0.mode = CsiMode::kPerfect;
      e_perfect0.push_back(run_scenario(c0, seed).e_total_j);
      c0.mode = CsiMode::kRobust;
      e_robust0.push_back(run_scenario(c0, seed).e_total_j);
    }
  }
  double mp = mean_of(e_perfect), mr = mean_of(e_robust);
  double mp0 = mean_of(e_perfect0), mr0 = mean_of(e_robust0);
  bool gap_ok = mr >= mp - 1e-9;
  double agree = std::abs(mr0 - mp0) / mp0;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "eps=0.01: mean E robust %.4f >= perfect %.4f; eps=0: relative "
                "disagreement %.2f%%",
                mr, mp, 100.0 * agree);
  report(5, "robust CSI gap", gap_ok && agree <= 0.03, buf);
}

void criterion6_robust_certification() {
  ScenarioConfig cfg = default_config();
  int violations = 0;
  long total_samples = 0;
  for (size_t i = 0; i < g_robust_solutions.size(); ++i) {
    const Solution& sol = g_robust_solutions[i];
    const EveCsi& csi = g_robust_csis[i];
    ChannelSet cs = scenario_channels(cfg, static_cast<std::uint64_t>(i));
    auto eff = effective_channels(cs, sol.phases);
    RateReport rep =
        model_rates(cfg.sys, eff, sol.detection, sol.alloc.tx_power_w, sol.order);
    RVec target = required_rate(cfg.sys, sol.alloc.local_bits);
    Perturber pert(1000 + i);
    for (int k = 0; k < cfg.sys.num_users; ++k) {
      for (int trial = 0; trial < 1000; ++trial) {
        auto [dh, dg] =
            pert.draw(csi, k, cfg.sys.num_eve_antennas, cfg.sys.num_ris_elements);
        CVec g = csi.h_e_nominal[k] + dh + (csi.cascade_nominal[k] + dg) * sol.phases.e;
        double snr_e = sol.alloc.tx_power_w[k] * g.squaredNorm() / cfg.sys.noise_eve_w;
        double rs = std::max(0.0, log2_1p(rep.sinr_ap[k]) - log2_1p(snr_e));
        ++total_samples;
        if (rs - target[k] < -1e-6 - 1e-9) ++violations;
      }
    }
  }

  // Certified-minimal beta never undercuts the closed-form oracle.
  bool beta_ok = true;
  double sigma_e = std::sqrt(cfg.sys.noise_eve_w);
  for (size_t i = 0; i < std::min<size_t>(5, g_robust_csis.size()); ++i) {
    const EveCsi& csi = g_robust_csis[i];
    const CVec& e = g_robust_phases[i].e;
    for (int k = 0; k < cfg.sys.num_users; ++k) {
      CVec t = (csi.h_e_nominal[k] + csi.cascade_nominal[k] * e) / sigma_e;
      double certified = bisection_min_beta(t, csi.eps_direct[k] / sigma_e,
                                            csi.eps_cascade[k] / sigma_e,
                                            e.squaredNorm());
      double oracle = worst_case_eve_gain(csi, e, k) / cfg.sys.noise_eve_w;
      if (certified < oracle - 1e-6 * (1.0 + oracle)) beta_ok = false;
    }
  }

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%d margin violations in %ld perturbation samples; certified beta >= "
                "oracle on all probes=%d",
                violations, total_samples, beta_ok ? 1 : 0);
  report(6, "robustness certification", violations == 0 && beta_ok, buf);
}

void criterion7_solver_corpus() {
  RandomStream rng(314, 0, 1);
  bool corpus_ok = true;
  for (int inst = 0; inst < 20; ++inst) {
    int n = 2 + static_cast<int>(rng.uniform() * 7);
    CMat c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = rng.cgauss();
    c = 0.5 * (c + c.adjoint());
    ConeProgram p;
    int blk = p.add_psd_block(n);
    p.objective = SmoothExpr::zero(p.total_vars);
    p.objective.add_linear_vec(psd::trace_coeffs(p.psd_blocks[blk], p.total_vars, c));
    p.add_equality(
        psd::trace_coeffs(p.psd_blocks[blk], p.total_vars, CMat::Identity(n, n)), 1.0);
    SolveResult r = solve_cone_program(p);
    double oracle = hermitian_eig(HermitianMatrix::from(c)).values[n - 1];
    if (r.status != SolveStatus::kOptimal ||
        std::abs(r.objective - oracle) > 1e-6 * (1.0 + std::abs(oracle)))
      corpus_ok = false;
  }

  // Finite-difference validation of the assembled subproblem callbacks on a
  // production instance.
  ScenarioConfig cfg = default_config();
  ChannelSet cs = scenario_channels(cfg, 0);
  RandomStream prng(cfg.master_seed, 0, link::kInitPhases);
  RVec th(cfg.sys.num_ris_elements);
  for (int m = 0; m < th.size(); ++m) th[m] = prng.uniform_in(0.0, kTwoPi);
  PhaseVector pv = PhaseVector::from_theta(th);
  Allocation alloc;
  alloc.local_bits = RVec::Constant(cfg.sys.num_users, 0.7 * cfg.sys.task_bits[0]);
  alloc.tx_power_w = RVec::Constant(cfg.sys.num_users, 0.03);
  auto eff = effective_channels(cs, pv);
  MudMatrix mud = detail::mrc_detection(cfg.sys, eff);
  PerfectState st = detail::make_state(cfg.sys, cs, alloc, mud, pv);
  Coefficients coef = coefficients(cfg.sys, st.eff, st.mud);

  bool fd_ok = true;
  auto ab = detail::build_allocation_program(cfg.sys, st, coef, alloc);
  RVec x_alloc = RVec::Constant(ab.prog.total_vars, 0.4);
  if (!fd_check_expr(ab.prog.objective, x_alloc)) fd_ok = false;
  for (const auto& g : ab.prog.inequalities)
    if (!fd_check_expr(g, x_alloc)) fd_ok = false;

  CVec ebar(cfg.sys.num_ris_elements + 1);
  ebar.head(cfg.sys.num_ris_elements) = pv.e;
  ebar[cfg.sys.num_ris_elements] = 1.0;
  auto pb = detail::build_phase_program(cfg.sys, st, cs, CMat(ebar * ebar.adjoint()));
  RVec x_phase = RVec::Zero(pb.prog.total_vars);
  psd::from_matrix(pb.block,
                   CMat(0.9 * ebar * ebar.adjoint() +
                        0.1 * CMat::Identity(ebar.size(), ebar.size())),
                   x_phase);
  if (!fd_check_expr(pb.prog.objective, x_phase)) fd_ok = false;
  for (const auto& g : pb.prog.inequalities)
    if (!fd_check_expr(g, x_phase)) fd_ok = false;

  char buf[120];
  std::snprintf(buf, sizeof(buf), "20-instance SDP corpus <= 1e-6 rel err: %d; "
                                  "callback FD checks: %d",
                corpus_ok ? 1 : 0, fd_ok ? 1 : 0);
  report(7, "solver correctness", corpus_ok && fd_ok, buf);
}

void criterion8_small_instance_oracles() {
  // (a) K=1 allocation against a refined 400x400 grid, Eve nulled.
  SystemConfig cfg;
  cfg.num_users = 1;
  cfg.fill_user_defaults(3e5, 1000.0, 1e-28, 0.5);
  Geometry geo;
  RandomStream rng(17, 0, link::kGeometry);
  auto pos = sample_geometry(cfg, geo, rng);
  ChannelSet cs = sample_channels(cfg, geo, pos, 17, 0);
  for (auto& h : cs.h_eve) h.setZero();
  for (auto& g : cs.eve_cascade) g.setZero();
  cs.ris_eve.setZero();
  RandomStream prng(17, 0, link::kInitPhases);
  RVec th(cfg.num_ris_elements);
  for (int m = 0; m < th.size(); ++m) th[m] = prng.uniform_in(0.0, kTwoPi);
  PhaseVector pv = PhaseVector::from_theta(th);
  Allocation all_local;
  all_local.local_bits = RVec::Constant(1, cfg.task_bits[0]);
  all_local.tx_power_w = RVec::Zero(1);
  auto eff = effective_channels(cs, pv);
  MudMatrix mud = detail::mrc_detection(cfg, eff);
  PerfectState st = detail::make_state(cfg, cs, all_local, mud, pv);
  Coefficients coef = coefficients(cfg, st.eff, st.mud);
  AllocationResult ar = solve_allocation(cfg, st, coef);
  double e_solver = energies(cfg, ar.alloc).total_j;

  double gain = coef.det_gain(0, 0) / cfg.noise_ap_w;
  double bt = cfg.bandwidth_hz * cfg.duration_s;
  auto energy_at = [&](double l, double p) {
    double c = cfg.cycles_per_bit[0];
    return cfg.cap_coeff[0] * c * c * c * l * l * l /
               (cfg.duration_s * cfg.duration_s) +
           p * cfg.duration_s;
  };
  auto grid_min = [&](double l_lo, double l_hi, double p_lo, double p_hi) {
    const int n = 400;
    double best = std::numeric_limits<double>::infinity(), bl = l_lo, bp = p_lo;
    for (int i = 0; i <= n; ++i) {
      double l = l_lo + (l_hi - l_lo) * i / n;
      double need = (cfg.task_bits[0] - l) / bt;
      for (int j = 0; j <= n; ++j) {
        double p = p_lo + (p_hi - p_lo) * j / n;
        if (log2_1p(p * gain) + 1e-12 < need) continue;
        double e = energy_at(l, p);
        if (e < best) best = e, bl = l, bp = p;
      }
    }
    return std::tuple{best, bl, bp};
  };
  auto [coarse, cl, cp] = grid_min(0, cfg.task_bits[0], 0, cfg.power_budget_w[0]);
  double dl = cfg.task_bits[0] / 400.0, dp = cfg.power_budget_w[0] / 400.0;
  auto [grid_best, bl, bp] =
      grid_min(std::max(0.0, cl - 2 * dl), std::min(cfg.task_bits[0], cl + 2 * dl),
               std::max(0.0, cp - 2 * dp), std::min(cfg.power_budget_w[0], cp + 2 * dp));
  (void)bl;
  (void)bp;
  (void)coarse;
  bool alloc_ok = ar.accepted && std::abs(e_solver - grid_best) <= 0.01 * grid_best;

  // (b) K=1 detection overlap with MRC.
  SystemConfig cfg1;
  cfg1.num_users = 1;
  cfg1.fill_user_defaults();
  ChannelSet cs1;
  {
    RandomStream r2(29, 0, link::kGeometry);
    auto pos1 = sample_geometry(cfg1, geo, r2);
    cs1 = sample_channels(cfg1, geo, pos1, 29, 0);
  }
  PhaseVector pv1;
  {
    RandomStream r3(29, 0, link::kInitPhases);
    RVec t1(cfg1.num_ris_elements);
    for (int m = 0; m < t1.size(); ++m) t1[m] = r3.uniform_in(0.0, kTwoPi);
    pv1 = PhaseVector::from_theta(t1);
  }
  Allocation a1;
  a1.local_bits = RVec::Constant(1, 0.5 * cfg1.task_bits[0]);
  a1.tx_power_w = RVec::Constant(1, 0.05);
  auto eff1 = effective_channels(cs1, pv1);
  MudMatrix bad;
  bad.w = CMat::Zero(cfg1.num_ap_antennas, 1);
  bad.w(0, 0) = 1.0;
  PerfectState st1 = detail::make_state(cfg1, cs1, a1, bad, pv1);
  Coefficients coef1 = coefficients(cfg1, st1.eff, st1.mud);
  RandomStream rr(29, 1, 3);
  DetectionResult dr = solve_detection(cfg1, st1, coef1, rr);
  double overlap = std::abs(dr.mud.col(0).dot(eff1.to_ap[0].normalized()));
  bool det_ok = overlap >= 1.0 - 1e-6;

  // (c) M=2 phase subproblem within 5% of the 64x64 exhaustive grid.
  SystemConfig cfg2;
  cfg2.num_users = 2;
  cfg2.num_ris_elements = 2;
  cfg2.num_ap_antennas = 2;
  cfg2.fill_user_defaults();
  ChannelSet cs2;
  {
    RandomStream r4(47, 0, link::kGeometry);
    auto pos2 = sample_geometry(cfg2, geo, r4);
    cs2 = sample_channels(cfg2, geo, pos2, 47, 0);
  }
  for (auto& h : cs2.h_eve) h *= 0.1;
  for (auto& g : cs2.eve_cascade) g *= 0.1;
  cs2.ris_eve *= 0.1;
  PhaseVector pv2 = PhaseVector::from_theta(RVec::Zero(2));
  Allocation a2;
  a2.local_bits = RVec::Constant(2, cfg2.task_bits[0]);
  a2.tx_power_w.resize(2);
  a2.tx_power_w << 0.05, 0.04;
  auto eff2 = effective_channels(cs2, pv2);
  MudMatrix mud2 = detail::mrc_detection(cfg2, eff2);
  PerfectState st2 = detail::make_state(cfg2, cs2, a2, mud2, pv2);
  RandomStream rr2(47, 1, 7);
  PhaseResult phr = solve_phases(cfg2, st2, cs2, rr2);
  auto residual_sum = [&](const PhaseVector& p) {
    auto ef = effective_channels(cs2, p);
    SicOrder ord = sic_order(ef.to_ap);
    RateReport rep = model_rates(cfg2, ef, st2.mud, a2.tx_power_w, ord);
    return (rep.secrecy_rate - required_rate(cfg2, a2.local_bits)).sum();
  };
  double got = residual_sum(phr.phases);
  double grid_opt = -1e30;
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) {
      RVec t2(2);
      t2 << kTwoPi * i / 64, kTwoPi * j / 64;
      grid_opt = std::max(grid_opt, residual_sum(PhaseVector::from_theta(t2)));
    }
  bool phase_ok = phr.accepted && got >= grid_opt - 0.05 * std::abs(grid_opt);

  // (d) Lemma-1 numeric identity on a dense multiplier grid.
  bool lemma_ok = true;
  RandomStream lr(59, 0, 11);
  for (int trial = 0; trial < 10; ++trial) {
    double x = lr.uniform_in(1e-3, 10.0);
    double best = -1e30;
    const int n = 8000;
    for (int i = 0; i <= n; ++i) {
      double mu = (0.5 / x) * std::pow(4.0, static_cast<double>(i) / n);
      best = std::max(best, -mu * x + std::log(mu) + 1.0);
    }
    if (std::abs(best + std::log(x)) > 1e-6) lemma_ok = false;
  }

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "grid alloc err %.3f%%; MRC overlap %.8f; phase vs grid %.4f/%.4f; "
                "Lemma-1 ok=%d",
                100.0 * std::abs(e_solver - grid_best) / grid_best, overlap, got,
                grid_opt, lemma_ok ? 1 : 0);
  report(8, "small-instance oracles", alloc_ok && det_ok && phase_ok && lemma_ok, buf);
}

std::string read_and_mask_csv(const std::string& path) {
  // Strips the wall-clock column (index 11): timing is inherently
  // nondeterministic; every numerical field must be bit-identical.
  std::ifstream in(path);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string tok;
    int idx = 0;
    while (std::getline(ss, tok, ',')) {
      if (idx != 11) out << tok;
      out << ',';
      ++idx;
    }
    out << '\n';
  }
  return out.str();
}

void criterion9_determinism(const std::string& cli_path) {
  if (cli_path.empty()) {
    report(9, "determinism", false, "CLI path not supplied");
    return;
  }
  const std::string cfg_path = "/tmp/rismec_acc_cfg.json";
  std::ofstream(cfg_path)
      << R"({"users": 2, "ris_elements": 3, "ap_antennas": 3, "eve_antennas": 2,)"
      << R"( "task_bits": 1e5, "randomization_count": 30})";
  auto run_cli = [&](const std::string& out, int threads) {
    std::string cmd = cli_path + " sweep --config " + cfg_path +
                      " --axis T --values 0.1,0.2 --seeds 2 --threads " +
                      std::to_string(threads) + " --out " + out +
                      " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  bool ok = run_cli("/tmp/rismec_acc_a.csv", 1) == 0 &&
            run_cli("/tmp/rismec_acc_b.csv", 1) == 0 &&
            run_cli("/tmp/rismec_acc_c.csv", 8) == 0;
  std::string a = read_and_mask_csv("/tmp/rismec_acc_a.csv");
  std::string b = read_and_mask_csv("/tmp/rismec_acc_b.csv");
  std::string c = read_and_mask_csv("/tmp/rismec_acc_c.csv");
  bool identical = ok && !a.empty() && a == b && a == c;
  report(9, "determinism across processes and thread counts", identical,
         ok ? (identical ? "records bit-identical (timing column masked)"
                         : "records differ")
            : "CLI invocation failed");
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli_path;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--cli") cli_path = argv[i + 1];

  std::printf("acceptance suite: %s\n", "RIS-assisted secure NOMA-MEC simulator");
  criterion1_convergence();
  criterion2_ris_benefit();
  criterion3_monotone_trends();
  criterion4_ris_placement();
  criterion5_robust_gap();
  criterion6_robust_certification();
  criterion7_solver_corpus();
  criterion8_small_instance_oracles();
  criterion9_determinism(cli_path);

  std::printf("%d of 9 criteria passed\n", 9 - g_failures);
  return g_failures;
}
