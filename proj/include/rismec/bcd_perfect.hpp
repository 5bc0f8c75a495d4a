// SPDX-License-Identifier: Apache-2.0
//
// rismec — RIS-assisted secure NOMA-MEC energy minimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Three-block coordinate descent for the perfect-CSI energy minimization:
// (l, p) allocation via one SCA linearization per sweep, per-user detection
// SDPs in max-margin form with Gaussian randomization, and the lifted
// reflection-matrix subproblem with slack-residual maximization.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>

#include "rismec/cone.hpp"
#include "rismec/metrics.hpp"
#include "rismec/sdr.hpp"

namespace rismec {

struct BcdOptions {
  std::uint64_t master_seed = 12345;
  std::uint64_t realization = 0;
  bool optimize_phases = true;                // false for the fixed-phase baselines
  std::optional<PhaseVector> initial_phases;  // default: uniform random
};

struct IterationRecord {
  double energy_j = 0.0;
  SolveStatus alloc_status = SolveStatus::kOptimal;
  bool alloc_accepted = false;
  SolveStatus detect_status = SolveStatus::kOptimal;
  bool detect_accepted = false;
  SolveStatus phase_status = SolveStatus::kOptimal;
  bool phase_accepted = false;
  double min_margin = 0.0;
  double penalty_slack = 0.0;  // robust runs: sum(b) + sum(c)
  double wall_ms = 0.0;
};

struct BcdTrace {
  std::vector<IterationRecord> iterations;
  bool converged = false;
  int iteration_count = 0;
};

/// Working state of one BCD run: current blocks plus the derived
/// coefficients of the active SIC order.
struct PerfectState {
  Allocation alloc;
  MudMatrix mud;
  PhaseVector phases;
  SicOrder order;
  EffectiveChannels eff;
  RMat det_gain;          // |w_k^H h_i|^2, row k = detector, col i = channel
  RVec noise_ratio;       // sigma_k = noise / own detector gain  [W]
  RVec eve_snr_per_watt;  // ||g_k||^2 / noise_e  [1/W]
  double energy_j = 0.0;
};

struct Coefficients {
  RVec noise_ratio;       // sigma_k [W]
  RVec eve_noise_ratio;   // eta_k [W]; +inf when the Eve channel is nulled
  RVec eve_snr_per_watt;  // 1/eta_k
  RMat rel_interference;  // delta[k][i] = |w_k^H h_i|^2 / |w_k^H h_k|^2
  RMat det_gain;          // |w_k^H h_i|^2
};

/// Relative-interference and noise coefficients for the current blocks.
inline Coefficients coefficients(const SystemConfig& cfg, const EffectiveChannels& eff,
                                 const MudMatrix& mud) {
  const int k_count = cfg.num_users;
  Coefficients c;
  c.det_gain.resize(k_count, k_count);
  c.noise_ratio.resize(k_count);
  c.eve_noise_ratio.resize(k_count);
  c.eve_snr_per_watt.resize(k_count);
  c.rel_interference.resize(k_count, k_count);
  for (int k = 0; k < k_count; ++k) {
    const CVec w = mud.col(k);
    for (int i = 0; i < k_count; ++i) c.det_gain(k, i) = std::norm(w.dot(eff.to_ap[i]));
    if (c.det_gain(k, k) <= 0.0)
      throw std::domain_error("coefficients: degenerate detection vector");
    c.noise_ratio[k] = cfg.noise_ap_w / c.det_gain(k, k);
    double eve_gain = eff.to_eve[k].squaredNorm();
    c.eve_snr_per_watt[k] = eve_gain / cfg.noise_eve_w;
    c.eve_noise_ratio[k] =
        eve_gain > 0.0 ? cfg.noise_eve_w / eve_gain : std::numeric_limits<double>::infinity();
    for (int i = 0; i < k_count; ++i)
      c.rel_interference(k, i) = c.det_gain(k, i) / c.det_gain(k, k);
  }
  return c;
}

namespace detail {

struct AllocationBuild {
  ConeProgram prog;
  std::vector<int> users;  // unclamped users in variable order
  RVec l_pinned;           // full-K values for clamped users
  RVec p_pinned;
  double energy_scale = 1.0;
  // x layout: l_tilde for each listed user, then p_tilde.
  int l_index(int pos) const { return pos; }
  int p_index(int pos) const { return static_cast<int>(users.size()) + pos; }
};

/// Assembles the SCA-linearized allocation subproblem around the base point
/// given by `state.alloc`. Users whose Eve channel dominates the detector
/// gain can never offload securely and are pinned to all-local computing.
inline AllocationBuild build_allocation_program(const SystemConfig& cfg,
                                                const PerfectState& state,
                                                const Coefficients& coef,
                                                const Allocation& base) {
  const int k_count = cfg.num_users;
  const double bt = cfg.bandwidth_hz * cfg.duration_s;
  const double ln2 = std::numbers::ln2;

  AllocationBuild b;
  b.l_pinned = RVec::Zero(k_count);
  b.p_pinned = RVec::Zero(k_count);

  std::vector<bool> clamped(k_count, false);
  for (int k = 0; k < k_count; ++k) {
    bool blocked = coef.eve_snr_per_watt[k] * coef.noise_ratio[k] >= 1.0 - 1e-12;
    // Users at the all-local corner whose secrecy slope is nonpositive at
    // the incumbent interference cannot start offloading in this solve;
    // pin them so their vacuous constraint does not empty the surrogate.
    bool corner_blocked = false;
    if (!blocked && base.local_bits[k] >= cfg.task_bits[k] * (1.0 - 1e-9) &&
        base.tx_power_w[k] <= 1e-12) {
      int rank = state.order.rank_of(k);
      double interference = 0.0;
      for (int r2 = rank + 1; r2 < k_count; ++r2)
        interference += coef.det_gain(k, state.order.perm[r2]) *
                        base.tx_power_w[state.order.perm[r2]] / cfg.noise_ap_w;
      double slope = coef.det_gain(k, k) / cfg.noise_ap_w / (1.0 + interference);
      corner_blocked = slope <= coef.eve_snr_per_watt[k] * (1.0 + 1e-9);
    }
    // A user still holding power whose unclamped rate went negative keeps
    // its all-local fallback for this solve as well.
    bool stuck_local = false;
    if (!blocked && !corner_blocked &&
        base.local_bits[k] >= cfg.task_bits[k] * (1.0 - 1e-9) &&
        base.tx_power_w[k] > 1e-12) {
      int rank = state.order.rank_of(k);
      double interference = 0.0;
      for (int r2 = rank + 1; r2 < k_count; ++r2)
        interference += coef.det_gain(k, state.order.perm[r2]) *
                        base.tx_power_w[state.order.perm[r2]];
      double gamma = coef.det_gain(k, k) * base.tx_power_w[k] /
                     (interference + cfg.noise_ap_w);
      double gamma_e = base.tx_power_w[k] * coef.eve_snr_per_watt[k];
      stuck_local = log2_1p(gamma) - log2_1p(gamma_e) < -cfg.feasibility_tol;
    }
    if (cfg.task_bits[k] <= 0.0) {
      clamped[k] = true;  // empty task: l = 0, p = 0
    } else if (blocked || corner_blocked || stuck_local) {
      clamped[k] = true;  // secrecy-blocked: all-local fallback
      b.l_pinned[k] = cfg.task_bits[k];
    } else {
      b.users.push_back(k);
    }
  }

  double e_scale = 0.0;
  for (int k = 0; k < k_count; ++k) {
    double c = cfg.cycles_per_bit[k], l = cfg.task_bits[k];
    e_scale += cfg.cap_coeff[k] * c * c * c * l * l * l /
               (cfg.duration_s * cfg.duration_s);
  }
  b.energy_scale = std::max(e_scale, 1e-9);

  const int nu = static_cast<int>(b.users.size());
  b.prog.add_vars(2 * nu);
  b.prog.objective = SmoothExpr::zero(2 * nu);

  double pinned_energy = 0.0;
  for (int k = 0; k < k_count; ++k)
    if (clamped[k]) {
      double c = cfg.cycles_per_bit[k];
      pinned_energy += cfg.cap_coeff[k] * c * c * c * std::pow(b.l_pinned[k], 3) /
                       (cfg.duration_s * cfg.duration_s);
    }
  b.prog.objective.constant = pinned_energy / b.energy_scale;

  for (int pos = 0; pos < nu; ++pos) {
    int k = b.users[pos];
    double c = cfg.cycles_per_bit[k], l_max = cfg.task_bits[k];
    double local_coeff = cfg.cap_coeff[k] * c * c * c * l_max * l_max * l_max /
                         (cfg.duration_s * cfg.duration_s);
    b.prog.objective.add_cubic(b.l_index(pos), local_coeff / b.energy_scale);
    b.prog.objective.add_linear(b.p_index(pos),
                                cfg.duration_s * cfg.power_budget_w[k] / b.energy_scale);

    // Box bounds as barriered inequalities.
    for (int which : {b.l_index(pos), b.p_index(pos)}) {
      SmoothExpr lo = SmoothExpr::zero(2 * nu);
      lo.add_linear(which, 1.0);
      b.prog.inequalities.push_back(std::move(lo));
      SmoothExpr hi = SmoothExpr::zero(2 * nu);
      hi.add_linear(which, -1.0);
      hi.constant = 1.0;
      b.prog.inequalities.push_back(std::move(hi));
    }
  }

  // Secrecy-rate constraints with the concave log surrogate.
  for (int pos = 0; pos < nu; ++pos) {
    int k = b.users[pos];
    int rank = state.order.rank_of(k);
    double sigma_k = coef.noise_ratio[k];
    double inv_eta = coef.eve_snr_per_watt[k];
    double p0_k = base.tx_power_w[k];

    double gamma0 = 0.0;  // interference at the base point
    for (int r2 = rank + 1; r2 < k_count; ++r2) {
      int i = state.order.perm[r2];
      gamma0 += coef.rel_interference(k, i) * base.tx_power_w[i];
    }

    SmoothExpr g = SmoothExpr::zero(2 * nu);
    RVec a = RVec::Zero(2 * nu);
    a[b.p_index(pos)] = cfg.power_budget_w[k];
    for (int r2 = rank + 1; r2 < k_count; ++r2) {
      int i = state.order.perm[r2];
      auto it = std::find(b.users.begin(), b.users.end(), i);
      if (it == b.users.end()) continue;  // clamped interferers transmit nothing
      int ipos = static_cast<int>(it - b.users.begin());
      a[b.p_index(ipos)] = coef.rel_interference(k, i) * cfg.power_budget_w[i];
    }
    g.add_log(1.0 / ln2, a, sigma_k);

    double denom_own = 1.0 + p0_k * inv_eta;
    g.add_linear(b.p_index(pos),
                 -(1.0 / ln2) * cfg.power_budget_w[k] * inv_eta / denom_own);
    g.constant += (1.0 / ln2) * p0_k * inv_eta / denom_own;

    double denom_int = sigma_k + gamma0;
    for (int r2 = rank + 1; r2 < k_count; ++r2) {
      int i = state.order.perm[r2];
      auto it = std::find(b.users.begin(), b.users.end(), i);
      if (it == b.users.end()) continue;
      int ipos = static_cast<int>(it - b.users.begin());
      g.add_linear(b.p_index(ipos),
                   -(1.0 / ln2) * coef.rel_interference(k, i) * cfg.power_budget_w[i] /
                       denom_int);
    }
    g.constant += (1.0 / ln2) * gamma0 / denom_int;

    g.constant -= (1.0 / ln2) * (std::log(denom_int) + std::log1p(p0_k * inv_eta));

    // target rate r_k = (L_k / BT) (1 - l_tilde)
    g.add_linear(b.l_index(pos), cfg.task_bits[k] / bt);
    g.constant -= cfg.task_bits[k] / bt;

    b.prog.inequalities.push_back(std::move(g));
  }
  return b;
}

/// True (unlinearized) secrecy-rate margin used for post-solve audits.
inline double true_rate_margin(const SystemConfig& cfg, const PerfectState& state,
                               const Coefficients& coef, const RVec& l, const RVec& p,
                               int k) {
  int rank = state.order.rank_of(k);
  double interference = 0.0;
  for (int r2 = rank + 1; r2 < cfg.num_users; ++r2) {
    int i = state.order.perm[r2];
    interference += coef.det_gain(k, i) * p[i];
  }
  double gamma = coef.det_gain(k, k) * p[k] / (interference + cfg.noise_ap_w);
  double gamma_e = p[k] * coef.eve_snr_per_watt[k];
  double rs = std::max(0.0, log2_1p(gamma) - log2_1p(gamma_e));
  double r = (cfg.task_bits[k] - l[k]) / (cfg.bandwidth_hz * cfg.duration_s);
  return rs - r;
}

struct DetectionBuild {
  ConeProgram prog;
  PsdBlock block;
  CMat margin_matrix;     // noise-normalized
  double margin_offset = 0.0;
};

/// Max-margin form of the per-user detection SDP: margin(W) =
/// p_k Tr(W Hk) - tau_k (sum_{i after k} p_i Tr(W Hi) + noise), all in
/// noise units.
inline DetectionBuild build_detection_program(const SystemConfig& cfg,
                                              const PerfectState& state,
                                              const Coefficients& coef, int k) {
  const int n = cfg.num_ap_antennas;
  const int k_count = cfg.num_users;
  DetectionBuild d;
  int blk = d.prog.add_psd_block(n);
  d.block = d.prog.psd_blocks[blk];
  d.prog.objective = SmoothExpr::zero(d.prog.total_vars);

  double r_k = (cfg.task_bits[k] - state.alloc.local_bits[k]) /
               (cfg.bandwidth_hz * cfg.duration_s);
  double p_k = state.alloc.tx_power_w[k];
  double tau = std::pow(2.0, r_k) * (1.0 + p_k * coef.eve_snr_per_watt[k]) - 1.0;

  CMat a = p_k * (state.eff.to_ap[k] * state.eff.to_ap[k].adjoint()) / cfg.noise_ap_w;
  int rank = state.order.rank_of(k);
  for (int r2 = rank + 1; r2 < k_count; ++r2) {
    int i = state.order.perm[r2];
    a -= tau * state.alloc.tx_power_w[i] *
         (state.eff.to_ap[i] * state.eff.to_ap[i].adjoint()) / cfg.noise_ap_w;
  }
  d.margin_matrix = a;
  d.margin_offset = -tau;

  SmoothExpr margin = SmoothExpr::zero(d.prog.total_vars);
  margin.add_linear_vec(psd::trace_coeffs(d.block, d.prog.total_vars, a));
  margin.constant = d.margin_offset;
  d.prog.inequalities.push_back(std::move(margin));

  d.prog.add_equality(
      psd::trace_coeffs(d.block, d.prog.total_vars, CMat::Identity(n, n)), 1.0);
  return d;
}

struct PhaseBuild {
  ConeProgram prog;
  PsdBlock block;
  std::vector<int> active;  // users with a live rate constraint
};

/// Lifted reflection-matrix subproblem: maximize the summed rate residuals
/// subject to nonnegative residuals, unit diagonal, and E PSD. The Lemma-1
/// multipliers are evaluated at the lifted matrix `e0` (the current phases
/// on the first pass, the previous SDR solution on later passes).
inline PhaseBuild build_phase_program(const SystemConfig& cfg, const PerfectState& state,
                                      const ChannelSet& cs, const CMat& e0) {
  const int m = cfg.num_ris_elements;
  const int dim = m + 1;
  const int k_count = cfg.num_users;
  const double ln2 = std::numbers::ln2;

  PhaseBuild pb;
  int blk = pb.prog.add_psd_block(dim);
  pb.block = pb.prog.psd_blocks[blk];
  pb.prog.objective = SmoothExpr::zero(pb.prog.total_vars);

  for (int rank = 0; rank < k_count; ++rank) {
    int k = state.order.perm[rank];
    if (state.alloc.tx_power_w[k] <= 0.0) continue;  // no offloading, no constraint
    pb.active.push_back(k);

    // Quadratic forms of |w_k^H h_i|^2 in the lifted variable, noise units.
    auto lifted_gain = [&](int i) {
      Eigen::RowVectorXcd v =
          state.mud.col(k).adjoint() * cs.ris_ap * cs.h_ris[i].asDiagonal();
      cxd q = state.mud.col(k).dot(cs.h_ap[i]);
      CMat vm(dim, dim);
      vm.setZero();
      vm.topLeftCorner(m, m) = v.adjoint() * v;
      vm.topRightCorner(m, 1) = v.adjoint() * q;
      vm.bottomLeftCorner(1, m) = (v.adjoint() * q).adjoint();
      return std::make_pair(CMat(vm / cfg.noise_ap_w), std::norm(q) / cfg.noise_ap_w);
    };

    CMat num_mat = CMat::Zero(dim, dim);
    double num_const = 1.0;
    CMat den_mat = CMat::Zero(dim, dim);
    double den_const = 1.0;
    for (int r2 = rank; r2 < k_count; ++r2) {
      int i = state.order.perm[r2];
      double p_i = state.alloc.tx_power_w[i];
      if (p_i <= 0.0) continue;
      auto [vm, qc] = lifted_gain(i);
      num_mat += p_i * vm;
      num_const += p_i * qc;
      if (r2 > rank) {
        den_mat += p_i * vm;
        den_const += p_i * qc;
      }
    }

    // Eve quadratic form: ||g_k||^2 = ebar^H S ebar, noise units, times p_k.
    CMat s_mat(dim, dim);
    s_mat.topLeftCorner(m, m) = cs.eve_cascade[k].adjoint() * cs.eve_cascade[k];
    s_mat.topRightCorner(m, 1) = cs.eve_cascade[k].adjoint() * cs.h_eve[k];
    s_mat.bottomLeftCorner(1, m) = s_mat.topRightCorner(m, 1).adjoint();
    s_mat(m, m) = cs.h_eve[k].squaredNorm();
    s_mat *= state.alloc.tx_power_w[k] / cfg.noise_eve_w;

    double den0 = den_const + (den_mat * e0).trace().real();
    double eve0 = 1.0 + (s_mat * e0).trace().real();
    double mu_den = 1.0 / den0;
    double mu_eve = 1.0 / eve0;

    double r_k = (cfg.task_bits[k] - state.alloc.local_bits[k]) /
                 (cfg.bandwidth_hz * cfg.duration_s);

    SmoothExpr psi = SmoothExpr::zero(pb.prog.total_vars);
    psi.add_log(1.0 / ln2, psd::trace_coeffs(pb.block, pb.prog.total_vars, num_mat),
                num_const);
    psi.add_linear_vec(-(mu_den / ln2) *
                       psd::trace_coeffs(pb.block, pb.prog.total_vars, den_mat));
    psi.add_linear_vec(-(mu_eve / ln2) *
                       psd::trace_coeffs(pb.block, pb.prog.total_vars, s_mat));
    psi.constant += (1.0 / ln2) * (-mu_den * den_const + std::log(mu_den) + 1.0);
    psi.constant += (1.0 / ln2) * (1.0 - mu_eve + std::log(mu_eve));
    psi.constant -= r_k;

    pb.prog.objective.add_linear_vec(psi.linear * -1.0);
    for (const auto& lt : psi.logs) pb.prog.objective.add_log(-lt.weight, lt.a, lt.b);
    pb.prog.objective.constant -= psi.constant;

    // Residuals are kept nonnegative; a user whose incumbent residual is
    // already negative gets a floor at that value instead, so it cannot be
    // traded away further but stays recoverable.
    {
      RVec x0 = RVec::Zero(pb.prog.total_vars);
      psd::from_matrix(pb.block, e0, x0);
      double incumbent = psi.value(x0);
      psi.constant -= std::min(0.0, incumbent - 1e-9);
    }
    pb.prog.inequalities.push_back(std::move(psi));
  }

  for (int d = 0; d < dim; ++d) {
    RVec row = RVec::Zero(pb.prog.total_vars);
    row[pb.block.offset + d] = 1.0;
    pb.prog.add_equality(std::move(row), 1.0);
  }
  return pb;
}

}  // namespace detail

struct AllocationResult {
  Allocation alloc;
  SolveStatus status = SolveStatus::kOptimal;
  bool accepted = false;
};

/// Allocation subproblem: SCA passes are iterated to the surrogate fixed
/// point within the block (re-linearizing at each accepted point). Solver
/// failures or energy regressions keep the previous block.
inline AllocationResult solve_allocation(const SystemConfig& cfg, const PerfectState& state,
                                         const Coefficients& coef) {
  AllocationResult out;
  out.alloc = state.alloc;
  const double e_start = energies(cfg, state.alloc).total_j;

  Allocation base = state.alloc;
  double e_base = e_start;
  bool any_pass = false;

  for (int pass = 0; pass < 15; ++pass) {
    detail::AllocationBuild b = detail::build_allocation_program(cfg, state, coef, base);
    const int nu = static_cast<int>(b.users.size());
    if (nu == 0) {
      base.local_bits = b.l_pinned;
      base.tx_power_w = b.p_pinned;
      out.status = SolveStatus::kOptimal;
      any_pass = true;
      break;
    }

    RVec warm(2 * nu);
    for (int pos = 0; pos < nu; ++pos) {
      int k = b.users[pos];
      warm[b.l_index(pos)] = std::clamp(base.local_bits[k] / cfg.task_bits[k], 0.0, 1.0);
      warm[b.p_index(pos)] =
          std::clamp(base.tx_power_w[k] / cfg.power_budget_w[k], 0.0, 1.0);
    }

    SolveOptions sopts;
    sopts.tol = cfg.solver_tol;
    SolveResult r = solve_cone_program(b.prog, warm, sopts);
    out.status = r.status;
    if (r.status != SolveStatus::kOptimal) break;

    RVec l_new = b.l_pinned;
    RVec p_new = b.p_pinned;
    for (int pos = 0; pos < nu; ++pos) {
      int k = b.users[pos];
      double lt = std::clamp(r.x[b.l_index(pos)], 0.0, 1.0);
      double pt = std::clamp(r.x[b.p_index(pos)], 0.0, 1.0);
      if (lt > 1.0 - 1e-9) lt = 1.0;
      if (lt < 1e-12) lt = 0.0;
      if (pt < 1e-12) pt = 0.0;
      l_new[k] = lt * cfg.task_bits[k];
      p_new[k] = pt * cfg.power_budget_w[k];
    }

    // The linearization over-estimates the concave part, so the surrogate
    // solution must satisfy the true constraint up to the margin slack.
    bool margins_ok = true;
    for (int k : b.users)
      if (detail::true_rate_margin(cfg, state, coef, l_new, p_new, k) <
          -cfg.feasibility_tol)
        margins_ok = false;
    if (!margins_ok) break;

    Allocation cand{l_new, p_new};
    double e_new = energies(cfg, cand).total_j;
    if (e_new > e_base + 5e-7) break;

    double rel = std::abs(e_base - e_new) / std::max(e_base, 1e-12);
    base = std::move(cand);
    e_base = e_new;
    any_pass = true;
    if (rel <= 0.1 * cfg.bcd_tol) break;
  }

  if (!any_pass || e_base > e_start + 5e-7) return out;
  out.alloc = base;
  out.accepted = true;
  return out;
}

struct DetectionResult {
  MudMatrix mud;
  SolveStatus status = SolveStatus::kOptimal;
  int updated_users = 0;
};

/// Per-user detection update. The max-margin SDP has a linear objective
/// over the trace-one spectrahedron, so its exact optimum is the principal
/// projector of the margin matrix; rank-one recovery then reduces to the
/// principal eigenvector (the cone-program route is kept as a test oracle).
inline DetectionResult solve_detection(const SystemConfig& cfg, const PerfectState& state,
                                       const Coefficients& coef, RandomStream& rng) {
  DetectionResult out;
  out.mud = state.mud;
  const int k_count = cfg.num_users;

  // Max-SINR direction for a user: keeps idle detectors fresh so users
  // parked at all-local computing stay recoverable by later blocks.
  auto max_sinr_detector = [&](int k) {
    int rank = state.order.rank_of(k);
    CMat cov = cfg.noise_ap_w *
               CMat::Identity(cfg.num_ap_antennas, cfg.num_ap_antennas);
    for (int r2 = rank + 1; r2 < k_count; ++r2) {
      int j = state.order.perm[r2];
      cov += state.alloc.tx_power_w[j] *
             (state.eff.to_ap[j] * state.eff.to_ap[j].adjoint());
    }
    CVec w = cov.llt().solve(state.eff.to_ap[k]);
    return CVec(w.normalized());
  };

  for (int k = 0; k < k_count; ++k) {
    double r_k = (cfg.task_bits[k] - state.alloc.local_bits[k]) /
                 (cfg.bandwidth_hz * cfg.duration_s);
    if (r_k <= 0.0) {
      // Vacuous rate target: no constraint to enforce, but refresh the
      // detector to the SINR-optimal direction.
      CVec w = max_sinr_detector(k);
      if (std::norm(w.dot(state.eff.to_ap[k])) >
          std::norm(state.mud.col(k).dot(state.eff.to_ap[k])) * (1.0 + 1e-12)) {
        out.mud.w.col(k) = w;
        ++out.updated_users;
      }
      continue;
    }

    detail::DetectionBuild d = detail::build_detection_program(cfg, state, coef, k);
    EigResult eig = hermitian_eig(HermitianMatrix::from(d.margin_matrix, 1e-7));
    CVec principal = eig.vectors.col(0).normalized();
    CMat w_lifted = principal * principal.adjoint();

    auto quality = [&](const CVec& w) {
      double margin =
          ((w.adjoint() * d.margin_matrix * w)(0).real() + d.margin_offset);
      return CandidateQuality{margin, margin};
    };
    auto rec = randomize_vector(LiftedSolution::from(w_lifted), quality,
                                cfg.randomization_count, rng);

    // Accept only when the constraint margin does not regress, so the
    // current allocation stays feasible for the next sweep.
    double old_margin = quality(state.mud.col(k)).margin;
    if (rec.quality.margin >= old_margin - 1e-12 * (1.0 + std::abs(old_margin))) {
      out.mud.w.col(k) = rec.value;
      ++out.updated_users;
    }
  }
  return out;
}

struct PhaseResult {
  PhaseVector phases;
  SolveStatus status = SolveStatus::kOptimal;
  bool accepted = false;
  double score_gain = 0.0;  // accepted quality-score improvement
};

/// Reflection-phase update: solve the lifted SDR, recover a unit-modulus
/// vector by randomization, and keep the result only when the secrecy
/// margins under the re-sorted SIC order stay feasible and do not regress.
/// The solve/extract cycle is iterated to its fixed point inside the block
/// (rank-one extraction loses part of each lifted improvement, so a single
/// pass stalls the outer descent).
inline PhaseResult solve_phases(const SystemConfig& cfg, const PerfectState& state,
                                const ChannelSet& cs, RandomStream& rng) {
  PhaseResult out;
  out.phases = state.phases;
  if (cfg.num_ris_elements == 0) return out;

  const int dim = cfg.num_ris_elements + 1;

  // Quality at the caller's allocation/detectors under a candidate's own
  // refreshed decoding order. Feasibility uses the clamped margins (the
  // true constraint); the score sums the unclamped ones so parked users
  // are neither ignored nor traded away.
  auto theta_quality = [&](const PhaseVector& pv) {
    EffectiveChannels eff = effective_channels(cs, pv);
    SicOrder ord = sic_order(eff.to_ap);
    RateReport rep = model_rates(cfg, eff, state.mud, state.alloc.tx_power_w, ord);
    RVec target = required_rate(cfg, state.alloc.local_bits);
    double score = 0.0, feas = std::numeric_limits<double>::infinity();
    for (int k = 0; k < cfg.num_users; ++k) {
      if (state.alloc.tx_power_w[k] > 1e-12) {
        score += log2_1p(rep.sinr_ap[k]) - log2_1p(rep.snr_eve[k]) - target[k];
      } else {
        // Parked users contribute a what-if rate at a token probe power so
        // phases keep them recoverable.
        int rank = ord.rank_of(k);
        double probe = 0.01 * cfg.power_budget_w[k];
        double interference = 0.0;
        for (int r2 = rank + 1; r2 < cfg.num_users; ++r2) {
          int j = ord.perm[r2];
          interference += state.alloc.tx_power_w[j] *
                          std::norm(state.mud.col(k).dot(eff.to_ap[j]));
        }
        double gamma = probe * std::norm(state.mud.col(k).dot(eff.to_ap[k])) /
                       (interference + cfg.noise_ap_w);
        double gamma_e = probe * eff.to_eve[k].squaredNorm() / cfg.noise_eve_w;
        score += log2_1p(gamma) - log2_1p(gamma_e);
      }
      feas = std::min(feas, rep.secrecy_rate[k] - target[k]);
    }
    return CandidateQuality{score, feas};
  };
  auto quality = [&](const CVec& cand) {
    return theta_quality(PhaseVector::from_theta(extract_phases(cand)));
  };
  auto better = [&](const CandidateQuality& a, const CandidateQuality& b) {
    bool fa = a.margin >= -cfg.feasibility_tol;
    bool fb = b.margin >= -cfg.feasibility_tol;
    if (fa != fb) return fa;
    return a.score > b.score;
  };

  // Cyclic per-element refinement of the extracted phases: a deterministic
  // 1-D sweep on the same quality that randomization optimizes.
  auto polish = [&](PhaseVector pv) {
    CandidateQuality q = theta_quality(pv);
    const int grid = 32;
    for (int sweep = 0; sweep < 2; ++sweep) {
      bool moved = false;
      for (int m = 0; m < cfg.num_ris_elements; ++m) {
        RVec th = pv.theta;
        double best_t = th[m];
        CandidateQuality best_q = q;
        for (int j = 0; j < grid; ++j) {
          th[m] = kTwoPi * j / grid;
          CandidateQuality cand = theta_quality(PhaseVector::from_theta(th));
          if (better(cand, best_q)) {
            best_q = cand;
            best_t = th[m];
          }
        }
        if (best_t != pv.theta[m]) {
          th[m] = best_t;
          pv = PhaseVector::from_theta(th);
          q = best_q;
          moved = true;
        }
      }
      if (!moved) break;
    }
    return std::make_pair(pv, q);
  };

  PerfectState cur = state;
  CandidateQuality cur_q = theta_quality(cur.phases);
  const double initial_score = cur_q.score;
  bool cur_feasible = cur_q.margin >= -cfg.feasibility_tol;

  // Fully parked state: no lifted subproblem exists, but the probe-power
  // quality still guides a pure phase polish toward recoverable setups.
  if (state.alloc.tx_power_w.maxCoeff() <= 1e-12) {
    auto [cand, cand_q] = polish(cur.phases);
    if (better(cand_q, cur_q)) {
      out.phases = cand;
      out.accepted = true;
      out.score_gain = cand_q.score - initial_score;
    }
    return out;
  }

  bool have_prev_opt = false;
  CMat prev_opt;
  for (int round = 0; round < 4; ++round) {
    CVec ebar(dim);
    ebar.head(cfg.num_ris_elements) = cur.phases.e;
    ebar[dim - 1] = 1.0;

    // Two multiplier refreshes per round: Lemma-1 surrogates evaluated at
    // the previous lifted solution. Later solves warm-start from the
    // previous interior optimum instead of re-entering phase I.
    CMat e_base = ebar * ebar.adjoint();
    CMat e_opt;
    bool solved = false;
    for (int pass = 0; pass < 2; ++pass) {
      detail::PhaseBuild pb = detail::build_phase_program(cfg, cur, cs, e_base);
      if (pb.active.empty()) return out;
      RVec warm = RVec::Zero(pb.prog.total_vars);
      if (have_prev_opt) {
        psd::from_matrix(pb.block, prev_opt, warm);
      } else {
        CMat e_warm = 0.95 * e_base + 0.05 * CMat::Identity(dim, dim);
        for (int i = 0; i < dim; ++i) e_warm(i, i) = 1.0;
        psd::from_matrix(pb.block, e_warm, warm);
      }

      SolveOptions sopts;
      sopts.tol = cfg.solver_tol;
      SolveResult r = solve_cone_program(pb.prog, warm, sopts);
      out.status = r.status;
      if (r.status != SolveStatus::kOptimal) break;
      e_opt = psd::to_matrix(pb.block, r.x);
      solved = true;
      have_prev_opt = true;
      prev_opt = e_opt;
      e_base = e_opt;
    }
    if (!solved) break;

    auto rec = randomize_unit_modulus(LiftedSolution::from(e_opt), quality,
                                      cfg.randomization_count, rng);
    auto [cand, cand_q] =
        polish(PhaseVector::from_theta(extract_phases(rec.value)));
    bool cand_feasible = cand_q.margin >= -cfg.feasibility_tol;
    bool improves = cand_q.score > cur_q.score + 1e-5 * (1.0 + std::abs(cur_q.score));
    bool take = cand_feasible && (!cur_feasible || cand_q.score >= cur_q.score);
    if (!take) break;

    cur.phases = cand;
    cur.eff = effective_channels(cs, cur.phases);
    cur.order = sic_order(cur.eff.to_ap);
    cur_q = cand_q;
    cur_feasible = cand_feasible;
    out.phases = cur.phases;
    out.accepted = true;
    out.score_gain = cur_q.score - initial_score;
    if (!improves) break;
  }
  return out;
}

namespace detail {

inline PerfectState make_state(const SystemConfig& cfg, const ChannelSet& cs,
                               const Allocation& alloc, const MudMatrix& mud,
                               const PhaseVector& phases) {
  PerfectState st;
  st.alloc = alloc;
  st.mud = mud;
  st.phases = phases;
  st.eff = effective_channels(cs, phases);
  st.order = sic_order(st.eff.to_ap);
  st.energy_j = energies(cfg, alloc).total_j;
  return st;
}

inline MudMatrix mrc_detection(const SystemConfig& cfg, const EffectiveChannels& eff) {
  MudMatrix mud;
  mud.w.resize(cfg.num_ap_antennas, cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k) mud.w.col(k) = eff.to_ap[k].normalized();
  return mud;
}

}  // namespace detail

/// Algorithm: block coordinate descent over (l, p), W, and Theta with the
/// SIC order refreshed after every accepted phase update.
inline std::pair<Solution, BcdTrace> run_bcd_perfect(
    const SystemConfig& cfg, const ChannelSet& cs, const BcdOptions& opts,
    const std::optional<Solution>& init = std::nullopt) {
  cfg.validate();

  PhaseVector phases;
  if (init) {
    phases = init->phases;
  } else if (opts.initial_phases) {
    phases = *opts.initial_phases;
  } else {
    RandomStream prng(opts.master_seed, opts.realization, link::kInitPhases);
    RVec th(cfg.num_ris_elements);
    for (int m = 0; m < th.size(); ++m) th[m] = prng.uniform_in(0.0, kTwoPi);
    phases = PhaseVector::from_theta(th);
  }

  Allocation alloc;
  MudMatrix mud;
  if (init) {
    alloc = init->alloc;
    mud = init->detection;
  } else {
    alloc.local_bits.resize(cfg.num_users);
    for (int k = 0; k < cfg.num_users; ++k) alloc.local_bits[k] = cfg.task_bits[k];
    alloc.tx_power_w = RVec::Zero(cfg.num_users);
    mud = detail::mrc_detection(cfg, effective_channels(cs, phases));
  }

  PerfectState state = detail::make_state(cfg, cs, alloc, mud, phases);
  BcdTrace trace;
  double total_bits = 0.0;
  for (int k = 0; k < cfg.num_users; ++k) total_bits += cfg.task_bits[k];

  // One block sweep: allocation, detection, phases (with order refresh).
  double last_phase_gain = 0.0;
  auto sweep = [&](IterationRecord& rec, RandomStream& rng) {
    last_phase_gain = 0.0;
    Coefficients coef = coefficients(cfg, state.eff, state.mud);

    AllocationResult ar = solve_allocation(cfg, state, coef);
    rec.alloc_status = ar.status;
    rec.alloc_accepted = rec.alloc_accepted || ar.accepted;
    if (ar.accepted) state.alloc = ar.alloc;

    if (total_bits > 0.0) {
      DetectionResult dr = solve_detection(cfg, state, coef, rng);
      rec.detect_status = dr.status;
      rec.detect_accepted = rec.detect_accepted || dr.updated_users > 0;
      if (dr.updated_users > 0) {
        state.mud = dr.mud;
        coef = coefficients(cfg, state.eff, state.mud);
      }

      if (opts.optimize_phases && cfg.num_ris_elements > 0) {
        PhaseResult pr = solve_phases(cfg, state, cs, rng);
        rec.phase_status = pr.status;
        rec.phase_accepted = rec.phase_accepted || pr.accepted;
        last_phase_gain = pr.accepted ? pr.score_gain : 0.0;
        if (pr.accepted) {
          state.phases = pr.phases;
          state.eff = effective_channels(cs, state.phases);
          state.order = sic_order(state.eff.to_ap);
        }
      }
    }
    state.energy_j = energies(cfg, state.alloc).total_j;
  };

  double e_prev = state.energy_j;
  int consecutive_stalls = 0;
  for (int it = 0; it < cfg.bcd_max_iters; ++it) {
    auto t0 = std::chrono::steady_clock::now();
    IterationRecord rec;

    // Each iteration cycles the sweep until the joint pass stops paying:
    // single passes interleave the blocks exactly as the algorithm states,
    // and the cycling bounds the geometric tail of the block exchange.
    for (int cycle = 0; cycle < 6; ++cycle) {
      double e_before = state.energy_j;
      RandomStream rng(opts.master_seed, opts.realization,
                       link::kRandomization +
                           64 * static_cast<std::uint64_t>(it) +
                           8 * static_cast<std::uint64_t>(cycle));
      sweep(rec, rng);
      double gain = e_before - state.energy_j;
      bool energy_done = gain <= 0.5 * cfg.bcd_tol * std::max(state.energy_j, 1e-12);
      bool phases_done = last_phase_gain <= 1e-4;
      if (energy_done && phases_done) break;
    }

    {
      RateReport rep =
          model_rates(cfg, state.eff, state.mud, state.alloc.tx_power_w, state.order);
      RVec target = required_rate(cfg, state.alloc.local_bits);
      rec.min_margin = (rep.secrecy_rate - target).minCoeff();
    }
    rec.energy_j = state.energy_j;
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    trace.iterations.push_back(rec);
    trace.iteration_count = it + 1;

    bool all_failed = !rec.alloc_accepted && !rec.detect_accepted && !rec.phase_accepted;
    consecutive_stalls = all_failed ? consecutive_stalls + 1 : 0;
    if (consecutive_stalls >= 2) break;

    double rel = std::abs(state.energy_j - e_prev) / std::max(std::abs(e_prev), 1e-12);
    if (rel <= cfg.bcd_tol || total_bits <= 0.0) {
      trace.converged = true;
      break;
    }
    e_prev = state.energy_j;
  }

  Solution sol;
  sol.alloc = state.alloc;
  sol.detection = state.mud;
  sol.phases = state.phases;
  sol.order = state.order;
  sol.rates = model_rates(cfg, state.eff, state.mud, state.alloc.tx_power_w, state.order);
  sol.rates.target_rate = required_rate(cfg, state.alloc.local_bits);
  sol.rates.margin = sol.rates.secrecy_rate - sol.rates.target_rate;
  sol.energy = energies(cfg, state.alloc);
  return {sol, trace};
}

}  // namespace rismec
