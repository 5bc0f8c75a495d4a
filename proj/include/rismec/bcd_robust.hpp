// SPDX-License-Identifier: Apache-2.0
//
// rismec — RIS-assisted secure NOMA-MEC energy minimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Robust block coordinate descent under bounded eavesdropper CSI error:
// worst-case Eve gains are certified through sign-definiteness LMIs with
// slack multipliers, the bilinear power-gain product is linearized by SCA,
// and the unit-modulus constraint is handled by a penalty convex-concave
// relaxation whose output is renormalized and margin-guarded.

#pragma once

#include "rismec/bcd_perfect.hpp"
#include "rismec/metrics.hpp"

namespace rismec {

/// Assembles the sign-definiteness LMI certifying beta >= ||g_k||^2 over the
/// CSI error balls. Unit-agnostic: the caller supplies consistently scaled
/// t_k, beta, and radii. Order 3*N_e + 1.
///
/// The multiplier deflations act on the beta entry only (the uncertainty
/// factors are Z_1 = [1, 0, ...] and Z_2 = [e, 0]); deflating the whole
/// Schur identity block renders the LMI infeasible for radii above ~1/2
/// and roughly doubles the certified bound elsewhere.
inline CMat robust_eve_gain_lmi(const CVec& t, double beta, double mu_h, double mu_g,
                                double eps_e, double eps_g, double norm_e_sq) {
  const int ne = static_cast<int>(t.size());
  const int dim = 3 * ne + 1;
  CMat l = CMat::Zero(dim, dim);
  l(0, 0) = beta - mu_h - mu_g * norm_e_sq;
  for (int i = 0; i < ne; ++i) {
    l(1 + i, 0) = t[i];
    l(0, 1 + i) = std::conj(t[i]);
    l(1 + i, 1 + i) = 1.0;
  }
  // Borders -xi Y^H with Y = -[0 I], and the multiplier diagonal blocks.
  for (int i = 0; i < ne; ++i) {
    l(1 + i, 1 + ne + i) = eps_e;
    l(1 + ne + i, 1 + i) = eps_e;
    l(1 + i, 1 + 2 * ne + i) = eps_g;
    l(1 + 2 * ne + i, 1 + i) = eps_g;
    l(1 + ne + i, 1 + ne + i) = mu_h;
    l(1 + 2 * ne + i, 1 + 2 * ne + i) = mu_g;
  }
  return l;
}

/// Working state of one robust BCD run. Phases are kept at exact unit
/// modulus; the PCC relaxation slack is tracked for the stopping rule.
struct RobustState {
  Allocation alloc;
  MudMatrix mud;
  PhaseVector phases;
  SicOrder order;
  EffectiveChannels eff;  // nominal channels
  EveCsi csi;             // physical units
  RVec eve_snr_bound;     // a_k
  RVec eve_gain_bound_n;  // beta_k / noise_eve (noise units)
  RVec mu_h, mu_g;        // LMI slack multipliers
  double penalty = 10.0;
  double penalty_slack = 0.0;  // sum(b) + sum(c) of the last PCC solve
  double energy_j = 0.0;
};

namespace detail {

/// Worst-case Eve gain in noise units for the current reflection vector.
inline double wc_gain_noise(const SystemConfig& cfg, const EveCsi& csi, const CVec& e,
                            int k) {
  return worst_case_eve_gain(csi, e, k) / cfg.noise_eve_w;
}

/// Secrecy margins with the worst-case Eve gain oracle, under the phase
/// vector's own refreshed decoding order.
inline RVec robust_margins(const SystemConfig& cfg, const ChannelSet& cs,
                           const EveCsi& csi, const PhaseVector& pv,
                           const MudMatrix& mud, const Allocation& alloc) {
  EffectiveChannels eff = effective_channels(cs, pv);
  SicOrder ord = sic_order(eff.to_ap);
  RateReport rep = model_rates(cfg, eff, mud, alloc.tx_power_w, ord);
  RVec target = required_rate(cfg, alloc.local_bits);
  RVec margins(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k) {
    double snr_e = alloc.tx_power_w[k] * wc_gain_noise(cfg, csi, pv.e, k);
    double rs = std::max(0.0, log2_1p(rep.sinr_ap[k]) - log2_1p(snr_e));
    margins[k] = rs - target[k];
  }
  return margins;
}

struct RobustAllocationBuild {
  ConeProgram prog;
  std::vector<int> users;
  RVec l_pinned, p_pinned;
  double energy_scale = 1.0;
  int nu = 0;
  int l_i(int pos) const { return pos; }
  int p_i(int pos) const { return nu + pos; }
  int a_i(int pos) const { return 2 * nu + pos; }
  int beta_i(int pos) const { return 3 * nu + pos; }
  int muh_i(int pos) const { return 4 * nu + pos; }
  int mug_i(int pos) const { return 5 * nu + pos; }
};

/// Robust allocation subproblem around a base point: Lemma-1 rate
/// surrogates, per-user sign-definiteness LMIs (phases fixed), and the
/// linearized bilinear power-gain bound.
inline RobustAllocationBuild build_robust_allocation(const SystemConfig& cfg,
                                                     const RobustState& st,
                                                     const Coefficients& coef,
                                                     const Allocation& base,
                                                     const RVec& beta_base,
                                                     const RVec& a_base) {
  const int k_count = cfg.num_users;
  const double bt = cfg.bandwidth_hz * cfg.duration_s;
  const double ln2 = std::numbers::ln2;
  const double sigma_e = std::sqrt(cfg.noise_eve_w);

  RobustAllocationBuild b;
  b.l_pinned = RVec::Zero(k_count);
  b.p_pinned = RVec::Zero(k_count);

  for (int k = 0; k < k_count; ++k) {
    double wc = wc_gain_noise(cfg, st.csi, st.phases.e, k);
    bool blocked = wc >= coef.det_gain(k, k) / cfg.noise_ap_w * (1.0 + 1e-12);
    // All-local corner users with a nonpositive worst-case secrecy slope at
    // the incumbent interference are pinned for this solve.
    bool corner_blocked = false;
    if (!blocked && base.local_bits[k] >= cfg.task_bits[k] * (1.0 - 1e-9) &&
        base.tx_power_w[k] <= 1e-12) {
      int rank = st.order.rank_of(k);
      double interference = 0.0;
      for (int r2 = rank + 1; r2 < k_count; ++r2)
        interference += coef.det_gain(k, st.order.perm[r2]) *
                        base.tx_power_w[st.order.perm[r2]] / cfg.noise_ap_w;
      double slope = coef.det_gain(k, k) / cfg.noise_ap_w / (1.0 + interference);
      corner_blocked = slope <= wc * (1.0 + 1e-9);
    }
    bool stuck_local = false;
    if (!blocked && !corner_blocked &&
        base.local_bits[k] >= cfg.task_bits[k] * (1.0 - 1e-9) &&
        base.tx_power_w[k] > 1e-12) {
      int rank = st.order.rank_of(k);
      double interference = 0.0;
      for (int r2 = rank + 1; r2 < k_count; ++r2)
        interference += coef.det_gain(k, st.order.perm[r2]) *
                        base.tx_power_w[st.order.perm[r2]];
      double gamma = coef.det_gain(k, k) * base.tx_power_w[k] /
                     (interference + cfg.noise_ap_w);
      stuck_local =
          log2_1p(gamma) - log2_1p(base.tx_power_w[k] * wc) < -cfg.feasibility_tol;
    }
    if (cfg.task_bits[k] <= 0.0) {
      // empty task
    } else if (blocked || corner_blocked || stuck_local) {
      b.l_pinned[k] = cfg.task_bits[k];
    } else {
      b.users.push_back(k);
    }
  }
  b.nu = static_cast<int>(b.users.size());

  double e_scale = 0.0;
  for (int k = 0; k < k_count; ++k) {
    double c = cfg.cycles_per_bit[k], l = cfg.task_bits[k];
    e_scale += cfg.cap_coeff[k] * c * c * c * l * l * l /
               (cfg.duration_s * cfg.duration_s);
  }
  b.energy_scale = std::max(e_scale, 1e-9);

  const int nu = b.nu;
  b.prog.add_vars(6 * nu);
  b.prog.objective = SmoothExpr::zero(b.prog.total_vars);

  double pinned_energy = 0.0;
  for (int k = 0; k < k_count; ++k)
    if (b.l_pinned[k] > 0.0) {
      double c = cfg.cycles_per_bit[k];
      pinned_energy += cfg.cap_coeff[k] * c * c * c * std::pow(b.l_pinned[k], 3) /
                       (cfg.duration_s * cfg.duration_s);
    }
  b.prog.objective.constant = pinned_energy / b.energy_scale;

  for (int pos = 0; pos < nu; ++pos) {
    int k = b.users[pos];
    double c = cfg.cycles_per_bit[k], l_max = cfg.task_bits[k];
    b.prog.objective.add_cubic(b.l_i(pos),
                               cfg.cap_coeff[k] * c * c * c * l_max * l_max * l_max /
                                   (cfg.duration_s * cfg.duration_s) / b.energy_scale);
    b.prog.objective.add_linear(b.p_i(pos),
                                cfg.duration_s * cfg.power_budget_w[k] / b.energy_scale);

    for (int which : {b.l_i(pos), b.p_i(pos)}) {
      SmoothExpr lo = SmoothExpr::zero(b.prog.total_vars);
      lo.add_linear(which, 1.0);
      b.prog.inequalities.push_back(std::move(lo));
      SmoothExpr hi = SmoothExpr::zero(b.prog.total_vars);
      hi.add_linear(which, -1.0);
      hi.constant = 1.0;
      b.prog.inequalities.push_back(std::move(hi));
    }
    SmoothExpr a_lo = SmoothExpr::zero(b.prog.total_vars);
    a_lo.add_linear(b.a_i(pos), 1.0);
    b.prog.inequalities.push_back(std::move(a_lo));
  }

  for (int pos = 0; pos < nu; ++pos) {
    int k = b.users[pos];
    int rank = st.order.rank_of(k);

    // Lemma-1 surrogate of the legitimate rate, in AP-noise units.
    double den0 = 1.0;
    for (int r2 = rank + 1; r2 < k_count; ++r2) {
      int j = st.order.perm[r2];
      den0 += coef.det_gain(k, j) / cfg.noise_ap_w * base.tx_power_w[j];
    }
    double mu_a = 1.0 / den0;

    SmoothExpr g = SmoothExpr::zero(b.prog.total_vars);
    RVec num = RVec::Zero(b.prog.total_vars);
    num[b.p_i(pos)] = coef.det_gain(k, k) / cfg.noise_ap_w * cfg.power_budget_w[k];
    for (int r2 = rank + 1; r2 < k_count; ++r2) {
      int j = st.order.perm[r2];
      auto it = std::find(b.users.begin(), b.users.end(), j);
      if (it == b.users.end()) continue;
      int jpos = static_cast<int>(it - b.users.begin());
      double w = coef.det_gain(k, j) / cfg.noise_ap_w * cfg.power_budget_w[j];
      num[b.p_i(jpos)] += w;
      g.add_linear(b.p_i(jpos), -(mu_a / ln2) * w);
    }
    g.add_log(1.0 / ln2, num, 1.0);
    g.constant += (1.0 / ln2) * (-mu_a * 1.0 + std::log(mu_a) + 1.0);

    // Lemma-1 surrogate of the Eve bound -log2(1 + a_k).
    double mu_e = 1.0 / (1.0 + std::max(0.0, a_base[k]));
    g.add_linear(b.a_i(pos), -mu_e / ln2);
    g.constant += (1.0 / ln2) * (1.0 - mu_e + std::log(mu_e));

    g.add_linear(b.l_i(pos), cfg.task_bits[k] / bt);
    g.constant -= cfg.task_bits[k] / bt;
    b.prog.inequalities.push_back(std::move(g));

    // Linearized bilinear bound p_k beta_k <= a_k (noise units).
    double p0 = base.tx_power_w[k];
    double beta0 = beta_base[k];
    SmoothExpr bil = SmoothExpr::zero(b.prog.total_vars);
    bil.add_linear(b.a_i(pos), 1.0);
    bil.add_linear(b.p_i(pos), -beta0 * cfg.power_budget_w[k]);
    bil.add_linear(b.beta_i(pos), -p0);
    bil.constant = p0 * beta0;
    b.prog.inequalities.push_back(std::move(bil));

    // Cap the gain bound: its optimum is the certified worst case, so the
    // cap never binds; without it the variable is unbounded when p0 = 0.
    double wc_k = detail::wc_gain_noise(cfg, st.csi, st.phases.e, k);
    SmoothExpr cap = SmoothExpr::zero(b.prog.total_vars);
    cap.add_linear(b.beta_i(pos), -1.0);
    cap.constant = 2.0 * wc_k + 10.0;
    b.prog.inequalities.push_back(std::move(cap));

    // Sign-definiteness LMI over the CSI error balls (phases fixed).
    const int ne = cfg.num_eve_antennas;
    const CVec t_n =
        (st.csi.h_e_nominal[k] + st.csi.cascade_nominal[k] * st.phases.e) / sigma_e;
    double xi_e = st.csi.eps_direct[k] / sigma_e;
    double xi_g = st.csi.eps_cascade[k] / sigma_e;
    double norm_e_sq = st.phases.e.squaredNorm();
    AffineLmi lmi;
    lmi.order = 3 * ne + 1;
    lmi.f0 = robust_eve_gain_lmi(t_n, 0.0, 0.0, 0.0, xi_e, xi_g, norm_e_sq);
    CMat f_beta = CMat::Zero(lmi.order, lmi.order);
    f_beta(0, 0) = 1.0;
    CMat f_muh = CMat::Zero(lmi.order, lmi.order);
    f_muh(0, 0) = -1.0;
    for (int i = 0; i < ne; ++i) f_muh(1 + ne + i, 1 + ne + i) = 1.0;
    CMat f_mug = CMat::Zero(lmi.order, lmi.order);
    f_mug(0, 0) = -norm_e_sq;
    for (int i = 0; i < ne; ++i) f_mug(1 + 2 * ne + i, 1 + 2 * ne + i) = 1.0;
    lmi.coeffs.emplace_back(b.beta_i(pos), f_beta);
    lmi.coeffs.emplace_back(b.muh_i(pos), f_muh);
    lmi.coeffs.emplace_back(b.mug_i(pos), f_mug);
    b.prog.lmis.push_back(std::move(lmi));
  }
  return b;
}

}  // namespace detail

struct RobustAllocationResult {
  Allocation alloc;
  RVec eve_snr_bound;
  RVec eve_gain_bound_n;
  RVec mu_h, mu_g;
  SolveStatus status = SolveStatus::kOptimal;
  bool accepted = false;
};

/// Robust allocation block: SCA passes on the bilinear linearization are
/// iterated inside the block; acceptance requires the true bilinear
/// constraint, the sampled-oracle robust margins, and energy descent.
inline RobustAllocationResult solve_allocation_robust(const SystemConfig& cfg,
                                                      const RobustState& st,
                                                      const Coefficients& coef) {
  RobustAllocationResult out;
  out.alloc = st.alloc;
  out.eve_snr_bound = st.eve_snr_bound;
  out.eve_gain_bound_n = st.eve_gain_bound_n;
  out.mu_h = st.mu_h;
  out.mu_g = st.mu_g;

  const double e_start = energies(cfg, st.alloc).total_j;
  Allocation base = st.alloc;
  // The certified gain bound equals the worst-case oracle at the fixed
  // phases (the LMI is tight); it is the SCA base and the stored state.
  RVec wc_all(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k)
    wc_all[k] = detail::wc_gain_noise(cfg, st.csi, st.phases.e, k);
  const RVec& beta_base = wc_all;
  RVec a_cur = st.eve_snr_bound;
  RVec muh_cur = st.mu_h, mug_cur = st.mu_g;
  double e_base = e_start;
  bool any_pass = false;

  for (int pass = 0; pass < 15; ++pass) {
    detail::RobustAllocationBuild b =
        detail::build_robust_allocation(cfg, st, coef, base, beta_base, a_cur);
    const int nu = b.nu;
    if (nu == 0) {
      base.local_bits = b.l_pinned;
      base.tx_power_w = b.p_pinned;
      out.status = SolveStatus::kOptimal;
      any_pass = true;
      break;
    }

    RVec warm(b.prog.total_vars);
    for (int pos = 0; pos < nu; ++pos) {
      int k = b.users[pos];
      double wc = detail::wc_gain_noise(cfg, st.csi, st.phases.e, k);
      warm[b.l_i(pos)] = std::clamp(base.local_bits[k] / cfg.task_bits[k], 0.0, 1.0);
      warm[b.p_i(pos)] =
          std::clamp(base.tx_power_w[k] / cfg.power_budget_w[k], 0.0, 1.0);
      warm[b.beta_i(pos)] = std::max(beta_base[k], wc * 1.2 + 0.1);
      warm[b.a_i(pos)] =
          std::max({st.eve_snr_bound[k], base.tx_power_w[k] * warm[b.beta_i(pos)], 0.0}) +
          0.1;
      warm[b.muh_i(pos)] = std::max(st.mu_h[k], 1e-3);
      warm[b.mug_i(pos)] = std::max(st.mu_g[k], 1e-3);
    }

    SolveOptions sopts;
    sopts.tol = cfg.solver_tol;
    SolveResult r = solve_cone_program(b.prog, warm, sopts);
    out.status = r.status;
    if (r.status != SolveStatus::kOptimal) break;

    RVec l_new = b.l_pinned, p_new = b.p_pinned;
    RVec a_new = RVec::Zero(cfg.num_users);
    RVec muh_new = RVec::Zero(cfg.num_users), mug_new = RVec::Zero(cfg.num_users);
    for (int pos = 0; pos < nu; ++pos) {
      int k = b.users[pos];
      double lt = std::clamp(r.x[b.l_i(pos)], 0.0, 1.0);
      double pt = std::clamp(r.x[b.p_i(pos)], 0.0, 1.0);
      if (lt > 1.0 - 1e-9) lt = 1.0;
      if (lt < 1e-12) lt = 0.0;
      if (pt < 1e-12) pt = 0.0;
      l_new[k] = lt * cfg.task_bits[k];
      p_new[k] = pt * cfg.power_budget_w[k];
      a_new[k] = std::max(0.0, r.x[b.a_i(pos)]);
      muh_new[k] = std::max(0.0, r.x[b.muh_i(pos)]);
      mug_new[k] = std::max(0.0, r.x[b.mug_i(pos)]);
    }

    // True bilinear constraint against the certified bound, then the
    // oracle-based robust margins.
    bool ok = true;
    for (int pos = 0; pos < nu && ok; ++pos) {
      int k = b.users[pos];
      if (p_new[k] * wc_all[k] > a_new[k] + 1e-6 * (1.0 + a_new[k])) ok = false;
    }
    Allocation cand{l_new, p_new};
    for (int pos = 0; pos < nu && ok; ++pos) {
      int k = b.users[pos];
      int rank = st.order.rank_of(k);
      double interference = 0.0;
      for (int r2 = rank + 1; r2 < cfg.num_users; ++r2) {
        int j = st.order.perm[r2];
        interference += coef.det_gain(k, j) * p_new[j];
      }
      double gamma = coef.det_gain(k, k) * p_new[k] / (interference + cfg.noise_ap_w);
      double snr_e = p_new[k] * detail::wc_gain_noise(cfg, st.csi, st.phases.e, k);
      double rs = std::max(0.0, log2_1p(gamma) - log2_1p(snr_e));
      double target = (cfg.task_bits[k] - l_new[k]) / (cfg.bandwidth_hz * cfg.duration_s);
      if (rs - target < -cfg.feasibility_tol) ok = false;
    }
    if (!ok) break;

    double e_new = energies(cfg, cand).total_j;
    if (e_new > e_base + 5e-7) break;
    double rel = std::abs(e_base - e_new) / std::max(e_base, 1e-12);
    double rel_a = 0.0;  // Lemma-1 multipliers must stabilize as well
    for (int k = 0; k < cfg.num_users; ++k)
      rel_a = std::max(rel_a,
                       std::abs(a_new[k] - a_cur[k]) / (1.0 + std::abs(a_cur[k])));
    base = std::move(cand);
    a_cur = a_new;
    muh_cur = muh_new;
    mug_cur = mug_new;
    e_base = e_new;
    any_pass = true;
    if (rel <= 0.1 * cfg.bcd_tol && rel_a <= 0.02) break;
  }

  if (!any_pass || e_base > e_start + 5e-7) return out;
  out.alloc = base;
  out.eve_snr_bound = a_cur;
  out.eve_gain_bound_n = wc_all;
  out.mu_h = muh_cur;
  out.mu_g = mug_cur;
  out.accepted = true;
  return out;
}

/// Robust detection block: per user, maximize the Lemma-1 rate surrogate
/// phi_a(W) over the trace-one PSD cone (the Eve term is detector-free),
/// then recover a unit vector with phi_a as the randomization quality.
inline DetectionResult solve_detection_robust(const SystemConfig& cfg,
                                              const RobustState& st,
                                              const Coefficients& coef,
                                              RandomStream& rng) {
  DetectionResult out;
  out.mud = st.mud;
  const int k_count = cfg.num_users;
  const double ln2 = std::numbers::ln2;

  auto max_sinr_detector = [&](int k) {
    int rank = st.order.rank_of(k);
    CMat cov = cfg.noise_ap_w *
               CMat::Identity(cfg.num_ap_antennas, cfg.num_ap_antennas);
    for (int r2 = rank + 1; r2 < k_count; ++r2) {
      int j = st.order.perm[r2];
      cov += st.alloc.tx_power_w[j] *
             (st.eff.to_ap[j] * st.eff.to_ap[j].adjoint());
    }
    CVec w = cov.llt().solve(st.eff.to_ap[k]);
    return CVec(w.normalized());
  };

  for (int k = 0; k < k_count; ++k) {
    double r_k = (cfg.task_bits[k] - st.alloc.local_bits[k]) /
                 (cfg.bandwidth_hz * cfg.duration_s);
    if (r_k <= 0.0) {
      CVec w = max_sinr_detector(k);
      if (std::norm(w.dot(st.eff.to_ap[k])) >
          std::norm(st.mud.col(k).dot(st.eff.to_ap[k])) * (1.0 + 1e-12)) {
        out.mud.w.col(k) = w;
        ++out.updated_users;
      }
      continue;
    }

    int rank = st.order.rank_of(k);
    double den0 = 1.0;
    for (int r2 = rank + 1; r2 < k_count; ++r2) {
      int j = st.order.perm[r2];
      den0 += coef.det_gain(k, j) / cfg.noise_ap_w * st.alloc.tx_power_w[j];
    }
    double mu_a = 1.0 / den0;

    ConeProgram prog;
    int blk = prog.add_psd_block(cfg.num_ap_antennas);
    const PsdBlock block = prog.psd_blocks[blk];
    prog.objective = SmoothExpr::zero(prog.total_vars);

    CMat num_mat = CMat::Zero(cfg.num_ap_antennas, cfg.num_ap_antennas);
    CMat den_mat = num_mat;
    for (int r2 = rank; r2 < k_count; ++r2) {
      int j = st.order.perm[r2];
      double p_j = st.alloc.tx_power_w[j];
      if (p_j <= 0.0) continue;
      CMat h = (st.eff.to_ap[j] * st.eff.to_ap[j].adjoint()) / cfg.noise_ap_w;
      num_mat += p_j * h;
      if (r2 > rank) den_mat += p_j * h;
    }
    // minimize -phi_a = -(1/ln2)[ln(Tr(num W)+1) - mu_a (Tr(den W)+1) + ...]
    prog.objective.add_log(-1.0 / ln2,
                           psd::trace_coeffs(block, prog.total_vars, num_mat), 1.0);
    prog.objective.add_linear_vec(
        (mu_a / ln2) * psd::trace_coeffs(block, prog.total_vars, den_mat));
    prog.add_equality(psd::trace_coeffs(block, prog.total_vars,
                                        CMat::Identity(cfg.num_ap_antennas,
                                                       cfg.num_ap_antennas)),
                      1.0);

    RVec warm = RVec::Zero(prog.total_vars);
    CMat w0 = 0.9 * (st.mud.col(k) * st.mud.col(k).adjoint()) +
              0.1 * CMat::Identity(cfg.num_ap_antennas, cfg.num_ap_antennas) /
                  cfg.num_ap_antennas;
    psd::from_matrix(block, w0, warm);

    SolveOptions sopts;
    sopts.tol = cfg.solver_tol;
    SolveResult r = solve_cone_program(prog, warm, sopts);
    if (r.status != SolveStatus::kOptimal) {
      out.status = r.status;
      continue;
    }

    auto phi = [&](const CVec& w) {
      double num = (w.adjoint() * num_mat * w)(0).real() + 1.0;
      double den = (w.adjoint() * den_mat * w)(0).real() + 1.0;
      double v = (std::log(num) - mu_a * den + std::log(mu_a) + 1.0) / ln2;
      return CandidateQuality{v, 0.0};
    };
    CMat w_lifted = psd::to_matrix(block, r.x);
    auto rec = randomize_vector(LiftedSolution::from(w_lifted), phi,
                                cfg.randomization_count, rng);
    if (rec.quality.score >= phi(st.mud.col(k)).score - 1e-12) {
      out.mud.w.col(k) = rec.value;
      ++out.updated_users;
    }
  }
  return out;
}

namespace detail {

struct PccIndex {
  int m = 0;
  int na = 0;  // active users
  int e_re(int mm) const { return 2 * mm; }
  int e_im(int mm) const { return 2 * mm + 1; }
  int d_i(int pos) const { return 2 * m + pos; }
  int rho_i(int pos) const { return 2 * m + na + pos; }
  int a_i(int pos) const { return 2 * m + 2 * na + pos; }
  int beta_i(int pos) const { return 2 * m + 3 * na + pos; }
  int muh_i(int pos) const { return 2 * m + 4 * na + pos; }
  int mug_i(int pos) const { return 2 * m + 5 * na + pos; }
  int kappa_i(int pos) const { return 2 * m + 6 * na + pos; }
  int b_i(int mm) const { return 2 * m + 7 * na + mm; }
  int c_i(int mm) const { return 2 * m + 7 * na + m + mm; }
  int total() const { return 4 * m + 7 * na; }
};

struct PccBuild {
  ConeProgram prog;
  PccIndex idx;
  std::vector<int> users;
  RVec kappa_floor;
};

// Real-linear coefficients of Re(conj(alpha) * zeta . e) over the (re, im)
// phase coordinates.
inline void add_complex_inner(SmoothExpr& g, const PccIndex& idx, cxd alpha,
                              const Eigen::RowVectorXcd& zeta, double scale) {
  for (int mm = 0; mm < idx.m; ++mm) {
    cxd w = std::conj(alpha) * zeta[mm];
    g.add_linear(idx.e_re(mm), scale * w.real());
    g.add_linear(idx.e_im(mm), -scale * w.imag());
  }
}

/// Penalty convex-concave phase subproblem: maximize the extra secrecy
/// kappa minus the penalized modulus relaxation slack.
inline PccBuild build_pcc_program(const SystemConfig& cfg, const RobustState& st,
                                  const ChannelSet& cs, double lambda) {
  const int m = cfg.num_ris_elements;
  const int k_count = cfg.num_users;
  const double ln2 = std::numbers::ln2;
  const double sigma_a = std::sqrt(cfg.noise_ap_w);
  const double sigma_e = std::sqrt(cfg.noise_eve_w);

  PccBuild pb;
  for (int rank = 0; rank < k_count; ++rank) {
    int k = st.order.perm[rank];
    if (st.alloc.tx_power_w[k] > 0.0) pb.users.push_back(k);
  }
  pb.idx.m = m;
  pb.idx.na = static_cast<int>(pb.users.size());
  pb.kappa_floor = RVec::Zero(pb.idx.na);
  pb.prog.add_vars(pb.idx.total());
  const int n = pb.prog.total_vars;
  pb.prog.objective = SmoothExpr::zero(n);

  const CVec& e_prev = st.phases.e;

  // Objective: minimize -sum kappa + lambda sum(b + c).
  for (int pos = 0; pos < pb.idx.na; ++pos)
    pb.prog.objective.add_linear(pb.idx.kappa_i(pos), -1.0);
  for (int mm = 0; mm < m; ++mm) {
    pb.prog.objective.add_linear(pb.idx.b_i(mm), lambda);
    pb.prog.objective.add_linear(pb.idx.c_i(mm), lambda);
  }

  // PCC modulus relaxation.
  for (int mm = 0; mm < m; ++mm) {
    SmoothExpr lin = SmoothExpr::zero(n);  // 2Re{e~* e} - |e~|^2 - 1 + b >= 0
    lin.add_linear(pb.idx.e_re(mm), 2.0 * e_prev[mm].real());
    lin.add_linear(pb.idx.e_im(mm), 2.0 * e_prev[mm].imag());
    lin.add_linear(pb.idx.b_i(mm), 1.0);
    lin.constant = -std::norm(e_prev[mm]) - 1.0;
    pb.prog.inequalities.push_back(std::move(lin));

    SmoothExpr quad = SmoothExpr::zero(n);  // 1 + c - |e|^2 >= 0
    RMat q = RMat::Zero(n, n);
    q(pb.idx.e_re(mm), pb.idx.e_re(mm)) = -2.0;
    q(pb.idx.e_im(mm), pb.idx.e_im(mm)) = -2.0;
    quad.add_quad(q);
    quad.add_linear(pb.idx.c_i(mm), 1.0);
    quad.constant = 1.0;
    pb.prog.inequalities.push_back(std::move(quad));

    for (int which : {pb.idx.b_i(mm), pb.idx.c_i(mm)}) {
      SmoothExpr lo = SmoothExpr::zero(n);
      lo.add_linear(which, 1.0);
      pb.prog.inequalities.push_back(std::move(lo));
      // Generous caps keep the relaxation region (and the phase-I analytic
      // center) bounded; they never bind at a sane optimum.
      SmoothExpr hi = SmoothExpr::zero(n);
      hi.add_linear(which, -1.0);
      hi.constant = which == pb.idx.b_i(mm) ? 2.0 : 8.0;
      pb.prog.inequalities.push_back(std::move(hi));
    }
  }

  for (int pos = 0; pos < pb.idx.na; ++pos) {
    int k = pb.users[pos];
    int rank = st.order.rank_of(k);
    double p_k = st.alloc.tx_power_w[k];
    double r_k = (cfg.task_bits[k] - st.alloc.local_bits[k]) /
                 (cfg.bandwidth_hz * cfg.duration_s);

    // Signal and interference in AP-noise units.
    cxd q_own = st.mud.col(k).dot(cs.h_ap[k]) / sigma_a;
    Eigen::RowVectorXcd v_own =
        (st.mud.col(k).adjoint() * cs.ris_ap * cs.h_ris[k].asDiagonal()) / sigma_a;
    cxd a_base = q_own + (v_own * e_prev)(0);

    double rho0 = 0.0;
    for (int r2 = rank + 1; r2 < k_count; ++r2) {
      int j = st.order.perm[r2];
      double p_j = st.alloc.tx_power_w[j];
      if (p_j <= 0.0) continue;
      cxd q_j = st.mud.col(k).dot(cs.h_ap[j]) / sigma_a;
      Eigen::RowVectorXcd v_j =
          (st.mud.col(k).adjoint() * cs.ris_ap * cs.h_ris[j].asDiagonal()) / sigma_a;
      rho0 += p_j * std::norm(q_j + (v_j * e_prev)(0));
    }
    double mu_r = 1.0 / (rho0 + 1.0);
    double mu_e = 1.0 / (1.0 + std::max(0.0, st.eve_snr_bound[k]));

    // (1) Lemma-1 rate constraint with the kappa slack.
    {
      SmoothExpr g = SmoothExpr::zero(n);
      RVec arg = RVec::Zero(n);
      arg[pb.idx.rho_i(pos)] = 1.0;
      arg[pb.idx.d_i(pos)] = 1.0;
      g.add_log(1.0 / ln2, arg, 1.0);
      g.add_linear(pb.idx.rho_i(pos), -mu_r / ln2);
      g.constant += (1.0 / ln2) * (-mu_r + std::log(mu_r) + 1.0);
      g.add_linear(pb.idx.a_i(pos), -mu_e / ln2);
      g.constant += (1.0 / ln2) * (1.0 - mu_e + std::log(mu_e));
      g.add_linear(pb.idx.kappa_i(pos), -1.0);
      g.constant -= r_k;
      pb.prog.inequalities.push_back(std::move(g));
    }

    // Floor on the extra-rate slack: no user may be traded below its
    // incumbent worst-case margin, recovery stays feasible.
    {
      double sig0 = p_k * std::norm(a_base);
      double gamma0 = sig0 / (rho0 + 1.0);
      double snr_e0 = p_k * wc_gain_noise(cfg, st.csi, e_prev, k);
      double m0 = log2_1p(gamma0) - log2_1p(snr_e0) - r_k;
      pb.kappa_floor[pos] = std::min(0.0, m0 - 1e-9);
      SmoothExpr g = SmoothExpr::zero(n);
      g.add_linear(pb.idx.kappa_i(pos), 1.0);
      g.constant = -pb.kappa_floor[pos];
      pb.prog.inequalities.push_back(std::move(g));
    }

    // (60) interference upper bound: quadratic in the phase coordinates.
    {
      SmoothExpr g = SmoothExpr::zero(n);
      g.add_linear(pb.idx.rho_i(pos), 1.0);
      RMat q = RMat::Zero(n, n);
      for (int r2 = rank + 1; r2 < k_count; ++r2) {
        int j = st.order.perm[r2];
        double p_j = st.alloc.tx_power_w[j];
        if (p_j <= 0.0) continue;
        cxd q_j = st.mud.col(k).dot(cs.h_ap[j]) / sigma_a;
        Eigen::RowVectorXcd v_j =
            (st.mud.col(k).adjoint() * cs.ris_ap * cs.h_ris[j].asDiagonal()) / sigma_a;
        RVec re_c = RVec::Zero(n), im_c = RVec::Zero(n);
        for (int mm = 0; mm < m; ++mm) {
          re_c[pb.idx.e_re(mm)] = v_j[mm].real();
          re_c[pb.idx.e_im(mm)] = -v_j[mm].imag();
          im_c[pb.idx.e_re(mm)] = v_j[mm].imag();
          im_c[pb.idx.e_im(mm)] = v_j[mm].real();
        }
        q.noalias() -= 2.0 * p_j * (re_c * re_c.transpose() + im_c * im_c.transpose());
        g.add_linear_vec(-2.0 * p_j *
                         (q_j.real() * re_c + q_j.imag() * im_c));
        g.constant -= p_j * std::norm(q_j);
      }
      if ((q.array() != 0.0).any()) g.add_quad(q);
      pb.prog.inequalities.push_back(std::move(g));
    }

    // (2) linearized signal lower bound, multiplied through by p_k.
    {
      SmoothExpr g = SmoothExpr::zero(n);
      add_complex_inner(g, pb.idx, a_base, v_own, 2.0 * p_k);
      g.constant += 2.0 * p_k * (std::conj(a_base) * q_own).real();
      g.constant -= p_k * std::norm(a_base);
      g.add_linear(pb.idx.d_i(pos), -1.0);
      pb.prog.inequalities.push_back(std::move(g));
    }

    // p_k beta_k <= a_k (linear: p fixed in this block).
    {
      SmoothExpr g = SmoothExpr::zero(n);
      g.add_linear(pb.idx.a_i(pos), 1.0);
      g.add_linear(pb.idx.beta_i(pos), -p_k);
      pb.prog.inequalities.push_back(std::move(g));
    }
    {
      SmoothExpr g = SmoothExpr::zero(n);
      g.add_linear(pb.idx.a_i(pos), 1.0);
      pb.prog.inequalities.push_back(std::move(g));
    }
    {
      // Never-binding cap on the gain bound over the PCC trust region.
      double reach = st.csi.h_e_nominal[k].norm() / sigma_e +
                     st.csi.cascade_nominal[k].norm() / sigma_e * std::sqrt(2.0 * m) +
                     st.csi.eps_direct[k] / sigma_e +
                     1.05 * st.csi.eps_cascade[k] / sigma_e * std::sqrt(2.0 * m);
      SmoothExpr g = SmoothExpr::zero(n);
      g.add_linear(pb.idx.beta_i(pos), -1.0);
      g.constant = 2.0 * reach * reach + 10.0;
      pb.prog.inequalities.push_back(std::move(g));
    }

    // Sign-definiteness LMI with t affine in e; ||e||^2 in Z2^H Z2 is
    // replaced by the constant M (unit-modulus target) and the cascaded
    // radius is inflated 5% to absorb the relaxation.
    {
      const int ne = cfg.num_eve_antennas;
      double xi_e = st.csi.eps_direct[k] / sigma_e;
      double xi_g = 1.05 * st.csi.eps_cascade[k] / sigma_e;
      CVec t0 = st.csi.h_e_nominal[k] / sigma_e;
      CMat gc = st.csi.cascade_nominal[k] / sigma_e;

      AffineLmi lmi;
      lmi.order = 3 * ne + 1;
      lmi.f0 = robust_eve_gain_lmi(t0, 0.0, 0.0, 0.0, xi_e, xi_g,
                                   static_cast<double>(m));
      CMat zero_t = CMat::Zero(lmi.order, lmi.order);
      {
        CMat f_beta = zero_t;
        f_beta(0, 0) = 1.0;
        lmi.coeffs.emplace_back(pb.idx.beta_i(pos), f_beta);
        CMat f_muh = zero_t;
        f_muh(0, 0) = -1.0;
        for (int i = 0; i < ne; ++i) f_muh(1 + ne + i, 1 + ne + i) = 1.0;
        lmi.coeffs.emplace_back(pb.idx.muh_i(pos), f_muh);
        CMat f_mug = zero_t;
        f_mug(0, 0) = -static_cast<double>(m);
        for (int i = 0; i < ne; ++i) f_mug(1 + 2 * ne + i, 1 + 2 * ne + i) = 1.0;
        lmi.coeffs.emplace_back(pb.idx.mug_i(pos), f_mug);
      }
      for (int mm = 0; mm < m; ++mm) {
        CMat f_re = zero_t;
        CMat f_im = zero_t;
        for (int i = 0; i < ne; ++i) {
          f_re(1 + i, 0) = gc(i, mm);
          f_re(0, 1 + i) = std::conj(gc(i, mm));
          f_im(1 + i, 0) = cxd(0, 1) * gc(i, mm);
          f_im(0, 1 + i) = std::conj(cxd(0, 1) * gc(i, mm));
        }
        lmi.coeffs.emplace_back(pb.idx.e_re(mm), f_re);
        lmi.coeffs.emplace_back(pb.idx.e_im(mm), f_im);
      }
      pb.prog.lmis.push_back(std::move(lmi));
    }
  }
  return pb;
}

}  // namespace detail

struct PccResult {
  PhaseVector phases;
  RVec eve_snr_bound;
  RVec eve_gain_bound_n;
  double penalty_slack = 0.0;
  SolveStatus status = SolveStatus::kOptimal;
  bool accepted = false;
  double score_gain = 0.0;  // accepted quality-score improvement
};

/// PCC phase update: solve the relaxed program, renormalize the phases to
/// exact unit modulus, polish, and accept only when the oracle-certified
/// robust margins stay feasible and do not regress.
inline PccResult solve_phases_pcc(const SystemConfig& cfg, const RobustState& st,
                                  const ChannelSet& cs, double lambda) {
  PccResult out;
  out.phases = st.phases;
  out.eve_snr_bound = st.eve_snr_bound;
  out.eve_gain_bound_n = st.eve_gain_bound_n;
  if (cfg.num_ris_elements == 0) return out;

  auto theta_quality = [&](const PhaseVector& pv) {
    EffectiveChannels eff = effective_channels(cs, pv);
    SicOrder ord = sic_order(eff.to_ap);
    RateReport rep = model_rates(cfg, eff, st.mud, st.alloc.tx_power_w, ord);
    RVec target = required_rate(cfg, st.alloc.local_bits);
    double score = 0.0, feas = std::numeric_limits<double>::infinity();
    for (int k = 0; k < cfg.num_users; ++k) {
      double wc = detail::wc_gain_noise(cfg, st.csi, pv.e, k);
      if (st.alloc.tx_power_w[k] > 1e-12) {
        double snr_e = st.alloc.tx_power_w[k] * wc;
        score += log2_1p(rep.sinr_ap[k]) - log2_1p(snr_e) - target[k];
        feas = std::min(feas,
                        std::max(0.0, log2_1p(rep.sinr_ap[k]) - log2_1p(snr_e)) -
                            target[k]);
      } else {
        // What-if rate at a token probe power keeps parked users in play.
        int rank = ord.rank_of(k);
        double probe = 0.01 * cfg.power_budget_w[k];
        double interference = 0.0;
        for (int r2 = rank + 1; r2 < cfg.num_users; ++r2) {
          int j = ord.perm[r2];
          interference += st.alloc.tx_power_w[j] *
                          std::norm(st.mud.col(k).dot(eff.to_ap[j]));
        }
        double gamma = probe * std::norm(st.mud.col(k).dot(eff.to_ap[k])) /
                       (interference + cfg.noise_ap_w);
        score += log2_1p(gamma) - log2_1p(probe * wc);
        feas = std::min(feas, -target[k]);
      }
    }
    return CandidateQuality{score, feas};
  };
  auto better = [&](const CandidateQuality& a, const CandidateQuality& b) {
    bool fa = a.margin >= -cfg.feasibility_tol;
    bool fb = b.margin >= -cfg.feasibility_tol;
    if (fa != fb) return fa;
    return a.score > b.score;
  };
  auto polish = [&](PhaseVector pv) {
    CandidateQuality q = theta_quality(pv);
    const int grid = 32;
    for (int sweep = 0; sweep < 2; ++sweep) {
      bool moved = false;
      for (int mm = 0; mm < cfg.num_ris_elements; ++mm) {
        RVec th = pv.theta;
        double best_t = th[mm];
        CandidateQuality best_q = q;
        for (int j = 0; j < grid; ++j) {
          th[mm] = kTwoPi * j / grid;
          CandidateQuality cand = theta_quality(PhaseVector::from_theta(th));
          if (better(cand, best_q)) {
            best_q = cand;
            best_t = th[mm];
          }
        }
        if (best_t != pv.theta[mm]) {
          th[mm] = best_t;
          pv = PhaseVector::from_theta(th);
          q = best_q;
          moved = true;
        }
      }
      if (!moved) break;
    }
    return std::make_pair(pv, q);
  };

  RobustState cur = st;
  CandidateQuality cur_q = theta_quality(cur.phases);
  const double initial_score = cur_q.score;
  bool cur_feasible = cur_q.margin >= -cfg.feasibility_tol;

  // Fully parked state: polish on the probe-power quality only.
  if (st.alloc.tx_power_w.maxCoeff() <= 1e-12) {
    auto [cand, cand_q] = polish(cur.phases);
    if (better(cand_q, cur_q)) {
      out.phases = cand;
      out.accepted = true;
      out.score_gain = cand_q.score - initial_score;
      for (int k = 0; k < cfg.num_users; ++k) {
        out.eve_gain_bound_n[k] = detail::wc_gain_noise(cfg, st.csi, out.phases.e, k);
        out.eve_snr_bound[k] = st.alloc.tx_power_w[k] * out.eve_gain_bound_n[k];
      }
    }
    return out;
  }

  for (int round = 0; round < 4; ++round) {
    detail::PccBuild pb = detail::build_pcc_program(cfg, cur, cs, lambda);
    if (pb.users.empty()) return out;
    const auto& ix = pb.idx;

    // Interior warm start around the current (unit-modulus) phases.
    RVec warm = RVec::Zero(pb.prog.total_vars);
    for (int mm = 0; mm < cfg.num_ris_elements; ++mm) {
      warm[ix.e_re(mm)] = cur.phases.e[mm].real();
      warm[ix.e_im(mm)] = cur.phases.e[mm].imag();
      warm[ix.b_i(mm)] = 0.05;
      warm[ix.c_i(mm)] = 0.05;
    }
    for (int pos = 0; pos < ix.na; ++pos) {
      int k = pb.users[pos];
      double wc = detail::wc_gain_noise(cfg, cur.csi, cur.phases.e, k);
      warm[ix.beta_i(pos)] = 1.3 * wc + 0.3;
      warm[ix.a_i(pos)] =
          cur.alloc.tx_power_w[k] * warm[ix.beta_i(pos)] + 0.1;
      warm[ix.muh_i(pos)] = 0.05;
      warm[ix.mug_i(pos)] = 0.05;
      // d below the current signal power, rho above the interference.
      int rank = cur.order.rank_of(k);
      double sig = cur.alloc.tx_power_w[k] *
                   std::norm(cur.mud.col(k).dot(cur.eff.to_ap[k])) / cfg.noise_ap_w;
      double intf = 0.0;
      for (int r2 = rank + 1; r2 < cfg.num_users; ++r2) {
        int j = cur.order.perm[r2];
        intf += cur.alloc.tx_power_w[j] *
                std::norm(cur.mud.col(k).dot(cur.eff.to_ap[j])) / cfg.noise_ap_w;
      }
      warm[ix.d_i(pos)] = 0.8 * sig;
      warm[ix.rho_i(pos)] = intf + 0.1 * (1.0 + intf);
      warm[ix.kappa_i(pos)] = pb.kappa_floor[pos] + 0.01;
    }

    SolveOptions sopts;
    sopts.tol = cfg.solver_tol;
    SolveResult r = solve_cone_program(pb.prog, warm, sopts);
    out.status = r.status;
    if (r.status != SolveStatus::kOptimal) break;

    double slack = 0.0;
    for (int mm = 0; mm < cfg.num_ris_elements; ++mm)
      slack += std::max(0.0, r.x[ix.b_i(mm)]) + std::max(0.0, r.x[ix.c_i(mm)]);

    // Renormalize to exact unit modulus (zero entries keep their phase).
    RVec th(cfg.num_ris_elements);
    for (int mm = 0; mm < cfg.num_ris_elements; ++mm) {
      cxd em(r.x[ix.e_re(mm)], r.x[ix.e_im(mm)]);
      th[mm] = std::abs(em) > 1e-12 ? std::arg(em) : cur.phases.theta[mm];
    }
    auto [cand, cand_q] = polish(PhaseVector::from_theta(th));
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
    out.penalty_slack = slack;
    out.accepted = true;
    out.score_gain = cur_q.score - initial_score;
    if (!improves) break;
  }

  if (out.accepted) {
    // Refresh the certified Eve bounds at the normalized phases.
    for (int k = 0; k < cfg.num_users; ++k) {
      out.eve_gain_bound_n[k] = detail::wc_gain_noise(cfg, st.csi, out.phases.e, k);
      out.eve_snr_bound[k] = st.alloc.tx_power_w[k] * out.eve_gain_bound_n[k];
    }
  }
  return out;
}

namespace detail {

inline RobustState make_robust_state(const SystemConfig& cfg, const ChannelSet& cs,
                                     const EveCsi& csi, const Allocation& alloc,
                                     const MudMatrix& mud, const PhaseVector& phases,
                                     double penalty) {
  RobustState st;
  st.alloc = alloc;
  st.mud = mud;
  st.phases = phases;
  st.eff = effective_channels(cs, phases);
  st.order = sic_order(st.eff.to_ap);
  st.csi = csi;
  st.penalty = penalty;
  st.eve_gain_bound_n.resize(cfg.num_users);
  st.eve_snr_bound.resize(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k) {
    st.eve_gain_bound_n[k] = wc_gain_noise(cfg, csi, phases.e, k);
    st.eve_snr_bound[k] = alloc.tx_power_w[k] * st.eve_gain_bound_n[k];
  }
  st.mu_h = RVec::Zero(cfg.num_users);
  st.mu_g = RVec::Zero(cfg.num_users);
  st.energy_j = energies(cfg, alloc).total_j;
  return st;
}

}  // namespace detail

/// Algorithm: robust BCD with the dual stopping rule (relative energy
/// change and PCC slack both below their tolerances) and the penalty
/// schedule lambda <- min(growth * lambda, lambda_max) per iteration.
inline std::pair<Solution, BcdTrace> run_bcd_robust(
    const SystemConfig& cfg, const ChannelSet& cs, const EveCsi& csi,
    const BcdOptions& opts, const std::optional<Solution>& init = std::nullopt) {
  cfg.validate();

  PhaseVector phases;
  MudMatrix mud;
  bool warm_blocks = false;
  if (init) {
    phases = init->phases;
    mud = init->detection;
    warm_blocks = true;
  } else {
    // Nominal-design-then-robustify: the nominal-CSI optimizer provides the
    // phase and detector blocks; the allocation restarts from the always-
    // robust all-local corner so the energy trace stays monotone.
    auto [nominal, nominal_trace] = run_bcd_perfect(cfg, cs, opts);
    (void)nominal_trace;
    phases = nominal.phases;
    mud = nominal.detection;
    warm_blocks = true;
  }

  Allocation alloc;
  if (init) {
    alloc = init->alloc;
  } else {
    alloc.local_bits.resize(cfg.num_users);
    for (int k = 0; k < cfg.num_users; ++k) alloc.local_bits[k] = cfg.task_bits[k];
    alloc.tx_power_w = RVec::Zero(cfg.num_users);
  }
  if (!warm_blocks) mud = detail::mrc_detection(cfg, effective_channels(cs, phases));

  RobustState state =
      detail::make_robust_state(cfg, cs, csi, alloc, mud, phases, cfg.penalty_initial);
  BcdTrace trace;
  double total_bits = 0.0;
  for (int k = 0; k < cfg.num_users; ++k) total_bits += cfg.task_bits[k];

  double last_phase_gain = 0.0;
  auto sweep = [&](IterationRecord& rec, RandomStream& rng) {
    last_phase_gain = 0.0;
    Coefficients coef = coefficients(cfg, state.eff, state.mud);

    RobustAllocationResult ar = solve_allocation_robust(cfg, state, coef);
    rec.alloc_status = ar.status;
    rec.alloc_accepted = rec.alloc_accepted || ar.accepted;
    if (ar.accepted) {
      state.alloc = ar.alloc;
      state.eve_snr_bound = ar.eve_snr_bound;
      state.eve_gain_bound_n = ar.eve_gain_bound_n;
      state.mu_h = ar.mu_h;
      state.mu_g = ar.mu_g;
    }

    if (total_bits > 0.0) {
      DetectionResult dr = solve_detection_robust(cfg, state, coef, rng);
      rec.detect_status = dr.status;
      rec.detect_accepted = rec.detect_accepted || dr.updated_users > 0;
      if (dr.updated_users > 0) state.mud = dr.mud;

      if (opts.optimize_phases && cfg.num_ris_elements > 0) {
        PccResult pr = solve_phases_pcc(cfg, state, cs, state.penalty);
        rec.phase_status = pr.status;
        rec.phase_accepted = rec.phase_accepted || pr.accepted;
        last_phase_gain = pr.accepted ? pr.score_gain : 0.0;
        if (pr.accepted) {
          state.phases = pr.phases;
          state.eff = effective_channels(cs, state.phases);
          state.order = sic_order(state.eff.to_ap);
          state.eve_snr_bound = pr.eve_snr_bound;
          state.eve_gain_bound_n = pr.eve_gain_bound_n;
          state.penalty_slack = pr.penalty_slack;
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

    for (int cycle = 0; cycle < 6; ++cycle) {
      double e_before = state.energy_j;
      RandomStream rng(opts.master_seed, opts.realization,
                       link::kRandomization + 64 * static_cast<std::uint64_t>(it) +
                           8 * static_cast<std::uint64_t>(cycle) + 1);
      sweep(rec, rng);
      double gain = e_before - state.energy_j;
      bool energy_done = gain <= 0.5 * cfg.bcd_tol * std::max(state.energy_j, 1e-12);
      bool phases_done = last_phase_gain <= 1e-4;
      if (energy_done && phases_done) break;
    }

    rec.min_margin =
        detail::robust_margins(cfg, cs, csi, state.phases, state.mud, state.alloc)
            .minCoeff();
    rec.energy_j = state.energy_j;
    rec.penalty_slack = state.penalty_slack;
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    trace.iterations.push_back(rec);
    trace.iteration_count = it + 1;

    bool all_failed = !rec.alloc_accepted && !rec.detect_accepted && !rec.phase_accepted;
    consecutive_stalls = all_failed ? consecutive_stalls + 1 : 0;
    if (consecutive_stalls >= 2) break;

    // The state phases are renormalized to exact unit modulus after every
    // accepted PCC solve, so the unit-modulus requirement holds by
    // construction; the recorded relaxation slack is diagnostic only and
    // convergence follows the relative energy change.
    double rel = std::abs(state.energy_j - e_prev) / std::max(std::abs(e_prev), 1e-12);
    if (rel <= cfg.bcd_tol || total_bits <= 0.0) {
      trace.converged = true;
      break;
    }
    e_prev = state.energy_j;
    state.penalty = std::min(cfg.penalty_growth * state.penalty, cfg.penalty_max);
  }

  Solution sol;
  sol.alloc = state.alloc;
  sol.detection = state.mud;
  sol.phases = state.phases;
  sol.order = state.order;
  sol.rates = model_rates(cfg, state.eff, state.mud, state.alloc.tx_power_w, state.order);
  for (int k = 0; k < cfg.num_users; ++k) {
    double snr_e = state.alloc.tx_power_w[k] *
                   detail::wc_gain_noise(cfg, csi, state.phases.e, k);
    sol.rates.snr_eve[k] = snr_e;
    sol.rates.secrecy_rate[k] =
        std::max(0.0, log2_1p(sol.rates.sinr_ap[k]) - log2_1p(snr_e));
  }
  sol.rates.target_rate = required_rate(cfg, state.alloc.local_bits);
  sol.rates.margin = sol.rates.secrecy_rate - sol.rates.target_rate;
  sol.energy = energies(cfg, state.alloc);
  return {sol, trace};
}

}  // namespace rismec

