// SPDX-License-Identifier: Apache-2.0
//
// rismec — RIS-assisted secure NOMA-MEC energy minimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "rismec/scenario.hpp"
#include "rismec/types.hpp"

namespace rismec {

inline double log2_1p(double x) { return std::log1p(x) / std::numbers::ln2; }

/// SINRs and secrecy rates under perfect SIC: user k sees interference
/// only from users decoded after it.
inline RateReport model_rates(const SystemConfig& cfg, const EffectiveChannels& eff,
                              const MudMatrix& mud, const RVec& power,
                              const SicOrder& order) {
  const int k_count = cfg.num_users;
  if (static_cast<int>(eff.to_ap.size()) != k_count || power.size() != k_count ||
      mud.w.cols() != k_count)
    throw std::invalid_argument("model_rates: dimension mismatch");

  RateReport rep;
  rep.sinr_ap.resize(k_count);
  rep.snr_eve.resize(k_count);
  rep.secrecy_rate.resize(k_count);
  rep.target_rate = RVec::Zero(k_count);
  rep.margin = RVec::Zero(k_count);

  for (int rank = 0; rank < k_count; ++rank) {
    int k = order.perm[rank];
    const CVec w = mud.col(k);
    double signal = power[k] * std::norm(w.dot(eff.to_ap[k]));
    double interference = 0.0;
    for (int r2 = rank + 1; r2 < k_count; ++r2) {
      int j = order.perm[r2];
      interference += power[j] * std::norm(w.dot(eff.to_ap[j]));
    }
    rep.sinr_ap[k] = signal / (interference + cfg.noise_ap_w * w.squaredNorm());
    rep.snr_eve[k] = power[k] * eff.to_eve[k].squaredNorm() / cfg.noise_eve_w;
    rep.secrecy_rate[k] =
        std::max(0.0, log2_1p(rep.sinr_ap[k]) - log2_1p(rep.snr_eve[k]));
  }
  return rep;
}

/// Local cubic-frequency energy plus offload energy per Eq.-of-motion of the
/// optimal identical CPU frequency schedule.
inline EnergyReport energies(const SystemConfig& cfg, const Allocation& alloc) {
  const int k_count = cfg.num_users;
  if (alloc.local_bits.size() != k_count || alloc.tx_power_w.size() != k_count)
    throw std::invalid_argument("energies: dimension mismatch");
  EnergyReport rep;
  rep.local_j.resize(k_count);
  rep.offload_j.resize(k_count);
  double total = 0.0;
  for (int k = 0; k < k_count; ++k) {
    double c = cfg.cycles_per_bit[k];
    double l = alloc.local_bits[k];
    rep.local_j[k] = cfg.cap_coeff[k] * c * c * c * l * l * l /
                     (cfg.duration_s * cfg.duration_s);
    rep.offload_j[k] = alloc.tx_power_w[k] * cfg.duration_s;
    total += rep.local_j[k] + rep.offload_j[k];
  }
  rep.total_j = total;
  return rep;
}

/// Target secrecy rate r_k = (L_k - l_k) / (B T) in bits/s/Hz.
inline RVec required_rate(const SystemConfig& cfg, const RVec& local_bits) {
  if (local_bits.size() != cfg.num_users)
    throw std::invalid_argument("required_rate: dimension mismatch");
  RVec r(cfg.num_users);
  double bt = cfg.bandwidth_hz * cfg.duration_s;
  for (int k = 0; k < cfg.num_users; ++k)
    r[k] = (cfg.task_bits[k] - local_bits[k]) / bt;
  return r;
}

/// Exact maximum of ||g_k||^2 over the CSI error balls: the triangle
/// inequality bound (||t|| + eps_e + eps_g ||e||)^2 is attained by rank-one
/// perturbations aligned with the nominal direction.
inline double worst_case_eve_gain(const EveCsi& csi, const CVec& e, int k) {
  const CVec t = csi.h_e_nominal[k] + csi.cascade_nominal[k] * e;
  double bound = t.norm() + csi.eps_direct[k] + csi.eps_cascade[k] * e.norm();
  return bound * bound;
}

enum class CsiMode { kPerfect, kRobust };

struct SolutionAudit {
  RateReport rates;
  EnergyReport energy;
  bool feasible = false;
  double min_margin = 0.0;
};

/// Recomputes rates and energies for a full decision point and checks
/// bounds plus secrecy margins (robust mode uses the worst-case Eve gain).
inline SolutionAudit evaluate_solution(const SystemConfig& cfg, const ChannelSet& cs,
                                       const Solution& sol, CsiMode mode,
                                       const EveCsi* csi = nullptr) {
  if (mode == CsiMode::kRobust && csi == nullptr)
    throw std::invalid_argument("evaluate_solution: robust mode needs EveCsi");

  SolutionAudit audit;
  EffectiveChannels eff = effective_channels(cs, sol.phases);
  audit.rates = model_rates(cfg, eff, sol.detection, sol.alloc.tx_power_w, sol.order);
  if (mode == CsiMode::kRobust) {
    for (int k = 0; k < cfg.num_users; ++k) {
      double wc = worst_case_eve_gain(*csi, sol.phases.e, k);
      audit.rates.snr_eve[k] = sol.alloc.tx_power_w[k] * wc / cfg.noise_eve_w;
      audit.rates.secrecy_rate[k] = std::max(
          0.0, log2_1p(audit.rates.sinr_ap[k]) - log2_1p(audit.rates.snr_eve[k]));
    }
  }
  audit.rates.target_rate = required_rate(cfg, sol.alloc.local_bits);
  audit.rates.margin = audit.rates.secrecy_rate - audit.rates.target_rate;
  audit.energy = energies(cfg, sol.alloc);

  bool bounds_ok = true;
  for (int k = 0; k < cfg.num_users; ++k) {
    double l = sol.alloc.local_bits[k], p = sol.alloc.tx_power_w[k];
    double l_slack = 1e-9 * (1.0 + cfg.task_bits[k]);
    double p_slack = 1e-9 * (1.0 + cfg.power_budget_w[k]);
    if (l < -l_slack || l > cfg.task_bits[k] + l_slack) bounds_ok = false;
    if (p < -p_slack || p > cfg.power_budget_w[k] + p_slack) bounds_ok = false;
  }
  audit.min_margin = audit.rates.margin.minCoeff();
  audit.feasible = bounds_ok && audit.min_margin >= -cfg.feasibility_tol;
  return audit;
}

}  // namespace rismec
