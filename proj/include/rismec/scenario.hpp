// SPDX-License-Identifier: Apache-2.0
//
// rismec — RIS-assisted secure NOMA-MEC energy minimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "rismec/rng.hpp"
#include "rismec/types.hpp"

namespace rismec {

/// One realization of all complex channels. Cascaded Eve channels
/// G_cascade[k] = G diag(h_r[k]) are kept alongside the raw links.
struct ChannelSet {
  std::vector<CVec> h_ap;     // user k -> AP, length N_a
  std::vector<CVec> h_ris;    // user k -> RIS, length M
  std::vector<CVec> h_eve;    // user k -> Eve, length N_e
  CMat ris_ap;                // H, N_a x M
  CMat ris_eve;               // G, N_e x M
  std::vector<CMat> eve_cascade;  // G diag(h_r[k]), N_e x M

  int num_users() const { return static_cast<int>(h_ap.size()); }

  /// Zeroes every reflected link; the no-RIS baseline keeps the dimensions.
  ChannelSet without_ris() const {
    ChannelSet cs = *this;
    for (auto& h : cs.h_ris) h.setZero();
    cs.ris_ap.setZero();
    cs.ris_eve.setZero();
    for (auto& g : cs.eve_cascade) g.setZero();
    return cs;
  }
};

/// Large-scale path gain L0 * d^-alpha with the distance clamped at the
/// 1 m reference.
inline double path_gain(double distance_m, double exponent, double ref_gain) {
  if (distance_m <= 0.0) throw std::domain_error("path_gain: distance must be positive");
  double d = std::max(distance_m, 1.0);
  return ref_gain * std::pow(d, -exponent);
}

/// Draws K user positions uniformly over the disk about the user center.
inline std::vector<Vec2> sample_geometry(const SystemConfig& cfg, const Geometry& geo,
                                         RandomStream& rng) {
  if (geo.user_radius < 0) throw std::invalid_argument("sample_geometry: negative radius");
  std::vector<Vec2> pos(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k)
    pos[k] = rng.disk_point(geo.user_center, geo.user_radius);
  return pos;
}

namespace detail {

inline CVec rayleigh_vector(int n, double gain, RandomStream& rng) {
  CVec v(n);
  double amp = std::sqrt(gain);
  for (int i = 0; i < n; ++i) v[i] = amp * rng.cgauss();
  return v;
}

}  // namespace detail

/// Samples every link: entries are sqrt(path gain) times unit-variance
/// Rayleigh fading, independent across entries, users, and links.
inline ChannelSet sample_channels(const SystemConfig& cfg, const Geometry& geo,
                                  const std::vector<Vec2>& user_pos,
                                  std::uint64_t master_seed, std::uint64_t realization) {
  if (static_cast<int>(user_pos.size()) != cfg.num_users)
    throw std::invalid_argument("sample_channels: position count mismatch");
  const int m = cfg.num_ris_elements;
  ChannelSet cs;
  cs.h_ap.resize(cfg.num_users);
  cs.h_ris.resize(cfg.num_users);
  cs.h_eve.resize(cfg.num_users);
  cs.eve_cascade.resize(cfg.num_users);

  for (int k = 0; k < cfg.num_users; ++k) {
    double d_ap = (user_pos[k] - geo.ap_pos).norm();
    double d_ris = (user_pos[k] - geo.ris_pos).norm();
    double d_eve = (user_pos[k] - geo.eve_pos).norm();
    RandomStream s_ap(master_seed, realization, link::per_user(link::kUserAp, k));
    RandomStream s_ris(master_seed, realization, link::per_user(link::kUserRis, k));
    RandomStream s_eve(master_seed, realization, link::per_user(link::kUserEve, k));
    cs.h_ap[k] = detail::rayleigh_vector(cfg.num_ap_antennas,
                                         path_gain(d_ap, geo.exp_user_ap, geo.ref_gain), s_ap);
    cs.h_ris[k] = detail::rayleigh_vector(m, path_gain(d_ris, geo.exp_user_ris, geo.ref_gain), s_ris);
    cs.h_eve[k] = detail::rayleigh_vector(cfg.num_eve_antennas,
                                          path_gain(d_eve, geo.exp_user_eve, geo.ref_gain), s_eve);
  }

  double d_ris_ap = (geo.ris_pos - geo.ap_pos).norm();
  double d_ris_eve = (geo.ris_pos - geo.eve_pos).norm();
  double g_ris_ap = m > 0 ? path_gain(d_ris_ap, geo.exp_ris_ap, geo.ref_gain) : 0.0;
  double g_ris_eve = m > 0 ? path_gain(d_ris_eve, geo.exp_ris_eve, geo.ref_gain) : 0.0;
  RandomStream s_h(master_seed, realization, link::kRisAp);
  RandomStream s_g(master_seed, realization, link::kRisEve);
  cs.ris_ap.resize(cfg.num_ap_antennas, m);
  cs.ris_eve.resize(cfg.num_eve_antennas, m);
  {
    double amp_h = std::sqrt(g_ris_ap);
    double amp_g = std::sqrt(g_ris_eve);
    for (int c = 0; c < m; ++c)
      for (int r = 0; r < cfg.num_ap_antennas; ++r) cs.ris_ap(r, c) = amp_h * s_h.cgauss();
    for (int c = 0; c < m; ++c)
      for (int r = 0; r < cfg.num_eve_antennas; ++r) cs.ris_eve(r, c) = amp_g * s_g.cgauss();
  }

  for (int k = 0; k < cfg.num_users; ++k)
    cs.eve_cascade[k] = cs.ris_eve * cs.h_ris[k].asDiagonal();
  return cs;
}

struct EffectiveChannels {
  std::vector<CVec> to_ap;   // h_k = h_a,k + H diag(e) h_r,k
  std::vector<CVec> to_eve;  // g_k = h_e,k + G diag(e) h_r,k
};

/// Composes the RIS-equivalent channels for a given reflection vector.
inline EffectiveChannels effective_channels(const ChannelSet& cs, const CVec& e) {
  if (e.size() != cs.ris_ap.cols())
    throw std::invalid_argument("effective_channels: phase vector length mismatch");
  EffectiveChannels out;
  const int k_count = cs.num_users();
  out.to_ap.resize(k_count);
  out.to_eve.resize(k_count);
  for (int k = 0; k < k_count; ++k) {
    if (e.size() > 0) {
      CVec reflected = e.asDiagonal() * cs.h_ris[k];
      out.to_ap[k] = cs.h_ap[k] + cs.ris_ap * reflected;
      out.to_eve[k] = cs.h_eve[k] + cs.ris_eve * reflected;
    } else {
      out.to_ap[k] = cs.h_ap[k];
      out.to_eve[k] = cs.h_eve[k];
    }
  }
  return out;
}

inline EffectiveChannels effective_channels(const ChannelSet& cs, const PhaseVector& pv) {
  return effective_channels(cs, pv.e);
}

/// Descending equivalent-gain decoding order with stable index tie-break.
inline SicOrder sic_order(const std::vector<CVec>& h_eff) {
  if (h_eff.empty()) throw std::invalid_argument("sic_order: needs at least one user");
  SicOrder ord;
  ord.perm.resize(h_eff.size());
  std::iota(ord.perm.begin(), ord.perm.end(), 0);
  std::vector<double> gain(h_eff.size());
  for (size_t k = 0; k < h_eff.size(); ++k) gain[k] = h_eff[k].norm();
  std::stable_sort(ord.perm.begin(), ord.perm.end(),
                   [&](int a, int b) { return gain[a] > gain[b]; });
  return ord;
}

/// Builds the eavesdropper CSI view: nominal channels are the sampled ones,
/// radii scale with the nominal norms (relative error model).
inline EveCsi make_eve_csi(const ChannelSet& cs, double err_direct, double err_cascade) {
  EveCsi csi;
  const int k_count = cs.num_users();
  csi.h_e_nominal.resize(k_count);
  csi.cascade_nominal.resize(k_count);
  csi.eps_direct.resize(k_count);
  csi.eps_cascade.resize(k_count);
  for (int k = 0; k < k_count; ++k) {
    csi.h_e_nominal[k] = cs.h_eve[k];
    csi.cascade_nominal[k] = cs.eve_cascade[k];
    csi.eps_direct[k] = err_direct * cs.h_eve[k].norm();
    csi.eps_cascade[k] = err_cascade * cs.eve_cascade[k].norm();
  }
  return csi;
}

}  // namespace rismec
