// SPDX-License-Identifier: Apache-2.0
//
// rismec — RIS-assisted secure NOMA-MEC energy minimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace rismec {

using cxd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

/// Scalar parameters of the network, tasks, and algorithms. Per-user
/// quantities are stored as length-K vectors.
struct SystemConfig {
  int num_users = 3;        // K
  int num_ris_elements = 5; // M
  int num_ap_antennas = 5;  // N_a
  int num_eve_antennas = 3; // N_e

  double bandwidth_hz = 1e6;
  double duration_s = 0.1;

  std::vector<double> task_bits;       // L_k
  std::vector<double> cycles_per_bit;  // C_k
  std::vector<double> cap_coeff;       // effective capacitance of the chip
  std::vector<double> power_budget_w;  // P_k

  double noise_ap_w = dbm_to_watts(-90.0);
  double noise_eve_w = dbm_to_watts(-90.0);

  // Eavesdropper CSI error radii, relative to the nominal channel norms.
  double eve_err_direct = 0.01;   // scales ||h_e,k||
  double eve_err_cascade = 0.01;  // scales ||G_k||_F

  // Algorithm knobs.
  double bcd_tol = 1e-3;          // relative energy change stopping rule
  int bcd_max_iters = 50;
  double solver_tol = 1e-7;
  int randomization_count = 100;
  double feasibility_tol = 1e-6;  // secrecy margin slack
  double penalty_initial = 10.0;
  double penalty_max = 1e3;
  double penalty_growth = 5.0;
  double pcc_slack_tol = 1e-5;    // epsilon_1 of the penalty stopping rule

  /// Broadcasts scalar task parameters to all K users.
  void fill_user_defaults(double bits = 3e5, double cycles = 1000.0,
                          double cap = 1e-28, double budget = 0.1) {
    task_bits.assign(num_users, bits);
    cycles_per_bit.assign(num_users, cycles);
    cap_coeff.assign(num_users, cap);
    power_budget_w.assign(num_users, budget);
  }

  void validate() const {
    if (num_users < 1) throw std::invalid_argument("num_users must be >= 1");
    if (num_ris_elements < 0) throw std::invalid_argument("num_ris_elements must be >= 0");
    if (num_ap_antennas < 1) throw std::invalid_argument("num_ap_antennas must be >= 1");
    if (num_eve_antennas < 1) throw std::invalid_argument("num_eve_antennas must be >= 1");
    if (bandwidth_hz <= 0) throw std::invalid_argument("bandwidth_hz must be positive");
    if (duration_s <= 0) throw std::invalid_argument("duration_s must be positive");
    if (noise_ap_w <= 0 || noise_eve_w <= 0) throw std::invalid_argument("noise powers must be positive");
    auto check_user_vec = [&](const std::vector<double>& v, const char* name, bool strict) {
      if (static_cast<int>(v.size()) != num_users)
        throw std::invalid_argument(std::string(name) + " must have K entries");
      for (double x : v)
        if (x < 0 || (strict && x <= 0))
          throw std::invalid_argument(std::string(name) + " out of range");
    };
    check_user_vec(task_bits, "task_bits", false);
    check_user_vec(cycles_per_bit, "cycles_per_bit", true);
    check_user_vec(cap_coeff, "cap_coeff", true);
    check_user_vec(power_budget_w, "power_budget_w", true);
    if (eve_err_direct < 0 || eve_err_cascade < 0)
      throw std::invalid_argument("CSI error radii must be nonnegative");
  }
};

/// Node placement and the large-scale propagation model.
struct Geometry {
  Vec2 ap_pos{0.0, 0.0};
  Vec2 ris_pos{0.0, 10.0};
  Vec2 eve_pos{0.0, -10.0};
  Vec2 user_center{70.0, 0.0};
  double user_radius = 5.0;

  double exp_user_ap = 4.0;
  double exp_user_eve = 4.0;
  double exp_user_ris = 2.0;
  double exp_ris_ap = 2.2;
  double exp_ris_eve = 2.5;

  double ref_gain = db_to_linear(-30.0);  // linear power gain at 1 m

  void validate() const {
    if (user_radius < 0) throw std::invalid_argument("user_radius must be nonnegative");
    if (ref_gain <= 0) throw std::invalid_argument("ref_gain must be positive");
    for (double a : {exp_user_ap, exp_user_eve, exp_user_ris, exp_ris_ap, exp_ris_eve})
      if (a < 1.0 || a > 6.0)
        throw std::invalid_argument("path-loss exponents must lie in [1, 6]");
  }
};

/// Unit-modulus reflection coefficients e_m = exp(j theta_m).
struct PhaseVector {
  CVec e;      // length M
  RVec theta;  // length M, each in [0, 2pi)

  static PhaseVector from_theta(const RVec& th) {
    PhaseVector pv;
    pv.theta = th;
    pv.e.resize(th.size());
    for (Eigen::Index m = 0; m < th.size(); ++m) {
      double t = std::fmod(th[m], kTwoPi);
      if (t < 0) t += kTwoPi;
      pv.theta[m] = t;
      pv.e[m] = std::polar(1.0, t);
    }
    return pv;
  }

  static PhaseVector zero_reflection(int m) {
    // Baseline probe with the unit-modulus constraint deliberately bypassed.
    PhaseVector pv;
    pv.e = CVec::Zero(m);
    pv.theta = RVec::Zero(m);
    return pv;
  }

  int size() const { return static_cast<int>(e.size()); }
};

/// SIC decoding order: perm[r] is the user decoded at rank r, gains
/// non-increasing along perm, ties broken by ascending user index.
struct SicOrder {
  std::vector<int> perm;

  int rank_of(int user) const {
    for (int r = 0; r < static_cast<int>(perm.size()); ++r)
      if (perm[r] == user) return r;
    throw std::logic_error("user not in SIC order");
  }
};

struct Allocation {
  RVec local_bits;  // l_k
  RVec tx_power_w;  // p_k
};

/// Bank of unit-norm detection vectors, one column per user.
struct MudMatrix {
  CMat w;  // N_a x K

  CVec col(int k) const { return w.col(k); }
};

struct RateReport {
  RVec sinr_ap;      // gamma_k (linear)
  RVec snr_eve;      // gamma_e,k (linear)
  RVec secrecy_rate; // Rs_k, clamped at 0, bits/s/Hz
  RVec target_rate;  // r_k, bits/s/Hz
  RVec margin;       // Rs_k - r_k
};

struct EnergyReport {
  RVec local_j;
  RVec offload_j;
  double total_j = 0.0;
};

/// Nominal eavesdropper channels plus absolute error-ball radii.
struct EveCsi {
  std::vector<CVec> h_e_nominal;        // N_e per user
  std::vector<CMat> cascade_nominal;    // N_e x M per user (G diag(h_r,k))
  RVec eps_direct;                      // Euclidean radius per user
  RVec eps_cascade;                     // Frobenius radius per user
};

/// One full decision point with derived reports.
struct Solution {
  Allocation alloc;
  MudMatrix detection;
  PhaseVector phases;
  SicOrder order;
  RateReport rates;
  EnergyReport energy;
};

}  // namespace rismec
