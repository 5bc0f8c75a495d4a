// SPDX-License-Identifier: Apache-2.0
//
// rismec — RIS-assisted secure NOMA-MEC energy minimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Rank-one recovery from SDR solutions: Gaussian randomization for
// detection vectors and unit-modulus reflection vectors, plus phase
// extraction from the augmented vector.

#pragma once

#include <functional>
#include <stdexcept>

#include "rismec/linalg.hpp"
#include "rismec/rng.hpp"
#include "rismec/types.hpp"

namespace rismec {

/// Lifted SDR solution with its eigen-gap diagnostic.
struct LiftedSolution {
  HermitianMatrix x;
  double eigen_gap_ratio = 0.0;  // lambda2 / lambda1

  static LiftedSolution from(const CMat& m) {
    LiftedSolution ls;
    ls.x = HermitianMatrix::from(m, 1e-7);
    EigResult eig = hermitian_eig(ls.x);
    double l1 = std::max(eig.values[0], 0.0);
    double l2 = ls.x.order() > 1 ? std::max(eig.values[1], 0.0) : 0.0;
    ls.eigen_gap_ratio = l1 > 0.0 ? l2 / l1 : 0.0;
    return ls;
  }
};

/// Candidate quality as seen by the caller: larger score wins; candidates
/// whose feasibility margin is below -1e-6 are discarded. When every
/// candidate is discarded the best-margin one is returned with `degraded`.
struct CandidateQuality {
  double score = 0.0;
  double margin = 0.0;
};

template <typename V>
struct RandomizeResult {
  V value;
  CandidateQuality quality;
  bool degraded = false;
};

namespace detail {

inline constexpr double kCandidateMarginTol = 1e-6;

template <typename V, typename Gen, typename Eval>
RandomizeResult<V> pick_best(int count, Gen&& generate, Eval&& evaluate,
                             const V& deterministic) {
  RandomizeResult<V> best_feasible;
  RandomizeResult<V> best_margin;
  bool have_feasible = false;
  bool have_any = false;

  auto consider = [&](const V& cand) {
    CandidateQuality q = evaluate(cand);
    if (!have_any || q.margin > best_margin.quality.margin) {
      best_margin.value = cand;
      best_margin.quality = q;
      have_any = true;
    }
    if (q.margin >= -kCandidateMarginTol &&
        (!have_feasible || q.score > best_feasible.quality.score)) {
      best_feasible.value = cand;
      best_feasible.quality = q;
      have_feasible = true;
    }
  };

  consider(deterministic);
  for (int i = 0; i < count; ++i) consider(generate());

  if (have_feasible) return best_feasible;
  best_margin.degraded = true;
  return best_margin;
}

}  // namespace detail

/// Gaussian randomization for a lifted detection matrix: candidates
/// w = Q Lambda^{1/2} z normalized to unit norm. The principal eigenvector
/// is always a candidate; a near-rank-one input short-circuits to it.
inline RandomizeResult<CVec> randomize_vector(
    const LiftedSolution& lifted,
    const std::function<CandidateQuality(const CVec&)>& quality, int count,
    RandomStream& rng) {
  if (count < 1) throw std::invalid_argument("randomize_vector: count must be >= 1");
  EigResult eig = hermitian_eig(lifted.x);
  const int n = lifted.x.order();
  CVec principal = eig.vectors.col(0).normalized();

  if (lifted.eigen_gap_ratio <= 1e-6) {
    RandomizeResult<CVec> r;
    r.value = principal;
    r.quality = quality(principal);
    r.degraded = r.quality.margin < -detail::kCandidateMarginTol;
    return r;
  }

  RVec sqrt_vals = eig.values.cwiseMax(0.0).cwiseSqrt();
  auto generate = [&]() {
    CVec z(n);
    for (int i = 0; i < n; ++i) z[i] = rng.cgauss();
    CVec w = eig.vectors * (sqrt_vals.asDiagonal() * z);
    double nw = w.norm();
    return nw > 0 ? CVec(w / nw) : principal;
  };
  return detail::pick_best<CVec>(count, generate, quality, principal);
}

/// Gaussian randomization for the lifted reflection matrix with unit
/// diagonal: candidates are exp(j arg(Q Lambda^{1/2} z)) entrywise, so every
/// output has exactly unit-modulus entries.
inline RandomizeResult<CVec> randomize_unit_modulus(
    const LiftedSolution& lifted,
    const std::function<CandidateQuality(const CVec&)>& quality, int count,
    RandomStream& rng) {
  if (count < 1) throw std::invalid_argument("randomize_unit_modulus: count must be >= 1");
  EigResult eig = hermitian_eig(lifted.x);
  const int n = lifted.x.order();

  auto project = [](const CVec& v) {
    CVec out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      double a = std::abs(v[i]);
      out[i] = a > 0 ? v[i] / a : cxd(1.0, 0.0);
    }
    return out;
  };

  CVec principal = project(eig.vectors.col(0));
  if (lifted.eigen_gap_ratio <= 1e-6) {
    RandomizeResult<CVec> r;
    r.value = principal;
    r.quality = quality(principal);
    r.degraded = r.quality.margin < -detail::kCandidateMarginTol;
    return r;
  }

  RVec sqrt_vals = eig.values.cwiseMax(0.0).cwiseSqrt();
  auto generate = [&]() {
    CVec z(n);
    for (int i = 0; i < n; ++i) z[i] = rng.cgauss();
    return project(eig.vectors * (sqrt_vals.asDiagonal() * z));
  };
  return detail::pick_best<CVec>(count, generate, quality, principal);
}

/// Phase extraction from the augmented reflection vector: theta_m is the
/// angle of e_bar[m] relative to the reference entry e_bar[M], in [0, 2pi).
inline RVec extract_phases(const CVec& e_bar) {
  const int m = static_cast<int>(e_bar.size()) - 1;
  if (m < 0) throw std::invalid_argument("extract_phases: empty vector");
  if (std::abs(e_bar[m]) == 0.0)
    throw std::domain_error("extract_phases: zero reference entry");
  RVec theta(m);
  for (int i = 0; i < m; ++i) {
    if (std::abs(e_bar[i]) == 0.0)
      throw std::domain_error("extract_phases: zero entry");
    double t = std::arg(e_bar[i] / e_bar[m]);
    if (t < 0) t += kTwoPi;
    theta[i] = t;
  }
  return theta;
}

}  // namespace rismec
