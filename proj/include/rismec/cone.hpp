// SPDX-License-Identifier: Apache-2.0
//
// rismec — RIS-assisted secure NOMA-MEC energy minimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Barrier interior-point solver for smooth convex programs over free /
// nonnegative / Hermitian-PSD variable blocks with affine equalities and
// affine LMIs. Phase I minimizes a uniform infeasibility shift; phase II
// follows the central path with damped Newton steps. -ln det barriers on
// PSD blocks and LMIs, -ln barriers on nonnegative coordinates and smooth
// inequality constraints g_i(x) >= 0 (g_i concave).

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "rismec/linalg.hpp"
#include "rismec/types.hpp"

namespace rismec {

enum class SolveStatus { kOptimal, kInfeasible, kMaxIterations, kNumericalFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kMaxIterations: return "max_iterations";
    case SolveStatus::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

/// Smooth scalar function of the full variable vector:
///   f(x) = constant + c.x + 0.5 x'Qx + sum w_i x_i^3 + sum w_t ln(a_t.x + b_t)
struct SmoothExpr {
  int dim = 0;
  double constant = 0.0;
  RVec linear;  // size dim (zero-size means none)
  RMat quad;    // symmetric, contributes 0.5 x'Qx (zero-size means none)
  std::vector<std::pair<int, double>> cubics;
  struct LogTerm {
    double weight;
    RVec a;
    double b;
  };
  std::vector<LogTerm> logs;

  static SmoothExpr zero(int d) {
    SmoothExpr e;
    e.dim = d;
    return e;
  }

  void add_linear(int i, double w) {
    if (linear.size() == 0) linear = RVec::Zero(dim);
    linear[i] += w;
  }

  void add_linear_vec(const RVec& c) {
    if (linear.size() == 0) linear = RVec::Zero(dim);
    linear += c;
  }

  void add_quad(const RMat& q) {
    if (quad.size() == 0) quad = RMat::Zero(dim, dim);
    quad += q;
  }

  void add_cubic(int i, double w) { cubics.emplace_back(i, w); }

  void add_log(double weight, RVec a, double b) { logs.push_back({weight, std::move(a), b}); }

  bool in_domain(const RVec& x) const {
    for (const auto& t : logs)
      if (t.a.dot(x) + t.b <= 0.0) return false;
    return true;
  }

  double value(const RVec& x) const {
    double v = constant;
    if (linear.size() > 0) v += linear.dot(x);
    if (quad.size() > 0) v += 0.5 * x.dot(quad * x);
    for (const auto& [i, w] : cubics) v += w * x[i] * x[i] * x[i];
    for (const auto& t : logs) v += t.weight * std::log(t.a.dot(x) + t.b);
    return v;
  }

  void add_gradient(const RVec& x, RVec& g, double s = 1.0) const {
    if (linear.size() > 0) g += s * linear;
    if (quad.size() > 0) g.noalias() += s * (quad * x);
    for (const auto& [i, w] : cubics) g[i] += s * 3.0 * w * x[i] * x[i];
    for (const auto& t : logs) g += (s * t.weight / (t.a.dot(x) + t.b)) * t.a;
  }

  void add_hessian(const RVec& x, RMat& h, double s = 1.0) const {
    if (quad.size() > 0) h += s * quad;
    for (const auto& [i, w] : cubics) h(i, i) += s * 6.0 * w * x[i];
    for (const auto& t : logs) {
      double arg = t.a.dot(x) + t.b;
      h.noalias() -= (s * t.weight / (arg * arg)) * (t.a * t.a.transpose());
    }
  }

  RVec gradient(const RVec& x) const {
    RVec g = RVec::Zero(dim);
    add_gradient(x, g);
    return g;
  }

  RMat hessian(const RVec& x) const {
    RMat h = RMat::Zero(dim, dim);
    add_hessian(x, h);
    return h;
  }

  /// Extends the expression to a larger variable space (new coords unused).
  void extend_dim(int new_dim) {
    if (linear.size() > 0) {
      RVec l = RVec::Zero(new_dim);
      l.head(dim) = linear;
      linear = std::move(l);
    }
    if (quad.size() > 0) {
      RMat q = RMat::Zero(new_dim, new_dim);
      q.topLeftCorner(dim, dim) = quad;
      quad = std::move(q);
    }
    for (auto& t : logs) {
      RVec a = RVec::Zero(new_dim);
      a.head(dim) = t.a;
      t.a = std::move(a);
    }
    dim = new_dim;
  }
};

/// Hermitian-valued affine map F0 + sum x_i F_i required PSD.
struct AffineLmi {
  int order = 0;
  CMat f0;
  std::vector<std::pair<int, CMat>> coeffs;

  CMat eval(const RVec& x) const {
    CMat l = f0;
    for (const auto& [i, f] : coeffs) l.noalias() += x[i] * f;
    return l;
  }
};

struct PsdBlock {
  int offset = 0;
  int order = 0;
};

// ---------- PSD coordinate mapping ----------
// Block coordinates: n diagonal entries first, then (re, im) pairs for the
// strict upper triangle in row-major order.

namespace psd {

inline int coord_count(int n) { return n * n; }

inline CMat to_matrix(const PsdBlock& b, const RVec& x) {
  const int n = b.order;
  CMat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = x[b.offset + i];
  int c = b.offset + n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      m(i, j) = cxd(x[c], x[c + 1]);
      m(j, i) = std::conj(m(i, j));
      c += 2;
    }
  return m;
}

inline void from_matrix(const PsdBlock& b, const CMat& m, RVec& x) {
  const int n = b.order;
  for (int i = 0; i < n; ++i) x[b.offset + i] = m(i, i).real();
  int c = b.offset + n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      x[c] = m(i, j).real();
      x[c + 1] = m(i, j).imag();
      c += 2;
    }
}

/// Gradient of Tr(G X(x)) with respect to the block coordinates, accumulated
/// into a full-size vector. G must be Hermitian.
inline void add_trace_gradient(const PsdBlock& b, const CMat& g, RVec& out, double s = 1.0) {
  const int n = b.order;
  for (int i = 0; i < n; ++i) out[b.offset + i] += s * g(i, i).real();
  int c = b.offset + n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      out[c] += s * 2.0 * g(i, j).real();
      out[c + 1] += s * 2.0 * g(i, j).imag();
      c += 2;
    }
}

/// Linear coefficients of x -> Tr(G X(x)) as a full-size vector.
inline RVec trace_coeffs(const PsdBlock& b, int total_vars, const CMat& g) {
  RVec out = RVec::Zero(total_vars);
  add_trace_gradient(b, g, out);
  return out;
}

}  // namespace psd

/// A convex program over a flat coordinate vector. Layout: free coordinates,
/// one contiguous nonnegative range, PSD blocks as n^2-long coordinate runs.
struct ConeProgram {
  int total_vars = 0;
  int nonneg_begin = 0;
  int nonneg_count = 0;
  std::vector<PsdBlock> psd_blocks;
  SmoothExpr objective;
  std::vector<SmoothExpr> inequalities;
  std::vector<std::pair<RVec, double>> equalities;  // row . x = rhs
  std::vector<AffineLmi> lmis;

  int add_vars(int n) {
    int at = total_vars;
    total_vars += n;
    return at;
  }

  int add_psd_block(int order) {
    psd_blocks.push_back({total_vars, order});
    total_vars += psd::coord_count(order);
    return static_cast<int>(psd_blocks.size()) - 1;
  }

  void mark_nonneg(int begin, int count) {
    nonneg_begin = begin;
    nonneg_count = count;
  }

  void add_equality(RVec row, double rhs) { equalities.emplace_back(std::move(row), rhs); }

  int barrier_degree() const {
    int m = static_cast<int>(inequalities.size()) + nonneg_count;
    for (const auto& b : psd_blocks) m += b.order;
    for (const auto& l : lmis) m += l.order;
    return m;
  }
};

struct SolveOptions {
  double tol = 1e-7;
  double barrier_growth = 10.0;
  int max_newton_total = 6000;
  int max_newton_per_stage = 250;
  double center_tol = 1e-10;  // Newton decrement^2 / 2
};

struct SolveResult {
  SolveStatus status = SolveStatus::kNumericalFailure;
  RVec x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double max_violation = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::vector<double> stage_objectives;
};

namespace detail {

struct BarrierEval {
  bool in_domain = false;
  double value = 0.0;
  RVec grad;
  RMat hess;
};

// Evaluates the full log barrier. shift_var >= 0 adds x[shift_var] * I to
// every PSD block and LMI (phase-I uniform slack).
inline BarrierEval barrier_eval(const ConeProgram& p, const RVec& x, bool derivs,
                                int shift_var = -1) {
  BarrierEval out;
  const int n = p.total_vars;
  const double shift = shift_var >= 0 ? x[shift_var] : 0.0;
  if (derivs) {
    out.grad = RVec::Zero(n);
    out.hess = RMat::Zero(n, n);
  }

  for (int i = 0; i < p.nonneg_count; ++i) {
    int c = p.nonneg_begin + i;
    if (x[c] <= 0.0) return out;
    out.value -= std::log(x[c]);
    if (derivs) {
      out.grad[c] -= 1.0 / x[c];
      out.hess(c, c) += 1.0 / (x[c] * x[c]);
    }
  }

  for (const auto& g : p.inequalities) {
    if (!g.in_domain(x)) return out;
    double v = g.value(x);
    if (v <= 0.0) return out;
    out.value -= std::log(v);
    if (derivs) {
      RVec gg = RVec::Zero(n);
      g.add_gradient(x, gg);
      out.grad -= gg / v;
      out.hess.noalias() += (gg * gg.transpose()) / (v * v);
      g.add_hessian(x, out.hess, -1.0 / v);
    }
  }

  for (const auto& b : p.psd_blocks) {
    CMat m = psd::to_matrix(b, x);
    if (shift_var >= 0) m += shift * CMat::Identity(b.order, b.order);
    Eigen::LLT<CMat> llt(m);
    if (llt.info() != Eigen::Success) return out;
    double logdet = 0.0;
    for (int i = 0; i < b.order; ++i) logdet += std::log(llt.matrixL()(i, i).real());
    out.value -= 2.0 * logdet;
    if (!derivs) continue;

    const int order = b.order;
    CMat y = llt.solve(CMat::Identity(order, order));
    psd::add_trace_gradient(b, y, out.grad, -1.0);

    // Precompute the rank-one components (a, b, alpha) of each basis element.
    const int nc = psd::coord_count(order);
    struct Comp {
      int a, b;
      cxd alpha;
    };
    std::vector<std::array<Comp, 2>> comps(nc);
    std::vector<int> ncomp(nc);
    for (int i = 0; i < order; ++i) {
      comps[i][0] = {i, i, cxd(1, 0)};
      ncomp[i] = 1;
    }
    {
      int c = order;
      for (int i = 0; i < order; ++i)
        for (int j = i + 1; j < order; ++j) {
          comps[c][0] = {i, j, cxd(1, 0)};
          comps[c][1] = {j, i, cxd(1, 0)};
          ncomp[c] = 2;
          comps[c + 1][0] = {i, j, cxd(0, 1)};
          comps[c + 1][1] = {j, i, cxd(0, -1)};
          ncomp[c + 1] = 2;
          c += 2;
        }
    }
    // H[c1][c2] = Re sum_{s,t} alpha_s alpha_t Y(b_s, a_t) Y(b_t, a_s)
    for (int c1 = 0; c1 < nc; ++c1) {
      for (int c2 = c1; c2 < nc; ++c2) {
        cxd acc = 0.0;
        for (int s = 0; s < ncomp[c1]; ++s)
          for (int t = 0; t < ncomp[c2]; ++t) {
            const Comp& cs = comps[c1][s];
            const Comp& ct = comps[c2][t];
            acc += cs.alpha * ct.alpha * y(cs.b, ct.a) * y(ct.b, cs.a);
          }
        double hval = acc.real();
        out.hess(b.offset + c1, b.offset + c2) += hval;
        if (c2 != c1) out.hess(b.offset + c2, b.offset + c1) += hval;
      }
    }
    if (shift_var >= 0) {
      CMat y2 = y * y;
      out.grad[shift_var] -= y.trace().real();
      out.hess(shift_var, shift_var) += y2.trace().real();
      RVec cross = RVec::Zero(n);
      psd::add_trace_gradient(b, y2, cross, 1.0);
      for (int c = 0; c < nc; ++c) {
        out.hess(b.offset + c, shift_var) += cross[b.offset + c];
        out.hess(shift_var, b.offset + c) += cross[b.offset + c];
      }
    }
  }

  for (const auto& l : p.lmis) {
    CMat m = l.eval(x);
    if (shift_var >= 0) m += shift * CMat::Identity(l.order, l.order);
    Eigen::LLT<CMat> llt(m);
    if (llt.info() != Eigen::Success) return out;
    double logdet = 0.0;
    for (int i = 0; i < l.order; ++i) logdet += std::log(llt.matrixL()(i, i).real());
    out.value -= 2.0 * logdet;
    if (!derivs) continue;

    CMat y = llt.solve(CMat::Identity(l.order, l.order));
    std::vector<CMat> prods;
    std::vector<int> idx;
    prods.reserve(l.coeffs.size() + 1);
    idx.reserve(l.coeffs.size() + 1);
    for (const auto& [i, f] : l.coeffs) {
      CMat p_i = y * f;
      out.grad[i] -= p_i.trace().real();
      prods.emplace_back(std::move(p_i));
      idx.push_back(i);
    }
    if (shift_var >= 0) {
      out.grad[shift_var] -= y.trace().real();
      prods.emplace_back(y);
      idx.push_back(shift_var);
    }
    for (size_t a = 0; a < prods.size(); ++a)
      for (size_t c = a; c < prods.size(); ++c) {
        double hval = (prods[a] * prods[c]).trace().real();
        out.hess(idx[a], idx[c]) += hval;
        if (idx[a] != idx[c]) out.hess(idx[c], idx[a]) += hval;
      }
  }

  out.in_domain = true;
  return out;
}

inline bool in_domain(const ConeProgram& p, const RVec& x, int shift_var = -1) {
  if (!p.objective.in_domain(x)) return false;
  const double shift = shift_var >= 0 ? x[shift_var] : 0.0;
  for (int i = 0; i < p.nonneg_count; ++i)
    if (x[p.nonneg_begin + i] <= 0.0) return false;
  for (const auto& g : p.inequalities)
    if (!g.in_domain(x) || g.value(x) <= 0.0) return false;
  for (const auto& b : p.psd_blocks) {
    CMat m = psd::to_matrix(b, x);
    if (shift_var >= 0) m += shift * CMat::Identity(b.order, b.order);
    if (Eigen::LLT<CMat>(m).info() != Eigen::Success) return false;
  }
  for (const auto& l : p.lmis) {
    CMat m = l.eval(x);
    if (shift_var >= 0) m += shift * CMat::Identity(l.order, l.order);
    if (Eigen::LLT<CMat>(m).info() != Eigen::Success) return false;
  }
  return true;
}

/// Minimum feasibility margin across the barriered constraints; -inf when a
/// smooth log domain is violated.
inline double strict_margin(const ConeProgram& p, const RVec& x) {
  double m = std::numeric_limits<double>::infinity();
  if (!p.objective.in_domain(x)) return -std::numeric_limits<double>::infinity();
  for (int i = 0; i < p.nonneg_count; ++i) m = std::min(m, x[p.nonneg_begin + i]);
  for (const auto& g : p.inequalities) {
    if (!g.in_domain(x)) return -std::numeric_limits<double>::infinity();
    m = std::min(m, g.value(x));
  }
  for (const auto& b : p.psd_blocks) m = std::min(m, min_eigenvalue(psd::to_matrix(b, x)));
  for (const auto& l : p.lmis) m = std::min(m, min_eigenvalue(l.eval(x)));
  return m;
}

struct EqSystem {
  RMat a;
  RVec b;
  bool empty() const { return a.rows() == 0; }
};

inline EqSystem assemble_equalities(const ConeProgram& p) {
  EqSystem eq;
  const int m = static_cast<int>(p.equalities.size());
  eq.a.resize(m, p.total_vars);
  eq.b.resize(m);
  for (int i = 0; i < m; ++i) {
    eq.a.row(i) = p.equalities[i].first.transpose();
    eq.b[i] = p.equalities[i].second;
  }
  return eq;
}

inline void project_onto_equalities(const EqSystem& eq, RVec& x) {
  if (eq.empty()) return;
  RVec r = eq.b - eq.a * x;
  if (r.lpNorm<Eigen::Infinity>() < 1e-14) return;
  Eigen::CompleteOrthogonalDecomposition<RMat> cod(eq.a);
  x += cod.solve(r);
}

struct CenterOutcome {
  bool converged = false;
  bool failed = false;
  int steps = 0;
  bool early_stopped = false;
};

/// Damped Newton minimization of t*f + barrier subject to the equalities.
/// x must start inside the barrier domain and on the equality manifold.
inline CenterOutcome center(const ConeProgram& p, const EqSystem& eq, RVec& x, double t,
                            const SolveOptions& opts, int& newton_budget, int shift_var = -1,
                            const std::function<bool(const RVec&)>& early_stop = nullptr) {
  CenterOutcome out;
  const int me = static_cast<int>(eq.a.rows());

  for (int it = 0; it < opts.max_newton_per_stage; ++it) {
    if (newton_budget <= 0) return out;
    --newton_budget;
    ++out.steps;

    BarrierEval be = barrier_eval(p, x, true, shift_var);
    if (!be.in_domain) {
      out.failed = true;
      return out;
    }
    RVec g = be.grad;
    p.objective.add_gradient(x, g, t);
    RMat h = be.hess;
    p.objective.add_hessian(x, h, t);

    RVec dx(p.total_vars);
    bool solved = false;
    for (int attempt = 0; attempt < 2 && !solved; ++attempt) {
      RMat hr = h;
      if (attempt == 1)
        hr.diagonal().array() += 1e-10 * (1.0 + h.diagonal().cwiseAbs().mean());
      Eigen::LLT<RMat> llt(hr);
      if (llt.info() != Eigen::Success) continue;
      if (me == 0) {
        dx = llt.solve(-g);
        solved = true;
      } else {
        RMat hi_at = llt.solve(eq.a.transpose());
        RVec hi_g = llt.solve(g);
        RMat s = eq.a * hi_at;
        RVec rp = eq.a * x - eq.b;
        Eigen::LDLT<RMat> sldlt(s);
        if (sldlt.info() != Eigen::Success) continue;
        RVec w = sldlt.solve(rp - eq.a * hi_g);
        dx = -hi_g - hi_at * w;
        solved = true;
      }
    }
    if (!solved || !dx.allFinite()) {
      out.failed = true;
      return out;
    }

    double dec2 = dx.dot(h * dx);
    if (!std::isfinite(dec2)) {
      out.failed = true;
      return out;
    }
    if (dec2 * 0.5 <= opts.center_tol) {
      out.converged = true;
      return out;
    }

    double psi0 = t * p.objective.value(x) + be.value;
    double alpha = 1.0;
    bool accepted = false;
    while (alpha >= 1e-14) {
      RVec xn = x + alpha * dx;
      if (in_domain(p, xn, shift_var)) {
        BarrierEval bv = barrier_eval(p, xn, false, shift_var);
        double psin = t * p.objective.value(xn) + bv.value;
        if (psin <= psi0 - 0.25 * alpha * dec2) {
          x = std::move(xn);
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Step collapses at numerical precision: accept the point as centered.
      out.converged = true;
      return out;
    }
    if (early_stop && early_stop(x)) {
      out.early_stopped = true;
      out.converged = true;
      return out;
    }
  }
  return out;
}

/// Derived phase-I program: appends a uniform slack s, converts nonnegative
/// coordinates to shifted inequalities, shifts every smooth inequality;
/// PSD blocks and LMIs are shifted by the barrier evaluator itself.
inline ConeProgram phase1_program(const ConeProgram& p, int& s_index) {
  ConeProgram q = p;
  s_index = q.add_vars(1);
  q.objective = SmoothExpr::zero(q.total_vars);
  q.objective.add_linear(s_index, 1.0);
  for (auto& g : q.inequalities) {
    g.extend_dim(q.total_vars);
    g.add_linear(s_index, 1.0);
  }
  for (int i = 0; i < p.nonneg_count; ++i) {
    SmoothExpr g = SmoothExpr::zero(q.total_vars);
    g.add_linear(p.nonneg_begin + i, 1.0);
    g.add_linear(s_index, 1.0);
    q.inequalities.push_back(std::move(g));
  }
  q.nonneg_count = 0;
  for (auto& [row, rhs] : q.equalities) {
    RVec r = RVec::Zero(q.total_vars);
    r.head(p.total_vars) = row;
    row = std::move(r);
    (void)rhs;
  }
  return q;
}

inline SolveResult make_result(SolveStatus st, const ConeProgram& prog, const RVec& x,
                               int iterations, std::vector<double> stage_objs = {});

}  // namespace detail

/// Maximum constraint violation of a point (equalities + cone margins).
inline double constraint_violation(const ConeProgram& p, const RVec& x) {
  double v = 0.0;
  for (const auto& [row, rhs] : p.equalities) v = std::max(v, std::abs(row.dot(x) - rhs));
  double margin = detail::strict_margin(p, x);
  if (margin < 0.0) v = std::max(v, std::isfinite(margin) ? -margin : 1e30);
  return v;
}

namespace detail {

inline SolveResult make_result(SolveStatus st, const ConeProgram& prog, const RVec& x,
                               int iterations, std::vector<double> stage_objs) {
  SolveResult res;
  res.status = st;
  res.x = x;
  res.iterations = iterations;
  res.stage_objectives = std::move(stage_objs);
  res.objective = prog.objective.in_domain(x) ? prog.objective.value(x)
                                              : std::numeric_limits<double>::quiet_NaN();
  res.max_violation = constraint_violation(prog, x);
  return res;
}

}  // namespace detail

inline SolveResult solve_cone_program(const ConeProgram& prog,
                                      const std::optional<RVec>& warm = std::nullopt,
                                      const SolveOptions& opts = {}) {
  const int n = prog.total_vars;
  detail::EqSystem eq = detail::assemble_equalities(prog);

  auto default_start = [&]() {
    RVec x0 = RVec::Zero(n);
    for (int i = 0; i < prog.nonneg_count; ++i) x0[prog.nonneg_begin + i] = 1.0;
    for (const auto& b : prog.psd_blocks)
      psd::from_matrix(b, CMat::Identity(b.order, b.order), x0);
    return x0;
  };

  RVec x;
  if (warm) {
    if (warm->size() != n) throw std::invalid_argument("solve_cone_program: warm start size");
    x = *warm;
  } else {
    x = default_start();
  }
  detail::project_onto_equalities(eq, x);

  int budget = opts.max_newton_total;
  int total_steps = 0;

  // Phase I when the start is not strictly feasible.
  double margin = detail::strict_margin(prog, x);
  if (!std::isfinite(margin) && warm) {
    x = default_start();
    detail::project_onto_equalities(eq, x);
    margin = detail::strict_margin(prog, x);
  }
  if (!std::isfinite(margin))
    return detail::make_result(SolveStatus::kNumericalFailure, prog, x, total_steps);

  if (!(margin > 1e-10)) {
    int s_index = -1;
    ConeProgram p1 = detail::phase1_program(prog, s_index);
    detail::EqSystem eq1 = detail::assemble_equalities(p1);
    RVec x1(n + 1);
    x1.head(n) = x;
    const double s0 = std::max(0.0, -margin) + 0.1 * (1.0 + std::max(0.0, -margin));
    x1[n] = s0;

    const int m1 = p1.barrier_degree();
    double t1 = std::max(1e-2, m1 / (10.0 * std::max(1.0, s0)));
    // Accept any strictly feasible point: thin slivers are still usable.
    const double stop_level = -std::max(1e-9, 1e-6 * (1.0 + s0));
    auto stop = [&](const RVec& xx) { return xx[n] <= stop_level; };

    int phase1_budget = opts.max_newton_total;
    bool feasible_found = false;
    bool proven_infeasible = false;
    for (int stage = 0; stage < 60; ++stage) {
      auto oc = detail::center(p1, eq1, x1, t1, opts, phase1_budget, s_index, stop);
      total_steps += oc.steps;
      if (oc.failed)
        return detail::make_result(SolveStatus::kNumericalFailure, prog, x1.head(n), total_steps);
      if (x1[n] <= stop_level) {
        feasible_found = true;
        break;
      }
      // Provable infeasibility: s* >= s_now - gap > 0.
      if (x1[n] - m1 / t1 > 1e-12) {
        proven_infeasible = true;
        break;
      }
      if (m1 / t1 < 1e-10 * (1.0 + std::abs(x1[n]))) break;
      if (phase1_budget <= 0) break;
      t1 *= opts.barrier_growth;
    }
    if (!feasible_found && x1[n] < -1e-12) feasible_found = true;
    if (!feasible_found) {
      SolveResult res = detail::make_result(
          proven_infeasible ? SolveStatus::kInfeasible : SolveStatus::kMaxIterations,
          prog, x1.head(n), total_steps);
      if (proven_infeasible) res.status = SolveStatus::kInfeasible;
      res.max_violation = std::max(x1[n], 0.0);
      return res;
    }
    x = x1.head(n);
  }

  // Phase II: barrier path following.
  const int m_deg = prog.barrier_degree();
  double f0 = prog.objective.value(x);
  double t = std::clamp(m_deg / (10.0 * std::max(1e-6, std::abs(f0))), 1e-2, 1e4);
  if (m_deg == 0) t = 1.0;

  std::vector<double> stage_objs;
  bool hit_cap = false;
  for (int stage = 0; stage < 80; ++stage) {
    auto oc = detail::center(prog, eq, x, t, opts, budget, -1, nullptr);
    total_steps += oc.steps;
    if (oc.failed)
      return detail::make_result(SolveStatus::kNumericalFailure, prog, x, total_steps,
                                 std::move(stage_objs));
    double f = prog.objective.value(x);
    stage_objs.push_back(f);
    if (m_deg == 0 || m_deg / t <= 0.5 * opts.tol * (1.0 + std::abs(f))) break;
    if (budget <= 0) {
      hit_cap = true;
      break;
    }
    t *= opts.barrier_growth;
  }

  SolveStatus st = hit_cap ? SolveStatus::kMaxIterations : SolveStatus::kOptimal;
  SolveResult res = detail::make_result(st, prog, x, total_steps, std::move(stage_objs));
  if (st == SolveStatus::kOptimal && res.max_violation > 1e-7)
    res.status = SolveStatus::kNumericalFailure;
  return res;
}

/// Max-margin reformulation of a feasibility program: maximize s subject to
/// g_i(x) >= s with the cone constraints kept hard. The returned objective
/// is the achieved margin s*; s* >= 0 certifies feasibility.
inline SolveResult max_margin_feasibility(const ConeProgram& prog,
                                          const std::optional<RVec>& warm = std::nullopt,
                                          const SolveOptions& opts = {}) {
  ConeProgram q = prog;
  int s_index = q.add_vars(1);
  q.objective = SmoothExpr::zero(q.total_vars);
  q.objective.add_linear(s_index, -1.0);  // minimize -s
  for (auto& g : q.inequalities) {
    g.extend_dim(q.total_vars);
    g.add_linear(s_index, -1.0);
  }
  for (auto& [row, rhs] : q.equalities) {
    RVec r = RVec::Zero(q.total_vars);
    r.head(prog.total_vars) = row;
    row = std::move(r);
    (void)rhs;
  }

  std::optional<RVec> warm_q;
  if (warm) {
    if (warm->size() != prog.total_vars)
      throw std::invalid_argument("max_margin_feasibility: warm start size");
    RVec xq(q.total_vars);
    xq.head(prog.total_vars) = *warm;
    double mmin = std::numeric_limits<double>::infinity();
    for (const auto& g : prog.inequalities)
      mmin = std::min(mmin, g.in_domain(*warm) ? g.value(*warm)
                                               : -std::numeric_limits<double>::infinity());
    if (!std::isfinite(mmin)) mmin = 0.0;
    xq[s_index] = mmin - 1.0;
    warm_q = xq;
  }

  SolveResult r = solve_cone_program(q, warm_q, opts);
  if (r.x.size() == q.total_vars) {
    r.objective = r.x[s_index];
    // The margin variable makes the derived program always feasible.
    if (r.status == SolveStatus::kInfeasible) r.status = SolveStatus::kNumericalFailure;
  }
  return r;
}

}  // namespace rismec
