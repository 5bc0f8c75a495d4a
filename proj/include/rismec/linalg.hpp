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
#include <stdexcept>

#include "rismec/types.hpp"

namespace rismec {

/// Hermitian matrix wrapper: construction symmetrizes and rejects inputs
/// whose asymmetry exceeds the numerical floor.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  static HermitianMatrix from(const CMat& a, double asym_tol = 1e-9) {
    if (a.rows() != a.cols()) throw std::invalid_argument("HermitianMatrix: not square");
    double asym = (a - a.adjoint()).cwiseAbs().maxCoeff();
    double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if (asym > asym_tol * scale)
      throw std::invalid_argument("HermitianMatrix: input is not Hermitian");
    HermitianMatrix h;
    h.m_ = 0.5 * (a + a.adjoint());
    return h;
  }

  static HermitianMatrix identity(int n) {
    HermitianMatrix h;
    h.m_ = CMat::Identity(n, n);
    return h;
  }

  const CMat& mat() const { return m_; }
  int order() const { return static_cast<int>(m_.rows()); }

 private:
  CMat m_;
};

struct EigResult {
  RVec values;  // descending
  CMat vectors; // columns aligned with values
};

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
inline EigResult hermitian_eig(const HermitianMatrix& a) {
  if (!a.mat().allFinite()) throw std::invalid_argument("hermitian_eig: non-finite entries");
  Eigen::SelfAdjointEigenSolver<CMat> es(a.mat());
  if (es.info() != Eigen::Success) throw std::runtime_error("hermitian_eig: failed to converge");
  const int n = a.order();
  EigResult r;
  r.values.resize(n);
  r.vectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    r.values[i] = es.eigenvalues()[n - 1 - i];
    r.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return r;
}

inline EigResult hermitian_eig(const CMat& a) { return hermitian_eig(HermitianMatrix::from(a)); }

/// Smallest eigenvalue; used for feasibility margins of PSD constraints.
inline double min_eigenvalue(const CMat& a) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (a + a.adjoint()),
                                         Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace rismec
