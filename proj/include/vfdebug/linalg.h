// Copyright 2026 The vfdebug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VFDEBUG_LINALG_H_
#define VFDEBUG_LINALG_H_

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace vfdebug::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A vector whose coordinates are split A-then-B across the two parties.
struct SeparatedVector {
  Vector a;
  Vector b;

  Vector Joined() const;
  static SeparatedVector Split(const Vector& v, Eigen::Index size_a);
};

// (vA)ᵀvA + (vB)ᵀvB, summed in the order Party A would after receiving B's
// scalar.
double SeparatedDot(const SeparatedVector& v);
double SeparatedDot(const SeparatedVector& u, const SeparatedVector& v);

using HvpOracle = std::function<Vector(const Vector&)>;

struct CgOptions {
  double tol = 1e-8;
  // 0 selects min(2m, 100).
  int max_iter = 0;
  // Solves (H + damping I) z = rhs.
  double damping = 1e-6;
  double breakdown_threshold = 1e-30;
  bool record_iterates = false;
};

struct CgResult {
  Vector z;
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
  std::vector<Vector> iterates;  // z after each iteration, when recorded
};

int DefaultCgMaxIter(Eigen::Index m);

// Conjugate gradient from z0 = 0. Throws CgBreakdownError when pᵀHp falls to
// the breakdown threshold and NumericError on non-finite values.
CgResult CgSolve(const HvpOracle& hvp, const Vector& rhs,
                 const CgOptions& options = {});

// Smallest damping >= base that lifts every eigenvalue of the symmetric
// matrix h + damping I to at least floor_ratio * max(1, spectral radius).
// Returns base unchanged when h already clears that floor. Used where the
// exact Hessian can be indefinite and would break CG.
double DefiniteDamping(const Matrix& h, double base, double floor_ratio = 1e-3);

// Dense convenience oracle.
HvpOracle DenseOracle(const Matrix& h);

}  // namespace vfdebug::linalg

#endif  // VFDEBUG_LINALG_H_
