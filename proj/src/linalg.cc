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

#include "vfdebug/linalg.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "vfdebug/error.h"

namespace vfdebug::linalg {

Vector SeparatedVector::Joined() const {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

SeparatedVector SeparatedVector::Split(const Vector& v, Eigen::Index size_a) {
  if (size_a < 0 || size_a > v.size()) {
    throw InvalidArgumentError("split point outside the vector");
  }
  return {v.head(size_a), v.tail(v.size() - size_a)};
}

double SeparatedDot(const SeparatedVector& v) { return SeparatedDot(v, v); }

double SeparatedDot(const SeparatedVector& u, const SeparatedVector& v) {
  if (u.a.size() != v.a.size() || u.b.size() != v.b.size()) {
    throw InvalidArgumentError("separated vectors have different partitions");
  }
  double part_b = u.b.dot(v.b);
  return u.a.dot(v.a) + part_b;
}

int DefaultCgMaxIter(Eigen::Index m) {
  return static_cast<int>(std::min<Eigen::Index>(2 * m, 100));
}

CgResult CgSolve(const HvpOracle& hvp, const Vector& rhs,
                 const CgOptions& options) {
  if (!rhs.allFinite()) throw NumericError("CG right-hand side not finite");
  int max_iter = options.max_iter > 0 ? options.max_iter
                                      : DefaultCgMaxIter(rhs.size());
  double target = options.tol * std::max(1.0, rhs.norm());

  CgResult out;
  Vector z = Vector::Zero(rhs.size());
  Vector r = rhs;
  Vector p = r;
  double rr = r.squaredNorm();
  out.z = z;
  out.residual_norm = std::sqrt(rr);
  if (out.residual_norm <= target) {
    out.converged = true;
    return out;
  }
  double best = out.residual_norm;
  for (int k = 0; k < max_iter; ++k) {
    Vector hp = hvp(p);
    if (hp.size() != p.size()) {
      throw InvalidArgumentError("Hessian-vector oracle changed dimension");
    }
    if (options.damping != 0.0) hp += options.damping * p;
    double php = p.dot(hp);
    if (!std::isfinite(php)) throw NumericError("CG curvature not finite");
    if (php <= options.breakdown_threshold) {
      throw CgBreakdownError("CG breakdown at iteration " + std::to_string(k) +
                             ": pᵀHp = " + std::to_string(php));
    }
    double alpha = rr / php;
    z += alpha * p;
    r -= alpha * hp;
    double rr_next = r.squaredNorm();
    double beta = rr_next / rr;
    p = r + beta * p;
    rr = rr_next;
    out.iterations = k + 1;
    if (options.record_iterates) out.iterates.push_back(z);
    double norm = std::sqrt(rr);
    if (!std::isfinite(norm)) throw NumericError("CG residual not finite");
    if (norm < best) {
      best = norm;
      out.z = z;
      out.residual_norm = norm;
    }
    if (norm <= target) {
      out.converged = true;
      break;
    }
  }
  return out;
}

double DefiniteDamping(const Matrix& h, double base, double floor_ratio) {
  if (h.rows() != h.cols()) throw InvalidArgumentError("damping: matrix is not square");
  if (h.size() == 0) return base;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw NumericError("eigenvalue computation failed");
  }
  const Vector& values = eig.eigenvalues();
  if (!values.allFinite()) throw NumericError("non-finite Hessian eigenvalues");
  const double radius = values.cwiseAbs().maxCoeff();
  const double floor = floor_ratio * std::max(1.0, radius);
  const double smallest = values.minCoeff();
  if (smallest + base >= floor) return base;
  return floor - smallest;
}

HvpOracle DenseOracle(const Matrix& h) {
  return [h](const Vector& v) -> Vector { return h * v; };
}

}  // namespace vfdebug::linalg
