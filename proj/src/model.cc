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

#include "vfdebug/model.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "vfdebug/error.h"

namespace vfdebug::model {
namespace {

void CheckRows(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) {
    throw InvalidArgumentError("feature rows and labels differ in length");
  }
}

void CheckCols(const Vector& theta, const Matrix& x) {
  if (theta.size() != x.cols()) {
    throw InvalidArgumentError("parameter length " +
                               std::to_string(theta.size()) +
                               " does not match feature count " +
                               std::to_string(x.cols()));
  }
}

// Floating-point products like Xᵀ D X are only symmetric up to rounding.
Matrix Symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void RequireFrog(const ModelState& state) {
  if (state.kind != ModelKind::kFrog) {
    throw InvalidArgumentError("operation requires a Frog model state");
  }
}

}  // namespace

void PartitionedDataset::Validate() const {
  auto n = static_cast<Eigen::Index>(ids.size());
  if (n == 0) throw InvalidArgumentError("dataset is empty");
  if (xa.rows() != n || xb.rows() != n || y.size() != n) {
    throw InvalidArgumentError("partition row counts disagree with ids");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw InvalidArgumentError("labels must be 0 or 1");
    }
  }
  std::unordered_set<int64_t> seen(ids.begin(), ids.end());
  if (seen.size() != ids.size()) throw InvalidArgumentError("duplicate ids");
}

Matrix PartitionedDataset::Combined() const {
  Matrix out(xa.rows(), xa.cols() + xb.cols());
  out << xa, xb;
  return out;
}

PartitionedDataset PartitionedDataset::Rows(const std::vector<int>& rows) const {
  PartitionedDataset out;
  out.xa.resize(static_cast<Eigen::Index>(rows.size()), xa.cols());
  out.xb.resize(static_cast<Eigen::Index>(rows.size()), xb.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t k = 0; k < rows.size(); ++k) {
    auto i = static_cast<Eigen::Index>(k);
    out.ids.push_back(ids[static_cast<size_t>(rows[k])]);
    out.xa.row(i) = xa.row(rows[k]);
    out.xb.row(i) = xb.row(rows[k]);
    out.y[i] = y[rows[k]];
  }
  return out;
}

PartitionedDataset PartitionedDataset::Without(
    const std::vector<int64_t>& removed) const {
  std::unordered_set<int64_t> drop(removed.begin(), removed.end());
  std::vector<int> keep;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (!drop.count(ids[i])) keep.push_back(static_cast<int>(i));
  }
  return Rows(keep);
}

const char* ModelKindName(ModelKind kind) {
  return kind == ModelKind::kLogistic ? "logistic" : "frog";
}

ModelState ModelState::Logistic(int ma, int mb) {
  ModelState s;
  s.kind = ModelKind::kLogistic;
  s.theta_a = Vector::Zero(ma);
  s.theta_b = Vector::Zero(mb);
  return s;
}

ModelState ModelState::Frog(int ma, int mb) {
  ModelState s;
  s.kind = ModelKind::kFrog;
  s.theta_a = Vector::Zero(ma);
  s.theta_b = Vector::Zero(mb);
  s.c1 = 0.5;
  s.c2 = 0.5;
  return s;
}

Vector ModelState::Theta() const {
  Vector out(theta_a.size() + theta_b.size());
  out << theta_a, theta_b;
  return out;
}

Vector ModelState::FrogParams() const {
  Vector out(theta_a.size() + theta_b.size() + 2);
  out << theta_a, c1, theta_b, c2;
  return out;
}

void ModelState::SetFrogParams(const Vector& params) {
  Eigen::Index ma = theta_a.size();
  Eigen::Index mb = theta_b.size();
  if (params.size() != ma + mb + 2) {
    throw InvalidArgumentError("Frog parameter vector has wrong length");
  }
  theta_a = params.head(ma);
  c1 = params[ma];
  theta_b = params.segment(ma + 1, mb);
  c2 = params[ma + 1 + mb];
}

int ModelState::dim() const {
  auto base = static_cast<int>(theta_a.size() + theta_b.size());
  return kind == ModelKind::kFrog ? base + 2 : base;
}

Matrix HessianBlocks::Assemble() const {
  Eigen::Index a = haa.rows();
  Eigen::Index b = hbb.rows();
  Matrix h(a + b, a + b);
  h.topLeftCorner(a, a) = haa;
  h.topRightCorner(a, b) = hab;
  h.bottomLeftCorner(b, a) = hab.transpose();
  h.bottomRightCorner(b, b) = hbb;
  return h;
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double SigmoidPredict(const Vector& theta, const Vector& x) {
  if (theta.size() != x.size()) {
    throw InvalidArgumentError("sigmoid_predict: dimension mismatch");
  }
  return Sigmoid(theta.dot(x));
}

Vector LogisticProbabilities(const Vector& theta, const Matrix& x) {
  CheckCols(theta, x);
  Vector z = x * theta;
  return z.unaryExpr([](double v) { return Sigmoid(v); });
}

Vector LogisticLosses(const Vector& theta, const Matrix& x, const Vector& y) {
  CheckRows(x, y);
  Vector h = LogisticProbabilities(theta, x);
  Vector out(h.size());
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    double p = std::clamp(h[i], kProbClamp, 1.0 - kProbClamp);
    out[i] = -(y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p));
  }
  return out;
}

double LogisticLoss(const Vector& theta, const Matrix& x, const Vector& y) {
  if (x.rows() == 0) throw InvalidArgumentError("dataset is empty");
  return LogisticLosses(theta, x, y).mean();
}

GradientResult LogisticGradient(const Vector& theta, const Matrix& x,
                                const Vector& y) {
  CheckRows(x, y);
  if (x.rows() == 0) throw InvalidArgumentError("dataset is empty");
  Vector residual = y - LogisticProbabilities(theta, x);
  GradientResult g;
  g.per_example = -(residual.asDiagonal() * x);
  g.mean = g.per_example.colwise().mean().transpose();
  return g;
}

Matrix LogisticHessian(const Vector& theta, const Matrix& x) {
  Vector h = LogisticProbabilities(theta, x);
  Vector r = h.array() * (1.0 - h.array());
  return Symmetrize(x.transpose() * r.asDiagonal() * x);
}

HessianBlocks LogisticHessianBlocks(const Vector& theta_a,
                                    const Vector& theta_b, const Matrix& xa,
                                    const Matrix& xb) {
  CheckCols(theta_a, xa);
  CheckCols(theta_b, xb);
  if (xa.rows() != xb.rows()) {
    throw InvalidArgumentError("partitions have different row counts");
  }
  Vector z = xa * theta_a + xb * theta_b;
  Vector r(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    double h = Sigmoid(z[i]);
    r[i] = h * (1.0 - h);
  }
  HessianBlocks out;
  out.haa = Symmetrize(xa.transpose() * r.asDiagonal() * xa);
  out.hab = xa.transpose() * r.asDiagonal() * xb;
  out.hbb = Symmetrize(xb.transpose() * r.asDiagonal() * xb);
  return out;
}

Vector TrainLogisticGd(Vector theta, const Matrix& x, const Vector& y,
                       double learning_rate, int rounds) {
  for (int k = 0; k < rounds; ++k) {
    theta -= learning_rate * LogisticGradient(theta, x, y).mean;
  }
  return theta;
}

double FrogPredict(const ModelState& state, const Vector& xa,
                   const Vector& xb) {
  RequireFrog(state);
  return state.c1 * SigmoidPredict(state.theta_a, xa) +
         state.c2 * SigmoidPredict(state.theta_b, xb);
}

FrogScores FrogEvaluate(const ModelState& state, const Matrix& xa,
                        const Matrix& xb) {
  RequireFrog(state);
  if (xa.rows() != xb.rows()) {
    throw InvalidArgumentError("partitions have different row counts");
  }
  FrogScores s;
  s.f1 = LogisticProbabilities(state.theta_a, xa);
  s.f2 = LogisticProbabilities(state.theta_b, xb);
  s.f = state.c1 * s.f1 + state.c2 * s.f2;
  return s;
}

Matrix FrogScoreGradA(const ModelState& state, const Matrix& xa,
                      const Vector& f1) {
  Matrix g(xa.rows(), xa.cols() + 1);
  Vector w = state.c1 * f1.array() * (1.0 - f1.array());
  g.leftCols(xa.cols()) = w.asDiagonal() * xa;
  g.col(xa.cols()) = f1;
  return g;
}

Matrix FrogScoreGradB(const ModelState& state, const Matrix& xb,
                      const Vector& f2) {
  Matrix g(xb.rows(), xb.cols() + 1);
  Vector w = state.c2 * f2.array() * (1.0 - f2.array());
  g.leftCols(xb.cols()) = w.asDiagonal() * xb;
  g.col(xb.cols()) = f2;
  return g;
}

FrogLossGrad FrogLossGradient(const ModelState& state, const Matrix& xa,
                              const Matrix& xb, const Vector& y) {
  FrogScores s = FrogEvaluate(state, xa, xb);
  CheckRows(xa, y);
  if (xa.rows() == 0) throw InvalidArgumentError("dataset is empty");
  Vector r = s.f - y;
  FrogLossGrad out;
  out.losses = 0.5 * r.array().square();
  out.loss = out.losses.mean();
  Matrix ga = FrogScoreGradA(state, xa, s.f1);
  Matrix gb = FrogScoreGradB(state, xb, s.f2);
  out.per_example.resize(xa.rows(), ga.cols() + gb.cols());
  out.per_example << r.asDiagonal() * ga, r.asDiagonal() * gb;
  out.mean = out.per_example.colwise().mean().transpose();
  return out;
}

Matrix FrogLocalHessian(const Matrix& g, const Matrix& x, const Vector& f,
                        double c, const Vector& r) {
  if (g.rows() != x.rows() || f.size() != x.rows() || r.size() != x.rows()) {
    throw InvalidArgumentError("Frog local Hessian: row count mismatch");
  }
  // Second derivative of c f(θᵀx) within one block, weighted by residuals.
  Eigen::Index m = x.cols();
  Matrix h = Matrix::Zero(m + 1, m + 1);
  Vector d1 = f.array() * (1.0 - f.array());
  Vector w_tt = r.array() * c * d1.array() * (1.0 - 2.0 * f.array());
  Vector w_tc = r.array() * d1.array();
  h.topLeftCorner(m, m) = x.transpose() * w_tt.asDiagonal() * x;
  Vector cross = x.transpose() * w_tc;
  h.topRightCorner(m, 1) = cross;
  h.bottomLeftCorner(1, m) = cross.transpose();
  return Symmetrize(g.transpose() * g + h);
}

HessianBlocks FrogHessianBlocks(const ModelState& state, const Matrix& xa,
                                const Matrix& xb, const Vector& y) {
  FrogScores s = FrogEvaluate(state, xa, xb);
  CheckRows(xa, y);
  Vector r = s.f - y;
  Matrix ga = FrogScoreGradA(state, xa, s.f1);
  Matrix gb = FrogScoreGradB(state, xb, s.f2);
  HessianBlocks out;
  out.haa = FrogLocalHessian(ga, xa, s.f1, state.c1, r);
  out.hab = ga.transpose() * gb;
  out.hbb = FrogLocalHessian(gb, xb, s.f2, state.c2, r);
  return out;
}

FrogTrainResult TrainFrogGd(ModelState state, const Matrix& xa,
                            const Matrix& xb, const Vector& y,
                            const GdOptions& options) {
  RequireFrog(state);
  CheckRows(xa, y);
  auto n = static_cast<double>(xa.rows());
  if (xa.rows() == 0) throw InvalidArgumentError("dataset is empty");
  FrogTrainResult out;
  double prev_loss = 0.0;
  for (int k = 0;; ++k) {
    Vector f1 = LogisticProbabilities(state.theta_a, xa);
    Vector f2 = LogisticProbabilities(state.theta_b, xb);
    // Same association as the two-party exchange: (c1 f1 - y) + c2 f2.
    Vector r = (state.c1 * f1 - y) + state.c2 * f2;
    double loss = 0.5 * r.squaredNorm() / n;
    out.final_loss = loss;
    bool stop = k >= options.rounds ||
                (k > 0 && prev_loss - loss < options.min_improvement);
    if (stop) break;
    prev_loss = loss;
    Vector wa = r.array() * state.c1 * f1.array() * (1.0 - f1.array());
    Vector wb = r.array() * state.c2 * f2.array() * (1.0 - f2.array());
    Vector grad_a = xa.transpose() * wa / n;
    Vector grad_b = xb.transpose() * wb / n;
    double grad_c1 = r.dot(f1) / n;
    double grad_c2 = r.dot(f2) / n;
    state.theta_a -= options.learning_rate * grad_a;
    state.c1 -= options.learning_rate * grad_c1;
    state.theta_b -= options.learning_rate * grad_b;
    state.c2 -= options.learning_rate * grad_c2;
    ++out.updates;
  }
  out.state = std::move(state);
  return out;
}

}  // namespace vfdebug::model
