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

#ifndef VFDEBUG_MODEL_H_
#define VFDEBUG_MODEL_H_

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace vfdebug::model {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Vertically split training data. Row i of both feature matrices belongs to
// ids[i]; labels live with Party A.
struct PartitionedDataset {
  std::vector<int64_t> ids;
  Matrix xa;
  Matrix xb;
  Vector y;

  int64_t n() const { return static_cast<int64_t>(ids.size()); }
  int ma() const { return static_cast<int>(xa.cols()); }
  int mb() const { return static_cast<int>(xb.cols()); }

  // Throws InvalidArgumentError on shape or label problems.
  void Validate() const;
  // [xa | xb]
  Matrix Combined() const;
  // Rows whose id is not in `removed`, order preserved.
  PartitionedDataset Without(const std::vector<int64_t>& removed) const;
  PartitionedDataset Rows(const std::vector<int>& rows) const;
};

enum class ModelKind { kLogistic, kFrog };

const char* ModelKindName(ModelKind kind);

struct ModelState {
  ModelKind kind = ModelKind::kLogistic;
  Vector theta_a;
  Vector theta_b;
  double c1 = 0.0;
  double c2 = 0.0;

  static ModelState Logistic(int ma, int mb);
  // Zero weights, masks at 0.5.
  static ModelState Frog(int ma, int mb);

  // θA | θB
  Vector Theta() const;
  // Frog parameter layout: [θA, c1, θB, c2].
  Vector FrogParams() const;
  void SetFrogParams(const Vector& params);
  int dim() const;
};

struct HessianBlocks {
  Matrix haa;
  Matrix hab;
  Matrix hbb;

  Matrix Assemble() const;
};

// Stable logistic function.
double Sigmoid(double z);
double SigmoidPredict(const Vector& theta, const Vector& x);

inline constexpr double kProbClamp = 1e-12;

// Mean negative log likelihood.
double LogisticLoss(const Vector& theta, const Matrix& x, const Vector& y);
// Per-example losses ℓ_i.
Vector LogisticLosses(const Vector& theta, const Matrix& x, const Vector& y);

struct GradientResult {
  Matrix per_example;  // row i = ∂ℓ_i/∂θ
  Vector mean;
};

GradientResult LogisticGradient(const Vector& theta, const Matrix& x,
                                const Vector& y);
// Σ_i h(1-h) x_i x_iᵀ
Matrix LogisticHessian(const Vector& theta, const Matrix& x);
HessianBlocks LogisticHessianBlocks(const Vector& theta_a,
                                    const Vector& theta_b, const Matrix& xa,
                                    const Matrix& xb);

Vector LogisticProbabilities(const Vector& theta, const Matrix& x);

// Plain gradient descent on the mean logistic loss.
Vector TrainLogisticGd(Vector theta, const Matrix& x, const Vector& y,
                       double learning_rate, int rounds);

// Local scorer outputs for every row.
struct FrogScores {
  Vector f1;  // σ(θAᵀxA)
  Vector f2;  // σ(θBᵀxB)
  Vector f;   // c1 f1 + c2 f2
};

double FrogPredict(const ModelState& state, const Vector& xa,
                   const Vector& xb);
FrogScores FrogEvaluate(const ModelState& state, const Matrix& xa,
                        const Matrix& xb);

// Gradients of the combined score f w.r.t. each party's block, one row per
// record: A block [c1 f1(1-f1) xA, f1], B block [c2 f2(1-f2) xB, f2].
Matrix FrogScoreGradA(const ModelState& state, const Matrix& xa,
                      const Vector& f1);
Matrix FrogScoreGradB(const ModelState& state, const Matrix& xb,
                      const Vector& f2);

struct FrogLossGrad {
  double loss = 0.0;    // mean of ½(f - y)²
  Vector losses;        // per-example
  Matrix per_example;   // [θA, c1, θB, c2] layout
  Vector mean;
};

FrogLossGrad FrogLossGradient(const ModelState& state, const Matrix& xa,
                              const Matrix& xb, const Vector& y);

// Blocks over the extended parameter groups [θA, c1] and [θB, c2], summed
// over records.
// One party's diagonal block of the Frog Hessian from its score gradients g
// (n x (m+1)), features, local sigmoid outputs, mask and the residuals
// r = f - y.
Matrix FrogLocalHessian(const Matrix& g, const Matrix& x, const Vector& f,
                        double c, const Vector& r);
HessianBlocks FrogHessianBlocks(const ModelState& state, const Matrix& xa,
                                const Matrix& xb, const Vector& y);

struct GdOptions {
  double learning_rate = 0.1;
  int rounds = 1000;
  // Stop early when the mean loss improves by less than this.
  double min_improvement = 1e-9;
};

struct FrogTrainResult {
  ModelState state;
  int updates = 0;  // parameter updates applied
  double final_loss = 0.0;
};

// Centralized reference for the two-party Frog trainer, including its stop
// rule.
FrogTrainResult TrainFrogGd(ModelState state, const Matrix& xa,
                            const Matrix& xb, const Vector& y,
                            const GdOptions& options);

}  // namespace vfdebug::model

#endif  // VFDEBUG_MODEL_H_
