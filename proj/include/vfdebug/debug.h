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


#ifndef VFDEBUG_DEBUG_H_
#define VFDEBUG_DEBUG_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vfdebug/fedrain.h"
#include "vfdebug/frog.h"
#include "vfdebug/influence.h"
#include "vfdebug/linalg.h"
#include "vfdebug/model.h"
#include "vfdebug/party.h"
#include "vfdebug/query.h"

namespace vfdebug::debug {

using model::Matrix;
using model::Vector;

enum class Framework { kFedRain, kFrog, kRainOracle, kLossBaseline };

// "fedrain", "frog", "rain_oracle", "loss".
const char* FrameworkName(Framework f);
Framework FrameworkFromName(const std::string& name);

struct DebugRunConfig {
  int budget = 10;  // K: total deletions allowed
  int step = 1;     // k: deletions per iteration
  bool early_stop = true;
  int retrain_rounds = 100;
  double learning_rate = 1.0;
  // Retrain from the initial parameters instead of the current ones.
  bool cold_start = false;
  linalg::CgOptions cg;

  // Throws InvalidArgumentError unless 1 <= step <= budget.
  void Validate() const;
};

// Complaint check on one set of predictions, as party A performs it.
protocol::QueryStatus EvaluateComplaint(
    const query::QuerySpec& spec, const query::Complaint& complaint,
    const query::PredictionTable& predictions,
    const query::DataTable& attributes);

struct TrainOutcome {
  int rounds_requested = 0;
  int rounds_run = 0;
  // Rounds were cut to the training bound.
  bool clipped = false;
};

// What the loop needs from a framework. Federated backends drive the
// two-party protocols; central backends work on unsplit data and exist for
// comparison and as oracles.
class DebugBackend {
 public:
  virtual ~DebugBackend() = default;

  virtual Framework framework() const = 0;
  virtual std::vector<int64_t> TrainingIds() const = 0;
  // Predictions on the query's inference rows together with A's attributes.
  virtual query::PredictionTable Predict() = 0;
  virtual const query::DataTable& Attributes() const = 0;
  // Scores every training record for the complaint. May throw
  // SecurityError when the framework's debugging bound is reached.
  virtual InfluenceReport Rank(const query::QuerySpec& spec,
                               const query::Complaint& complaint,
                               const linalg::CgOptions& cg) = 0;
  virtual void Delete(const std::vector<int64_t>& ids) = 0;
  virtual TrainOutcome Train(int rounds, double learning_rate,
                             bool cold_start) = 0;
  virtual model::ModelState Model() const = 0;
  // Null for central backends.
  virtual const security::SecurityBudget* budget() const { return nullptr; }
};

class FedRainBackend : public DebugBackend {
 public:
  explicit FedRainBackend(protocol::FedRainFederation* fed) : fed_(fed) {}
  Framework framework() const override { return Framework::kFedRain; }
  std::vector<int64_t> TrainingIds() const override;
  query::PredictionTable Predict() override;
  const query::DataTable& Attributes() const override;
  InfluenceReport Rank(const query::QuerySpec& spec,
                       const query::Complaint& complaint,
                       const linalg::CgOptions& cg) override;
  void Delete(const std::vector<int64_t>& ids) override;
  // Cuts the rounds to the training bound unless the session carries the
  // unsafe override.
  TrainOutcome Train(int rounds, double learning_rate,
                     bool cold_start) override;
  model::ModelState Model() const override;
  const security::SecurityBudget* budget() const override;

 private:
  protocol::FedRainFederation* fed_;
};

class FrogBackend : public DebugBackend {
 public:
  explicit FrogBackend(protocol::FrogFederation* fed) : fed_(fed) {}
  Framework framework() const override { return Framework::kFrog; }
  std::vector<int64_t> TrainingIds() const override;
  query::PredictionTable Predict() override;
  const query::DataTable& Attributes() const override;
  InfluenceReport Rank(const query::QuerySpec& spec,
                       const query::Complaint& complaint,
                       const linalg::CgOptions& cg) override;
  void Delete(const std::vector<int64_t>& ids) override;
  TrainOutcome Train(int rounds, double learning_rate,
                     bool cold_start) override;
  model::ModelState Model() const override;
  const security::SecurityBudget* budget() const override;
  // Stop rule for Frog gradient descent.
  double min_improvement = 1e-9;

 private:
  protocol::FrogFederation* fed_;
};

// Centralized influence (rain oracle) or training loss (baseline) on the
// unsplit data, for either model kind.
class CentralBackend : public DebugBackend {
 public:
  CentralBackend(const protocol::FederationInput& input, model::ModelKind kind,
                 Framework ranker);
  Framework framework() const override { return ranker_; }
  std::vector<int64_t> TrainingIds() const override { return train_.ids; }
  query::PredictionTable Predict() override;
  const query::DataTable& Attributes() const override { return table_; }
  InfluenceReport Rank(const query::QuerySpec& spec,
                       const query::Complaint& complaint,
                       const linalg::CgOptions& cg) override;
  void Delete(const std::vector<int64_t>& ids) override;
  TrainOutcome Train(int rounds, double learning_rate,
                     bool cold_start) override;
  model::ModelState Model() const override { return state_; }
  void set_model(const model::ModelState& state) { state_ = state; }
  const model::PartitionedDataset& training() const { return train_; }
  double min_improvement = 1e-9;

 private:
  model::ModelKind kind_;
  Framework ranker_;
  model::PartitionedDataset train_;
  Matrix infer_xa_;
  Matrix infer_xb_;
  std::vector<int64_t> infer_ids_;
  query::DataTable table_;
  model::ModelState state_;
};

// Predictions of a joined model on explicit rows.
query::PredictionTable PredictCentral(const model::ModelState& state,
                                      const std::vector<int64_t>& ids,
                                      const Matrix& xa, const Matrix& xb);

// Centralized influence: Q' from the relaxed query, (H + λI) z = Q' by CG on
// the dense Hessian and score_i = zᵀ(-∂ℓ_i/∂θ). For the Frog model λ is
// raised by linalg::DefiniteDamping. Deterministic.
InfluenceReport RainOracleInfluence(const model::ModelState& state,
                                    const model::PartitionedDataset& train,
                                    const std::vector<int64_t>& infer_ids,
                                    const Matrix& infer_xa,
                                    const Matrix& infer_xb,
                                    const query::DataTable& attributes,
                                    const query::QuerySpec& spec,
                                    const query::Complaint& complaint,
                                    const linalg::CgOptions& cg = {});

// Per-record training loss; independent of any complaint.
InfluenceReport LossBaselineRanking(const model::ModelState& state,
                                    const model::PartitionedDataset& train);

struct DebugIteration {
  // Complaint state before this iteration's deletions.
  double query_value = 0.0;
  double relaxed_value = 0.0;
  std::vector<int64_t> deleted;
  TrainOutcome retrain;
};

struct DebugResult {
  Framework framework = Framework::kFrog;
  std::vector<int64_t> deleted;  // in deletion order
  std::vector<DebugIteration> iterations;
  // Complaint state after the last retrain (or at entry if nothing ran).
  double final_query_value = 0.0;
  double final_relaxed_value = 0.0;
  bool complaint_satisfied = false;
  bool security_limited = false;
  std::string security_message;
  int retrains = 0;
  int64_t debug_iterations_consumed = 0;
  int64_t train_rounds_total = 0;
  bool override_used = false;
  model::ModelState final_model;

  // Discrete query values at entry and after each retrain.
  std::vector<double> QueryValues() const;
  std::vector<double> RelaxedValues() const;
};

// Rank, delete the top-k, retrain, re-check; until K deletions are spent or
// (with early stopping) the complaint holds. A SecurityError from the
// framework ends the loop with the partial result flagged.
DebugResult DebugLoop(const DebugRunConfig& config, DebugBackend& backend,
                      const query::QuerySpec& spec,
                      const query::Complaint& complaint);

}  // namespace vfdebug::debug

#endif  // VFDEBUG_DEBUG_H_
