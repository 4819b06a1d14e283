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


#include "vfdebug/debug.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "vfdebug/error.h"
#include "vfdebug/security.h"

namespace vfdebug::debug {
namespace {

using vfdebug::Party;

// Direction to keep pushing once the discrete complaint holds but deletions
// remain: for equality, toward the target from the relaxed value's side;
// otherwise the last active direction. 0 means there is nothing to follow.
int ContinuationDirection(const query::Complaint& complaint,
                          const protocol::QueryStatus& status,
                          int last_direction) {
  if (complaint.op == query::Complaint::Op::kEq) {
    if (status.relaxed_value > complaint.value) return 1;
    if (status.relaxed_value < complaint.value) return -1;
  }
  return last_direction;
}

// A complaint whose only unsatisfied reading is `direction` at `value`.
query::Complaint Continuation(int direction, double value) {
  const double gap = std::max(1.0, std::fabs(value));
  if (direction > 0) return {query::Complaint::Op::kLe, value - gap};
  return {query::Complaint::Op::kGe, value + gap};
}

Vector LogisticProbs(const model::ModelState& state, const Matrix& xa,
                     const Matrix& xb) {
  const Vector z = xa * state.theta_a + xb * state.theta_b;
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = model::Sigmoid(z[i]);
  return out;
}

}  // namespace

const char* FrameworkName(Framework f) {
  switch (f) {
    case Framework::kFedRain:
      return "fedrain";
    case Framework::kFrog:
      return "frog";
    case Framework::kRainOracle:
      return "rain_oracle";
    case Framework::kLossBaseline:
      return "loss";
  }
  return "unknown";
}

Framework FrameworkFromName(const std::string& name) {
  for (Framework f : {Framework::kFedRain, Framework::kFrog,
                      Framework::kRainOracle, Framework::kLossBaseline}) {
    if (name == FrameworkName(f)) return f;
  }
  if (name == "loss_baseline") return Framework::kLossBaseline;
  throw InvalidArgumentError("unknown framework '" + name + "'");
}

void DebugRunConfig::Validate() const {
  if (step < 1 || step > budget) {
    throw InvalidArgumentError("debug step k must satisfy 1 <= k <= K (k = " +
                               std::to_string(step) +
                               ", K = " + std::to_string(budget) + ")");
  }
  if (retrain_rounds < 0) throw InvalidArgumentError("negative retrain rounds");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgumentError("learning rate must be positive");
  }
}

protocol::QueryStatus EvaluateComplaint(
    const query::QuerySpec& spec, const query::Complaint& complaint,
    const query::PredictionTable& predictions,
    const query::DataTable& attributes) {
  protocol::QueryStatus status;
  status.value = query::SelectTarget(
      spec, query::ExecuteQuery(spec, predictions, attributes));
  status.direction = complaint.Direction(status.value);
  status.active = status.direction != 0;
  status.relaxed_value = query::RelaxQuery(spec, predictions, attributes).value;
  return status;
}

// ---------------------------------------------------------------- FedRain

std::vector<int64_t> FedRainBackend::TrainingIds() const {
  return fed_->party(Party::kA).train.ids;
}

query::PredictionTable FedRainBackend::Predict() { return fed_->Infer(); }

const query::DataTable& FedRainBackend::Attributes() const {
  return fed_->party(Party::kA).table;
}

InfluenceReport FedRainBackend::Rank(const query::QuerySpec& spec,
                                     const query::Complaint& complaint,
                                     const linalg::CgOptions& cg) {
  if (!fed_->QueryGrad(spec, complaint).active) {
    throw InvalidArgumentError("complaint is satisfied; nothing to rank");
  }
  fed_->Solve(cg);
  return fed_->Influence();
}

void FedRainBackend::Delete(const std::vector<int64_t>& ids) {
  fed_->DeleteTrainingIds(ids);
}

TrainOutcome FedRainBackend::Train(int rounds, double learning_rate,
                                   bool cold_start) {
  TrainOutcome out;
  out.rounds_requested = rounds;
  out.rounds_run = rounds;
  if (!fed_->config().unsafe_override) {
    const security::Limit limit =
        security::FedRainTrainLimit(fed_->n_train(), fed_->mb());
    if (limit && *limit < rounds) {
      out.rounds_run = static_cast<int>(*limit);
      out.clipped = true;
    }
  }
  if (cold_start) fed_->ResetModel();
  fed_->Train(out.rounds_run, learning_rate);
  return out;
}

model::ModelState FedRainBackend::Model() const { return fed_->JoinedModel(); }

const security::SecurityBudget* FedRainBackend::budget() const {
  return &fed_->budget();
}

// ------------------------------------------------------------------- Frog

std::vector<int64_t> FrogBackend::TrainingIds() const {
  return fed_->party(Party::kA).train.ids;
}

query::PredictionTable FrogBackend::Predict() { return fed_->Infer(); }

const query::DataTable& FrogBackend::Attributes() const {
  return fed_->party(Party::kA).table;
}

InfluenceReport FrogBackend::Rank(const query::QuerySpec& spec,
                                  const query::Complaint& complaint,
                                  const linalg::CgOptions& cg) {
  if (!fed_->QueryGrad(spec, complaint).active) {
    throw InvalidArgumentError("complaint is satisfied; nothing to rank");
  }
  fed_->Solve(cg);
  return fed_->Influence();
}

void FrogBackend::Delete(const std::vector<int64_t>& ids) {
  fed_->DeleteTrainingIds(ids);
}

TrainOutcome FrogBackend::Train(int rounds, double learning_rate,
                                bool cold_start) {
  if (cold_start) fed_->ResetModel();
  model::GdOptions o;
  o.rounds = rounds;
  o.learning_rate = learning_rate;
  o.min_improvement = min_improvement;
  TrainOutcome out;
  out.rounds_requested = rounds;
  out.rounds_run = fed_->Train(o);
  return out;
}

model::ModelState FrogBackend::Model() const { return fed_->JoinedModel(); }

const security::SecurityBudget* FrogBackend::budget() const {
  return &fed_->budget();
}

// ---------------------------------------------------------------- Central

CentralBackend::CentralBackend(const protocol::FederationInput& input,
                               model::ModelKind kind, Framework ranker)
    : kind_(kind),
      ranker_(ranker),
      train_(input.train),
      infer_xa_(input.infer_xa),
      infer_xb_(input.infer_xb),
      infer_ids_(input.infer_ids),
      table_(input.infer_table) {
  if (ranker != Framework::kRainOracle && ranker != Framework::kLossBaseline) {
    throw InvalidArgumentError("central backends rank as rain_oracle or loss");
  }
  train_.Validate();
  state_ = kind == model::ModelKind::kFrog
               ? model::ModelState::Frog(train_.ma(), train_.mb())
               : model::ModelState::Logistic(train_.ma(), train_.mb());
}

query::PredictionTable CentralBackend::Predict() {
  return PredictCentral(state_, infer_ids_, infer_xa_, infer_xb_);
}

InfluenceReport CentralBackend::Rank(const query::QuerySpec& spec,
                                     const query::Complaint& complaint,
                                     const linalg::CgOptions& cg) {
  if (ranker_ == Framework::kLossBaseline) {
    return LossBaselineRanking(state_, train_);
  }
  return RainOracleInfluence(state_, train_, infer_ids_, infer_xa_, infer_xb_,
                             table_, spec, complaint, cg);
}

void CentralBackend::Delete(const std::vector<int64_t>& ids) {
  std::unordered_set<int64_t> drop(ids.begin(), ids.end());
  if (drop.size() != ids.size()) {
    throw InvalidArgumentError("deletion list contains duplicates");
  }
  size_t present = 0;
  for (int64_t id : train_.ids) present += drop.count(id);
  if (present != drop.size()) {
    throw InvalidArgumentError("deletion names ids outside the training set");
  }
  train_ = train_.Without(ids);
}

TrainOutcome CentralBackend::Train(int rounds, double learning_rate,
                                   bool cold_start) {
  if (train_.n() == 0) throw InvalidArgumentError("training set is empty");
  if (cold_start) {
    state_ = kind_ == model::ModelKind::kFrog
                 ? model::ModelState::Frog(train_.ma(), train_.mb())
                 : model::ModelState::Logistic(train_.ma(), train_.mb());
  }
  TrainOutcome out;
  out.rounds_requested = rounds;
  if (kind_ == model::ModelKind::kFrog) {
    model::GdOptions o;
    o.rounds = rounds;
    o.learning_rate = learning_rate;
    o.min_improvement = min_improvement;
    auto r = model::TrainFrogGd(state_, train_.xa, train_.xb, train_.y, o);
    state_ = r.state;
    out.rounds_run = r.updates;
  } else {
    const Vector theta = model::TrainLogisticGd(
        state_.Theta(), train_.Combined(), train_.y, learning_rate, rounds);
    state_.theta_a = theta.head(train_.ma());
    state_.theta_b = theta.tail(train_.mb());
    out.rounds_run = rounds;
  }
  return out;
}

query::PredictionTable PredictCentral(const model::ModelState& state,
                                      const std::vector<int64_t>& ids,
                                      const Matrix& xa, const Matrix& xb) {
  if (state.kind == model::ModelKind::kFrog) {
    return query::PredictionTable::FromScores(
        ids, model::FrogEvaluate(state, xa, xb).f);
  }
  return query::PredictionTable::FromProbabilities(ids,
                                                   LogisticProbs(state, xa, xb));
}

InfluenceReport RainOracleInfluence(const model::ModelState& state,
                                    const model::PartitionedDataset& train,
                                    const std::vector<int64_t>& infer_ids,
                                    const Matrix& infer_xa,
                                    const Matrix& infer_xb,
                                    const query::DataTable& attributes,
                                    const query::QuerySpec& spec,
                                    const query::Complaint& complaint,
                                    const linalg::CgOptions& cg) {
  spec.Validate();
  const query::PredictionTable p =
      PredictCentral(state, infer_ids, infer_xa, infer_xb);
  const protocol::QueryStatus status =
      EvaluateComplaint(spec, complaint, p, attributes);
  if (!status.active) {
    throw InvalidArgumentError("complaint is satisfied; nothing to rank");
  }
  const Vector weights = query::ComplaintWeights(
      query::RelaxQuery(spec, p, attributes), status.direction);
  Matrix hessian;
  Vector rhs;
  Matrix per_example;
  linalg::CgOptions opts = cg;
  if (state.kind == model::ModelKind::kFrog) {
    rhs = query::QueryGradFrog(weights, state, infer_xa, infer_xb).Joined();
    hessian =
        model::FrogHessianBlocks(state, train.xa, train.xb, train.y).Assemble();
    opts.damping = linalg::DefiniteDamping(hessian, cg.damping);
    per_example =
        model::FrogLossGradient(state, train.xa, train.xb, train.y).per_example;
  } else {
    rhs = query::QueryGradLogistic(weights, state, infer_xa, infer_xb).Joined();
    const Matrix x = train.Combined();
    hessian = model::LogisticHessian(state.Theta(), x);
    per_example = model::LogisticGradient(state.Theta(), x, train.y).per_example;
  }
  const linalg::CgResult solved =
      linalg::CgSolve(linalg::DenseOracle(hessian), rhs, opts);
  return InfluenceReport::Make(train.ids, -(per_example * solved.z),
                               InfluenceSource::kRainOracle);
}

InfluenceReport LossBaselineRanking(const model::ModelState& state,
                                    const model::PartitionedDataset& train) {
  Vector losses;
  if (state.kind == model::ModelKind::kFrog) {
    losses =
        model::FrogLossGradient(state, train.xa, train.xb, train.y).losses;
  } else {
    losses = model::LogisticLosses(state.Theta(), train.Combined(), train.y);
  }
  return InfluenceReport::Make(train.ids, losses, InfluenceSource::kLossBaseline);
}

// ------------------------------------------------------------------- Loop

std::vector<double> DebugResult::QueryValues() const {
  std::vector<double> out;
  for (const auto& it : iterations) out.push_back(it.query_value);
  out.push_back(final_query_value);
  return out;
}

std::vector<double> DebugResult::RelaxedValues() const {
  std::vector<double> out;
  for (const auto& it : iterations) out.push_back(it.relaxed_value);
  out.push_back(final_relaxed_value);
  return out;
}

DebugResult DebugLoop(const DebugRunConfig& config, DebugBackend& backend,
                      const query::QuerySpec& spec,
                      const query::Complaint& complaint) {
  config.Validate();
  spec.Validate();
  if (backend.TrainingIds().empty()) {
    throw InvalidArgumentError("training set is empty");
  }
  DebugResult result;
  result.framework = backend.framework();
  int last_direction = 0;
  while (true) {
    const protocol::QueryStatus status = EvaluateComplaint(
        spec, complaint, backend.Predict(), backend.Attributes());
    result.final_query_value = status.value;
    result.final_relaxed_value = status.relaxed_value;
    result.complaint_satisfied = !status.active;
    const int remaining =
        config.budget - static_cast<int>(result.deleted.size());
    if (remaining <= 0) break;
    if (!status.active && config.early_stop) break;
    const int direction =
        status.active ? status.direction
                      : ContinuationDirection(complaint, status, last_direction);
    if (direction == 0) break;
    last_direction = direction;
    const query::Complaint target =
        status.active ? complaint : Continuation(direction, status.value);

    DebugIteration it;
    it.query_value = status.value;
    it.relaxed_value = status.relaxed_value;
    InfluenceReport report;
    try {
      report = backend.Rank(spec, target, config.cg);
    } catch (const SecurityError& e) {
      result.security_limited = true;
      result.security_message = e.what();
      break;
    }
    const size_t count = std::min(
        static_cast<size_t>(std::min(config.step, remaining)),
        report.ranking.size());
    it.deleted = report.Top(count);
    if (it.deleted.size() >= backend.TrainingIds().size()) {
      throw InvalidArgumentError("deletions would empty the training set");
    }
    backend.Delete(it.deleted);
    result.deleted.insert(result.deleted.end(), it.deleted.begin(),
                          it.deleted.end());
    try {
      it.retrain = backend.Train(config.retrain_rounds, config.learning_rate,
                                 config.cold_start);
    } catch (const SecurityError& e) {
      result.iterations.push_back(it);
      result.security_limited = true;
      result.security_message = e.what();
      break;
    }
    ++result.retrains;
    result.iterations.push_back(std::move(it));
  }
  result.final_model = backend.Model();
  if (const security::SecurityBudget* b = backend.budget()) {
    result.debug_iterations_consumed = b->debug_consumed();
    result.train_rounds_total = b->train_rounds_total();
    result.override_used = b->override_used();
  }
  return result;
}

}  // namespace vfdebug::debug
