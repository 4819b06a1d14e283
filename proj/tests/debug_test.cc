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

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "protocol_fixture.h"
#include "vfdebug/error.h"
#include "vfdebug/synthetic.h"

namespace vfdebug::debug {
namespace {

using protocol::FederationInput;
using testing::MakeInput;
using testing::TestConfig;

const char* kCountPositives =
    "SELECT COUNT(*) FROM P JOIN I WHERE P.Label = 1";

DebugRunConfig Config(int budget, int step, bool early_stop) {
  DebugRunConfig c;
  c.budget = budget;
  c.step = step;
  c.early_stop = early_stop;
  c.retrain_rounds = 100;
  c.learning_rate = 1.0;
  return c;
}

// Complaint that asks for more predicted positives than the model yields.
query::Complaint MorePositives(DebugBackend& backend,
                               const query::QuerySpec& spec) {
  auto status = EvaluateComplaint(spec, {query::Complaint::Op::kEq, 0.0},
                                  backend.Predict(), backend.Attributes());
  return {query::Complaint::Op::kGe, status.value + 5.0};
}

double Distance(const query::Complaint& c, double value) {
  switch (c.op) {
    case query::Complaint::Op::kGe:
      return std::max(0.0, c.value - value);
    case query::Complaint::Op::kLe:
      return std::max(0.0, value - c.value);
    case query::Complaint::Op::kEq:
      break;
  }
  return std::fabs(value - c.value);
}

TEST(DebugConfig, StepMustFitBudget) {
  EXPECT_NO_THROW(Config(10, 1, true).Validate());
  EXPECT_NO_THROW(Config(10, 10, true).Validate());
  EXPECT_THROW(Config(10, 0, true).Validate(), InvalidArgumentError);
  EXPECT_THROW(Config(3, 4, true).Validate(), InvalidArgumentError);
}

TEST(DebugConfig, FrameworkNamesRoundTrip) {
  for (Framework f : {Framework::kFedRain, Framework::kFrog,
                      Framework::kRainOracle, Framework::kLossBaseline}) {
    EXPECT_EQ(FrameworkFromName(FrameworkName(f)), f);
  }
  EXPECT_THROW(FrameworkFromName("rain"), InvalidArgumentError);
}

TEST(DebugLoop, SatisfiedAtEntryDeletesNothing) {
  FederationInput in = MakeInput(40, 3, 2, 16, 51);
  protocol::FedRainFederation fed(in, TestConfig());
  fed.Train(2, 0.5);
  FedRainBackend backend(&fed);
  auto spec = query::ParseQuery(kCountPositives);
  DebugResult r = DebugLoop(Config(10, 1, true), backend, spec,
                            {query::Complaint::Op::kGe, -1.0});
  EXPECT_TRUE(r.deleted.empty());
  EXPECT_EQ(r.retrains, 0);
  EXPECT_TRUE(r.complaint_satisfied);
  EXPECT_EQ(r.debug_iterations_consumed, 0);
  EXPECT_EQ(r.QueryValues().size(), 1u);
}

TEST(DebugLoop, BudgetArithmeticWithoutEarlyStop) {
  harness::PlantedOptions po;
  po.n_train = 60;
  po.seed = 52;
  auto suite = harness::MakePlantedSuite(po);
  CentralBackend backend(suite.input, model::ModelKind::kLogistic,
                         Framework::kRainOracle);
  backend.Train(300, 1.0, false);
  query::Complaint c = MorePositives(backend, suite.spec);
  DebugResult r = DebugLoop(Config(10, 1, false), backend, suite.spec, c);
  EXPECT_EQ(r.deleted.size(), 10u);
  EXPECT_EQ(r.retrains, 10);
  EXPECT_EQ(r.iterations.size(), 10u);
  EXPECT_EQ(std::set<int64_t>(r.deleted.begin(), r.deleted.end()).size(), 10u);
  EXPECT_EQ(backend.TrainingIds().size(), 50u);

  CentralBackend uneven(suite.input, model::ModelKind::kLogistic,
                        Framework::kRainOracle);
  uneven.Train(300, 1.0, false);
  DebugResult u = DebugLoop(Config(10, 3, false), uneven, suite.spec, c);
  ASSERT_EQ(u.iterations.size(), 4u);
  EXPECT_EQ(u.iterations.back().deleted.size(), 1u);
  EXPECT_EQ(u.deleted.size(), 10u);
}

TEST(DebugLoop, FrogBudgetArithmeticAndDeletionConsistency) {
  harness::PlantedOptions po;
  po.n_train = 60;
  po.n_infer = 40;
  po.seed = 53;
  auto suite = harness::MakePlantedSuite(po);
  protocol::FrogFederation fed(suite.input, TestConfig(3));
  model::GdOptions g;
  g.rounds = 300;
  g.learning_rate = 1.0;
  fed.Train(g);
  FrogBackend backend(&fed);
  query::Complaint c = MorePositives(backend, suite.spec);
  DebugResult r = DebugLoop(Config(5, 1, false), backend, suite.spec, c);
  EXPECT_EQ(r.deleted.size(), 5u);
  EXPECT_EQ(r.retrains, 5);
  // Both parties hold the same surviving ids (JoinedTraining checks this).
  std::vector<int64_t> expected;
  for (int64_t id : suite.input.train.ids) {
    if (std::find(r.deleted.begin(), r.deleted.end(), id) == r.deleted.end()) {
      expected.push_back(id);
    }
  }
  EXPECT_EQ(fed.JoinedTraining().ids, expected);
  auto v = security::AuditTranscript(fed.transcript(), Protocol::kFrog);
  EXPECT_TRUE(v.pass) << (v.violations.empty() ? "" : v.violations[0]);
}

// 50 clean rows with one confidently positive record relabeled 0. Removing
// it and retraining (leave-one-out) raises the predicted-positive mass the
// most, and both the oracle and the federated Frog loop delete it first.
class PlantedRecordTest : public ::testing::Test {
 protected:
  void SetUp() override {
    harness::PlantedOptions po;
    po.n_train = 50;
    po.n_infer = 100;
    po.flips = 0;
    po.seed = 54;
    po.signal = 20.0;
    suite = harness::MakePlantedSuite(po);
    CentralBackend clean(suite.input, model::ModelKind::kFrog,
                         Framework::kRainOracle);
    clean.Train(kRounds, 1.0, false);
    const Vector f = model::FrogEvaluate(clean.Model(), suite.input.train.xa,
                                         suite.input.train.xb)
                         .f;
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      if (suite.input.train.y[i] == 1.0 && (best < 0 || f[i] > f[best])) {
        best = i;
      }
    }
    planted = suite.input.train.ids[static_cast<size_t>(best)];
    suite.input.train.y[best] = 0.0;
  }

  static constexpr int kRounds = 2000;
  harness::SyntheticSuite suite;
  int64_t planted = -1;
};

TEST_F(PlantedRecordTest, LeaveOneOutIdentifiesPlantedRecord) {
  const auto& tr = suite.input.train;
  double best_gain = -1e300;
  int64_t best_id = -1;
  for (size_t i = 0; i < tr.ids.size(); ++i) {
    model::GdOptions g;
    g.rounds = kRounds;
    g.learning_rate = 1.0;
    auto without = tr.Without({tr.ids[i]});
    auto fit = model::TrainFrogGd(model::ModelState::Frog(tr.ma(), tr.mb()),
                                  without.xa, without.xb, without.y, g);
    auto p = PredictCentral(fit.state, suite.input.infer_ids,
                            suite.input.infer_xa, suite.input.infer_xb);
    const double mass =
        query::RelaxQuery(suite.spec, p, suite.input.infer_table).value;
    if (mass > best_gain) {
      best_gain = mass;
      best_id = tr.ids[i];
    }
  }
  EXPECT_EQ(best_id, planted);
}

TEST_F(PlantedRecordTest, OracleAndFrogDeleteItFirst) {
  CentralBackend oracle(suite.input, model::ModelKind::kFrog,
                        Framework::kRainOracle);
  oracle.Train(kRounds, 1.0, false);
  query::Complaint c = MorePositives(oracle, suite.spec);
  DebugResult ro = DebugLoop(Config(1, 1, true), oracle, suite.spec, c);
  ASSERT_EQ(ro.deleted.size(), 1u);
  EXPECT_EQ(ro.deleted[0], planted);

  protocol::FrogFederation fed(suite.input, TestConfig(4));
  model::GdOptions g;
  g.rounds = kRounds;
  g.learning_rate = 1.0;
  fed.Train(g);
  FrogBackend frog(&fed);
  DebugResult rf = DebugLoop(Config(1, 1, true), frog, suite.spec, c);
  ASSERT_EQ(rf.deleted.size(), 1u);
  EXPECT_EQ(rf.deleted[0], planted);
}

TEST(DebugLoop, PlantedSuiteProgressesTowardTarget) {
  auto suite = harness::MakePlantedSuite({});
  CentralBackend backend(suite.input, model::ModelKind::kFrog,
                         Framework::kRainOracle);
  backend.Train(1000, 1.0, false);
  DebugResult r =
      DebugLoop(Config(20, 10, false), backend, suite.spec, suite.complaint);
  ASSERT_FALSE(r.iterations.empty());
  auto relaxed = r.RelaxedValues();
  EXPECT_LT(Distance(suite.complaint, relaxed.back()),
            Distance(suite.complaint, relaxed.front()));
}

TEST(DebugLoop, FrogRankingTracksOracle) {
  harness::PlantedOptions po;
  po.seed = 55;
  auto suite = harness::MakePlantedSuite(po);
  protocol::FrogFederation fed(suite.input, TestConfig(5));
  model::GdOptions g;
  g.rounds = 500;
  g.learning_rate = 1.0;
  fed.Train(g);
  CentralBackend oracle(suite.input, model::ModelKind::kFrog,
                        Framework::kRainOracle);
  oracle.Train(500, 1.0, false);
  FrogBackend frog(&fed);
  query::Complaint c = MorePositives(oracle, suite.spec);
  InfluenceReport a = frog.Rank(suite.spec, c, {});
  InfluenceReport b = oracle.Rank(suite.spec, c, {});
  EXPECT_GE(SpearmanRho(a.ranking, b.ranking), 0.9);
}

TEST(DebugLoop, FedRainStopsAtDebuggingBound) {
  FederationInput in = MakeInput(40, 3, 2, 16, 56);
  protocol::FedRainFederation fed(in, TestConfig());
  fed.Train(2, 0.5);
  FedRainBackend backend(&fed);
  auto spec = query::ParseQuery(kCountPositives);
  query::Complaint c = MorePositives(backend, spec);
  DebugResult r = DebugLoop(Config(10, 1, false), backend, spec, c);
  const auto limit = security::FedRainDebugLimit(
      40, 16, 2, security::DebugBoundMode::kConservative);
  ASSERT_TRUE(limit.has_value());
  EXPECT_TRUE(r.security_limited);
  EXPECT_FALSE(r.security_message.empty());
  EXPECT_EQ(static_cast<int64_t>(r.deleted.size()), *limit);
  ASSERT_FALSE(r.iterations.empty());
  EXPECT_TRUE(r.iterations[0].retrain.clipped);
  EXPECT_EQ(r.iterations[0].retrain.rounds_run,
            *security::FedRainTrainLimit(39, 2));
  auto v = security::AuditTranscript(fed.transcript(), Protocol::kFedRain);
  EXPECT_TRUE(v.pass) << (v.violations.empty() ? "" : v.violations[0]);
}

TEST(DebugLoop, RefusesToEmptyTrainingSet) {
  FederationInput in = MakeInput(3, 2, 1, 8, 57);
  CentralBackend backend(in, model::ModelKind::kLogistic,
                         Framework::kLossBaseline);
  backend.Train(10, 0.5, false);
  auto spec = query::ParseQuery(kCountPositives);
  EXPECT_THROW(DebugLoop(Config(3, 3, false), backend, spec,
                         {query::Complaint::Op::kGe, 1e6}),
               InvalidArgumentError);
}

TEST(RainOracle, MatchesFedRainInfluence) {
  FederationInput in = MakeInput(40, 3, 2, 16, 58);
  protocol::SessionConfig cfg = TestConfig();
  cfg.unsafe_override = true;
  protocol::FedRainFederation fed(in, cfg);
  fed.Train(30, 0.5);
  FedRainBackend backend(&fed);
  auto spec = query::ParseQuery(kCountPositives);
  query::Complaint c = MorePositives(backend, spec);
  InfluenceReport federated = backend.Rank(spec, c, {});
  InfluenceReport oracle =
      RainOracleInfluence(fed.JoinedModel(), in.train, in.infer_ids,
                          in.infer_xa, in.infer_xb, in.infer_table, spec, c);
  const double scale = std::max(1.0, oracle.scores.cwiseAbs().maxCoeff());
  EXPECT_LT((federated.scores - oracle.scores).cwiseAbs().maxCoeff(),
            1e-5 * scale);
  EXPECT_EQ(federated.ranking, oracle.ranking);
}

TEST(RainOracle, DuplicatesTieAndDirectionFlipsSign) {
  FederationInput in = MakeInput(30, 3, 2, 20, 59);
  in.train.xa.row(7) = in.train.xa.row(3);
  in.train.xb.row(7) = in.train.xb.row(3);
  in.train.y[7] = in.train.y[3];
  CentralBackend backend(in, model::ModelKind::kLogistic,
                         Framework::kRainOracle);
  backend.Train(300, 1.0, false);
  auto spec = query::ParseQuery(kCountPositives);
  InfluenceReport up = backend.Rank(spec, {query::Complaint::Op::kGe, 1e6}, {});
  InfluenceReport down =
      backend.Rank(spec, {query::Complaint::Op::kLe, -1e6}, {});
  EXPECT_EQ(up.scores[7], up.scores[3]);
  EXPECT_LT((up.scores + down.scores).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LossBaseline, RanksMislabeledHighAndFitsLow) {
  harness::PlantedOptions po;
  po.n_train = 80;
  po.flips = 0;
  po.seed = 60;
  auto suite = harness::MakePlantedSuite(po);
  CentralBackend clean(suite.input, model::ModelKind::kLogistic,
                       Framework::kLossBaseline);
  clean.Train(500, 1.0, false);
  const Vector h = model::LogisticProbabilities(
      clean.Model().Theta(), suite.input.train.Combined());
  // Most confident positive gets a flipped label; most confident fit stays.
  Eigen::Index flip = 0;
  Eigen::Index fit = 0;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    if (suite.input.train.y[i] == 1.0 && h[i] > h[flip]) flip = i;
  }
  auto miss = [&](Eigen::Index i) {
    return i == flip ? 1e300 : std::fabs(h[i] - suite.input.train.y[i]);
  };
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    if (miss(i) < miss(fit)) fit = i;
  }
  suite.input.train.y[flip] = 0.0;
  CentralBackend loss(suite.input, model::ModelKind::kLogistic,
                      Framework::kLossBaseline);
  loss.Train(500, 1.0, false);
  auto spec = query::ParseQuery(kCountPositives);
  InfluenceReport a = loss.Rank(spec, {query::Complaint::Op::kGe, 1e6}, {});
  InfluenceReport b = loss.Rank(spec, {query::Complaint::Op::kLe, -1e6}, {});
  EXPECT_EQ(a.ranking, b.ranking);
  const auto& ids = suite.input.train.ids;
  auto rank_of = [&](int64_t id) {
    return std::find(a.ranking.begin(), a.ranking.end(), id) - a.ranking.begin();
  };
  EXPECT_LT(rank_of(ids[static_cast<size_t>(flip)]), 5);
  EXPECT_GE(rank_of(ids[static_cast<size_t>(fit)]),
            static_cast<long>(ids.size()) - 20);
  EXPECT_EQ(a.produced_by, InfluenceSource::kLossBaseline);
}

TEST(LossBaseline, FrogModelUsesSquaredResiduals) {
  FederationInput in = MakeInput(30, 2, 2, 4, 61);
  model::ModelState s = model::ModelState::Frog(2, 2);
  s.c1 = 0.7;
  s.c2 = 0.2;
  InfluenceReport r = LossBaselineRanking(s, in.train);
  auto lg = model::FrogLossGradient(s, in.train.xa, in.train.xb, in.train.y);
  EXPECT_EQ(r.scores, lg.losses);
}

}  // namespace
}  // namespace vfdebug::debug
