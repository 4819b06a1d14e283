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

#include "vfdebug/query.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.h"
#include "vfdebug/error.h"

namespace vfdebug::query {
namespace {

using vfdebug::testing::FiniteDiffGradient;
using vfdebug::testing::MaxRelError;
using vfdebug::testing::RandomMatrix;
using vfdebug::testing::RandomVector;

constexpr const char* kRejections =
    "SELECT COUNT(*)/Total_Count AS ratio FROM P JOIN IA "
    "WHERE IA.Income > 200,000 AND P.Label = 0";

// Four wealthy applicants plus one below the income cut.
struct Toy {
  DataTable ia{{1, 2, 3, 4, 5}};
  Toy() { ia.AddNumeric("Income", {250000, 300000, 210000, 500000, 1000}); }
};

TEST(ParseQuery, RejectionRatio) {
  QuerySpec spec = ParseQuery(kRejections);
  EXPECT_EQ(spec.agg, Aggregate::kCount);
  EXPECT_EQ(spec.denominator.kind, Denominator::Kind::kTotalCount);
  ASSERT_EQ(spec.filters.size(), 2u);
  EXPECT_EQ(spec.filters[0].column, "Income");
  EXPECT_EQ(std::get<double>(spec.filters[0].value), 200000.0);
  EXPECT_EQ(spec.filters[1].column, kLabelColumn);
  EXPECT_EQ(std::get<double>(spec.filters[1].value), 0.0);
  // Canonical form reparses to the same text.
  EXPECT_EQ(ParseQuery(spec.ToString()).ToString(), spec.ToString());
}

TEST(ParseQuery, CaseStudyShapes) {
  QuerySpec avg = ParseQuery(
      "SELECT AVG(P.Label_prob()) FROM Predictions P JOIN Diabetes "
      "Group BY GENDER");
  EXPECT_EQ(avg.agg, Aggregate::kAvg);
  EXPECT_TRUE(avg.label_in_target());
  EXPECT_EQ(avg.group_by, std::vector<std::string>{"GENDER"});
  ParseOptions names;
  names.positive_label = "High Salary";
  QuerySpec salary = ParseQuery(
      "SELECT avg(SALARY) FROM Predictions P ⋈ID Adult "
      "WHERE P.Label = 'High Salary' GROUP BY GENDER",
      names);
  EXPECT_EQ(std::get<double>(salary.filters[0].value), 1.0);
  QuerySpec dot = ParseQuery("SELECT COUNT(·) FROM P ⋈ID IA");
  EXPECT_EQ(dot.target, "*");
}

TEST(ParseQuery, Errors) {
  EXPECT_THROW(ParseQuery("SELECT MAX(x) FROM P"), QueryError);
  EXPECT_THROW(ParseQuery("SELECT COUNT(*) FROM P WHERE P.Label = 1 "
                          "GROUP BY P.Label"),
               QueryError);
  EXPECT_THROW(ParseQuery("SELECT SUM(*) FROM P"), QueryError);
  EXPECT_THROW(ParseQuery("SELECT COUNT(*) FROM P WHERE a >"), QueryError);
  EXPECT_THROW(ParseQuery("SELECT COUNT(*) FROM P WHERE P.Label = 'maybe'"),
               QueryError);
  EXPECT_THROW(ParseQuery("SELECT AVG(x) / 2 FROM P"), QueryError);
}

TEST(ExecuteQuery, RejectionRatioIsHalf) {
  Toy toy;
  PredictionTable p = PredictionTable::FromProbabilities(
      {1, 2, 3, 4, 5}, Vector{{0.1, 0.2, 0.9, 0.8, 0.0}});
  QuerySpec spec = ParseQuery(kRejections);
  EXPECT_DOUBLE_EQ(SelectTarget(spec, ExecuteQuery(spec, p, toy.ia)), 0.5);
  // Relaxed form: Σ prob(label 0) / 4 over the four wealthy rows.
  RelaxedQuery r = RelaxQuery(spec, p, toy.ia);
  EXPECT_NEAR(r.value, (0.9 + 0.8 + 0.1 + 0.2) / 4.0, 1e-15);
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(r.coeffs[i], -0.25);
  EXPECT_EQ(r.coeffs[4], 0.0);
}

TEST(ExecuteQuery, EmptyFilterCountsZero) {
  Toy toy;
  PredictionTable p =
      PredictionTable::FromProbabilities({1, 2, 3, 4, 5}, Vector::Zero(5));
  QuerySpec spec =
      ParseQuery("SELECT COUNT(*) FROM P JOIN IA WHERE Income > 1e9");
  EXPECT_EQ(SelectTarget(spec, ExecuteQuery(spec, p, toy.ia)), 0.0);
  RelaxedQuery r = RelaxQuery(spec, p, toy.ia);
  EXPECT_EQ(r.coeffs.cwiseAbs().sum(), 0.0);
}

TEST(ExecuteQuery, GroupByAverageByHand) {
  DataTable ia({10, 11, 12, 13, 14, 15});
  ia.AddCategorical("gender", {"F", "M", "F", "M", "F", "M"});
  ia.AddNumeric("salary", {10, 20, 30, 40, 50, 60});
  PredictionTable p = PredictionTable::FromProbabilities(
      {10, 11, 12, 13, 14, 15}, Vector{{0.7, 0.2, 0.4, 0.9, 0.6, 0.55}});
  // Hard labels: 1 0 0 1 1 1.
  QuerySpec spec = ParseQuery(
      "SELECT AVG(salary) FROM P JOIN IA WHERE P.Label = 1 GROUP BY gender");
  QueryResult res = ExecuteQuery(spec, p, ia);
  EXPECT_DOUBLE_EQ(res.Group("F").value, (10.0 + 50.0) / 2.0);
  EXPECT_DOUBLE_EQ(res.Group("M").value, (40.0 + 60.0) / 2.0);
  spec.target_selector = "M - F";
  EXPECT_DOUBLE_EQ(SelectTarget(spec, res), 20.0);
  // Relaxed: Σ salary·p1 over the group over the fixed discrete count 2.
  RelaxedQuery r = RelaxQuery(spec, p, ia);
  double m = (20 * 0.2 + 40 * 0.9 + 60 * 0.55) / 2.0;
  double f = (10 * 0.7 + 30 * 0.4 + 50 * 0.6) / 2.0;
  EXPECT_NEAR(r.value, m - f, 1e-12);
  EXPECT_DOUBLE_EQ(r.coeffs[0], -5.0);
  EXPECT_DOUBLE_EQ(r.coeffs[1], 10.0);
  spec.target_selector = "X";
  EXPECT_THROW(RelaxQuery(spec, p, ia), QueryError);
  EXPECT_THROW(SelectTarget(spec, res), QueryError);
}

TEST(ExecuteQuery, GroupDifferenceEqualsSeparateGroups) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<int64_t> ids;
  std::vector<std::string> g;
  Vector probs(40);
  for (int i = 0; i < 40; ++i) {
    ids.push_back(i);
    g.push_back(u(rng) < 0.5 ? "a" : "b");
    probs[i] = u(rng);
  }
  DataTable ia(ids);
  ia.AddCategorical("grp", g);
  PredictionTable p = PredictionTable::FromProbabilities(ids, probs);
  QuerySpec spec = ParseQuery("SELECT AVG(P.Label) FROM P JOIN IA GROUP BY grp");
  spec.target_selector = "a - b";
  RelaxedQuery diff = RelaxQuery(spec, p, ia);
  spec.target_selector = "a";
  RelaxedQuery a = RelaxQuery(spec, p, ia);
  spec.target_selector = "b";
  RelaxedQuery b = RelaxQuery(spec, p, ia);
  EXPECT_NEAR(diff.value, a.value - b.value, 1e-14);
  EXPECT_LT((diff.coeffs - (a.coeffs - b.coeffs)).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(ExecuteQuery, GroupByLabel) {
  DataTable ia({1, 2, 3});
  ia.AddNumeric("x", {1, 2, 3});
  PredictionTable p =
      PredictionTable::FromProbabilities({1, 2, 3}, Vector{{0.9, 0.3, 0.6}});
  QuerySpec spec =
      ParseQuery("SELECT SUM(x) FROM P JOIN IA GROUP BY P.Label");
  QueryResult res = ExecuteQuery(spec, p, ia);
  EXPECT_EQ(res.Group("1").value, 4.0);
  EXPECT_EQ(res.Group("0").value, 2.0);
  spec.target_selector = "0";
  RelaxedQuery r = RelaxQuery(spec, p, ia);
  EXPECT_NEAR(r.value, 0.1 * 1 + 0.7 * 2 + 0.4 * 3, 1e-14);
  EXPECT_EQ(r.coeffs[2], -3.0);
}

TEST(RelaxQuery, ExactOnHardProbabilities) {
  std::mt19937_64 rng(4);
  std::vector<int64_t> ids;
  std::vector<double> inc;
  Vector hard(30);
  for (int i = 0; i < 30; ++i) {
    ids.push_back(100 + i);
    inc.push_back(static_cast<double>(rng() % 1000));
    hard[i] = static_cast<double>(rng() % 2);
  }
  DataTable ia(ids);
  ia.AddNumeric("inc", inc);
  PredictionTable p = PredictionTable::FromProbabilities(ids, hard);
  for (const char* q :
       {"SELECT COUNT(*) / Total_count FROM P WHERE inc > 300 AND P.Label = 1",
        "SELECT SUM(inc) FROM P WHERE P.Label = 0",
        "SELECT AVG(P.Label) FROM P WHERE inc < 700",
        "SELECT COUNT(*) / 7 FROM P WHERE P.Label = 1"}) {
    QuerySpec spec = ParseQuery(q);
    EXPECT_NEAR(RelaxQuery(spec, p, ia).value,
                SelectTarget(spec, ExecuteQuery(spec, p, ia)), 1e-9)
        << q;
  }
}

TEST(RelaxQuery, ConsistencyBound) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<int64_t> ids;
  Vector probs(50);
  std::vector<double> inc;
  for (int i = 0; i < 50; ++i) {
    ids.push_back(i);
    probs[i] = u(rng);
    inc.push_back(u(rng));
  }
  DataTable ia(ids);
  ia.AddNumeric("inc", inc);
  PredictionTable p = PredictionTable::FromProbabilities(ids, probs);
  QuerySpec spec = ParseQuery(
      "SELECT COUNT(*) / Total_count FROM P WHERE inc > 0.3 AND P.Label = 1");
  RelaxedQuery r = RelaxQuery(spec, p, ia);
  double discrete = SelectTarget(spec, ExecuteQuery(spec, p, ia));
  double bound = 0.0;
  int total = 0;
  for (int i = 0; i < 50; ++i) {
    if (inc[static_cast<size_t>(i)] > 0.3) {
      bound += std::fabs(probs[i] - p.hard_label[static_cast<size_t>(i)]);
      ++total;
    }
  }
  EXPECT_LE(std::fabs(r.value - discrete), bound / total + 1e-12);
}

TEST(Complaint, EvalAndDirection) {
  Complaint eq{Complaint::Op::kEq, 0.0};
  EXPECT_FALSE(eq.Satisfied(0.5));
  EXPECT_EQ(eq.Direction(0.5), 1);
  Complaint le{Complaint::Op::kLe, 1.0};
  EXPECT_TRUE(le.Satisfied(0.3));
  EXPECT_EQ(le.Direction(0.3), 0);
  Complaint ge{Complaint::Op::kGe, 0.5};
  EXPECT_FALSE(ge.Satisfied(0.2));
  EXPECT_EQ(ge.Direction(0.2), -1);
  EXPECT_EQ(ComplaintOpFromString("<="), Complaint::Op::kLe);
}

class QueryGradient : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(6);
    xa_ = RandomMatrix(25, 3, rng);
    xb_ = RandomMatrix(25, 2, rng);
    std::vector<int64_t> ids;
    std::vector<double> inc;
    for (int i = 0; i < 25; ++i) {
      ids.push_back(i);
      inc.push_back(xa_(i, 0));
    }
    ia_ = DataTable(ids);
    ia_.AddNumeric("inc", inc);
    ids_ = ids;
    spec_ = ParseQuery(
        "SELECT COUNT(*) / Total_count FROM P WHERE inc > -0.2 AND P.Label = 1");
  }

  double RelaxedLogistic(const Vector& theta) const {
    model::ModelState s = model::ModelState::Logistic(3, 2);
    s.theta_a = theta.head(3);
    s.theta_b = theta.tail(2);
    Vector prob = model::LogisticProbabilities(
        theta, (model::Matrix(25, 5) << xa_, xb_).finished());
    return RelaxQuery(spec_, PredictionTable::FromProbabilities(ids_, prob),
                      ia_)
        .value;
  }

  model::Matrix xa_, xb_;
  DataTable ia_;
  std::vector<int64_t> ids_;
  QuerySpec spec_;
};

TEST_F(QueryGradient, LogisticMatchesFiniteDifference) {
  std::mt19937_64 rng(7);
  Vector theta = RandomVector(5, rng, 0.5);
  model::ModelState s = model::ModelState::Logistic(3, 2);
  s.theta_a = theta.head(3);
  s.theta_b = theta.tail(2);
  Vector prob = model::LogisticProbabilities(
      theta, (model::Matrix(25, 5) << xa_, xb_).finished());
  // The relaxed query is affine in prob, so the coefficient set from the
  // current point is exact at nearby points with the same hard labels.
  RelaxedQuery r =
      RelaxQuery(spec_, PredictionTable::FromProbabilities(ids_, prob), ia_);
  for (int s_dir : {1, -1}) {
    Vector q = QueryGradLogistic(ComplaintWeights(r, s_dir), s, xa_, xb_)
                   .Joined();
    Vector fd = FiniteDiffGradient(
        [&](const Vector& t) { return RelaxedLogistic(t); }, theta);
    EXPECT_LT(MaxRelError(q, s_dir * fd), 1e-4);
  }
}

TEST_F(QueryGradient, SingleRecordAtZero) {
  DataTable ia({0});
  ia.AddNumeric("inc", {1.0});
  model::Matrix xa(1, 2);
  xa << 1.0, -2.0;
  model::Matrix xb(1, 1);
  xb << 3.0;
  QuerySpec spec =
      ParseQuery("SELECT COUNT(*) / 4 FROM P WHERE P.Label = 1");
  PredictionTable p = PredictionTable::FromProbabilities({0}, Vector{{0.5}});
  RelaxedQuery r = RelaxQuery(spec, p, ia);
  model::ModelState s = model::ModelState::Logistic(2, 1);
  linalg::SeparatedVector q =
      QueryGradLogistic(ComplaintWeights(r, 1), s, xa, xb);
  EXPECT_DOUBLE_EQ(q.a[0], 0.25 / 4);
  EXPECT_DOUBLE_EQ(q.a[1], -0.5 / 4);
  EXPECT_DOUBLE_EQ(q.b[0], 0.75 / 4);
}

TEST_F(QueryGradient, FrogMatchesFiniteDifference) {
  std::mt19937_64 rng(8);
  model::ModelState s = model::ModelState::Frog(3, 2);
  s.theta_a = RandomVector(3, rng, 0.5);
  s.theta_b = RandomVector(2, rng, 0.5);
  s.c1 = 0.6;
  s.c2 = 0.5;
  // Unclamped relaxed value: scores stay inside [0, 1] here.
  auto relaxed = [&](const Vector& params) {
    model::ModelState t = s;
    t.SetFrogParams(params);
    model::FrogScores f = model::FrogEvaluate(t, xa_, xb_);
    return RelaxQuery(spec_, PredictionTable::FromScores(ids_, f.f), ia_)
        .value;
  };
  model::FrogScores f = model::FrogEvaluate(s, xa_, xb_);
  ASSERT_GE(f.f.minCoeff(), 0.0);
  ASSERT_LE(f.f.maxCoeff(), 1.0);
  RelaxedQuery r =
      RelaxQuery(spec_, PredictionTable::FromScores(ids_, f.f), ia_);
  Vector q = QueryGradFrog(ComplaintWeights(r, 1), s, xa_, xb_).Joined();
  Vector fd = FiniteDiffGradient(relaxed, s.FrogParams());
  EXPECT_LT(MaxRelError(q, fd), 1e-4);
}

TEST_F(QueryGradient, NoQualifyingRowsGivesZero) {
  QuerySpec spec =
      ParseQuery("SELECT COUNT(*) FROM P WHERE inc > 100 AND P.Label = 1");
  PredictionTable p =
      PredictionTable::FromProbabilities(ids_, Vector::Constant(25, 0.3));
  RelaxedQuery r = RelaxQuery(spec, p, ia_);
  model::ModelState s = model::ModelState::Logistic(3, 2);
  EXPECT_EQ(QueryGradLogistic(ComplaintWeights(r, 1), s, xa_, xb_)
                .Joined()
                .cwiseAbs()
                .sum(),
            0.0);
}

TEST_F(QueryGradient, DescentDirectionReducesSignedQuery) {
  std::mt19937_64 rng(9);
  Vector theta = RandomVector(5, rng, 0.3);
  model::ModelState s = model::ModelState::Logistic(3, 2);
  s.theta_a = theta.head(3);
  s.theta_b = theta.tail(2);
  Vector prob = model::LogisticProbabilities(
      theta, (model::Matrix(25, 5) << xa_, xb_).finished());
  RelaxedQuery r =
      RelaxQuery(spec_, PredictionTable::FromProbabilities(ids_, prob), ia_);
  for (int dir : {1, -1}) {
    Vector q =
        QueryGradLogistic(ComplaintWeights(r, dir), s, xa_, xb_).Joined();
    Vector stepped = theta - 1e-3 * q;
    EXPECT_LE(dir * RelaxedLogistic(stepped), dir * RelaxedLogistic(theta));
  }
}

}  // namespace
}  // namespace vfdebug::query
