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


#include "vfdebug/synthetic.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "vfdebug/error.h"

namespace vfdebug::harness {
namespace {

Matrix Gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

Vector DrawLabels(const Vector& logits, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector y(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    y[i] = u(rng) < model::Sigmoid(logits[i]) ? 1.0 : 0.0;
  }
  return y;
}

std::vector<int64_t> Sequence(int64_t start, int count) {
  std::vector<int64_t> ids(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) ids[static_cast<size_t>(i)] = start + i;
  return ids;
}

Matrix WithBias(const Matrix& x) {
  Matrix out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setOnes();
  return out;
}

// Flips `count` of the positive labels among `eligible` rows to 0, chosen
// uniformly by the generator. Returns the flipped row indices in row order.
std::vector<int> FlipPositives(Vector* y, const std::vector<int>& eligible,
                               int count, std::mt19937_64& rng) {
  std::vector<int> positives;
  for (int i : eligible) {
    if ((*y)[i] == 1.0) positives.push_back(i);
  }
  if (count > static_cast<int>(positives.size())) {
    throw InvalidArgumentError("not enough positive labels to flip");
  }
  std::shuffle(positives.begin(), positives.end(), rng);
  positives.resize(static_cast<size_t>(count));
  std::sort(positives.begin(), positives.end());
  for (int i : positives) (*y)[i] = 0.0;
  return positives;
}

void AddFeatureColumns(query::DataTable* table, const Matrix& xa) {
  for (Eigen::Index j = 0; j < xa.cols(); ++j) {
    table->AddNumeric("A" + std::to_string(j),
                      std::vector<double>(xa.col(j).data(),
                                          xa.col(j).data() + xa.rows()));
  }
}

}  // namespace

SyntheticSuite MakePlantedSuite(const PlantedOptions& o) {
  if (o.n_train <= 0 || o.n_infer <= 0 || o.n_holdout < 0 ||
      o.features_a < 0 || o.features_b < 1 || o.flips < 0 ||
      o.shared < 0.0 || o.shared > 1.0) {
    throw InvalidArgumentError("invalid planted-suite options");
  }
  std::mt19937_64 rng(o.seed);
  const int m = o.features_a + o.features_b;
  Vector w = Gaussian(m, 1, rng).col(0);
  w /= std::max(w.norm(), 1e-12);
  auto logits = [&](const Matrix& xa, const Matrix& xb) -> Vector {
    return o.signal * (xa * w.head(o.features_a) + xb * w.tail(o.features_b));
  };
  // Feature j of either party loads on latent factor j, so column j of A
  // and column j of B describe the same hidden trait.
  const int latent = std::max(1, std::max(o.features_a, o.features_b));
  const double own = std::sqrt(1.0 - o.shared * o.shared);
  auto features = [&](int rows, Matrix* xa, Matrix* xb) {
    const Matrix z = Gaussian(rows, latent, rng);
    *xa = o.shared * z.leftCols(o.features_a) +
          own * Gaussian(rows, o.features_a, rng);
    *xb = o.shared * z.leftCols(o.features_b) +
          own * Gaussian(rows, o.features_b, rng);
  };
  SyntheticSuite s;
  auto& in = s.input;
  Matrix xa;
  features(o.n_train, &xa, &in.train.xb);
  s.clean_train_y = DrawLabels(logits(xa, in.train.xb), rng);
  in.train.xa = WithBias(xa);
  in.train.ids = Sequence(0, o.n_train);

  Matrix ia;
  features(o.n_infer, &ia, &in.infer_xb);
  s.infer_y = DrawLabels(logits(ia, in.infer_xb), rng);
  in.infer_xa = WithBias(ia);
  in.infer_ids = Sequence(o.n_train, o.n_infer);
  in.infer_table = query::DataTable(in.infer_ids);
  AddFeatureColumns(&in.infer_table, ia);

  Matrix ha;
  features(o.n_holdout, &ha, &in.holdout_xb);
  s.holdout_y = DrawLabels(logits(ha, in.holdout_xb), rng);
  in.holdout_xa = WithBias(ha);
  in.holdout_ids = Sequence(o.n_train + o.n_infer, o.n_holdout);

  in.train.y = s.clean_train_y;
  std::vector<int> rows(static_cast<size_t>(o.n_train));
  for (int i = 0; i < o.n_train; ++i) rows[static_cast<size_t>(i)] = i;
  for (int i : FlipPositives(&in.train.y, rows, o.flips, rng)) {
    s.corrupted.push_back(in.train.ids[static_cast<size_t>(i)]);
  }
  s.query = "SELECT COUNT(*) FROM P JOIN I WHERE P.Label = 1";
  s.spec = query::ParseQuery(s.query);
  s.complaint = {query::Complaint::Op::kGe, s.infer_y.sum()};
  return s;
}

SyntheticSuite MakeFairnessSuite(const FairnessOptions& o) {
  if (o.n_train <= 0 || o.n_infer <= 1 || o.n_holdout < 0 ||
      o.features_a < 0 || o.features_b < 1 || o.flip_rate < 0.0 ||
      o.flip_rate > 1.0) {
    throw InvalidArgumentError("invalid fairness-suite options");
  }
  std::mt19937_64 rng(o.seed);
  const int m = o.features_a + o.features_b;
  Vector w = Gaussian(m, 1, rng).col(0);
  w /= std::max(w.norm(), 1e-12);
  std::bernoulli_distribution coin(0.5);
  // A's columns: group indicator, features, then the bias.
  auto block = [&](int rows, Matrix* xa, Matrix* xb, Vector* y,
                   std::vector<std::string>* groups) {
    Matrix feats = Gaussian(rows, o.features_a, rng);
    *xb = Gaussian(rows, o.features_b, rng);
    Matrix raw(rows, o.features_a + 1);
    groups->clear();
    for (int i = 0; i < rows; ++i) {
      const bool b = coin(rng);
      groups->push_back(b ? "b" : "a");
      raw(i, 0) = b ? 1.0 : 0.0;
    }
    raw.rightCols(o.features_a) = feats;
    *y = DrawLabels(
        o.signal * (feats * w.head(o.features_a) + *xb * w.tail(o.features_b)),
        rng);
    *xa = WithBias(raw);
  };
  SyntheticSuite s;
  auto& in = s.input;
  std::vector<std::string> train_groups, infer_groups, holdout_groups;
  block(o.n_train, &in.train.xa, &in.train.xb, &s.clean_train_y, &train_groups);
  in.train.ids = Sequence(0, o.n_train);
  block(o.n_infer, &in.infer_xa, &in.infer_xb, &s.infer_y, &infer_groups);
  in.infer_ids = Sequence(o.n_train, o.n_infer);
  in.infer_table = query::DataTable(in.infer_ids);
  in.infer_table.AddCategorical(kGroupColumn, infer_groups);
  block(o.n_holdout, &in.holdout_xa, &in.holdout_xb, &s.holdout_y,
        &holdout_groups);
  in.holdout_ids = Sequence(o.n_train + o.n_infer, o.n_holdout);

  in.train.y = s.clean_train_y;
  std::vector<int> group_b;
  int positives_b = 0;
  for (int i = 0; i < o.n_train; ++i) {
    if (train_groups[static_cast<size_t>(i)] == "b") {
      group_b.push_back(i);
      positives_b += s.clean_train_y[i] == 1.0;
    }
  }
  const int flips = static_cast<int>(std::floor(o.flip_rate * positives_b));
  for (int i : FlipPositives(&in.train.y, group_b, flips, rng)) {
    s.corrupted.push_back(in.train.ids[static_cast<size_t>(i)]);
  }
  s.query = std::string("SELECT AVG(P.Label) FROM P JOIN I GROUP BY ") +
            kGroupColumn;
  s.spec = query::ParseQuery(s.query);
  s.spec.target_selector = "a - b";
  s.complaint = {query::Complaint::Op::kEq, 0.0};
  return s;
}

}  // namespace vfdebug::harness
