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


#ifndef VFDEBUG_TESTS_PROTOCOL_FIXTURE_H_
#define VFDEBUG_TESTS_PROTOCOL_FIXTURE_H_

#include <Eigen/Dense>

#include <random>
#include <string>
#include <vector>

#include "test_util.h"
#include "vfdebug/linalg.h"
#include "vfdebug/model.h"
#include "vfdebug/paillier.h"
#include "vfdebug/party.h"
#include "vfdebug/query.h"

namespace vfdebug::testing {

// Two test key pairs shared by every federation in a test binary.
inline const std::pair<he::KeyPair, he::KeyPair>& SharedKeys() {
  static const auto keys = std::make_pair(
      he::GenerateKeyPair(512, he::KeyMode::kTest, 101),
      he::GenerateKeyPair(512, he::KeyMode::kTest, 202));
  return keys;
}

inline protocol::SessionConfig TestConfig(uint64_t seed = 1) {
  protocol::SessionConfig c;
  c.seed = seed;
  c.keys_a = SharedKeys().first;
  c.keys_b = SharedKeys().second;
  return c;
}

// Random vertically split data. A's last column is the constant bias.
// Labels follow a logistic model so fits are meaningful.
inline protocol::FederationInput MakeInput(int n, int ma, int mb, int n_infer,
                                           uint64_t seed, int n_holdout = 0) {
  std::mt19937_64 rng(seed);
  auto block = [&](int rows, int cols_a, int cols_b, Matrix* xa, Matrix* xb) {
    *xa = Matrix::Ones(rows, cols_a);
    if (cols_a > 1) xa->leftCols(cols_a - 1) = RandomMatrix(rows, cols_a - 1, rng);
    *xb = RandomMatrix(rows, cols_b, rng);
  };
  Vector w = RandomVector(ma + mb, rng);
  auto labels = [&](const Matrix& xa, const Matrix& xb) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector y(xa.rows());
    for (Eigen::Index i = 0; i < xa.rows(); ++i) {
      double s = xa.row(i).dot(w.head(ma)) + xb.row(i).dot(w.tail(mb));
      y[i] = u(rng) < model::Sigmoid(s) ? 1.0 : 0.0;
    }
    return y;
  };
  protocol::FederationInput in;
  block(n, ma, mb, &in.train.xa, &in.train.xb);
  in.train.y = labels(in.train.xa, in.train.xb);
  for (int i = 0; i < n; ++i) in.train.ids.push_back(1000 + i);
  block(n_infer, ma, mb, &in.infer_xa, &in.infer_xb);
  for (int i = 0; i < n_infer; ++i) in.infer_ids.push_back(5000 + i);
  in.infer_table = query::DataTable(in.infer_ids);
  std::vector<double> age;
  std::vector<std::string> group;
  std::uniform_real_distribution<double> ages(20, 70);
  for (int i = 0; i < n_infer; ++i) {
    age.push_back(std::floor(ages(rng)));
    group.push_back(i % 2 ? "F" : "M");
  }
  in.infer_table.AddNumeric("Age", age);
  in.infer_table.AddCategorical("Gender", group);
  block(n_holdout, ma, mb, &in.holdout_xa, &in.holdout_xb);
  for (int i = 0; i < n_holdout; ++i) in.holdout_ids.push_back(9000 + i);
  return in;
}

inline Vector DirectSolve(const Matrix& h, const Vector& rhs, double damping) {
  Matrix m = h + damping * Matrix::Identity(h.rows(), h.cols());
  return m.partialPivLu().solve(rhs);
}

// Centralized complaint weights a_i on the given prediction table.
inline Vector CentralWeights(const query::QuerySpec& spec,
                             const query::Complaint& complaint,
                             const query::PredictionTable& table,
                             const query::DataTable& ia) {
  double value = query::SelectTarget(spec, query::ExecuteQuery(spec, table, ia));
  return query::ComplaintWeights(query::RelaxQuery(spec, table, ia),
                                 complaint.Direction(value));
}

}  // namespace vfdebug::testing

#endif  // VFDEBUG_TESTS_PROTOCOL_FIXTURE_H_
