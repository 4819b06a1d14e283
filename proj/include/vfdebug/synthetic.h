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


#ifndef VFDEBUG_SYNTHETIC_H_
#define VFDEBUG_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "vfdebug/model.h"
#include "vfdebug/party.h"
#include "vfdebug/query.h"

namespace vfdebug::harness {

using model::Matrix;
using model::Vector;

// A generated debugging instance: split data, ground truth and the
// complaint a user would file about it.
struct SyntheticSuite {
  protocol::FederationInput input;
  Vector clean_train_y;  // labels before corruption
  Vector infer_y;        // clean labels of the inference rows
  Vector holdout_y;      // clean labels of the holdout rows
  std::vector<int64_t> corrupted;  // training ids whose label was flipped
  std::string query;
  query::QuerySpec spec;
  query::Complaint complaint;
};

struct PlantedOptions {
  int n_train = 200;
  int n_infer = 200;
  int n_holdout = 100;
  int features_a = 2;  // A's columns before the bias column is appended
  int features_b = 2;
  int flips = 20;      // positive training labels flipped to 0
  double signal = 8.0; // logit scale of the label model
  // Correlation of each feature with a shared latent factor, so that the two
  // parties hold noisy views of the same entity. 0 gives independent
  // features.
  double shared = 0.0;
  uint64_t seed = 1;
};

// Labels drawn from a sharp logistic model; `flips` positive training labels
// flipped to 0. Complaint: the count of predicted positives on the inference
// rows is at least the true count (flips only remove positives).
SyntheticSuite MakePlantedSuite(const PlantedOptions& options);

struct FairnessOptions {
  int n_train = 400;
  int n_infer = 200;
  int n_holdout = 200;
  int features_a = 2;  // besides the group indicator and bias
  int features_b = 2;
  // Fraction of group "b" positive training labels flipped to 0.
  double flip_rate = 0.6;
  double signal = 4.0;
  uint64_t seed = 1;
};

// Two groups ("a", "b") with equal label models. The group indicator is one
// of A's features and flips hit group "b" only. Complaint: the difference of
// average predicted labels between the groups equals 0.
SyntheticSuite MakeFairnessSuite(const FairnessOptions& options);

// Column holding the group in the fairness suite's inference table.
inline constexpr const char* kGroupColumn = "Cohort";

}  // namespace vfdebug::harness

#endif  // VFDEBUG_SYNTHETIC_H_
