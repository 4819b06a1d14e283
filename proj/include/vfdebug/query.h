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

#ifndef VFDEBUG_QUERY_H_
#define VFDEBUG_QUERY_H_

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vfdebug/linalg.h"
#include "vfdebug/model.h"

namespace vfdebug::query {

using Vector = Eigen::VectorXd;

// Party A's raw inference attributes. Columns are numeric or categorical.
class DataTable {
 public:
  struct Column {
    std::string name;
    bool numeric = true;
    std::vector<double> numbers;
    std::vector<std::string> labels;
  };

  DataTable() = default;
  explicit DataTable(std::vector<int64_t> ids) : ids_(std::move(ids)) {}

  void AddNumeric(const std::string& name, std::vector<double> values);
  void AddCategorical(const std::string& name, std::vector<std::string> values);

  const std::vector<int64_t>& ids() const { return ids_; }
  size_t rows() const { return ids_.size(); }
  bool Has(const std::string& name) const;
  const Column& Get(const std::string& name) const;  // QueryError if absent
  const std::vector<Column>& columns() const { return columns_; }
  // Display form of one cell, used for group keys.
  std::string CellText(const Column& column, size_t row) const;

 private:
  void CheckLength(size_t n) const;

  std::vector<int64_t> ids_;
  std::vector<Column> columns_;
};

// Model output joined on id. prob1 is the probability of label 1.
struct PredictionTable {
  std::vector<int64_t> ids;
  Vector prob1;
  std::vector<int> hard_label;
  double threshold = 0.5;

  static PredictionTable FromProbabilities(std::vector<int64_t> ids,
                                           const Vector& prob1,
                                           double threshold = 0.5);
  // Frog scores: hard labels from the raw score, probabilities clamped.
  static PredictionTable FromScores(std::vector<int64_t> ids,
                                    const Vector& scores,
                                    double threshold = 0.5);
  size_t size() const { return ids.size(); }
};

enum class Aggregate { kCount, kSum, kAvg };
enum class CompareOp { kLt, kGt, kEq, kLe, kGe, kNe };

inline constexpr const char* kLabelColumn = "P.Label";

struct Predicate {
  std::string column;  // an inference column or P.Label
  CompareOp op = CompareOp::kEq;
  std::variant<double, std::string> value;
};

struct Denominator {
  enum class Kind { kNone, kTotalCount, kConstant };
  Kind kind = Kind::kNone;
  double constant = 1.0;
};

struct QuerySpec {
  Aggregate agg = Aggregate::kCount;
  // "*" for COUNT(*), a column name, or P.Label.
  std::string target = "*";
  std::vector<Predicate> filters;
  std::vector<std::string> group_by;
  Denominator denominator;
  // Empty for ungrouped queries; "g" names one group; "g1 - g2" a difference.
  std::string target_selector;

  bool label_in_target() const { return target == kLabelColumn; }
  // Throws QueryError when P.Label is referenced more than once.
  void Validate() const;
  // Canonical text form; reparses to an equal spec.
  std::string ToString() const;
};

struct ParseOptions {
  // Names accepted for the two label values besides 0 and 1.
  std::string positive_label = "1";
  std::string negative_label = "0";
};

// Parses SELECT agg(target) [/ denom] FROM P JOIN I [WHERE ...] [GROUP BY ...].
QuerySpec ParseQuery(const std::string& text, const ParseOptions& options = {});

struct GroupResult {
  std::string key;
  double value = 0.0;
  bool empty = false;  // AVG over zero rows
  int64_t rows = 0;    // discrete qualifying rows
};

struct QueryResult {
  std::vector<GroupResult> groups;

  const GroupResult& Group(const std::string& key) const;
};

// Discrete evaluation on hard labels.
QueryResult ExecuteQuery(const QuerySpec& spec, const PredictionTable& p,
                         const DataTable& ia);

// Relaxed value of the selected target together with its derivative with
// respect to each row's prob1. Q is affine in the probabilities.
struct RelaxedQuery {
  double value = 0.0;
  Vector coeffs;  // ∂Q/∂prob1_i, aligned with the prediction table
};

RelaxedQuery RelaxQuery(const QuerySpec& spec, const PredictionTable& p,
                        const DataTable& ia);

// Value of the target selector on a discrete result.
double SelectTarget(const QuerySpec& spec, const QueryResult& result);

struct Complaint {
  enum class Op { kEq, kLe, kGe };
  Op op = Op::kEq;
  double value = 0.0;
  double tolerance = 1e-9;

  bool Satisfied(double result) const;
  // +1 push Q down, -1 push Q up, 0 satisfied.
  int Direction(double result) const;
  std::string ToString() const;
};

Complaint::Op ComplaintOpFromString(const std::string& op);
const char* ComplaintOpName(Complaint::Op op);

// Per-row weights a_i = s * ∂Q/∂prob1_i; Q' is Σ a_i ∇prob1_i.
Vector ComplaintWeights(const RelaxedQuery& relaxed, int direction);

// Centralized Q' = Σ a_i ∇prob1_i for the logistic model, split by party.
linalg::SeparatedVector QueryGradLogistic(const Vector& weights,
                                          const model::ModelState& state,
                                          const model::Matrix& xa,
                                          const model::Matrix& xb);
// Frog form over the extended blocks [θA, c1] and [θB, c2]. Uses the
// unclamped score gradient.
linalg::SeparatedVector QueryGradFrog(const Vector& weights,
                                      const model::ModelState& state,
                                      const model::Matrix& xa,
                                      const model::Matrix& xb);

}  // namespace vfdebug::query

#endif  // VFDEBUG_QUERY_H_
