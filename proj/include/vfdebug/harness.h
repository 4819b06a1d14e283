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


#ifndef VFDEBUG_HARNESS_H_
#define VFDEBUG_HARNESS_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vfdebug/debug.h"
#include "vfdebug/error.h"
#include "vfdebug/party.h"
#include "vfdebug/security.h"
#include "vfdebug/synthetic.h"

namespace vfdebug::harness {

// ---------------------------------------------------------------------------
// Ingestion

// Comma separated text with a header row. Fields may be double quoted.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Throws IngestionError on a missing header or ragged rows.
CsvTable ReadCsv(std::istream& in);
CsvTable ReadCsvFile(const std::string& path);

struct IngestOptions {
  std::string label_column = "target";
  // Label is 1 iff the label column exceeds the threshold; without one the
  // column must already hold 0/1.
  std::optional<double> label_threshold;
  // Columns one-hot encoded; every other feature column must be numeric.
  std::vector<std::string> categorical;
};

// One attribute as it appears in the file.
struct SourceColumn {
  std::string name;  // letters, digits and '_' only
  bool categorical = false;
  std::vector<double> numbers;      // numeric columns
  std::vector<std::string> labels;  // categorical columns
  int first_feature = 0;            // position in the encoded matrix
  int width = 1;                    // encoded feature count
};

// Category lists of the one-hot encoded columns, in encoding order.
using Vocabulary = std::map<std::string, std::vector<std::string>>;

struct Dataset {
  std::vector<int64_t> ids;  // data row index in the file, from 0
  std::vector<SourceColumn> sources;
  std::vector<std::string> feature_names;  // after encoding
  Matrix x;  // encoded, not standardized
  Vector y;  // 0/1
  Vocabulary vocabulary;

  int64_t rows() const { return static_cast<int64_t>(ids.size()); }
};

// Throws IngestionError on a missing label column, a non-numeric value in a
// numeric column or a label outside {0, 1} without a threshold.
Dataset LoadDataset(const CsvTable& csv, const IngestOptions& options);

// Replaces every character outside [A-Za-z0-9_] with '_' and prefixes a
// leading digit, so the name can appear in a query.
std::string SanitizeColumnName(const std::string& name);

struct SplitFractions {
  double train = 0.8;
  double infer = 0.1;
  double holdout = 0.1;
  // Throws InvalidArgumentError unless the fractions are non-negative, the
  // training fraction is positive and they sum to 1.
  void Validate() const;
};

// Rows per split: train and infer are floored, the holdout takes the rest.
struct SplitSizes {
  int64_t train = 0;
  int64_t infer = 0;
  int64_t holdout = 0;
};
SplitSizes ComputeSplitSizes(int64_t rows, const SplitFractions& fractions);

// A dataset divided into the three row sets and the two parties.
struct SplitData {
  protocol::FederationInput input;  // labels still clean
  Vector infer_y;
  Vector holdout_y;
  std::vector<std::string> features_a;  // bias column not listed
  std::vector<std::string> features_b;
  Vector mean;  // standardization statistics from the training rows
  Vector scale;
};

// Shuffles rows by seed, splits them, standardizes every feature with the
// training rows' mean and standard deviation (constant columns keep scale
// 1), gives party A the first `cut` attributes (negative: half, rounded
// down) and appends A's bias column. The inference table holds A's raw
// attribute values under their sanitized names.
SplitData SplitDataset(const Dataset& data, const SplitFractions& fractions,
                       int cut, uint64_t seed);

// ---------------------------------------------------------------------------
// Corruption and metrics

enum class CorruptionBase {
  kPositives,  // flip floor(rate * #positives)
  kAllRecords, // flip floor(rate * #rows)
};

const char* CorruptionBaseName(CorruptionBase b);
CorruptionBase CorruptionBaseFromName(const std::string& name);

struct Corruption {
  Vector labels;
  std::vector<int64_t> ids;  // flipped ids, ascending
};

// Flips positive labels to 0, chosen uniformly by seed. Throws
// InvalidArgumentError when the rate is outside [0, 1], there is no
// positive label, or the flip count exceeds the positives.
Corruption InjectCorruption(const Vector& labels,
                            const std::vector<int64_t>& ids, double rate,
                            uint64_t seed,
                            CorruptionBase base = CorruptionBase::kPositives);

// recall@k = |first k deletions ∩ corrupted| / |corrupted| for k = 1..length
// (length 0 means the number of deletions; beyond the last deletion the
// curve stays flat). Throws MetricError on an empty corrupted set and
// InvalidArgumentError on duplicate deletions.
std::vector<double> RecallAtK(const std::vector<int64_t>& deleted,
                              const std::vector<int64_t>& corrupted,
                              size_t length = 0);

struct F1Result {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  int64_t tn = 0;
  // False when the truth has a single class; F1 is then reported as NaN
  // with the precision and recall that are defined.
  bool defined = true;
  std::string warning;
};

// Binary F1 of hard labels against 0/1 truth. Precision with no positive
// prediction is taken as 0 and noted in the warning.
F1Result F1Score(const std::vector<int>& predicted, const Vector& truth);

// ---------------------------------------------------------------------------
// Experiments

enum class DataSource { kCsv, kPlanted, kFairness };
const char* DataSourceName(DataSource s);
DataSource DataSourceFromName(const std::string& name);

// Absent fields take the source default. Synthetic sources queried with their
// own query default to the suite's complaint; otherwise the default is "eq"
// against the query's value on the clean labels of the inference rows.
struct ComplaintConfig {
  std::optional<std::string> op;
  std::optional<double> value;
  double tolerance = 1e-9;
};

struct TrainConfig {
  int rounds = 1000;
  double learning_rate = 1.0;
  // Frog stop rule.
  double min_improvement = 1e-9;
};

struct DebugConfig {
  // K; 0 selects the number of corrupted records.
  int budget = 0;
  int step = 10;  // k, deletions per iteration
  int retrain_rounds = 100;
  bool early_stop = false;
  bool cold_start = false;
  linalg::CgOptions cg;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DataSource source = DataSource::kCsv;
  std::string dataset_path;
  IngestOptions ingest;
  SplitFractions split;
  int partition_cut = -1;
  double corruption_rate = 0.3;
  CorruptionBase corruption_base = CorruptionBase::kPositives;
  PlantedOptions planted;    // used when source is planted
  FairnessOptions fairness;  // used when source is fairness
  uint64_t seed = 1;
  std::string framework = "frog";
  // Empty selects the source's default query.
  std::string query;
  // Group or group difference the complaint refers to ("g", "g1 - g2").
  std::string target_selector;
  ComplaintConfig complaint;
  TrainConfig train;
  DebugConfig debug;
  // Model used by the centralized rankers (loss, rain_oracle).
  model::ModelKind central_model = model::ModelKind::kLogistic;
  int key_bits = 512;
  he::KeyMode key_mode = he::KeyMode::kTest;
  bool unsafe_override = false;
  security::DebugBoundMode debug_bound =
      security::DebugBoundMode::kConservative;
  ExecutionMode execution = ExecutionMode::kDeterministic;

  // Throws InvalidArgumentError on inconsistent settings.
  void Validate() const;
};

// Every field, defaults included.
nlohmann::json ConfigToJson(const ExperimentConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig ConfigFromJson(const nlohmann::json& j);
ExperimentConfig LoadConfigFile(const std::string& path);
// ConfigToJson of a default-constructed config.
nlohmann::json DefaultConfigJson();

// Everything shared by the methods compared on one configuration.
struct PreparedExperiment {
  protocol::FederationInput input;  // training labels corrupted
  Vector clean_train_y;
  Vector infer_y;
  Vector holdout_y;
  std::vector<int64_t> corrupted;
  std::vector<std::string> features_a;
  std::vector<std::string> features_b;
  Vocabulary vocabulary;
  std::string query;
  query::QuerySpec spec;
  query::Complaint complaint;
  // Query value on the clean inference labels.
  double truth_value = 0.0;
};

// Ingest, split and corrupt. Deterministic in the config.
PreparedExperiment PrepareExperiment(const ExperimentConfig& config);

struct PhaseSummary {
  std::string name;
  int64_t runs = 0;
  he::EncOpCounter ops;
  uint64_t messages = 0;
  uint64_t bytes = 0;
};

struct PhaseTiming {
  std::string name;
  int64_t runs = 0;
  double wall_seconds = 0.0;
  double compute_seconds = 0.0;  // party-local work, both parties
  double network_seconds = 0.0;  // serialization and channel handling
  double wait_seconds = 0.0;
};

struct BudgetUsage {
  security::Limit train_limit;
  security::Limit debug_limit;
  int64_t train_rounds_total = 0;
  int64_t train_runs = 0;
  int64_t debug_consumed = 0;
  bool override_used = false;
  std::vector<std::string> rationale;
};

struct RunReport {
  std::string name;
  std::string framework;
  std::string query;
  std::string complaint;
  int64_t n_train = 0;
  int64_t n_infer = 0;
  int64_t n_holdout = 0;
  int ma = 0;  // bias included
  int mb = 0;
  uint64_t seed = 0;
  std::vector<int64_t> corrupted;
  std::vector<int64_t> deleted;
  std::vector<double> recall_curve;  // k = 1..K
  int budget = 0;                    // K
  int step = 0;
  debug::TrainOutcome initial_training;
  F1Result f1_before;
  F1Result f1_after;
  double truth_value = 0.0;
  std::vector<double> query_values;    // entry, each retrain, final
  std::vector<double> relaxed_values;
  bool complaint_satisfied = false;
  bool security_limited = false;
  std::string security_message;
  std::vector<PhaseSummary> phases;  // federated runs only
  he::EncOpCounter total_ops;
  std::optional<BudgetUsage> budget_usage;
  std::string transcript_digest;  // empty for centralized runs
  uint64_t transcript_messages = 0;
  std::optional<security::AuditVerdict> audit;

  // Deterministic document: no timings.
  nlohmann::json ToJson() const;
};

// Wall-clock data kept apart from the report so reports compare bitwise.
struct TimingReport {
  std::string name;
  std::string framework;
  double total_seconds = 0.0;
  std::vector<PhaseTiming> phases;
  nlohmann::json ToJson() const;
};

struct ExperimentOutput {
  RunReport report;
  TimingReport timing;
  Transcript transcript;  // empty for centralized runs
};

// Error raised by a pipeline stage, carrying the stage name. The original
// error's message follows the stage in what().
class PhaseError : public Error {
 public:
  PhaseError(std::string phase, std::string kind, const std::string& message);
  const std::string& phase() const { return phase_; }
  // Class of the original error, e.g. "SecurityError".
  const std::string& kind() const { return kind_; }

 private:
  std::string phase_;
  std::string kind_;
};

// A framework instance ready to train: the federation for the federated
// frameworks (null for centralized ones) and the backend driving it.
struct Session {
  std::unique_ptr<protocol::Federation> federation;
  std::unique_ptr<debug::DebugBackend> backend;
};

Session MakeSession(const ExperimentConfig& config,
                    const PreparedExperiment& prepared,
                    debug::Framework framework);

// Installs parameters: each party receives its own block and mask.
void LoadModel(Session& session, const model::ModelState& state);

nlohmann::json ModelToJson(const model::ModelState& state);
model::ModelState ModelFromJson(const nlohmann::json& j);

// Full pipeline for config.framework.
ExperimentOutput RunExperiment(const ExperimentConfig& config);
// Same on an already prepared experiment, for the named framework.
ExperimentOutput RunPrepared(const ExperimentConfig& config,
                             const PreparedExperiment& prepared,
                             debug::Framework framework);

struct ComparisonRow {
  std::string framework;
  double recall_at_budget = 0.0;
  double f1_before = 0.0;
  double f1_after = 0.0;
  double f1_delta() const { return f1_after - f1_before; }
};

struct Comparison {
  std::string name;
  std::vector<int64_t> corrupted;  // shared by every run
  std::vector<ExperimentOutput> runs;
  std::vector<ComparisonRow> rows;
  nlohmann::json ToJson() const;
};

// The default framework list: frog, fedrain, loss, rain_oracle.
const std::vector<debug::Framework>& AllFrameworks();

// Runs each framework on one preparation of `config`.
Comparison Compare(const ExperimentConfig& config,
                   const std::vector<debug::Framework>& frameworks =
                       AllFrameworks());

// "k,recall" rows.
void WriteRecallCsv(const RunReport& report, std::ostream& out);
// "k,<framework>..." rows, one column per run.
void WriteComparisonCsv(const Comparison& comparison, std::ostream& out);

void WriteJsonFile(const nlohmann::json& j, const std::string& path);

}  // namespace vfdebug::harness

#endif  // VFDEBUG_HARNESS_H_
