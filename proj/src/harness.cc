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


#include "vfdebug/harness.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <istream>
#include <memory>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "vfdebug/digest.h"
#include "vfdebug/error.h"
#include "vfdebug/fedrain.h"
#include "vfdebug/frog.h"

namespace vfdebug::harness {

using nlohmann::json;

namespace {

// Independent seed per pipeline stage, stable across platforms.
uint64_t DeriveSeed(uint64_t seed, const std::string& stage) {
  return Sha256Prefix64(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(stage.data()), stage.size())) ^
         (seed * 0x9E3779B97F4A7C15ULL);
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitCsvLine(const std::string& line, size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? cur : Trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) {
    throw IngestionError("unterminated quote on line " +
                         std::to_string(line_no));
  }
  fields.push_back(was_quoted ? cur : Trim(cur));
  return fields;
}

bool ParseDouble(const std::string& text, double* out) {
  if (text.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(v)) return false;
  *out = v;
  return true;
}

Matrix WithBias(const Matrix& x) {
  Matrix out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setOnes();
  return out;
}

// Class name of a library error, for phase attribution.
std::string ErrorKind(const std::exception& e) {
  if (dynamic_cast<const SecurityError*>(&e)) return "SecurityError";
  if (dynamic_cast<const IngestionError*>(&e)) return "IngestionError";
  if (dynamic_cast<const MetricError*>(&e)) return "MetricError";
  if (dynamic_cast<const QueryError*>(&e)) return "QueryError";
  if (dynamic_cast<const ProtocolError*>(&e)) return "ProtocolError";
  if (dynamic_cast<const AuditIncompleteError*>(&e)) {
    return "AuditIncompleteError";
  }
  if (dynamic_cast<const StaleStateError*>(&e)) return "StaleStateError";
  if (dynamic_cast<const CgBreakdownError*>(&e)) return "CgBreakdownError";
  if (dynamic_cast<const NumericError*>(&e)) return "NumericError";
  if (dynamic_cast<const OverflowError*>(&e)) return "OverflowError";
  if (dynamic_cast<const InvalidArgumentError*>(&e)) {
    return "InvalidArgumentError";
  }
  if (dynamic_cast<const Error*>(&e)) return "Error";
  return "std::exception";
}

template <class F>
auto Stage(const std::string& phase, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const PhaseError&) {
    throw;
  } catch (const std::exception& e) {
    throw PhaseError(phase, ErrorKind(e), e.what());
  }
}

json NumberOrNull(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}

json LimitJson(const security::Limit& l) {
  return l ? json(*l) : json(nullptr);
}

json OpsJson(const he::EncOpCounter& c) {
  return {{"adds", c.adds},
          {"cmuls", c.cmuls},
          {"encryptions", c.encryptions},
          {"decryptions", c.decryptions},
          {"plain_adds", c.plain_adds},
          {"rescales", c.rescales},
          {"total", c.adds + c.cmuls + c.encryptions + c.decryptions +
                        c.plain_adds}};
}

json F1Json(const F1Result& r) {
  json j = {{"f1", NumberOrNull(r.f1)},
            {"precision", NumberOrNull(r.precision)},
            {"recall", NumberOrNull(r.recall)},
            {"tp", r.tp},
            {"fp", r.fp},
            {"fn", r.fn},
            {"tn", r.tn},
            {"defined", r.defined}};
  if (!r.warning.empty()) j["warning"] = r.warning;
  return j;
}

model::ModelKind ModelKindFromName(const std::string& name) {
  if (name == "logistic") return model::ModelKind::kLogistic;
  if (name == "frog") return model::ModelKind::kFrog;
  throw InvalidArgumentError("unknown model kind: " + name);
}

// Reads the keys of one JSON object, rejecting any key never asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw InvalidArgumentError("config: " + path_ + " must be an object");
    }
  }

  template <class T>
  void Get(const std::string& key, T* out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      *out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InvalidArgumentError("config: " + Path(key) + ": " + e.what());
    }
  }

  template <class T>
  void GetOptional(const std::string& key, std::optional<T>* out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      out->reset();
      return;
    }
    T v{};
    Get(key, &v);
    *out = v;
  }

  // Child object, or an empty object when absent.
  const json& Child(const std::string& key) {
    seen_.insert(key);
    static const json kEmpty = json::object();
    return j_.contains(key) ? j_.at(key) : kEmpty;
  }

  std::string Path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw InvalidArgumentError("config: unknown key " + Path(it.key()));
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Holdout labels aligned with a prediction table by id.
std::vector<int> AlignedLabels(const query::PredictionTable& p,
                               const std::vector<int64_t>& ids) {
  std::unordered_map<int64_t, size_t> at;
  for (size_t i = 0; i < p.ids.size(); ++i) at[p.ids[i]] = i;
  std::vector<int> out;
  out.reserve(ids.size());
  for (int64_t id : ids) {
    auto it = at.find(id);
    if (it == at.end()) {
      throw InvalidArgumentError("prediction missing for id " +
                                 std::to_string(id));
    }
    out.push_back(p.hard_label[it->second]);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Ingestion

CsvTable ReadCsv(std::istream& in) {
  CsvTable t;
  std::string line;
  size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto fields = SplitCsvLine(line, line_no);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw IngestionError("line " + std::to_string(line_no) + " has " +
                           std::to_string(fields.size()) +
                           " fields, header has " +
                           std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (!have_header) throw IngestionError("CSV input has no header row");
  return t;
}

CsvTable ReadCsvFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open dataset file: " + path);
  return ReadCsv(in);
}

std::string SanitizeColumnName(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || (out[0] >= '0' && out[0] <= '9')) out = "c_" + out;
  return out;
}

Dataset LoadDataset(const CsvTable& csv, const IngestOptions& options) {
  const auto& h = csv.header;
  auto label_it = std::find(h.begin(), h.end(), options.label_column);
  if (label_it == h.end()) {
    throw IngestionError("label column '" + options.label_column +
                         "' not in header");
  }
  const size_t label_col = static_cast<size_t>(label_it - h.begin());
  for (const auto& c : options.categorical) {
    if (std::find(h.begin(), h.end(), c) == h.end() ||
        c == options.label_column) {
      throw IngestionError("categorical column '" + c + "' not a feature");
    }
  }
  const size_t n = csv.rows.size();
  if (n == 0) throw IngestionError("CSV input has no data rows");

  Dataset d;
  d.ids.resize(n);
  for (size_t i = 0; i < n; ++i) d.ids[i] = static_cast<int64_t>(i);
  d.y.resize(static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) {
    double v = 0.0;
    const std::string& cell = csv.rows[i][label_col];
    if (!ParseDouble(cell, &v)) {
      throw IngestionError("non-numeric label '" + cell + "' on data row " +
                           std::to_string(i));
    }
    if (options.label_threshold) {
      v = v > *options.label_threshold ? 1.0 : 0.0;
    } else if (v != 0.0 && v != 1.0) {
      throw IngestionError("label " + cell + " on data row " +
                           std::to_string(i) +
                           " is not 0/1 and no threshold is configured");
    }
    d.y[static_cast<Eigen::Index>(i)] = v;
  }

  int features = 0;
  std::set<std::string> used_names;
  for (size_t c = 0; c < h.size(); ++c) {
    if (c == label_col) continue;
    SourceColumn col;
    col.name = SanitizeColumnName(h[c]);
    if (!used_names.insert(col.name).second) {
      throw IngestionError("duplicate column name after sanitizing: " +
                           col.name);
    }
    col.first_feature = features;
    col.categorical = std::find(options.categorical.begin(),
                                options.categorical.end(),
                                h[c]) != options.categorical.end();
    if (col.categorical) {
      std::set<std::string> levels;
      for (size_t i = 0; i < n; ++i) {
        col.labels.push_back(csv.rows[i][c]);
        levels.insert(csv.rows[i][c]);
      }
      auto& vocab = d.vocabulary[col.name];
      vocab.assign(levels.begin(), levels.end());
      col.width = static_cast<int>(vocab.size());
      for (const auto& level : vocab) {
        d.feature_names.push_back(col.name + "_" + SanitizeColumnName(level));
      }
    } else {
      for (size_t i = 0; i < n; ++i) {
        double v = 0.0;
        if (!ParseDouble(csv.rows[i][c], &v)) {
          throw IngestionError("non-numeric value '" + csv.rows[i][c] +
                               "' in column '" + h[c] + "' on data row " +
                               std::to_string(i) +
                               " (declare the column categorical)");
        }
        col.numbers.push_back(v);
      }
      d.feature_names.push_back(col.name);
    }
    features += col.width;
    d.sources.push_back(std::move(col));
  }
  if (d.sources.empty()) throw IngestionError("CSV input has no features");

  d.x = Matrix::Zero(static_cast<Eigen::Index>(n), features);
  for (const auto& col : d.sources) {
    if (col.categorical) {
      const auto& vocab = d.vocabulary.at(col.name);
      for (size_t i = 0; i < n; ++i) {
        const auto pos = std::lower_bound(vocab.begin(), vocab.end(),
                                          col.labels[i]) -
                         vocab.begin();
        d.x(static_cast<Eigen::Index>(i), col.first_feature + pos) = 1.0;
      }
    } else {
      for (size_t i = 0; i < n; ++i) {
        d.x(static_cast<Eigen::Index>(i), col.first_feature) = col.numbers[i];
      }
    }
  }
  return d;
}

void SplitFractions::Validate() const {
  if (!(train > 0.0) || infer < 0.0 || holdout < 0.0 ||
      std::abs(train + infer + holdout - 1.0) > 1e-9) {
    throw InvalidArgumentError(
        "split fractions must be non-negative, with a positive training "
        "fraction, and sum to 1");
  }
}

SplitSizes ComputeSplitSizes(int64_t rows, const SplitFractions& f) {
  f.Validate();
  SplitSizes s;
  s.train = static_cast<int64_t>(std::floor(f.train * rows + 1e-9));
  s.infer = static_cast<int64_t>(std::floor(f.infer * rows + 1e-9));
  s.holdout = rows - s.train - s.infer;
  if (s.train <= 0) throw InvalidArgumentError("training split is empty");
  return s;
}

SplitData SplitDataset(const Dataset& data, const SplitFractions& fractions,
                       int cut, uint64_t seed) {
  const SplitSizes sizes = ComputeSplitSizes(data.rows(), fractions);
  const int n_sources = static_cast<int>(data.sources.size());
  if (cut < 0) cut = n_sources / 2;
  if (cut >= n_sources) {
    throw InvalidArgumentError("partition cut leaves party B no attribute");
  }
  const int ma = cut == 0 ? 0 : data.sources[cut - 1].first_feature +
                                    data.sources[cut - 1].width;
  const int m = static_cast<int>(data.x.cols());

  std::vector<int64_t> order(static_cast<size_t>(data.rows()));
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);
  std::mt19937_64 rng(DeriveSeed(seed, "split"));
  std::shuffle(order.begin(), order.end(), rng);

  auto rows_of = [&](int64_t begin, int64_t count) {
    Matrix x(count, m);
    Vector y(count);
    std::vector<int64_t> ids(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i) {
      const int64_t r = order[static_cast<size_t>(begin + i)];
      x.row(i) = data.x.row(r);
      y[i] = data.y[r];
      ids[static_cast<size_t>(i)] = data.ids[static_cast<size_t>(r)];
    }
    return std::make_tuple(x, y, ids);
  };
  auto [xt, yt, idt] = rows_of(0, sizes.train);
  auto [xi, yi, idi] = rows_of(sizes.train, sizes.infer);
  auto [xh, yh, idh] = rows_of(sizes.train + sizes.infer, sizes.holdout);

  SplitData out;
  out.mean = xt.colwise().mean().transpose();
  out.scale.resize(m);
  for (int j = 0; j < m; ++j) {
    const double var =
        (xt.col(j).array() - out.mean[j]).square().sum() /
        static_cast<double>(xt.rows());
    out.scale[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  auto standardize = [&](const Matrix& x) {
    Matrix z = x;
    for (int j = 0; j < m; ++j) {
      z.col(j) = (x.col(j).array() - out.mean[j]) / out.scale[j];
    }
    return z;
  };
  const Matrix zt = standardize(xt), zi = standardize(xi),
               zh = standardize(xh);

  auto& in = out.input;
  in.train.ids = idt;
  in.train.xa = WithBias(zt.leftCols(ma));
  in.train.xb = zt.rightCols(m - ma);
  in.train.y = yt;
  in.infer_ids = idi;
  in.infer_xa = WithBias(zi.leftCols(ma));
  in.infer_xb = zi.rightCols(m - ma);
  in.holdout_ids = idh;
  in.holdout_xa = WithBias(zh.leftCols(ma));
  in.holdout_xb = zh.rightCols(m - ma);
  out.infer_y = yi;
  out.holdout_y = yh;
  out.features_a.assign(data.feature_names.begin(),
                        data.feature_names.begin() + ma);
  out.features_b.assign(data.feature_names.begin() + ma,
                        data.feature_names.end());

  in.infer_table = query::DataTable(idi);
  for (int c = 0; c < cut; ++c) {
    const SourceColumn& col = data.sources[static_cast<size_t>(c)];
    if (col.categorical) {
      std::vector<std::string> labels;
      for (int64_t id : idi) labels.push_back(col.labels[static_cast<size_t>(id)]);
      in.infer_table.AddCategorical(col.name, std::move(labels));
    } else {
      std::vector<double> values;
      for (int64_t id : idi) values.push_back(col.numbers[static_cast<size_t>(id)]);
      in.infer_table.AddNumeric(col.name, std::move(values));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corruption and metrics

const char* CorruptionBaseName(CorruptionBase b) {
  return b == CorruptionBase::kPositives ? "positives" : "all_records";
}

CorruptionBase CorruptionBaseFromName(const std::string& name) {
  if (name == "positives") return CorruptionBase::kPositives;
  if (name == "all_records") return CorruptionBase::kAllRecords;
  throw InvalidArgumentError("unknown corruption base: " + name);
}

Corruption InjectCorruption(const Vector& labels,
                            const std::vector<int64_t>& ids, double rate,
                            uint64_t seed, CorruptionBase base) {
  if (static_cast<size_t>(labels.size()) != ids.size()) {
    throw InvalidArgumentError("labels and ids differ in length");
  }
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw InvalidArgumentError("corruption rate must lie in [0, 1]");
  }
  std::vector<Eigen::Index> positives;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1.0) positives.push_back(i);
  }
  if (positives.empty()) {
    throw InvalidArgumentError("no positive label to corrupt");
  }
  const double population = base == CorruptionBase::kPositives
                                ? static_cast<double>(positives.size())
                                : static_cast<double>(labels.size());
  const size_t count =
      static_cast<size_t>(std::floor(rate * population + 1e-9));
  if (count > positives.size()) {
    throw InvalidArgumentError("corruption asks for " +
                               std::to_string(count) + " flips but only " +
                               std::to_string(positives.size()) +
                               " labels are positive");
  }
  std::mt19937_64 rng(DeriveSeed(seed, "corruption"));
  std::shuffle(positives.begin(), positives.end(), rng);
  Corruption c;
  c.labels = labels;
  for (size_t k = 0; k < count; ++k) {
    c.labels[positives[k]] = 0.0;
    c.ids.push_back(ids[static_cast<size_t>(positives[k])]);
  }
  std::sort(c.ids.begin(), c.ids.end());
  return c;
}

std::vector<double> RecallAtK(const std::vector<int64_t>& deleted,
                              const std::vector<int64_t>& corrupted,
                              size_t length) {
  const std::unordered_set<int64_t> bad(corrupted.begin(), corrupted.end());
  if (bad.empty()) {
    throw MetricError("recall is undefined for an empty corrupted set");
  }
  std::unordered_set<int64_t> seen;
  for (int64_t id : deleted) {
    if (!seen.insert(id).second) {
      throw InvalidArgumentError("deleted id " + std::to_string(id) +
                                 " appears twice");
    }
  }
  if (length == 0) length = deleted.size();
  std::vector<double> curve(length);
  size_t hits = 0;
  for (size_t k = 0; k < length; ++k) {
    if (k < deleted.size() && bad.count(deleted[k])) ++hits;
    curve[k] = static_cast<double>(hits) / static_cast<double>(bad.size());
  }
  return curve;
}

F1Result F1Score(const std::vector<int>& predicted, const Vector& truth) {
  if (predicted.size() != static_cast<size_t>(truth.size())) {
    throw InvalidArgumentError("predictions and labels differ in length");
  }
  F1Result r;
  for (size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] == 1;
    const bool t = truth[static_cast<Eigen::Index>(i)] == 1.0;
    r.tp += p && t;
    r.fp += p && !t;
    r.fn += !p && t;
    r.tn += !p && !t;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const int64_t pos = r.tp + r.fn, neg = r.fp + r.tn;
  const int64_t predicted_pos = r.tp + r.fp;
  r.precision = predicted_pos ? static_cast<double>(r.tp) / predicted_pos
                              : 0.0;
  r.recall = pos ? static_cast<double>(r.tp) / pos : nan;
  if (pos == 0 || neg == 0) {
    r.defined = false;
    r.f1 = nan;
    r.warning = std::string("undefined metric: the holdout holds only ") +
                (pos == 0 ? "negative" : "positive") +
                " labels; precision and recall reported separately";
    return r;
  }
  if (predicted_pos == 0) {
    r.warning = "no positive prediction; precision taken as 0";
  }
  const double denom = 2.0 * r.tp + r.fp + r.fn;
  r.f1 = denom > 0 ? 2.0 * r.tp / denom : 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Configuration

const char* DataSourceName(DataSource s) {
  switch (s) {
    case DataSource::kCsv: return "csv";
    case DataSource::kPlanted: return "planted";
    case DataSource::kFairness: return "fairness";
  }
  return "?";
}

DataSource DataSourceFromName(const std::string& name) {
  if (name == "csv") return DataSource::kCsv;
  if (name == "planted") return DataSource::kPlanted;
  if (name == "fairness") return DataSource::kFairness;
  throw InvalidArgumentError("unknown data source: " + name);
}

void ExperimentConfig::Validate() const {
  split.Validate();
  if (source == DataSource::kCsv && dataset_path.empty()) {
    throw InvalidArgumentError("dataset.path is required for csv sources");
  }
  if (!(corruption_rate >= 0.0 && corruption_rate <= 1.0)) {
    throw InvalidArgumentError("corruption.rate must lie in [0, 1]");
  }
  debug::FrameworkFromName(framework);
  if (complaint.op) query::ComplaintOpFromString(*complaint.op);
  if (train.rounds < 0 || debug.retrain_rounds < 0) {
    throw InvalidArgumentError("round counts must be non-negative");
  }
  if (!(train.learning_rate > 0.0)) {
    throw InvalidArgumentError("train.learning_rate must be positive");
  }
  if (debug.budget < 0 || debug.step < 1) {
    throw InvalidArgumentError("debug.budget >= 0 and debug.step >= 1");
  }
}

json ConfigToJson(const ExperimentConfig& c) {
  const auto& p = c.planted;
  const auto& f = c.fairness;
  return {
      {"name", c.name},
      {"seed", c.seed},
      {"framework", c.framework},
      {"dataset",
       {{"source", DataSourceName(c.source)},
        {"path", c.dataset_path},
        {"label_column", c.ingest.label_column},
        {"label_threshold", c.ingest.label_threshold
                                ? json(*c.ingest.label_threshold)
                                : json(nullptr)},
        {"categorical", c.ingest.categorical},
        {"partition_cut", c.partition_cut},
        {"split",
         {{"train", c.split.train},
          {"infer", c.split.infer},
          {"holdout", c.split.holdout}}}}},
      {"corruption",
       {{"rate", c.corruption_rate},
        {"base", CorruptionBaseName(c.corruption_base)}}},
      {"synthetic",
       {{"planted",
         {{"n_train", p.n_train},
          {"n_infer", p.n_infer},
          {"n_holdout", p.n_holdout},
          {"features_a", p.features_a},
          {"features_b", p.features_b},
          {"flips", p.flips},
          {"signal", p.signal},
          {"shared", p.shared}}},
        {"fairness",
         {{"n_train", f.n_train},
          {"n_infer", f.n_infer},
          {"n_holdout", f.n_holdout},
          {"features_a", f.features_a},
          {"features_b", f.features_b},
          {"flip_rate", f.flip_rate},
          {"signal", f.signal}}}}},
      {"query",
       {{"text", c.query},
        {"target_selector", c.target_selector},
        {"complaint",
         {{"op", c.complaint.op ? json(*c.complaint.op) : json(nullptr)},
          {"value", c.complaint.value ? json(*c.complaint.value)
                                      : json(nullptr)},
          {"tolerance", c.complaint.tolerance}}}}},
      {"train",
       {{"rounds", c.train.rounds},
        {"learning_rate", c.train.learning_rate},
        {"min_improvement", c.train.min_improvement}}},
      {"debug",
       {{"budget", c.debug.budget},
        {"step", c.debug.step},
        {"retrain_rounds", c.debug.retrain_rounds},
        {"early_stop", c.debug.early_stop},
        {"cold_start", c.debug.cold_start},
        {"cg",
         {{"tol", c.debug.cg.tol},
          {"max_iter", c.debug.cg.max_iter},
          {"damping", c.debug.cg.damping},
          {"breakdown_threshold", c.debug.cg.breakdown_threshold}}}}},
      {"central_model", model::ModelKindName(c.central_model)},
      {"session",
       {{"key_bits", c.key_bits},
        {"key_mode", he::KeyModeName(c.key_mode)},
        {"unsafe_override", c.unsafe_override},
        {"debug_bound", security::DebugBoundModeName(c.debug_bound)},
        {"execution", ExecutionModeName(c.execution)}}},
  };
}

ExperimentConfig ConfigFromJson(const json& j) {
  ExperimentConfig c;
  ObjectReader root(j, "");
  root.Get("name", &c.name);
  root.Get("seed", &c.seed);
  root.Get("framework", &c.framework);
  {
    ObjectReader d(root.Child("dataset"), "dataset");
    std::string source = DataSourceName(c.source);
    d.Get("source", &source);
    c.source = DataSourceFromName(source);
    d.Get("path", &c.dataset_path);
    d.Get("label_column", &c.ingest.label_column);
    d.GetOptional("label_threshold", &c.ingest.label_threshold);
    d.Get("categorical", &c.ingest.categorical);
    d.Get("partition_cut", &c.partition_cut);
    ObjectReader s(d.Child("split"), "dataset.split");
    s.Get("train", &c.split.train);
    s.Get("infer", &c.split.infer);
    s.Get("holdout", &c.split.holdout);
    s.Finish();
    d.Finish();
  }
  {
    ObjectReader r(root.Child("corruption"), "corruption");
    r.Get("rate", &c.corruption_rate);
    std::string base = CorruptionBaseName(c.corruption_base);
    r.Get("base", &base);
    c.corruption_base = CorruptionBaseFromName(base);
    r.Finish();
  }
  {
    ObjectReader s(root.Child("synthetic"), "synthetic");
    ObjectReader p(s.Child("planted"), "synthetic.planted");
    p.Get("n_train", &c.planted.n_train);
    p.Get("n_infer", &c.planted.n_infer);
    p.Get("n_holdout", &c.planted.n_holdout);
    p.Get("features_a", &c.planted.features_a);
    p.Get("features_b", &c.planted.features_b);
    p.Get("flips", &c.planted.flips);
    p.Get("signal", &c.planted.signal);
    p.Get("shared", &c.planted.shared);
    p.Finish();
    ObjectReader f(s.Child("fairness"), "synthetic.fairness");
    f.Get("n_train", &c.fairness.n_train);
    f.Get("n_infer", &c.fairness.n_infer);
    f.Get("n_holdout", &c.fairness.n_holdout);
    f.Get("features_a", &c.fairness.features_a);
    f.Get("features_b", &c.fairness.features_b);
    f.Get("flip_rate", &c.fairness.flip_rate);
    f.Get("signal", &c.fairness.signal);
    f.Finish();
    s.Finish();
  }
  {
    ObjectReader q(root.Child("query"), "query");
    q.Get("text", &c.query);
    q.Get("target_selector", &c.target_selector);
    ObjectReader k(q.Child("complaint"), "query.complaint");
    k.GetOptional("op", &c.complaint.op);
    k.GetOptional("value", &c.complaint.value);
    k.Get("tolerance", &c.complaint.tolerance);
    k.Finish();
    q.Finish();
  }
  {
    ObjectReader t(root.Child("train"), "train");
    t.Get("rounds", &c.train.rounds);
    t.Get("learning_rate", &c.train.learning_rate);
    t.Get("min_improvement", &c.train.min_improvement);
    t.Finish();
  }
  {
    ObjectReader d(root.Child("debug"), "debug");
    d.Get("budget", &c.debug.budget);
    d.Get("step", &c.debug.step);
    d.Get("retrain_rounds", &c.debug.retrain_rounds);
    d.Get("early_stop", &c.debug.early_stop);
    d.Get("cold_start", &c.debug.cold_start);
    ObjectReader g(d.Child("cg"), "debug.cg");
    g.Get("tol", &c.debug.cg.tol);
    g.Get("max_iter", &c.debug.cg.max_iter);
    g.Get("damping", &c.debug.cg.damping);
    g.Get("breakdown_threshold", &c.debug.cg.breakdown_threshold);
    g.Finish();
    d.Finish();
  }
  {
    std::string kind = model::ModelKindName(c.central_model);
    root.Get("central_model", &kind);
    c.central_model = ModelKindFromName(kind);
  }
  {
    ObjectReader s(root.Child("session"), "session");
    s.Get("key_bits", &c.key_bits);
    std::string key_mode = he::KeyModeName(c.key_mode);
    s.Get("key_mode", &key_mode);
    c.key_mode = he::KeyModeFromName(key_mode);
    s.Get("unsafe_override", &c.unsafe_override);
    std::string bound = security::DebugBoundModeName(c.debug_bound);
    s.Get("debug_bound", &bound);
    c.debug_bound = security::DebugBoundModeFromName(bound);
    std::string exec = ExecutionModeName(c.execution);
    s.Get("execution", &exec);
    c.execution = ExecutionModeFromName(exec);
    s.Finish();
  }
  root.Finish();
  c.Validate();
  return c;
}

ExperimentConfig LoadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgumentError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgumentError("config " + path + ": " + e.what());
  }
  return ConfigFromJson(j);
}

json DefaultConfigJson() { return ConfigToJson(ExperimentConfig{}); }

// ---------------------------------------------------------------------------
// Pipeline

PreparedExperiment PrepareExperiment(const ExperimentConfig& config) {
  config.Validate();
  PreparedExperiment p;
  std::optional<query::Complaint> suite_complaint;
  Stage("ingest", [&] {
    switch (config.source) {
      case DataSource::kCsv: {
        const Dataset data =
            LoadDataset(ReadCsvFile(config.dataset_path), config.ingest);
        SplitData split = SplitDataset(data, config.split,
                                       config.partition_cut, config.seed);
        p.input = std::move(split.input);
        p.clean_train_y = p.input.train.y;
        p.infer_y = split.infer_y;
        p.holdout_y = split.holdout_y;
        p.features_a = split.features_a;
        p.features_b = split.features_b;
        p.vocabulary = data.vocabulary;
        p.query = "SELECT COUNT(*) FROM P JOIN I WHERE P.Label = 1";
        break;
      }
      case DataSource::kPlanted:
      case DataSource::kFairness: {
        SyntheticSuite s;
        if (config.source == DataSource::kPlanted) {
          PlantedOptions o = config.planted;
          o.seed = config.seed;
          s = MakePlantedSuite(o);
        } else {
          FairnessOptions o = config.fairness;
          o.seed = config.seed;
          s = MakeFairnessSuite(o);
        }
        p.input = std::move(s.input);
        p.clean_train_y = s.clean_train_y;
        p.infer_y = s.infer_y;
        p.holdout_y = s.holdout_y;
        p.corrupted = s.corrupted;
        p.query = s.query;
        suite_complaint = s.complaint;
        for (int j = 0; j + 1 < p.input.train.ma(); ++j) {
          p.features_a.push_back("a" + std::to_string(j));
        }
        for (int j = 0; j < p.input.train.mb(); ++j) {
          p.features_b.push_back("b" + std::to_string(j));
        }
        break;
      }
    }
  });
  Stage("corrupt", [&] {
    if (config.source != DataSource::kCsv) return;  // planted by the suite
    Corruption c = InjectCorruption(p.clean_train_y, p.input.train.ids,
                                    config.corruption_rate, config.seed,
                                    config.corruption_base);
    p.input.train.y = c.labels;
    p.corrupted = c.ids;
  });
  Stage("query", [&] {
    const bool default_query = config.query.empty();
    if (!default_query) p.query = config.query;
    p.spec = query::ParseQuery(p.query);
    if (!config.target_selector.empty()) {
      p.spec.target_selector = config.target_selector;
    } else if (default_query && config.source == DataSource::kFairness) {
      p.spec.target_selector = "a - b";
    }
    p.spec.Validate();
    const auto truth = query::PredictionTable::FromProbabilities(
        p.input.infer_ids, p.infer_y);
    p.truth_value = query::SelectTarget(
        p.spec, query::ExecuteQuery(p.spec, truth, p.input.infer_table));
    query::Complaint fallback{query::Complaint::Op::kEq, p.truth_value};
    if (suite_complaint && default_query) fallback = *suite_complaint;
    p.complaint.op = config.complaint.op
                         ? query::ComplaintOpFromString(*config.complaint.op)
                         : fallback.op;
    p.complaint.value = config.complaint.value.value_or(fallback.value);
    p.complaint.tolerance = config.complaint.tolerance;
  });
  return p;
}

PhaseError::PhaseError(std::string phase, std::string kind,
                       const std::string& message)
    : Error(phase + ": " + kind + ": " + message),
      phase_(std::move(phase)),
      kind_(std::move(kind)) {}

Session MakeSession(const ExperimentConfig& config,
                    const PreparedExperiment& prepared,
                    debug::Framework framework) {
  protocol::SessionConfig sc;
  sc.key_bits = config.key_bits;
  sc.key_mode = config.key_mode;
  sc.seed = config.seed;
  sc.mode = config.execution;
  sc.unsafe_override = config.unsafe_override;
  sc.debug_bound = config.debug_bound;
  const auto& in = prepared.input;
  Session s;
  switch (framework) {
    case debug::Framework::kFedRain: {
      auto f = std::make_unique<protocol::FedRainFederation>(in, sc);
      s.backend = std::make_unique<debug::FedRainBackend>(f.get());
      s.federation = std::move(f);
      break;
    }
    case debug::Framework::kFrog: {
      auto f = std::make_unique<protocol::FrogFederation>(in, sc);
      auto b = std::make_unique<debug::FrogBackend>(f.get());
      b->min_improvement = config.train.min_improvement;
      s.backend = std::move(b);
      s.federation = std::move(f);
      break;
    }
    case debug::Framework::kRainOracle:
    case debug::Framework::kLossBaseline: {
      auto b = std::make_unique<debug::CentralBackend>(
          in, config.central_model, framework);
      b->min_improvement = config.train.min_improvement;
      s.backend = std::move(b);
      break;
    }
  }
  return s;
}

void LoadModel(Session& session, const model::ModelState& state) {
  const model::ModelState current = session.backend->Model();
  if (state.kind != current.kind ||
      state.theta_a.size() != current.theta_a.size() ||
      state.theta_b.size() != current.theta_b.size()) {
    throw InvalidArgumentError("model does not fit this session (kind " +
                               std::string(model::ModelKindName(state.kind)) +
                               ", " + std::to_string(state.theta_a.size()) +
                               "+" + std::to_string(state.theta_b.size()) +
                               " weights)");
  }
  if (auto* fed = session.federation.get()) {
    auto& a = fed->party(Party::kA);
    auto& b = fed->party(Party::kB);
    a.theta = state.theta_a;
    b.theta = state.theta_b;
    a.mask = state.c1;
    b.mask = state.c2;
    a.Touch();
    b.Touch();
  } else {
    static_cast<debug::CentralBackend&>(*session.backend).set_model(state);
  }
}

json ModelToJson(const model::ModelState& state) {
  auto vec = [](const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  return {{"kind", model::ModelKindName(state.kind)},
          {"theta_a", vec(state.theta_a)},
          {"theta_b", vec(state.theta_b)},
          {"c1", state.c1},
          {"c2", state.c2}};
}

model::ModelState ModelFromJson(const json& j) {
  try {
    model::ModelState s;
    s.kind = ModelKindFromName(j.at("kind").get<std::string>());
    const auto a = j.at("theta_a").get<std::vector<double>>();
    const auto b = j.at("theta_b").get<std::vector<double>>();
    s.theta_a = Eigen::Map<const Vector>(a.data(),
                                         static_cast<Eigen::Index>(a.size()));
    s.theta_b = Eigen::Map<const Vector>(b.data(),
                                         static_cast<Eigen::Index>(b.size()));
    s.c1 = j.value("c1", 0.0);
    s.c2 = j.value("c2", 0.0);
    return s;
  } catch (const json::exception& e) {
    throw InvalidArgumentError(std::string("model document: ") + e.what());
  }
}

ExperimentOutput RunPrepared(const ExperimentConfig& config,
                             const PreparedExperiment& prepared,
                             debug::Framework framework) {
  const auto started = std::chrono::steady_clock::now();
  ExperimentOutput out;
  RunReport& r = out.report;
  r.name = config.name;
  r.framework = debug::FrameworkName(framework);
  r.query = prepared.spec.ToString();
  if (!prepared.spec.target_selector.empty()) {
    r.query += " [target " + prepared.spec.target_selector + "]";
  }
  r.complaint = prepared.complaint.ToString();
  const auto& in = prepared.input;
  r.n_train = in.train.n();
  r.n_infer = static_cast<int64_t>(in.infer_ids.size());
  r.n_holdout = static_cast<int64_t>(in.holdout_ids.size());
  r.ma = in.train.ma();
  r.mb = in.train.mb();
  r.seed = config.seed;
  r.corrupted = prepared.corrupted;
  r.truth_value = prepared.truth_value;

  Session session = Stage("session", [&] {
    return MakeSession(config, prepared, framework);
  });
  protocol::Federation* fed = session.federation.get();
  debug::DebugBackend* backend = session.backend.get();

  auto holdout_f1 = [&] {
    query::PredictionTable p =
        fed ? fed->Infer(protocol::InferenceSet::kHoldout)
            : debug::PredictCentral(backend->Model(), in.holdout_ids,
                                    in.holdout_xa, in.holdout_xb);
    return F1Score(AlignedLabels(p, in.holdout_ids), prepared.holdout_y);
  };

  r.initial_training = Stage("train", [&] {
    return backend->Train(config.train.rounds, config.train.learning_rate,
                          false);
  });
  r.f1_before = Stage("evaluate", holdout_f1);

  debug::DebugRunConfig dc;
  r.budget = config.debug.budget > 0
                 ? config.debug.budget
                 : static_cast<int>(prepared.corrupted.size());
  r.step = std::min(config.debug.step, std::max(r.budget, 1));
  dc.budget = r.budget;
  dc.step = r.step;
  dc.early_stop = config.debug.early_stop;
  dc.retrain_rounds = config.debug.retrain_rounds;
  dc.learning_rate = config.train.learning_rate;
  dc.cold_start = config.debug.cold_start;
  dc.cg = config.debug.cg;
  debug::DebugResult result;
  if (r.budget > 0) {
    result = Stage("debug", [&] {
      return debug::DebugLoop(dc, *backend, prepared.spec,
                              prepared.complaint);
    });
  } else {
    result.final_model = backend->Model();
  }
  r.deleted = result.deleted;
  r.query_values = result.QueryValues();
  r.relaxed_values = result.RelaxedValues();
  r.complaint_satisfied = result.complaint_satisfied;
  r.security_limited = result.security_limited;
  r.security_message = result.security_message;
  r.f1_after = Stage("evaluate", holdout_f1);
  if (!prepared.corrupted.empty() && r.budget > 0) {
    r.recall_curve = Stage("metrics", [&] {
      return RecallAtK(r.deleted, prepared.corrupted,
                       static_cast<size_t>(r.budget));
    });
  }

  TimingReport& t = out.timing;
  t.name = r.name;
  t.framework = r.framework;
  if (fed) {
    for (const auto& ph : fed->phases()) {
      auto it = std::find_if(r.phases.begin(), r.phases.end(),
                             [&](const PhaseSummary& s) {
                               return s.name == ph.name;
                             });
      if (it == r.phases.end()) {
        r.phases.push_back({ph.name, 0, {}, 0, 0});
        t.phases.push_back({ph.name, 0, 0, 0, 0, 0});
        it = r.phases.end() - 1;
      }
      PhaseTiming& pt = t.phases[static_cast<size_t>(it - r.phases.begin())];
      ++it->runs;
      it->ops += ph.ops;
      it->messages += ph.messages;
      it->bytes += ph.bytes;
      ++pt.runs;
      pt.wall_seconds += ph.stats.wall_seconds;
      for (const auto& ps : ph.stats.party) {
        pt.compute_seconds += ps.compute_seconds();
        pt.network_seconds += ps.network_seconds;
        pt.wait_seconds += ps.wait_seconds;
      }
    }
    r.total_ops = fed->TotalOps();
    const auto& b = fed->budget();
    BudgetUsage u;
    u.train_limit = b.train_limit();
    u.debug_limit = b.debug_limit();
    u.train_rounds_total = b.train_rounds_total();
    u.train_runs = b.train_runs();
    u.debug_consumed = b.debug_consumed();
    u.override_used = b.override_used();
    u.rationale = b.rationale();
    r.budget_usage = u;
    fed->transcript().Close();
    out.transcript = fed->transcript();
    r.transcript_digest = out.transcript.Digest();
    r.transcript_messages = out.transcript.size();
    r.audit = Stage("audit", [&] {
      return security::AuditTranscript(out.transcript, fed->protocol());
    });
  }
  t.total_seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - started)
                        .count();
  return out;
}

ExperimentOutput RunExperiment(const ExperimentConfig& config) {
  const PreparedExperiment prepared = PrepareExperiment(config);
  return RunPrepared(config, prepared,
                     debug::FrameworkFromName(config.framework));
}

const std::vector<debug::Framework>& AllFrameworks() {
  static const std::vector<debug::Framework> kAll = {
      debug::Framework::kFrog, debug::Framework::kFedRain,
      debug::Framework::kLossBaseline, debug::Framework::kRainOracle};
  return kAll;
}

Comparison Compare(const ExperimentConfig& config,
                   const std::vector<debug::Framework>& frameworks) {
  const PreparedExperiment prepared = PrepareExperiment(config);
  Comparison c;
  c.name = config.name;
  c.corrupted = prepared.corrupted;
  for (debug::Framework f : frameworks) {
    c.runs.push_back(RunPrepared(config, prepared, f));
    const RunReport& r = c.runs.back().report;
    ComparisonRow row;
    row.framework = r.framework;
    row.recall_at_budget = r.recall_curve.empty() ? 0.0 : r.recall_curve.back();
    row.f1_before = r.f1_before.f1;
    row.f1_after = r.f1_after.f1;
    c.rows.push_back(row);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Output

json RunReport::ToJson() const {
  json phases_json = json::array();
  for (const auto& p : phases) {
    phases_json.push_back({{"name", p.name},
                           {"runs", p.runs},
                           {"ops", OpsJson(p.ops)},
                           {"messages", p.messages},
                           {"bytes", p.bytes}});
  }
  json j = {
      {"name", name},
      {"framework", framework},
      {"seed", seed},
      {"query", query},
      {"complaint", complaint},
      {"truth_value", truth_value},
      {"data",
       {{"n_train", n_train},
        {"n_infer", n_infer},
        {"n_holdout", n_holdout},
        {"ma", ma},
        {"mb", mb}}},
      {"initial_training",
       {{"rounds_requested", initial_training.rounds_requested},
        {"rounds_run", initial_training.rounds_run},
        {"clipped", initial_training.clipped}}},
      {"budget", budget},
      {"step", step},
      {"corrupted_ids", corrupted},
      {"deleted_ids", deleted},
      {"recall_curve", recall_curve},
      {"f1_before", F1Json(f1_before)},
      {"f1_after", F1Json(f1_after)},
      {"query_values", query_values},
      {"relaxed_values", relaxed_values},
      {"complaint_satisfied", complaint_satisfied},
      {"security_limited", security_limited},
      {"security_message", security_message},
      {"phases", phases_json},
      {"total_ops", OpsJson(total_ops)},
      {"transcript_digest", transcript_digest},
      {"transcript_messages", transcript_messages},
  };
  if (budget_usage) {
    const auto& u = *budget_usage;
    j["budget_usage"] = {{"train_limit", LimitJson(u.train_limit)},
                         {"debug_limit", LimitJson(u.debug_limit)},
                         {"train_rounds_total", u.train_rounds_total},
                         {"train_runs", u.train_runs},
                         {"debug_consumed", u.debug_consumed},
                         {"override_used", u.override_used},
                         {"rationale", u.rationale}};
  } else {
    j["budget_usage"] = nullptr;
  }
  if (audit) {
    j["audit"] = {{"pass", audit->pass},
                  {"violations", audit->violations},
                  {"ciphertext_messages", audit->ciphertext_messages}};
  } else {
    j["audit"] = nullptr;
  }
  return j;
}

json TimingReport::ToJson() const {
  json phases_json = json::array();
  for (const auto& p : phases) {
    phases_json.push_back({{"name", p.name},
                           {"runs", p.runs},
                           {"wall_seconds", p.wall_seconds},
                           {"compute_seconds", p.compute_seconds},
                           {"network_seconds", p.network_seconds},
                           {"wait_seconds", p.wait_seconds}});
  }
  return {{"name", name},
          {"framework", framework},
          {"total_seconds", total_seconds},
          {"phases", phases_json}};
}

json Comparison::ToJson() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"framework", r.framework},
                         {"recall_at_budget", r.recall_at_budget},
                         {"f1_before", NumberOrNull(r.f1_before)},
                         {"f1_after", NumberOrNull(r.f1_after)},
                         {"f1_delta", NumberOrNull(r.f1_delta())}});
  }
  json runs_json = json::array();
  for (const auto& run : runs) runs_json.push_back(run.report.ToJson());
  return {{"name", name},
          {"corrupted_ids", corrupted},
          {"table", rows_json},
          {"runs", runs_json}};
}

void WriteRecallCsv(const RunReport& report, std::ostream& out) {
  out << "k,recall\n";
  for (size_t k = 0; k < report.recall_curve.size(); ++k) {
    out << (k + 1) << "," << report.recall_curve[k] << "\n";
  }
}

void WriteComparisonCsv(const Comparison& comparison, std::ostream& out) {
  size_t length = 0;
  out << "k";
  for (const auto& run : comparison.runs) {
    out << "," << run.report.framework;
    length = std::max(length, run.report.recall_curve.size());
  }
  out << "\n";
  for (size_t k = 0; k < length; ++k) {
    out << (k + 1);
    for (const auto& run : comparison.runs) {
      const auto& c = run.report.recall_curve;
      out << ",";
      if (k < c.size()) out << c[k];
    }
    out << "\n";
  }
}

void WriteJsonFile(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgumentError("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace vfdebug::harness
