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


// Command line front end for training-data debugging experiments.
//
// Exit codes: 0 success, 1 usage or runtime error, 2 security refusal,
// 3 transcript audit failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "vfdebug/error.h"
#include "vfdebug/harness.h"
#include "vfdebug/paillier.h"
#include "vfdebug/security.h"
#include "vfdebug/transcript.h"

namespace {

using nlohmann::json;
using namespace vfdebug;
namespace fs = std::filesystem;

constexpr int kExitError = 1;
constexpr int kExitSecurity = 2;
constexpr int kExitAudit = 3;

// Options shared by every command that runs an experiment.
struct RunOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::string framework;
  std::string dataset;
  long long seed = -1;
};

void AddRunOptions(CLI::App* cmd, RunOptions* o, bool with_framework = true) {
  cmd->add_option("-c,--config", o->config_path,
                  "experiment config (JSON); defaults when omitted");
  cmd->add_option("-o,--out-dir", o->out_dir, "output directory");
  if (with_framework) {
    cmd->add_option("-f,--framework", o->framework,
                    "frog, fedrain, loss or rain_oracle");
  }
  cmd->add_option("-d,--dataset", o->dataset, "dataset CSV path");
  cmd->add_option("-s,--seed", o->seed, "experiment seed");
}

harness::ExperimentConfig ResolveConfig(const RunOptions& o) {
  harness::ExperimentConfig c = o.config_path.empty()
                                    ? harness::ExperimentConfig{}
                                    : harness::LoadConfigFile(o.config_path);
  if (!o.framework.empty()) c.framework = o.framework;
  if (!o.dataset.empty()) {
    c.dataset_path = o.dataset;
    c.source = harness::DataSource::kCsv;
  }
  if (o.seed >= 0) c.seed = static_cast<uint64_t>(o.seed);
  c.Validate();
  return c;
}

std::string OutPath(const RunOptions& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  return (fs::path(o.out_dir) / name).string();
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InvalidArgumentError("cannot write " + path);
  out << text;
}

void WriteTranscript(const Transcript& t, Protocol p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgumentError("cannot write " + path);
  ExportTranscriptJsonl(t, ProtocolName(p), out);
}

// Federated runs only; centralized runs exchange no messages.
void WriteRunTranscript(const harness::ExperimentOutput& out,
                        const RunOptions& o) {
  if (out.transcript.size() == 0) return;
  const Protocol p = out.report.framework == "fedrain" ? Protocol::kFedRain
                                                       : Protocol::kFrog;
  WriteTranscript(out.transcript, p, OutPath(o, "transcript.jsonl"));
}

json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgumentError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgumentError(path + ": " + e.what());
  }
}

// Writes the vocabulary of one-hot encoded columns next to a report.
void WriteVocabulary(const harness::PreparedExperiment& p,
                     const RunOptions& o) {
  if (p.vocabulary.empty()) return;
  harness::WriteJsonFile(json(p.vocabulary), OutPath(o, "vocabulary.json"));
}

bool AuditPassed(const harness::RunReport& r) {
  return !r.audit || r.audit->pass;
}

int CmdDefaultConfig(const std::string& out) {
  const std::string text = harness::DefaultConfigJson().dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    WriteText(out, text);
  }
  return 0;
}

int CmdGenKeys(int bits, const std::string& mode, long long seed,
               const std::string& out_dir) {
  const he::KeyMode m = he::KeyModeFromName(mode);
  fs::create_directories(out_dir);
  for (int party = 0; party < 2; ++party) {
    std::optional<uint64_t> s;
    if (m == he::KeyMode::kTest) s = static_cast<uint64_t>(seed) * 2 + party;
    const he::KeyPair keys = he::GenerateKeyPair(bits, m, s);
    const std::string name = party == 0 ? "party_a" : "party_b";
    harness::WriteJsonFile(he::KeyPairToJson(keys),
                           (fs::path(out_dir) / (name + ".key.json")).string());
    harness::WriteJsonFile(he::PublicKeyToJson(keys.pub),
                           (fs::path(out_dir) / (name + ".pub.json")).string());
  }
  std::cout << "wrote key pairs for party_a and party_b to " << out_dir
            << "\n";
  return 0;
}

int CmdTrain(const RunOptions& o) {
  const auto config = ResolveConfig(o);
  const auto framework = debug::FrameworkFromName(config.framework);
  const auto prepared = harness::PrepareExperiment(config);
  auto session = harness::MakeSession(config, prepared, framework);
  const auto outcome = session.backend->Train(
      config.train.rounds, config.train.learning_rate, false);
  json doc = {{"framework", config.framework},
              {"rounds_requested", outcome.rounds_requested},
              {"rounds_run", outcome.rounds_run},
              {"clipped", outcome.clipped},
              {"model", harness::ModelToJson(session.backend->Model())}};
  harness::WriteJsonFile(doc, OutPath(o, "model.json"));
  if (auto* fed = session.federation.get()) {
    fed->transcript().Close();
    WriteTranscript(fed->transcript(), fed->protocol(),
                    OutPath(o, "train_transcript.jsonl"));
  }
  std::cout << "trained " << config.framework << ": " << outcome.rounds_run
            << " of " << outcome.rounds_requested << " rounds"
            << (outcome.clipped ? " (clipped to the training bound)" : "")
            << "\n";
  return 0;
}

int CmdInfer(const RunOptions& o, const std::string& model_path,
             const std::string& which) {
  const auto config = ResolveConfig(o);
  const auto framework = debug::FrameworkFromName(config.framework);
  const auto prepared = harness::PrepareExperiment(config);
  auto session = harness::MakeSession(config, prepared, framework);
  json doc = ReadJson(model_path);
  harness::LoadModel(session, harness::ModelFromJson(
                                  doc.contains("model") ? doc["model"] : doc));
  const bool holdout = which == "holdout";
  if (!holdout && which != "query") {
    throw InvalidArgumentError("--set must be query or holdout");
  }
  const auto& in = prepared.input;
  query::PredictionTable p;
  if (auto* fed = session.federation.get()) {
    p = fed->Infer(holdout ? protocol::InferenceSet::kHoldout
                           : protocol::InferenceSet::kQuery);
  } else {
    p = holdout ? debug::PredictCentral(session.backend->Model(),
                                        in.holdout_ids, in.holdout_xa,
                                        in.holdout_xb)
                : session.backend->Predict();
  }
  std::ostringstream csv;
  csv.precision(17);
  csv << "id,prob1,label\n";
  for (size_t i = 0; i < p.size(); ++i) {
    csv << p.ids[i] << "," << p.prob1[static_cast<Eigen::Index>(i)] << ","
        << p.hard_label[i] << "\n";
  }
  const std::string path = OutPath(o, "predictions.csv");
  WriteText(path, csv.str());
  std::cout << "wrote " << p.size() << " predictions to " << path << "\n";
  return 0;
}

query::PredictionTable ReadPredictions(const std::string& path) {
  const harness::CsvTable t = harness::ReadCsvFile(path);
  if (t.header != std::vector<std::string>{"id", "prob1", "label"}) {
    throw IngestionError(path + ": expected header id,prob1,label");
  }
  query::PredictionTable p;
  p.prob1.resize(static_cast<Eigen::Index>(t.rows.size()));
  for (size_t i = 0; i < t.rows.size(); ++i) {
    p.ids.push_back(std::stoll(t.rows[i][0]));
    p.prob1[static_cast<Eigen::Index>(i)] = std::stod(t.rows[i][1]);
    p.hard_label.push_back(std::stoi(t.rows[i][2]));
  }
  return p;
}

int CmdQuery(const RunOptions& o, const std::string& predictions_path) {
  const auto config = ResolveConfig(o);
  const auto prepared = harness::PrepareExperiment(config);
  const auto p = ReadPredictions(predictions_path);
  const auto& table = prepared.input.infer_table;
  const auto result = query::ExecuteQuery(prepared.spec, p, table);
  const double value = query::SelectTarget(prepared.spec, result);
  const auto relaxed = query::RelaxQuery(prepared.spec, p, table);
  json groups = json::array();
  for (const auto& g : result.groups) {
    groups.push_back({{"key", g.key}, {"value", g.value}, {"rows", g.rows}});
  }
  json doc = {{"query", prepared.spec.ToString()},
              {"target_selector", prepared.spec.target_selector},
              {"groups", groups},
              {"value", value},
              {"relaxed_value", relaxed.value},
              {"complaint", prepared.complaint.ToString()},
              {"satisfied", prepared.complaint.Satisfied(value)}};
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int CmdDebug(const RunOptions& o) {
  const auto config = ResolveConfig(o);
  const auto prepared = harness::PrepareExperiment(config);
  const auto out = harness::RunPrepared(
      config, prepared, debug::FrameworkFromName(config.framework));
  const auto& r = out.report;
  json doc = {{"framework", r.framework},
              {"complaint", r.complaint},
              {"deleted_ids", r.deleted},
              {"query_values", r.query_values},
              {"relaxed_values", r.relaxed_values},
              {"complaint_satisfied", r.complaint_satisfied},
              {"security_limited", r.security_limited},
              {"security_message", r.security_message}};
  harness::WriteJsonFile(doc, OutPath(o, "debug.json"));
  WriteRunTranscript(out, o);
  std::cout << "deleted " << r.deleted.size() << " records"
            << (r.security_limited ? " (stopped by the security bound)" : "")
            << "\n";
  return AuditPassed(r) ? 0 : kExitAudit;
}

int CmdEval(const RunOptions& o) {
  const auto config = ResolveConfig(o);
  const auto prepared = harness::PrepareExperiment(config);
  const auto framework = debug::FrameworkFromName(config.framework);
  const auto out = harness::RunPrepared(config, prepared, framework);
  const auto& r = out.report;
  harness::WriteJsonFile(r.ToJson(), OutPath(o, "report.json"));
  harness::WriteJsonFile(out.timing.ToJson(), OutPath(o, "timing.json"));
  {
    std::ofstream csv(OutPath(o, "recall.csv"));
    harness::WriteRecallCsv(r, csv);
  }
  WriteRunTranscript(out, o);
  WriteVocabulary(prepared, o);
  std::cout << r.framework << ": recall@" << r.budget << " = "
            << (r.recall_curve.empty() ? 0.0 : r.recall_curve.back())
            << ", F1 " << r.f1_before.f1 << " -> " << r.f1_after.f1
            << ", digest " << r.transcript_digest << "\n";
  if (!AuditPassed(r)) {
    std::cerr << "transcript audit failed\n";
    return kExitAudit;
  }
  return 0;
}

int CmdCompare(const RunOptions& o, const std::vector<std::string>& names) {
  const auto config = ResolveConfig(o);
  std::vector<debug::Framework> frameworks;
  for (const auto& n : names) frameworks.push_back(debug::FrameworkFromName(n));
  if (frameworks.empty()) frameworks = harness::AllFrameworks();
  const auto cmp = harness::Compare(config, frameworks);
  harness::WriteJsonFile(cmp.ToJson(), OutPath(o, "comparison.json"));
  json timings = json::array();
  for (const auto& run : cmp.runs) timings.push_back(run.timing.ToJson());
  harness::WriteJsonFile(timings, OutPath(o, "timing.json"));
  {
    std::ofstream csv(OutPath(o, "recall.csv"));
    harness::WriteComparisonCsv(cmp, csv);
  }
  std::cout << "framework,recall_at_budget,f1_before,f1_after\n";
  bool audits_pass = true;
  for (size_t i = 0; i < cmp.rows.size(); ++i) {
    const auto& row = cmp.rows[i];
    std::cout << row.framework << "," << row.recall_at_budget << ","
              << row.f1_before << "," << row.f1_after << "\n";
    audits_pass = audits_pass && AuditPassed(cmp.runs[i].report);
  }
  if (!audits_pass) {
    std::cerr << "transcript audit failed\n";
    return kExitAudit;
  }
  return 0;
}

int CmdAudit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgumentError("cannot open " + path);
  const LoadedTranscript loaded = ImportTranscriptJsonl(in);
  const security::AuditVerdict v = security::AuditTranscript(loaded);
  json doc = {{"protocol", loaded.protocol},
              {"messages", loaded.records.size()},
              {"digest", loaded.digest},
              {"pass", v.pass},
              {"violations", v.violations},
              {"ciphertext_messages", v.ciphertext_messages}};
  json tallies = json::array();
  for (const auto& t : v.tallies) {
    tallies.push_back({{"source", t.source},
                       {"learner", PartyName(t.learner)},
                       {"equations", t.equations},
                       {"unknowns", t.unknowns},
                       {"underdetermined", t.underdetermined()}});
  }
  doc["leakage"] = tallies;
  std::cout << doc.dump(2) << "\n";
  return v.pass ? 0 : kExitAudit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-data debugging for two-party vertical federated "
               "learning"};
  app.require_subcommand(1);

  std::string default_out;
  auto* dc = app.add_subcommand("default-config",
                                "print the default experiment config");
  dc->add_option("-o,--out", default_out, "write to this file");

  int key_bits = 512;
  std::string key_mode = "test";
  long long key_seed = 1;
  std::string key_dir = "keys";
  auto* gk = app.add_subcommand("gen-keys", "generate both parties' keys");
  gk->add_option("--bits", key_bits, "modulus bits");
  gk->add_option("--mode", key_mode, "test or secure");
  gk->add_option("--seed", key_seed, "seed for test keys");
  gk->add_option("-o,--out-dir", key_dir, "output directory");

  RunOptions train_opts, infer_opts, query_opts, debug_opts, eval_opts,
      compare_opts;
  auto* train = app.add_subcommand("train", "train a model and save it");
  AddRunOptions(train, &train_opts);

  std::string model_path, infer_set = "query";
  auto* infer = app.add_subcommand("infer", "predict with a saved model");
  AddRunOptions(infer, &infer_opts);
  infer->add_option("-m,--model", model_path, "model.json from train")
      ->required();
  infer->add_option("--set", infer_set, "query or holdout");

  std::string predictions_path;
  auto* query_cmd =
      app.add_subcommand("query", "evaluate the configured query and complaint");
  AddRunOptions(query_cmd, &query_opts, false);
  query_cmd->add_option("-p,--predictions", predictions_path,
                        "predictions.csv from infer")
      ->required();

  auto* debug_cmd = app.add_subcommand("debug", "run the debugging loop");
  AddRunOptions(debug_cmd, &debug_opts);

  auto* eval = app.add_subcommand(
      "eval", "run one experiment and write report, timing and recall CSV");
  AddRunOptions(eval, &eval_opts);

  std::vector<std::string> compare_frameworks;
  auto* compare = app.add_subcommand(
      "compare", "run several frameworks on one corruption");
  AddRunOptions(compare, &compare_opts, false);
  compare->add_option("--frameworks", compare_frameworks,
                      "frameworks to compare (default: all)")
      ->delimiter(',');

  std::string transcript_path;
  auto* audit = app.add_subcommand("audit", "audit a transcript file");
  audit->add_option("transcript", transcript_path, "transcript JSONL")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dc) return CmdDefaultConfig(default_out);
    if (*gk) return CmdGenKeys(key_bits, key_mode, key_seed, key_dir);
    if (*train) return CmdTrain(train_opts);
    if (*infer) return CmdInfer(infer_opts, model_path, infer_set);
    if (*query_cmd) return CmdQuery(query_opts, predictions_path);
    if (*debug_cmd) return CmdDebug(debug_opts);
    if (*eval) return CmdEval(eval_opts);
    if (*compare) return CmdCompare(compare_opts, compare_frameworks);
    if (*audit) return CmdAudit(transcript_path);
  } catch (const harness::PhaseError& e) {
    std::cerr << "error in " << e.phase() << ": " << e.what() << "\n";
    return e.kind() == "SecurityError" ? kExitSecurity : kExitError;
  } catch (const AuditIncompleteError& e) {
    std::cerr << "audit: " << e.what() << "\n";
    return kExitAudit;
  } catch (const SecurityError& e) {
    std::cerr << "security: " << e.what() << "\n";
    return kExitSecurity;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
