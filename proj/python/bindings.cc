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

// Python bindings. Structured documents (configs, reports, keys) cross the
// boundary as JSON text; the Python package decodes them.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vfdebug/error.h"
#include "vfdebug/harness.h"
#include "vfdebug/model.h"
#include "vfdebug/paillier.h"
#include "vfdebug/security.h"
#include "vfdebug/transcript.h"

namespace py = pybind11;
using nlohmann::json;

namespace vfdebug {
namespace {

using model::Matrix;
using model::Vector;

harness::ExperimentConfig ParseConfig(const std::string& text) {
  return harness::ConfigFromJson(json::parse(text));
}

json VerdictToJson(const security::AuditVerdict& v) {
  json plaintext = json::array();
  for (const auto& t : v.plaintext) {
    plaintext.push_back({{"sender", PartyName(t.sender)},
                         {"kind", t.kind},
                         {"messages", t.messages},
                         {"values", t.values}});
  }
  return {{"pass", v.pass},
          {"violations", v.violations},
          {"ciphertext_messages", v.ciphertext_messages},
          {"plaintext", plaintext}};
}

// Paillier session bound to one key pair, counting its operations.
class PaillierSession {
 public:
  PaillierSession(const he::KeyPair& keys, std::optional<uint64_t> seed)
      : keys_(keys), enc_(keys_.pub, &counter_, seed), dec_(keys_, &counter_) {}

  he::Ciphertext Encrypt(double x) { return enc_.Encrypt(x); }
  double Decrypt(const he::Ciphertext& c) { return dec_.Decrypt(c); }
  he::Ciphertext Add(const he::Ciphertext& a, const he::Ciphertext& b) {
    return enc_.Add(a, b);
  }
  he::Ciphertext AddPlain(const he::Ciphertext& a, double k) {
    return enc_.AddPlain(a, k);
  }
  he::Ciphertext Mul(double k, const he::Ciphertext& c) { return enc_.Mul(k, c); }
  const he::EncOpCounter& counter() const { return counter_; }

 private:
  he::KeyPair keys_;
  he::EncOpCounter counter_;
  he::Encryptor enc_;
  he::Decryptor dec_;
};

}  // namespace
}  // namespace vfdebug

PYBIND11_MODULE(_vfdebug, m) {
  using namespace vfdebug;
  m.doc() = "Two-party vertical federated training-data debugging";

  // Errors: a base class plus the subclasses callers act on. Translators run
  // most recent first, so subclasses are registered after the base.
  auto& error = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidArgumentError>(m, "InvalidArgumentError",
                                               error.ptr());
  py::register_exception<SecurityError>(m, "SecurityError", error.ptr());
  py::register_exception<AuditIncompleteError>(m, "AuditIncompleteError",
                                               error.ptr());
  py::register_exception<QueryError>(m, "QueryError", error.ptr());
  py::register_exception<IngestionError>(m, "IngestionError", error.ptr());
  py::register_exception<harness::PhaseError>(m, "PhaseError", error.ptr());

  // ------------------------------------------------------------- paillier
  py::class_<he::EncOpCounter>(m, "EncOpCounter")
      .def_readonly("adds", &he::EncOpCounter::adds)
      .def_readonly("cmuls", &he::EncOpCounter::cmuls)
      .def_readonly("encryptions", &he::EncOpCounter::encryptions)
      .def_readonly("decryptions", &he::EncOpCounter::decryptions)
      .def_readonly("plain_adds", &he::EncOpCounter::plain_adds)
      .def_readonly("rescales", &he::EncOpCounter::rescales);
  py::class_<he::KeyPair>(m, "KeyPair")
      .def_property_readonly("bits", [](const he::KeyPair& k) { return k.pub.bits; })
      .def("to_json", [](const he::KeyPair& k) { return he::KeyPairToJson(k).dump(); })
      .def_static("from_json", [](const std::string& s) {
        return he::KeyPairFromJson(json::parse(s));
      });
  py::class_<he::Ciphertext>(m, "Ciphertext")
      .def_readonly("scale_exp", &he::Ciphertext::scale_exp);
  m.def("generate_key_pair",
        [](int bits, const std::string& mode, uint64_t seed) {
          return he::GenerateKeyPair(bits, he::KeyModeFromName(mode), seed);
        },
        py::arg("bits") = 512, py::arg("mode") = "test", py::arg("seed") = 1);
  py::class_<PaillierSession>(m, "PaillierSession")
      .def(py::init<const he::KeyPair&, std::optional<uint64_t>>(),
           py::arg("keys"), py::arg("seed") = py::none())
      .def("encrypt", &PaillierSession::Encrypt)
      .def("decrypt", &PaillierSession::Decrypt)
      .def("add", &PaillierSession::Add)
      .def("add_plain", &PaillierSession::AddPlain)
      .def("mul", &PaillierSession::Mul)
      .def_property_readonly("counter", &PaillierSession::counter);

  // ---------------------------------------------------------------- model
  m.def("sigmoid", &model::Sigmoid);
  m.def("logistic_loss", &model::LogisticLoss);
  m.def("logistic_gradient", [](const Vector& theta, const Matrix& x,
                                const Vector& y) {
    model::GradientResult g = model::LogisticGradient(theta, x, y);
    return py::make_tuple(g.mean, g.per_example);
  });
  m.def("logistic_hessian", &model::LogisticHessian);
  m.def("train_logistic_gd", &model::TrainLogisticGd, py::arg("theta"),
        py::arg("x"), py::arg("y"), py::arg("learning_rate"),
        py::arg("rounds"));

  // ------------------------------------------------------------- security
  m.def("fedrain_train_limit", &security::FedRainTrainLimit);
  m.def("fedrain_debug_limit",
        [](int64_t n_train, int64_t n_infer, int64_t mb,
           const std::string& mode) {
          return security::FedRainDebugLimit(
              n_train, n_infer, mb, security::DebugBoundModeFromName(mode));
        },
        py::arg("n_train"), py::arg("n_infer"), py::arg("mb"),
        py::arg("mode") = "conservative");
  m.def("frog_debug_secure", [](int64_t n, int64_t m_params) {
    return security::FrogSecure(n, m_params).debugging;
  });
  m.def("audit_transcript_file", [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open transcript " + path);
    const LoadedTranscript loaded = ImportTranscriptJsonl(in);
    return VerdictToJson(security::AuditTranscript(loaded)).dump();
  });

  // -------------------------------------------------------------- harness
  m.def("default_config", [] { return harness::DefaultConfigJson().dump(); });
  m.def("normalize_config", [](const std::string& text) {
    return harness::ConfigToJson(ParseConfig(text)).dump();
  });
  m.def("run_experiment", [](const std::string& text) {
    const harness::ExperimentConfig config = ParseConfig(text);
    harness::ExperimentOutput out;
    {
      py::gil_scoped_release release;
      out = harness::RunExperiment(config);
    }
    return py::make_tuple(out.report.ToJson().dump(),
                          out.timing.ToJson().dump());
  });
  m.def("compare", [](const std::string& text,
                      const std::vector<std::string>& frameworks) {
    const harness::ExperimentConfig config = ParseConfig(text);
    std::vector<debug::Framework> fws;
    for (const auto& f : frameworks) fws.push_back(debug::FrameworkFromName(f));
    if (fws.empty()) fws = harness::AllFrameworks();
    harness::Comparison cmp;
    {
      py::gil_scoped_release release;
      cmp = harness::Compare(config, fws);
    }
    return cmp.ToJson().dump();
  });
  m.def("recall_at_k", &harness::RecallAtK, py::arg("deleted"),
        py::arg("corrupted"), py::arg("length") = 0);
  m.def("f1_score", [](const std::vector<int>& predicted, const Vector& truth) {
    harness::F1Result r = harness::F1Score(predicted, truth);
    py::dict d;
    d["f1"] = r.f1;
    d["precision"] = r.precision;
    d["recall"] = r.recall;
    d["defined"] = r.defined;
    return d;
  });
  m.def("inject_corruption",
        [](const Vector& labels, const std::vector<int64_t>& ids, double rate,
           uint64_t seed, const std::string& base) {
          harness::Corruption c = harness::InjectCorruption(
              labels, ids, rate, seed, harness::CorruptionBaseFromName(base));
          return py::make_tuple(c.labels, c.ids);
        },
        py::arg("labels"), py::arg("ids"), py::arg("rate"), py::arg("seed"),
        py::arg("base") = "positives");
}
