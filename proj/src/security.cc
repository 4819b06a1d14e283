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


#include "vfdebug/security.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "vfdebug/error.h"

namespace vfdebug::security {

std::string LimitText(const Limit& l) {
  return l ? std::to_string(*l) : std::string("unbounded");
}

Limit FedRainTrainLimit(int64_t n, int64_t mb) {
  if (n < 0 || mb < 0) throw InvalidArgumentError("negative dimension");
  if (n <= mb) return std::nullopt;
  // Strict bound: r < n*mb/(n-mb). Integer arithmetic, no rounding.
  const __int128 num = static_cast<__int128>(n) * mb;
  const __int128 den = n - mb;
  __int128 q = num / den;
  if (q * den == num) q -= 1;
  return static_cast<int64_t>(q);
}

const char* DebugBoundModeName(DebugBoundMode m) {
  return m == DebugBoundMode::kConservative ? "conservative" : "literal";
}

DebugBoundMode DebugBoundModeFromName(const std::string& name) {
  if (name == "conservative") return DebugBoundMode::kConservative;
  if (name == "literal") return DebugBoundMode::kLiteral;
  throw InvalidArgumentError("unknown debug bound mode '" + name + "'");
}

Limit FedRainDebugLimit(int64_t n_train, int64_t n_infer, int64_t mb,
                        DebugBoundMode mode) {
  if (mb <= 1) {
    throw SecurityError(
        "FedRain debugging is insecure with mB <= 1 (got mB = " +
        std::to_string(mb) + ")");
  }
  const Limit a = FedRainTrainLimit(n_train, mb);
  const Limit b = FedRainTrainLimit(n_infer, mb);
  if (mode == DebugBoundMode::kConservative) {
    if (!a) return b;
    if (!b) return a;
    return std::min(*a, *b);
  }
  if (!a || !b) return std::nullopt;
  return std::max(*a, *b);
}

FrogSecurity FrogSecure(int64_t n, int64_t m) {
  FrogSecurity s;
  s.training = true;
  s.debugging = n > m;
  return s;
}

SecurityBudget::SecurityBudget(bool unsafe_override, DebugBoundMode mode)
    : unsafe_override_(unsafe_override), mode_(mode) {}

void SecurityBudget::Note(const std::string& text) {
  if (std::find(rationale_.begin(), rationale_.end(), text) ==
      rationale_.end()) {
    rationale_.push_back(text);
  }
}

void SecurityBudget::AuthorizeFedRainTraining(int64_t rounds, int64_t n,
                                              int64_t mb) {
  train_limit_ = FedRainTrainLimit(n, mb);
  Note("FedRain training rounds r must satisfy r < n*mB/(n-mB) (n = " +
       std::to_string(n) + ", mB = " + std::to_string(mb) +
       ", limit = " + LimitText(train_limit_) + ")");
  if (train_limit_ && rounds > *train_limit_) {
    if (!unsafe_override_) {
      throw SecurityError(
          "FedRain training round " + std::to_string(*train_limit_ + 1) +
          " would exceed the training bound n*mB/(n-mB): limit " +
          std::to_string(*train_limit_) + " for n = " + std::to_string(n) +
          ", mB = " + std::to_string(mb));
    }
    override_used_ = true;
  }
  last_train_rounds_ = rounds;
  train_rounds_total_ += rounds;
  ++train_runs_;
}

void SecurityBudget::AuthorizeFedRainDebug(int64_t n_train, int64_t n_infer,
                                           int64_t mb) {
  debug_limit_ = FedRainDebugLimit(n_train, n_infer, mb, mode_);
  Note(std::string("FedRain debugging iterations bounded by the ") +
       DebugBoundModeName(mode_) +
       " combination of n*mB/(n-mB) over training and inference rows "
       "(limit = " + LimitText(debug_limit_) + ")");
  if (debug_limit_ && debug_consumed_ + 1 > *debug_limit_) {
    if (!unsafe_override_) {
      throw SecurityError("FedRain debugging iteration " +
                          std::to_string(debug_consumed_ + 1) +
                          " would exceed the debugging bound " +
                          std::to_string(*debug_limit_));
    }
    override_used_ = true;
  }
  ++debug_consumed_;
}

void SecurityBudget::AuthorizeFrogDebug(int64_t n, int64_t m) {
  const FrogSecurity s = FrogSecure(n, m);
  Note("Frog debugging requires n > m (n = " + std::to_string(n) +
       ", m = " + std::to_string(m) + ")");
  debug_limit_ = std::nullopt;
  if (!s.debugging) {
    if (!unsafe_override_) {
      throw SecurityError("Frog debugging refused: n = " + std::to_string(n) +
                          " rows do not exceed m = " + std::to_string(m) +
                          " parameters");
    }
    override_used_ = true;
  }
  ++debug_consumed_;
}

void SecurityBudget::RecordFrogTraining(int64_t rounds) {
  Note("Frog training is secure for any number of rounds");
  train_limit_ = std::nullopt;
  last_train_rounds_ = rounds;
  train_rounds_total_ += rounds;
  ++train_runs_;
}

namespace {

using Key = std::pair<Party, std::string>;

struct KindStats {
  PayloadType type = PayloadType::kScalar;
  uint64_t messages = 0;
  uint64_t values = 0;
  uint64_t max_values = 0;
  uint64_t first_values = 0;
};

const KindStats* Find(const std::map<Key, KindStats>& stats, Party p,
                      const char* kind) {
  auto it = stats.find({p, kind});
  return it == stats.end() ? nullptr : &it->second;
}

// n rows per message, `params` fresh unknowns per message plus n*features
// fixed unknowns.
LeakageTally RowTally(const std::string& source, Party learner,
                      const KindStats& s, int64_t features,
                      int64_t fresh_per_message) {
  LeakageTally t;
  t.source = source;
  t.learner = learner;
  t.equations = static_cast<int64_t>(s.values);
  t.unknowns = static_cast<int64_t>(s.max_values) * features +
               static_cast<int64_t>(s.messages) * fresh_per_message;
  return t;
}

void FedRainTallies(const std::map<Key, KindStats>& st, AuditVerdict& v) {
  // B's feature count is the length of B's masked gradient.
  int64_t mb = -1;
  if (auto* s = Find(st, Party::kB, kind::kFrTrainEncMaskedGrad)) {
    mb = static_cast<int64_t>(s->first_values);
  } else if (auto* s2 = Find(st, Party::kB, kind::kFrQueryEncMaskedGrad)) {
    mb = static_cast<int64_t>(s2->first_values);
  }
  if (mb < 0) return;
  if (auto* s = Find(st, Party::kB, kind::kFrTrainScore)) {
    v.tallies.push_back(RowTally("training partial scores", Party::kA, *s,
                                 mb, mb));
  }
  KindStats infer;
  for (const char* k : {kind::kFrInferScore, kind::kFrQueryScore}) {
    if (auto* s = Find(st, Party::kB, k)) {
      infer.messages += s->messages;
      infer.values += s->values;
      infer.max_values = std::max(infer.max_values, s->max_values);
    }
  }
  if (infer.messages > 0) {
    v.tallies.push_back(
        RowTally("inference partial scores", Party::kA, infer, mb, mb));
  }
  if (auto* s = Find(st, Party::kB, kind::kFrInfEncPartial)) {
    v.tallies.push_back(
        RowTally("influence partial scores", Party::kA, *s, mb, mb));
  }
}

void FrogTallies(const std::map<Key, KindStats>& st, AuditVerdict& v) {
  // Each score vector reveals n values and carries n+1 fresh unknowns.
  if (auto* s = Find(st, Party::kB, kind::kFgTrainScoreB)) {
    v.tallies.push_back(
        RowTally("training scores from B", Party::kA, *s, 0,
                 static_cast<int64_t>(s->max_values) + 1));
  }
  if (auto* s = Find(st, Party::kA, kind::kFgTrainScoreA)) {
    v.tallies.push_back(
        RowTally("training scores from A", Party::kB, *s, 0,
                 static_cast<int64_t>(s->max_values) + 1));
  }
  const KindStats* haa = Find(st, Party::kA, kind::kFgQhinvHaa);
  if (haa == nullptr) return;
  // A's parameter count is the side of its Hessian block.
  const int64_t ma = static_cast<int64_t>(
      std::llround(std::sqrt(static_cast<double>(haa->first_values))));
  int64_t n = 0;
  if (auto* s = Find(st, Party::kB, kind::kFgQhinvEncMaskedGrads)) {
    const KindStats* hab = Find(st, Party::kA, kind::kFgQhinvEncHab);
    if (hab != nullptr && ma > 0) {
      const int64_t mb = static_cast<int64_t>(hab->first_values) / ma;
      if (mb > 0) n = static_cast<int64_t>(s->first_values) / mb;
    }
  }
  LeakageTally t;
  t.source = "debugging messages from A";
  t.learner = Party::kB;
  for (const char* k : {kind::kFgQhinvHaa, kind::kFgQhinvSumGradA,
                        kind::kFgQhinvEncHab, kind::kFgInfScoreA}) {
    if (auto* s = Find(st, Party::kA, k)) {
      t.equations += static_cast<int64_t>(s->values);
    }
  }
  const KindStats* runs = Find(st, Party::kA, kind::kFgQhinvHaa);
  t.unknowns = (ma * (n + 1) + n) * static_cast<int64_t>(runs->messages);
  v.tallies.push_back(t);
}

}  // namespace

AuditVerdict AuditTranscript(const std::vector<TranscriptRecord>& records,
                             Protocol protocol, bool complete) {
  if (!complete) {
    throw AuditIncompleteError(
        "transcript has no end trailer; refusing to audit a truncated log");
  }
  AuditVerdict v;
  v.protocol = protocol;
  std::map<std::string, const KindRule*> rules;
  for (const KindRule& r : ProtocolScript(protocol)) rules[r.kind] = &r;

  std::map<Key, KindStats> stats;
  for (const TranscriptRecord& r : records) {
    auto it = rules.find(r.kind);
    if (it == rules.end()) {
      v.violations.push_back("off-script message kind '" + r.kind +
                             "' from " + PartyName(r.sender));
    } else if (it->second->sender != r.sender) {
      v.violations.push_back("message kind '" + r.kind + "' sent by " +
                             PartyName(r.sender) + ", script expects " +
                             PartyName(it->second->sender));
    } else if (it->second->type != r.payload) {
      v.violations.push_back("message kind '" + r.kind + "' carries " +
                             PayloadTypeName(r.payload) + ", script expects " +
                             PayloadTypeName(it->second->type));
    }
    KindStats& s = stats[{r.sender, r.kind}];
    if (s.messages == 0) {
      s.type = r.payload;
      s.first_values = r.count;
    }
    ++s.messages;
    s.values += r.count;
    s.max_values = std::max<uint64_t>(s.max_values, r.count);
    if (!IsPlaintext(r.payload)) ++v.ciphertext_messages;
  }
  for (const auto& [key, s] : stats) {
    KindTally t{key.first, key.second, s.type, s.messages, s.values};
    (IsPlaintext(s.type) ? v.plaintext : v.ciphertext).push_back(t);
  }
  if (protocol == Protocol::kFedRain) {
    FedRainTallies(stats, v);
  } else {
    FrogTallies(stats, v);
  }
  v.pass = v.violations.empty();
  return v;
}

AuditVerdict AuditTranscript(const LoadedTranscript& loaded) {
  return AuditTranscript(loaded.records, ProtocolFromName(loaded.protocol),
                         loaded.complete);
}

AuditVerdict AuditTranscript(const Transcript& transcript, Protocol protocol) {
  return AuditTranscript(transcript.records(), protocol, true);
}

}  // namespace vfdebug::security
