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


#ifndef VFDEBUG_SECURITY_H_
#define VFDEBUG_SECURITY_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vfdebug/kinds.h"
#include "vfdebug/transcript.h"

namespace vfdebug::security {

// nullopt means unbounded.
using Limit = std::optional<int64_t>;

std::string LimitText(const Limit& l);

// Largest r with r < n*mb/(n-mb); unbounded when n <= mb.
Limit FedRainTrainLimit(int64_t n, int64_t mb);

enum class DebugBoundMode { kConservative, kLiteral };

const char* DebugBoundModeName(DebugBoundMode m);
DebugBoundMode DebugBoundModeFromName(const std::string& name);

// Per-source bounds over the training and inference rows, combined by min
// (conservative) or max (literal). Throws SecurityError when mb <= 1.
Limit FedRainDebugLimit(int64_t n_train, int64_t n_infer, int64_t mb,
                        DebugBoundMode mode = DebugBoundMode::kConservative);

struct FrogSecurity {
  bool training = true;
  bool debugging = false;
};

// m counts every parameter coordinate, masks and bias included.
FrogSecurity FrogSecure(int64_t n, int64_t m);

// Per-session tracker. Authorize* calls happen in the driver before any
// message of the guarded phase is sent.
class SecurityBudget {
 public:
  explicit SecurityBudget(bool unsafe_override = false,
                          DebugBoundMode mode = DebugBoundMode::kConservative);

  // One FedRain training run of `rounds` rounds over n rows.
  void AuthorizeFedRainTraining(int64_t rounds, int64_t n, int64_t mb);
  // One more FedRain debugging iteration (cumulative).
  void AuthorizeFedRainDebug(int64_t n_train, int64_t n_infer, int64_t mb);
  // Frog debugging over n rows with m parameter coordinates.
  void AuthorizeFrogDebug(int64_t n, int64_t m);
  // Frog training is always permitted; only counted.
  void RecordFrogTraining(int64_t rounds);

  bool unsafe_override() const { return unsafe_override_; }
  bool override_used() const { return override_used_; }
  DebugBoundMode mode() const { return mode_; }
  const Limit& train_limit() const { return train_limit_; }
  const Limit& debug_limit() const { return debug_limit_; }
  int64_t train_rounds_total() const { return train_rounds_total_; }
  int64_t train_runs() const { return train_runs_; }
  int64_t last_train_rounds() const { return last_train_rounds_; }
  int64_t debug_consumed() const { return debug_consumed_; }
  const std::vector<std::string>& rationale() const { return rationale_; }

 private:
  void Note(const std::string& text);

  bool unsafe_override_;
  bool override_used_ = false;
  DebugBoundMode mode_;
  Limit train_limit_;
  Limit debug_limit_;
  int64_t train_rounds_total_ = 0;
  int64_t train_runs_ = 0;
  int64_t last_train_rounds_ = 0;
  int64_t debug_consumed_ = 0;
  std::vector<std::string> rationale_;
};

struct KindTally {
  Party sender = Party::kA;
  std::string kind;
  PayloadType type = PayloadType::kScalar;
  uint64_t messages = 0;
  uint64_t values = 0;
};

// Equation-counting view of what one party learns about the other.
struct LeakageTally {
  std::string source;
  Party learner = Party::kA;
  int64_t equations = 0;
  int64_t unknowns = 0;
  bool underdetermined() const { return equations < unknowns; }
};

struct AuditVerdict {
  Protocol protocol = Protocol::kFedRain;
  bool pass = true;
  std::vector<std::string> violations;
  std::vector<KindTally> plaintext;   // per (sender, kind)
  std::vector<KindTally> ciphertext;  // per (sender, kind)
  uint64_t ciphertext_messages = 0;
  std::vector<LeakageTally> tallies;
};

// Checks every record against the protocol's script. Throws
// AuditIncompleteError when `complete` is false.
AuditVerdict AuditTranscript(const std::vector<TranscriptRecord>& records,
                             Protocol protocol, bool complete = true);
AuditVerdict AuditTranscript(const LoadedTranscript& loaded);
AuditVerdict AuditTranscript(const Transcript& transcript, Protocol protocol);

}  // namespace vfdebug::security

#endif  // VFDEBUG_SECURITY_H_
