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


#ifndef VFDEBUG_PARTY_H_
#define VFDEBUG_PARTY_H_

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vfdebug/kinds.h"
#include "vfdebug/model.h"
#include "vfdebug/paillier.h"
#include "vfdebug/query.h"
#include "vfdebug/runtime.h"
#include "vfdebug/security.h"
#include "vfdebug/transcript.h"

namespace vfdebug::protocol {

using model::Matrix;
using model::Vector;

struct NoiseOptions {
  bool zero_noise = false;       // test hook: every ε is 0
  bool unit_randomizer = false;  // test hook: r1 = 1
  double noise_bound = 65536.0;  // ε uniform in [-bound, bound]
  double randomizer_min = 0.5;
  double randomizer_max = 2.0;
};

struct SessionConfig {
  int key_bits = 512;
  he::KeyMode key_mode = he::KeyMode::kTest;
  uint64_t seed = 1;
  NoiseOptions noise;
  ExecutionMode mode = ExecutionMode::kDeterministic;
  bool unsafe_override = false;
  security::DebugBoundMode debug_bound =
      security::DebugBoundMode::kConservative;
  // Preloaded key pairs; generated from the seed when absent.
  std::optional<he::KeyPair> keys_a;
  std::optional<he::KeyPair> keys_b;
};

// Key material, counters and randomness owned by one party.
class PartySession {
 public:
  PartySession(Party id, he::KeyPair keys, const he::PublicKey& peer_key,
               uint64_t seed, NoiseOptions noise);

  Party id() const { return id_; }
  const he::PublicKey& public_key() const { return keys_.pub; }
  // Encrypts under this party's own key.
  he::Encryptor& own() { return own_; }
  // Homomorphic work and encryption under the peer's key.
  he::Encryptor& peer() { return peer_; }
  he::Decryptor& decryptor() { return dec_; }
  const he::EncOpCounter& counter() const { return *counter_; }
  const NoiseOptions& noise() const { return noise_; }

  // Uniform in [-bound, bound] on the codec grid (integer multiples of
  // 2^-fraction_bits). `grid` receives the integer multiple.
  double Noise(int64_t* grid = nullptr);
  Vector NoiseVector(Eigen::Index n, std::vector<int64_t>* grid = nullptr);
  // Strictly positive scalar randomizer.
  double Randomizer();

 private:
  Party id_;
  he::KeyPair keys_;
  std::unique_ptr<he::EncOpCounter> counter_;
  he::Encryptor own_;
  he::Encryptor peer_;
  he::Decryptor dec_;
  NoiseOptions noise_;
  std::mt19937_64 rng_;
};

struct LocalRows {
  std::vector<int64_t> ids;
  Matrix x;
  Eigen::Index rows() const { return x.rows(); }
};

// Everything one party holds. Protocol code for a party touches only its
// own PartyState.
struct PartyState {
  PartyState(Party id, PartySession session)
      : id(id), session(std::move(session)) {}

  Party id;
  PartySession session;
  LocalRows train;
  LocalRows infer;
  LocalRows holdout;
  Vector y;                   // training labels, party A only
  query::DataTable table;     // inference attributes, party A only

  Vector theta;
  double mask = 0.5;          // c1 at A, c2 at B (Frog)
  uint64_t version = 0;       // bumped on every parameter or row change

  // Frog: residual c1 f1 + c2 f2 - y from the last training exchange.
  Vector residual;
  uint64_t residual_version = UINT64_MAX;

  // Debugging scratch. FedRain: own part of Q' and z. Frog: A keeps r1;
  // B keeps the full randomized Q' and z.
  Vector query_grad;
  uint64_t query_grad_version = UINT64_MAX;
  Vector z;
  uint64_t z_version = UINT64_MAX;
  double randomizer = 1.0;

  void Touch() { ++version; }
};

enum class InferenceSet { kQuery, kHoldout };

// Input rows before they are split between the parties.
struct FederationInput {
  model::PartitionedDataset train;
  std::vector<int64_t> infer_ids;
  Matrix infer_xa;
  Matrix infer_xb;
  query::DataTable infer_table;
  std::vector<int64_t> holdout_ids;
  Matrix holdout_xa;
  Matrix holdout_xb;
};

struct PhaseRecord {
  std::string name;
  RunStats stats;
  he::EncOpCounter ops;  // both parties
  uint64_t messages = 0;
  uint64_t bytes = 0;
};

// Result of a complaint evaluation at party A.
struct QueryStatus {
  bool active = false;   // complaint unsatisfied, gradient computed
  int direction = 0;
  double value = 0.0;    // discrete query result
  double relaxed_value = 0.0;
};

struct FederatedCgResult {
  linalg::SeparatedVector z;
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
  std::vector<Vector> iterates;  // joined, when recorded
};

// Common driver for both protocols: owns the two party states, the runtime
// and the transcript.
class Federation {
 public:
  Federation(Protocol protocol, const FederationInput& input,
             const SessionConfig& config);
  virtual ~Federation();
  Federation(const Federation&) = delete;
  Federation& operator=(const Federation&) = delete;

  Protocol protocol() const { return protocol_; }
  const SessionConfig& config() const { return config_; }
  PartyState& party(Party p) { return *parties_[static_cast<int>(p)]; }
  const PartyState& party(Party p) const {
    return *parties_[static_cast<int>(p)];
  }
  Transcript& transcript() { return transcript_; }
  const Transcript& transcript() const { return transcript_; }
  security::SecurityBudget& budget() { return budget_; }
  const security::SecurityBudget& budget() const { return budget_; }
  const std::vector<PhaseRecord>& phases() const { return phases_; }

  he::EncOpCounter Ops(Party p) const;
  he::EncOpCounter TotalOps() const;
  int64_t n_train() const;
  int ma() const;  // A's feature columns (bias included)
  int mb() const;

  // A announces the ids; both parties drop those rows.
  void DeleteTrainingIds(const std::vector<int64_t>& ids);

  // Each party locally returns to the initial parameters (zero weights,
  // masks at 0.5). No messages are exchanged.
  void ResetModel();

  virtual query::PredictionTable Infer(
      InferenceSet which = InferenceSet::kQuery) = 0;

  // Joined views of both parties' private state, for oracles and reports.
  model::ModelState JoinedModel() const;
  model::PartitionedDataset JoinedTraining() const;

 protected:
  RunStats RunPhase(const std::string& phase, const PartyFn& a,
                    const PartyFn& b);
  static const LocalRows& Rows(const PartyState& s, InferenceSet which);

  Protocol protocol_;
  SessionConfig config_;
  Transcript transcript_;
  Runtime runtime_;
  security::SecurityBudget budget_;
  std::unique_ptr<PartyState> parties_[2];
  std::vector<PhaseRecord> phases_;
};

// Per-row xᵢ·v with a fixed summation order, so identical rows score
// identically.
Vector RowDots(const Matrix& x, const Vector& v);

}  // namespace vfdebug::protocol

#endif  // VFDEBUG_PARTY_H_
