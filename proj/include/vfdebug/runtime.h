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

#ifndef VFDEBUG_RUNTIME_H_
#define VFDEBUG_RUNTIME_H_

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vfdebug/paillier.h"
#include "vfdebug/transcript.h"

namespace vfdebug {

// Contents of one message.
struct Payload {
  PayloadType type = PayloadType::kScalar;
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<double> reals;
  std::vector<int64_t> ints;
  std::vector<he::Ciphertext> cts;

  static Payload Flag(bool v);
  static Payload Scalar(double v);
  static Payload Vector(const Eigen::VectorXd& v);
  static Payload Matrix(const Eigen::MatrixXd& m);
  static Payload Ids(std::vector<int64_t> ids);
  static Payload Ciphertexts(std::vector<he::Ciphertext> cts);
  // Row-major ciphertext matrix.
  static Payload CipherMatrix(std::vector<he::Ciphertext> cts, int64_t rows,
                              int64_t cols);

  bool AsFlag() const;
  double AsScalar() const;
  Eigen::VectorXd AsVector() const;
  Eigen::MatrixXd AsMatrix() const;
  const std::vector<int64_t>& AsIds() const;
  const std::vector<he::Ciphertext>& AsCiphertexts() const;

  uint64_t count() const;
};

struct Message {
  Party sender = Party::kA;
  std::string kind;
  std::string phase;
  Payload payload;
};

std::vector<uint8_t> SerializeMessage(const Message& m);
Message DeserializeMessage(const std::vector<uint8_t>& bytes);

enum class ExecutionMode {
  kConcurrent,     // both parties run freely on their own threads
  kDeterministic,  // one party at a time, switching only on a blocking recv
};

const char* ExecutionModeName(ExecutionMode m);
ExecutionMode ExecutionModeFromName(const std::string& name);

struct PartyRunStats {
  double network_seconds = 0.0;  // serialization and channel handling
  double wait_seconds = 0.0;     // blocked waiting for the peer
  double wall_seconds = 0.0;
  uint64_t messages_sent = 0;
  uint64_t bytes_sent = 0;

  double compute_seconds() const {
    return wall_seconds - network_seconds - wait_seconds;
  }
};

struct RunStats {
  std::string phase;
  double wall_seconds = 0.0;
  PartyRunStats party[2];
};

class Runtime;

// A party's handle on the channel pair during one run.
class Endpoint {
 public:
  Party self() const { return self_; }
  const std::string& phase() const { return phase_; }

  void Send(const std::string& kind, Payload payload);
  // Receives the next message; throws ProtocolError if its kind differs.
  Payload Recv(const std::string& kind);

 private:
  friend class Runtime;
  Endpoint(Runtime* rt, Party self, std::string phase)
      : rt_(rt), self_(self), phase_(std::move(phase)) {}

  Runtime* rt_;
  Party self_;
  std::string phase_;
  PartyRunStats stats_;
};

using PartyFn = std::function<void(Endpoint&)>;

// Runs the two party functions on separate threads connected by two FIFO
// byte channels. Every message is recorded in the shared transcript.
class Runtime {
 public:
  Runtime(ExecutionMode mode, Transcript* transcript);
  ~Runtime();

  ExecutionMode mode() const { return mode_; }

  // Rethrows the first party error; a party whose peer failed sees a
  // ProtocolError, which is not reported over the root cause.
  RunStats Run(const std::string& phase, const PartyFn& a, const PartyFn& b);

  const std::vector<RunStats>& history() const { return history_; }

 private:
  friend class Endpoint;
  struct State;

  void Push(Party from, std::vector<uint8_t> bytes);
  std::vector<uint8_t> Pop(Party self, PartyRunStats& stats);

  ExecutionMode mode_;
  Transcript* transcript_;
  std::unique_ptr<State> state_;
  std::vector<RunStats> history_;
};

}  // namespace vfdebug

#endif  // VFDEBUG_RUNTIME_H_
