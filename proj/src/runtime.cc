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

#include "vfdebug/runtime.h"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

#include "vfdebug/digest.h"
#include "vfdebug/error.h"
#include "vfdebug/wire.h"

namespace vfdebug {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

// Raised in a party whose peer already failed; never the root cause.
class PeerAbortError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

void RequireType(const Payload& p, PayloadType t) {
  if (p.type != t) {
    throw ProtocolError(std::string("expected ") + PayloadTypeName(t) +
                        " payload, got " + PayloadTypeName(p.type));
  }
}

}  // namespace

// ------------------------------------------------------------- Payload

Payload Payload::Flag(bool v) {
  Payload p;
  p.type = PayloadType::kFlag;
  p.ints = {v ? 1 : 0};
  return p;
}

Payload Payload::Scalar(double v) {
  Payload p;
  p.type = PayloadType::kScalar;
  p.reals = {v};
  return p;
}

Payload Payload::Vector(const Eigen::VectorXd& v) {
  Payload p;
  p.type = PayloadType::kVector;
  p.rows = v.size();
  p.cols = 1;
  p.reals.assign(v.data(), v.data() + v.size());
  return p;
}

Payload Payload::Matrix(const Eigen::MatrixXd& m) {
  Payload p;
  p.type = PayloadType::kMatrix;
  p.rows = m.rows();
  p.cols = m.cols();
  p.reals.reserve(static_cast<size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) p.reals.push_back(m(i, j));
  return p;
}

Payload Payload::Ids(std::vector<int64_t> ids) {
  Payload p;
  p.type = PayloadType::kIds;
  p.ints = std::move(ids);
  return p;
}

Payload Payload::Ciphertexts(std::vector<he::Ciphertext> cts) {
  Payload p;
  p.type = PayloadType::kCiphertexts;
  p.rows = static_cast<int64_t>(cts.size());
  p.cols = 1;
  p.cts = std::move(cts);
  return p;
}

Payload Payload::CipherMatrix(std::vector<he::Ciphertext> cts, int64_t rows,
                              int64_t cols) {
  if (static_cast<int64_t>(cts.size()) != rows * cols) {
    throw InvalidArgumentError("ciphertext matrix shape mismatch");
  }
  Payload p = Ciphertexts(std::move(cts));
  p.rows = rows;
  p.cols = cols;
  return p;
}

bool Payload::AsFlag() const {
  RequireType(*this, PayloadType::kFlag);
  return ints.at(0) != 0;
}

double Payload::AsScalar() const {
  RequireType(*this, PayloadType::kScalar);
  return reals.at(0);
}

Eigen::VectorXd Payload::AsVector() const {
  RequireType(*this, PayloadType::kVector);
  return Eigen::Map<const Eigen::VectorXd>(reals.data(),
                                           static_cast<Eigen::Index>(reals.size()));
}

Eigen::MatrixXd Payload::AsMatrix() const {
  RequireType(*this, PayloadType::kMatrix);
  Eigen::MatrixXd m(rows, cols);
  size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = reals[k++];
  return m;
}

const std::vector<int64_t>& Payload::AsIds() const {
  RequireType(*this, PayloadType::kIds);
  return ints;
}

const std::vector<he::Ciphertext>& Payload::AsCiphertexts() const {
  RequireType(*this, PayloadType::kCiphertexts);
  return cts;
}

uint64_t Payload::count() const {
  switch (type) {
    case PayloadType::kFlag: return 1;
    case PayloadType::kIds: return ints.size();
    case PayloadType::kCiphertexts: return cts.size();
    default: return reals.size();
  }
}

std::vector<uint8_t> SerializeMessage(const Message& m) {
  ByteWriter w;
  w.PutU8(static_cast<uint8_t>(m.sender));
  w.PutString(m.kind);
  w.PutString(m.phase);
  const Payload& p = m.payload;
  w.PutU8(static_cast<uint8_t>(p.type));
  w.PutI64(p.rows);
  w.PutI64(p.cols);
  switch (p.type) {
    case PayloadType::kFlag:
    case PayloadType::kIds:
      w.PutU64(p.ints.size());
      for (int64_t v : p.ints) w.PutI64(v);
      break;
    case PayloadType::kCiphertexts:
      w.PutU64(p.cts.size());
      for (const auto& c : p.cts) he::WriteCiphertext(c, w);
      break;
    default:
      w.PutU64(p.reals.size());
      for (double v : p.reals) w.PutF64(v);
      break;
  }
  return w.Release();
}

Message DeserializeMessage(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes);
  Message m;
  uint8_t sender = r.GetU8();
  if (sender > 1) throw ProtocolError("bad sender byte");
  m.sender = static_cast<Party>(sender);
  m.kind = r.GetString();
  m.phase = r.GetString();
  uint8_t type = r.GetU8();
  if (type > static_cast<uint8_t>(PayloadType::kCiphertexts)) {
    throw ProtocolError("bad payload type byte");
  }
  Payload& p = m.payload;
  p.type = static_cast<PayloadType>(type);
  p.rows = r.GetI64();
  p.cols = r.GetI64();
  uint64_t n = r.GetU64();
  if (n > r.remaining()) throw ProtocolError("payload count exceeds message");
  switch (p.type) {
    case PayloadType::kFlag:
    case PayloadType::kIds:
      p.ints.reserve(n);
      for (uint64_t i = 0; i < n; ++i) p.ints.push_back(r.GetI64());
      break;
    case PayloadType::kCiphertexts:
      p.cts.reserve(n);
      for (uint64_t i = 0; i < n; ++i) p.cts.push_back(he::ReadCiphertext(r));
      break;
    default:
      p.reals.reserve(n);
      for (uint64_t i = 0; i < n; ++i) p.reals.push_back(r.GetF64());
      break;
  }
  if (!r.AtEnd()) throw ProtocolError("trailing bytes in message");
  return m;
}

const char* ExecutionModeName(ExecutionMode m) {
  return m == ExecutionMode::kConcurrent ? "concurrent" : "deterministic";
}

ExecutionMode ExecutionModeFromName(const std::string& name) {
  if (name == "concurrent") return ExecutionMode::kConcurrent;
  if (name == "deterministic") return ExecutionMode::kDeterministic;
  throw InvalidArgumentError("unknown execution mode '" + name + "'");
}

// ------------------------------------------------------------- Runtime

struct Runtime::State {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::vector<uint8_t>> inbox[2];
  bool finished[2] = {false, false};
  bool waiting[2] = {false, false};
  bool aborted = false;
  Party active = Party::kA;

  void Reset() {
    for (int p = 0; p < 2; ++p) {
      inbox[p].clear();
      finished[p] = false;
      waiting[p] = false;
    }
    aborted = false;
    active = Party::kA;
  }
};

Runtime::Runtime(ExecutionMode mode, Transcript* transcript)
    : mode_(mode), transcript_(transcript), state_(std::make_unique<State>()) {
  if (!transcript_) throw InvalidArgumentError("runtime needs a transcript");
}

Runtime::~Runtime() = default;

void Runtime::Push(Party from, std::vector<uint8_t> bytes) {
  std::lock_guard<std::mutex> lock(state_->mu);
  if (state_->aborted) throw PeerAbortError("peer aborted the run");
  state_->inbox[static_cast<int>(Other(from))].push_back(std::move(bytes));
  state_->cv.notify_all();
}

std::vector<uint8_t> Runtime::Pop(Party self, PartyRunStats& stats) {
  State& s = *state_;
  int me = static_cast<int>(self);
  int other = 1 - me;
  std::unique_lock<std::mutex> lock(s.mu);
  s.waiting[me] = true;
  auto started = Clock::now();
  for (;;) {
    if (s.aborted) {
      s.waiting[me] = false;
      throw PeerAbortError("peer aborted the run");
    }
    bool mine = mode_ == ExecutionMode::kConcurrent || s.active == self;
    if (!s.inbox[me].empty() && mine) {
      std::vector<uint8_t> bytes = std::move(s.inbox[me].front());
      s.inbox[me].pop_front();
      s.waiting[me] = false;
      stats.wait_seconds += Seconds(started);
      return bytes;
    }
    if (s.inbox[me].empty()) {
      bool stuck = s.finished[other] ||
                   (s.waiting[other] && s.inbox[other].empty());
      if (stuck) {
        s.aborted = true;
        s.waiting[me] = false;
        s.cv.notify_all();
        throw ProtocolError(std::string("party ") + PartyName(self) +
                            " awaits a message that will never arrive");
      }
      if (mode_ == ExecutionMode::kDeterministic && s.active == self) {
        s.active = Other(self);
        s.cv.notify_all();
      }
    }
    s.cv.wait(lock);
  }
}

void Endpoint::Send(const std::string& kind, Payload payload) {
  auto started = Clock::now();
  Message m{self_, kind, phase_, std::move(payload)};
  std::vector<uint8_t> bytes = SerializeMessage(m);
  TranscriptRecord rec;
  rec.sender = self_;
  rec.kind = kind;
  rec.phase = phase_;
  rec.payload = m.payload.type;
  rec.count = m.payload.count();
  rec.byte_size = bytes.size();
  rec.digest = Sha256Hex(bytes);
  rt_->transcript_->Append(std::move(rec));
  stats_.bytes_sent += bytes.size();
  ++stats_.messages_sent;
  rt_->Push(self_, std::move(bytes));
  stats_.network_seconds += Seconds(started);
}

Payload Endpoint::Recv(const std::string& kind) {
  std::vector<uint8_t> bytes = rt_->Pop(self_, stats_);
  auto started = Clock::now();
  Message m = DeserializeMessage(bytes);
  stats_.network_seconds += Seconds(started);
  if (m.sender != Other(self_)) throw ProtocolError("message from wrong party");
  if (m.kind != kind) {
    throw ProtocolError(std::string("party ") + PartyName(self_) +
                        " expected '" + kind + "' but received '" + m.kind +
                        "'");
  }
  return std::move(m.payload);
}

RunStats Runtime::Run(const std::string& phase, const PartyFn& a,
                      const PartyFn& b) {
  {
    std::lock_guard<std::mutex> lock(state_->mu);
    state_->Reset();
  }
  Endpoint endpoints[2] = {Endpoint(this, Party::kA, phase),
                           Endpoint(this, Party::kB, phase)};
  std::exception_ptr errors[2];
  bool peer_abort[2] = {false, false};
  auto started = Clock::now();

  auto body = [&](int me, const PartyFn& fn) {
    Party self = static_cast<Party>(me);
    auto party_started = Clock::now();
    bool skip = false;
    {
      std::unique_lock<std::mutex> lock(state_->mu);
      state_->cv.wait(lock, [&] {
        return mode_ == ExecutionMode::kConcurrent ||
               state_->active == self || state_->aborted;
      });
      skip = state_->aborted;
    }
    try {
      if (skip) throw PeerAbortError("peer aborted the run");
      fn(endpoints[me]);
    } catch (const PeerAbortError&) {
      errors[me] = std::current_exception();
      peer_abort[me] = true;
    } catch (...) {
      errors[me] = std::current_exception();
    }
    endpoints[me].stats_.wall_seconds = Seconds(party_started);
    std::lock_guard<std::mutex> lock(state_->mu);
    if (errors[me] && !peer_abort[me]) state_->aborted = true;
    state_->finished[me] = true;
    state_->waiting[me] = false;
    if (mode_ == ExecutionMode::kDeterministic) state_->active = Other(self);
    state_->cv.notify_all();
  };

  std::thread ta(body, 0, std::cref(a));
  std::thread tb(body, 1, std::cref(b));
  ta.join();
  tb.join();

  RunStats stats;
  stats.phase = phase;
  stats.wall_seconds = Seconds(started);
  stats.party[0] = endpoints[0].stats_;
  stats.party[1] = endpoints[1].stats_;
  history_.push_back(stats);

  for (int p = 0; p < 2; ++p) {
    if (errors[p] && !peer_abort[p]) std::rethrow_exception(errors[p]);
  }
  for (int p = 0; p < 2; ++p) {
    if (errors[p]) std::rethrow_exception(errors[p]);
  }
  {
    std::lock_guard<std::mutex> lock(state_->mu);
    for (int p = 0; p < 2; ++p) {
      if (!state_->inbox[p].empty()) {
        throw ProtocolError(std::string("party ") +
                            PartyName(static_cast<Party>(p)) +
                            " left messages unread");
      }
    }
  }
  return stats;
}

}  // namespace vfdebug
