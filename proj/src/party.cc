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


#include "vfdebug/party.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "vfdebug/error.h"

namespace vfdebug::protocol {

namespace {

std::optional<uint64_t> EncSeed(const he::KeyPair& keys, uint64_t seed) {
  if (keys.pub.mode == he::KeyMode::kSecure) return std::nullopt;
  return seed;
}

uint64_t Mix(uint64_t seed, uint64_t salt) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(salt)};
  uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<uint64_t>(out[0]) << 32) | out[1];
}

void DropRows(LocalRows& rows, const std::unordered_set<int64_t>& drop,
              Vector* labels) {
  std::vector<int> keep;
  for (size_t i = 0; i < rows.ids.size(); ++i) {
    if (!drop.count(rows.ids[i])) keep.push_back(static_cast<int>(i));
  }
  LocalRows out;
  out.x.resize(static_cast<Eigen::Index>(keep.size()), rows.x.cols());
  Vector y(static_cast<Eigen::Index>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) {
    out.ids.push_back(rows.ids[keep[k]]);
    out.x.row(static_cast<Eigen::Index>(k)) = rows.x.row(keep[k]);
    if (labels) y[static_cast<Eigen::Index>(k)] = (*labels)[keep[k]];
  }
  rows = std::move(out);
  if (labels) *labels = std::move(y);
}

}  // namespace

PartySession::PartySession(Party id, he::KeyPair keys,
                           const he::PublicKey& peer_key, uint64_t seed,
                           NoiseOptions noise)
    : id_(id),
      keys_(std::move(keys)),
      counter_(std::make_unique<he::EncOpCounter>()),
      own_(keys_.pub, counter_.get(), EncSeed(keys_, Mix(seed, 1))),
      peer_(peer_key, counter_.get(), EncSeed(keys_, Mix(seed, 2))),
      dec_(keys_, counter_.get()),
      noise_(noise) {
  if (keys_.pub.mode == he::KeyMode::kSecure) {
    std::random_device rd;
    rng_.seed((static_cast<uint64_t>(rd()) << 32) ^ rd());
  } else {
    rng_.seed(Mix(seed, 3));
  }
}

double PartySession::Noise(int64_t* grid) {
  int64_t k = 0;
  if (!noise_.zero_noise) {
    const int bits = own_.codec().fraction_bits();
    const auto bound =
        static_cast<int64_t>(std::ldexp(noise_.noise_bound, bits));
    k = std::uniform_int_distribution<int64_t>(-bound, bound)(rng_);
  }
  // Draws above 2^53 round when converted; record the grid point that the
  // returned double actually encodes so exact corrections stay exact.
  const double value =
      std::ldexp(static_cast<double>(k), -own_.codec().fraction_bits());
  if (grid) {
    *grid = static_cast<int64_t>(std::ldexp(value, own_.codec().fraction_bits()));
  }
  return value;
}

Vector PartySession::NoiseVector(Eigen::Index n, std::vector<int64_t>* grid) {
  Vector v(n);
  if (grid) grid->assign(static_cast<size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = Noise(grid ? &(*grid)[static_cast<size_t>(i)] : nullptr);
  }
  return v;
}

double PartySession::Randomizer() {
  if (noise_.unit_randomizer) return 1.0;
  return std::uniform_real_distribution<double>(noise_.randomizer_min,
                                                noise_.randomizer_max)(rng_);
}

Federation::Federation(Protocol protocol, const FederationInput& input,
                       const SessionConfig& config)
    : protocol_(protocol),
      config_(config),
      runtime_(config.mode, &transcript_),
      budget_(config.unsafe_override, config.debug_bound) {
  input.train.Validate();
  if (input.infer_xa.rows() != input.infer_xb.rows() ||
      static_cast<size_t>(input.infer_xa.rows()) != input.infer_ids.size()) {
    throw InvalidArgumentError("inference partitions are misaligned");
  }
  if (input.infer_xa.rows() > 0 && input.infer_xa.cols() != input.train.ma()) {
    throw InvalidArgumentError("inference features differ from training (A)");
  }
  if (input.infer_xb.rows() > 0 && input.infer_xb.cols() != input.train.mb()) {
    throw InvalidArgumentError("inference features differ from training (B)");
  }
  if (input.infer_table.rows() != 0 &&
      input.infer_table.ids() != input.infer_ids) {
    throw InvalidArgumentError("inference table ids differ from inference ids");
  }
  if (input.holdout_xa.rows() != input.holdout_xb.rows() ||
      static_cast<size_t>(input.holdout_xa.rows()) !=
          input.holdout_ids.size()) {
    throw InvalidArgumentError("holdout partitions are misaligned");
  }

  he::KeyPair ka = config.keys_a
                       ? *config.keys_a
                       : he::GenerateKeyPair(config.key_bits, config.key_mode,
                                             Mix(config.seed, 11));
  he::KeyPair kb = config.keys_b
                       ? *config.keys_b
                       : he::GenerateKeyPair(config.key_bits, config.key_mode,
                                             Mix(config.seed, 12));
  const he::PublicKey pa = ka.pub;
  const he::PublicKey pb = kb.pub;
  parties_[0] = std::make_unique<PartyState>(
      Party::kA, PartySession(Party::kA, std::move(ka), pb,
                              Mix(config.seed, 21), config.noise));
  parties_[1] = std::make_unique<PartyState>(
      Party::kB, PartySession(Party::kB, std::move(kb), pa,
                              Mix(config.seed, 22), config.noise));

  PartyState& a = party(Party::kA);
  PartyState& b = party(Party::kB);
  a.train = {input.train.ids, input.train.xa};
  b.train = {input.train.ids, input.train.xb};
  a.y = input.train.y;
  a.infer = {input.infer_ids, input.infer_xa};
  b.infer = {input.infer_ids, input.infer_xb};
  a.holdout = {input.holdout_ids, input.holdout_xa};
  b.holdout = {input.holdout_ids, input.holdout_xb};
  a.table = input.infer_table;
  a.theta = Vector::Zero(input.train.ma());
  b.theta = Vector::Zero(input.train.mb());
}

Federation::~Federation() = default;

he::EncOpCounter Federation::Ops(Party p) const {
  return party(p).session.counter();
}

he::EncOpCounter Federation::TotalOps() const {
  he::EncOpCounter c = Ops(Party::kA);
  c += Ops(Party::kB);
  return c;
}

int64_t Federation::n_train() const {
  return static_cast<int64_t>(party(Party::kA).train.ids.size());
}

int Federation::ma() const {
  return static_cast<int>(party(Party::kA).train.x.cols());
}

int Federation::mb() const {
  return static_cast<int>(party(Party::kB).train.x.cols());
}

const LocalRows& Federation::Rows(const PartyState& s, InferenceSet which) {
  return which == InferenceSet::kQuery ? s.infer : s.holdout;
}

RunStats Federation::RunPhase(const std::string& phase, const PartyFn& a,
                              const PartyFn& b) {
  const he::EncOpCounter before = TotalOps();
  const size_t records_before = transcript_.size();
  RunStats stats = runtime_.Run(phase, a, b);
  PhaseRecord rec;
  rec.name = phase;
  rec.stats = stats;
  rec.ops = TotalOps() - before;
  rec.messages = transcript_.size() - records_before;
  rec.bytes = stats.party[0].bytes_sent + stats.party[1].bytes_sent;
  phases_.push_back(rec);
  return stats;
}

void Federation::DeleteTrainingIds(const std::vector<int64_t>& ids) {
  if (ids.empty()) return;
  std::unordered_set<int64_t> drop(ids.begin(), ids.end());
  if (drop.size() != ids.size()) {
    throw InvalidArgumentError("deletion list contains duplicates");
  }
  PartyState& a = party(Party::kA);
  PartyState& b = party(Party::kB);
  auto apply = [](PartyState& s, const std::vector<int64_t>& del) {
    std::unordered_set<int64_t> d(del.begin(), del.end());
    size_t present = 0;
    for (int64_t id : s.train.ids) present += d.count(id);
    if (present != d.size()) {
      throw InvalidArgumentError("deletion names ids outside the training set");
    }
    DropRows(s.train, d, s.id == Party::kA ? &s.y : nullptr);
    s.Touch();
  };
  RunPhase(
      "delete",
      [&](Endpoint& ep) {
        apply(a, ids);
        ep.Send(kind::kDeleteIds, Payload::Ids(ids));
      },
      [&](Endpoint& ep) { apply(b, ep.Recv(kind::kDeleteIds).AsIds()); });
}

void Federation::ResetModel() {
  for (auto& s : parties_) {
    s->theta = Vector::Zero(s->train.x.cols());
    s->mask = 0.5;
    s->Touch();
  }
}

model::ModelState Federation::JoinedModel() const {
  const PartyState& a = party(Party::kA);
  const PartyState& b = party(Party::kB);
  model::ModelState s;
  s.kind = protocol_ == Protocol::kFrog ? model::ModelKind::kFrog
                                        : model::ModelKind::kLogistic;
  s.theta_a = a.theta;
  s.theta_b = b.theta;
  s.c1 = protocol_ == Protocol::kFrog ? a.mask : 0.0;
  s.c2 = protocol_ == Protocol::kFrog ? b.mask : 0.0;
  return s;
}

model::PartitionedDataset Federation::JoinedTraining() const {
  const PartyState& a = party(Party::kA);
  const PartyState& b = party(Party::kB);
  if (a.train.ids != b.train.ids) {
    throw ProtocolError("parties hold different training id sets");
  }
  model::PartitionedDataset d;
  d.ids = a.train.ids;
  d.xa = a.train.x;
  d.xb = b.train.x;
  d.y = a.y;
  return d;
}

Vector RowDots(const Matrix& x, const Vector& v) {
  if (x.cols() != v.size()) {
    throw InvalidArgumentError("row dot: dimension mismatch");
  }
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) s += x(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

}  // namespace vfdebug::protocol
