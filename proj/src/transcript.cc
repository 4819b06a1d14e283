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

#include "vfdebug/transcript.h"

#include <istream>
#include <ostream>

#include "nlohmann/json.hpp"
#include "vfdebug/digest.h"
#include "vfdebug/error.h"

namespace vfdebug {
namespace {

constexpr const char* kFormat = "vfdebug.transcript";

nlohmann::json RecordToJson(const TranscriptRecord& r) {
  return {{"type", "message"},          {"seq", r.seq},
          {"round", r.round},           {"sender", PartyName(r.sender)},
          {"kind", r.kind},             {"phase", r.phase},
          {"payload", PayloadTypeName(r.payload)},
          {"count", r.count},           {"bytes", r.byte_size},
          {"digest", r.digest}};
}

TranscriptRecord RecordFromJson(const nlohmann::json& j) {
  TranscriptRecord r;
  r.seq = j.at("seq").get<uint64_t>();
  r.round = j.at("round").get<uint64_t>();
  r.sender = PartyFromName(j.at("sender").get<std::string>());
  r.kind = j.at("kind").get<std::string>();
  r.phase = j.value("phase", "");
  r.payload = PayloadTypeFromName(j.at("payload").get<std::string>());
  r.count = j.at("count").get<uint64_t>();
  r.byte_size = j.at("bytes").get<uint64_t>();
  r.digest = j.at("digest").get<std::string>();
  return r;
}

}  // namespace

const char* PartyName(Party p) { return p == Party::kA ? "A" : "B"; }

Party PartyFromName(const std::string& name) {
  if (name == "A") return Party::kA;
  if (name == "B") return Party::kB;
  throw InvalidArgumentError("unknown party '" + name + "'");
}

const char* PayloadTypeName(PayloadType t) {
  switch (t) {
    case PayloadType::kFlag: return "flag";
    case PayloadType::kScalar: return "scalar";
    case PayloadType::kVector: return "vector";
    case PayloadType::kMatrix: return "matrix";
    case PayloadType::kIds: return "ids";
    case PayloadType::kCiphertexts: return "ciphertexts";
  }
  return "unknown";
}

PayloadType PayloadTypeFromName(const std::string& name) {
  for (auto t : {PayloadType::kFlag, PayloadType::kScalar, PayloadType::kVector,
                 PayloadType::kMatrix, PayloadType::kIds,
                 PayloadType::kCiphertexts}) {
    if (name == PayloadTypeName(t)) return t;
  }
  throw InvalidArgumentError("unknown payload type '" + name + "'");
}

Transcript::Transcript(const Transcript& other) {
  std::lock_guard<std::mutex> lock(other.mu_);
  records_ = other.records_;
  rounds_[0] = other.rounds_[0];
  rounds_[1] = other.rounds_[1];
  closed_ = other.closed_;
}

Transcript& Transcript::operator=(const Transcript& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mu_, other.mu_);
  records_ = other.records_;
  rounds_[0] = other.rounds_[0];
  rounds_[1] = other.rounds_[1];
  closed_ = other.closed_;
  return *this;
}

TranscriptRecord Transcript::Append(TranscriptRecord record) {
  std::lock_guard<std::mutex> lock(mu_);
  if (closed_) throw ProtocolError("transcript is closed");
  record.seq = records_.size() + 1;
  record.round = ++rounds_[static_cast<int>(record.sender)];
  records_.push_back(record);
  return record;
}

std::vector<TranscriptRecord> Transcript::records() const {
  std::lock_guard<std::mutex> lock(mu_);
  return records_;
}

size_t Transcript::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return records_.size();
}

uint64_t Transcript::BytesSent(Party p) const {
  std::lock_guard<std::mutex> lock(mu_);
  uint64_t total = 0;
  for (const auto& r : records_) {
    if (r.sender == p) total += r.byte_size;
  }
  return total;
}

std::string RecordDigestLine(const TranscriptRecord& r) {
  return std::to_string(r.round) + ";" + PartyName(r.sender) + ";" + r.kind +
         ";" + r.phase + ";" + PayloadTypeName(r.payload) + ";" +
         std::to_string(r.count) + ";" + std::to_string(r.byte_size) + ";" +
         r.digest + "\n";
}

std::string StreamDigest(const std::vector<TranscriptRecord>& records) {
  std::string streams[2];
  for (const auto& r : records) {
    streams[static_cast<int>(r.sender)] += RecordDigestLine(r);
  }
  return Sha256Hex(Sha256Hex(streams[0]) + Sha256Hex(streams[1]));
}

std::string Transcript::Digest() const { return StreamDigest(records()); }

void ExportTranscriptJsonl(const Transcript& t, const std::string& protocol,
                           std::ostream& out) {
  std::vector<TranscriptRecord> records = t.records();
  out << nlohmann::json{{"type", "header"},
                        {"format", kFormat},
                        {"version", 1},
                        {"protocol", protocol}}
             .dump()
      << "\n";
  for (const auto& r : records) out << RecordToJson(r).dump() << "\n";
  if (t.closed()) {
    out << nlohmann::json{{"type", "end"},
                          {"count", records.size()},
                          {"digest", StreamDigest(records)}}
               .dump()
        << "\n";
  }
}

LoadedTranscript ImportTranscriptJsonl(std::istream& in) {
  LoadedTranscript out;
  std::string line;
  bool header = false;
  bool ended = false;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      // A torn final line reads as truncation.
      out.complete = false;
      return out;
    }
    try {
      std::string type = j.at("type").get<std::string>();
      if (!header) {
        if (type != "header" || j.value("format", "") != kFormat) {
          throw InvalidArgumentError("transcript header missing");
        }
        out.protocol = j.value("protocol", "");
        header = true;
      } else if (type == "message") {
        if (ended) throw InvalidArgumentError("message after end trailer");
        out.records.push_back(RecordFromJson(j));
      } else if (type == "end") {
        ended = true;
        out.digest = j.at("digest").get<std::string>();
        out.complete = j.at("count").get<size_t>() == out.records.size() &&
                       out.digest == StreamDigest(out.records);
      } else {
        throw InvalidArgumentError("unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgumentError("transcript line " + std::to_string(line_no) +
                                 ": " + e.what());
    }
  }
  if (!header) throw InvalidArgumentError("empty transcript");
  return out;
}

}  // namespace vfdebug
