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

#ifndef VFDEBUG_TRANSCRIPT_H_
#define VFDEBUG_TRANSCRIPT_H_

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <string>
#include <vector>

namespace vfdebug {

enum class Party : uint8_t { kA = 0, kB = 1 };

inline Party Other(Party p) { return p == Party::kA ? Party::kB : Party::kA; }
const char* PartyName(Party p);
Party PartyFromName(const std::string& name);

enum class PayloadType : uint8_t {
  kFlag = 0,
  kScalar = 1,
  kVector = 2,
  kMatrix = 3,
  kIds = 4,
  kCiphertexts = 5,
};

const char* PayloadTypeName(PayloadType t);
PayloadType PayloadTypeFromName(const std::string& name);
inline bool IsPlaintext(PayloadType t) { return t != PayloadType::kCiphertexts; }

struct TranscriptRecord {
  uint64_t seq = 0;    // global order of sends
  uint64_t round = 0;  // per-direction counter, starts at 1
  Party sender = Party::kA;
  std::string kind;
  std::string phase;
  PayloadType payload = PayloadType::kScalar;
  uint64_t count = 0;  // scalars or ciphertexts carried
  uint64_t byte_size = 0;
  std::string digest;  // SHA-256 of the serialized message
};

// Append-only, thread safe.
class Transcript {
 public:
  Transcript() = default;
  Transcript(const Transcript& other);
  Transcript& operator=(const Transcript& other);

  // Assigns seq and the per-direction round.
  TranscriptRecord Append(TranscriptRecord record);
  std::vector<TranscriptRecord> records() const;
  size_t size() const;
  uint64_t BytesSent(Party p) const;

  // Digest over the two per-direction streams. Independent of how the
  // directions interleave.
  std::string Digest() const;

  // Marks the transcript as complete (an end trailer is written on export).
  void Close() { closed_ = true; }
  bool closed() const { return closed_; }

 private:
  mutable std::mutex mu_;
  std::vector<TranscriptRecord> records_;
  uint64_t rounds_[2] = {0, 0};
  bool closed_ = false;
};

std::string RecordDigestLine(const TranscriptRecord& r);
std::string StreamDigest(const std::vector<TranscriptRecord>& records);

// JSON lines: header, one line per message, end trailer with count and
// digest (omitted when the transcript is not closed).
void ExportTranscriptJsonl(const Transcript& t, const std::string& protocol,
                           std::ostream& out);

struct LoadedTranscript {
  std::string protocol;
  std::vector<TranscriptRecord> records;
  bool complete = false;  // trailer present and consistent
  std::string digest;
};

LoadedTranscript ImportTranscriptJsonl(std::istream& in);

}  // namespace vfdebug

#endif  // VFDEBUG_TRANSCRIPT_H_
