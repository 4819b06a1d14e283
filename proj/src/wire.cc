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

#include "vfdebug/wire.h"

#include <bit>
#include <cstring>

#include "vfdebug/error.h"

namespace vfdebug {

void ByteWriter::PutBigEndian(uint64_t v, int width) {
  for (int shift = (width - 1) * 8; shift >= 0; shift -= 8) {
    bytes_.push_back(static_cast<uint8_t>(v >> shift));
  }
}

void ByteWriter::PutF64(double v) { PutU64(std::bit_cast<uint64_t>(v)); }

void ByteWriter::PutBytes(std::span<const uint8_t> data) {
  PutU32(static_cast<uint32_t>(data.size()));
  bytes_.insert(bytes_.end(), data.begin(), data.end());
}

void ByteWriter::PutString(std::string_view s) {
  PutU16(static_cast<uint16_t>(s.size()));
  bytes_.insert(bytes_.end(), s.begin(), s.end());
}

void ByteReader::Require(size_t n) const {
  if (data_.size() - offset_ < n) {
    throw ProtocolError("truncated message: need " + std::to_string(n) +
                        " bytes, have " + std::to_string(remaining()));
  }
}

uint64_t ByteReader::GetBigEndian(int width) {
  Require(static_cast<size_t>(width));
  uint64_t v = 0;
  for (int i = 0; i < width; ++i) v = (v << 8) | data_[offset_ + i];
  offset_ += static_cast<size_t>(width);
  return v;
}

double ByteReader::GetF64() { return std::bit_cast<double>(GetU64()); }

std::vector<uint8_t> ByteReader::GetBytes() {
  uint32_t n = GetU32();
  Require(n);
  std::vector<uint8_t> out(data_.begin() + offset_,
                           data_.begin() + offset_ + n);
  offset_ += n;
  return out;
}

std::string ByteReader::GetString() {
  uint16_t n = GetU16();
  Require(n);
  std::string out(reinterpret_cast<const char*>(data_.data()) + offset_, n);
  offset_ += n;
  return out;
}

}  // namespace vfdebug
