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

#ifndef VFDEBUG_WIRE_H_
#define VFDEBUG_WIRE_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vfdebug {

// Big-endian, length-prefixed primitives shared by every wire format.
class ByteWriter {
 public:
  void PutU8(uint8_t v) { bytes_.push_back(v); }
  void PutU16(uint16_t v) { PutBigEndian(v, 2); }
  void PutU32(uint32_t v) { PutBigEndian(v, 4); }
  void PutU64(uint64_t v) { PutBigEndian(v, 8); }
  void PutI64(int64_t v) { PutU64(static_cast<uint64_t>(v)); }
  void PutF64(double v);
  void PutBytes(std::span<const uint8_t> data);  // u32 length prefix
  void PutString(std::string_view s);            // u16 length prefix

  const std::vector<uint8_t>& bytes() const { return bytes_; }
  std::vector<uint8_t> Release() { return std::move(bytes_); }

 private:
  void PutBigEndian(uint64_t v, int width);
  std::vector<uint8_t> bytes_;
};

// Reads what ByteWriter wrote; throws ProtocolError on truncated input.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

  uint8_t GetU8() { return static_cast<uint8_t>(GetBigEndian(1)); }
  uint16_t GetU16() { return static_cast<uint16_t>(GetBigEndian(2)); }
  uint32_t GetU32() { return static_cast<uint32_t>(GetBigEndian(4)); }
  uint64_t GetU64() { return GetBigEndian(8); }
  int64_t GetI64() { return static_cast<int64_t>(GetU64()); }
  double GetF64();
  std::vector<uint8_t> GetBytes();
  std::string GetString();

  bool AtEnd() const { return offset_ == data_.size(); }
  size_t remaining() const { return data_.size() - offset_; }

 private:
  uint64_t GetBigEndian(int width);
  void Require(size_t n) const;

  std::span<const uint8_t> data_;
  size_t offset_ = 0;
};

}  // namespace vfdebug

#endif  // VFDEBUG_WIRE_H_
