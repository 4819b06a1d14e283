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

#include "vfdebug/digest.h"

#include <openssl/sha.h>

#include <array>

namespace vfdebug {
namespace {

std::array<uint8_t, SHA256_DIGEST_LENGTH> Sha256(const uint8_t* data,
                                                 size_t size) {
  std::array<uint8_t, SHA256_DIGEST_LENGTH> out{};
  SHA256(data, size, out.data());
  return out;
}

}  // namespace

std::string ToHex(std::span<const uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (uint8_t byte : data) {
    out.push_back(kDigits[byte >> 4]);
    out.push_back(kDigits[byte & 0x0f]);
  }
  return out;
}

std::string Sha256Hex(std::span<const uint8_t> data) {
  auto digest = Sha256(data.data(), data.size());
  return ToHex(digest);
}

std::string Sha256Hex(std::string_view data) {
  auto digest =
      Sha256(reinterpret_cast<const uint8_t*>(data.data()), data.size());
  return ToHex(digest);
}

uint64_t Sha256Prefix64(std::span<const uint8_t> data) {
  auto digest = Sha256(data.data(), data.size());
  uint64_t prefix = 0;
  for (int i = 0; i < 8; ++i) prefix = (prefix << 8) | digest[i];
  return prefix;
}

}  // namespace vfdebug
