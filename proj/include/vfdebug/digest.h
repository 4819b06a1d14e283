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

#ifndef VFDEBUG_DIGEST_H_
#define VFDEBUG_DIGEST_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace vfdebug {

// Lower-case hex SHA-256 of `data`.
std::string Sha256Hex(std::span<const uint8_t> data);
std::string Sha256Hex(std::string_view data);

// First eight bytes of SHA-256(data), big-endian.
uint64_t Sha256Prefix64(std::span<const uint8_t> data);

std::string ToHex(std::span<const uint8_t> data);

}  // namespace vfdebug

#endif  // VFDEBUG_DIGEST_H_
