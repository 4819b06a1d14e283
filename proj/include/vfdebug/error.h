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

#ifndef VFDEBUG_ERROR_H_
#define VFDEBUG_ERROR_H_

#include <stdexcept>
#include <string>

namespace vfdebug {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Paillier key generation exhausted its retry budget.
class KeyGenerationError : public Error {
 public:
  using Error::Error;
};

// Two ciphertexts (or a ciphertext and a key) belong to different keys.
class KeyMismatchError : public Error {
 public:
  using Error::Error;
};

// A value or an encrypted result does not fit the plaintext ring.
class OverflowError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Conjugate gradient hit p'Hp <= 1e-30.
class CgBreakdownError : public NumericError {
 public:
  using NumericError::NumericError;
};

class QueryError : public Error {
 public:
  using Error::Error;
};

// A party received an unexpected message or its peer aborted.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// A security bound would be exceeded, or the configuration is insecure.
class SecurityError : public Error {
 public:
  using Error::Error;
};

class AuditIncompleteError : public Error {
 public:
  using Error::Error;
};

// An influence vector was computed against an older model.
class StaleStateError : public Error {
 public:
  using Error::Error;
};

class IngestionError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace vfdebug

#endif  // VFDEBUG_ERROR_H_
