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

#ifndef VFDEBUG_PAILLIER_H_
#define VFDEBUG_PAILLIER_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "nlohmann/json_fwd.hpp"
#include "vfdebug/wire.h"

namespace vfdebug::he {

using BigInt = mpz_class;

enum class KeyMode { kTest, kSecure };

inline constexpr int kMinTestKeyBits = 256;
inline constexpr int kMinSecureKeyBits = 2048;

struct PublicKey {
  BigInt n;
  BigInt n_squared;
  BigInt generator;  // always n + 1
  int bits = 0;
  KeyMode mode = KeyMode::kTest;
  uint64_t tag = 0;  // fingerprint of n

  static PublicKey FromModulus(const BigInt& n, KeyMode mode);
};

struct PrivateKey {
  BigInt p;
  BigInt q;
  // Textbook exponents, kept for the non-CRT reference decryption.
  BigInt lambda;
  BigInt mu;
  // CRT precomputation.
  BigInt p_squared;
  BigInt q_squared;
  BigInt hp;
  BigInt hq;
  BigInt q_inv_p;  // q^-1 mod p
};

struct KeyPair {
  PublicKey pub;
  PrivateKey priv;

  static KeyPair FromPrimes(const BigInt& p, const BigInt& q, KeyMode mode);
};

// Generates a key whose modulus has exactly `bits` bits. Test mode is
// deterministic in `seed`; secure mode draws its seed from the OS.
KeyPair GenerateKeyPair(int bits, KeyMode mode,
                        std::optional<uint64_t> seed = std::nullopt,
                        int max_attempts = 64);

struct EncOpCounter {
  uint64_t adds = 0;
  uint64_t cmuls = 0;
  uint64_t encryptions = 0;
  uint64_t decryptions = 0;
  uint64_t plain_adds = 0;  // ciphertext + plaintext constant
  uint64_t rescales = 0;    // scale alignment inside Add

  EncOpCounter& operator+=(const EncOpCounter& o);
  friend EncOpCounter operator-(EncOpCounter a, const EncOpCounter& b);
  friend bool operator==(const EncOpCounter&, const EncOpCounter&) = default;
};

// Signed fixed-point encoding into Z_n. A value x at scale exponent e is
// stored as round(x * 2^(fraction_bits * e)); negatives occupy the upper
// half of the ring.
class FixedPointCodec {
 public:
  explicit FixedPointCodec(const PublicKey& key, int fraction_bits = 40,
                           int input_bits = 48);

  int fraction_bits() const { return fraction_bits_; }
  int input_bits() const { return input_bits_; }

  // Signed integer representation; throws OverflowError when |x| is
  // outside the input range or not finite.
  BigInt EncodeSigned(double x, int scale_exp) const;
  BigInt ToResidue(const BigInt& signed_value) const;
  BigInt FromResidue(const BigInt& residue) const;
  double Decode(const BigInt& residue, int scale_exp) const;
  double DecodeSigned(const BigInt& signed_value, int scale_exp) const;

  // Largest real representable at `scale_exp` before wrapping.
  double max_magnitude(int scale_exp) const;
  // Bits available for signed magnitudes (the ring half-size).
  int capacity_bits() const { return capacity_bits_; }

 private:
  BigInt n_;
  BigInt half_n_;
  int fraction_bits_;
  int input_bits_;
  int capacity_bits_;
};

struct Ciphertext {
  BigInt value;
  uint64_t key_tag = 0;
  int scale_exp = 1;
  // Public upper bound on log2 |encoded plaintext|. Derived from the
  // operation structure only, never from the hidden value.
  double magnitude_bits = 0.0;
};

inline constexpr int kMaxScaleExp = 3;

// Encryption plus the homomorphic operations. One instance per party; not
// thread safe (owns its randomness source and counter pointer).
class Encryptor {
 public:
  Encryptor(const PublicKey& key, EncOpCounter* counter,
            std::optional<uint64_t> seed = std::nullopt);
  ~Encryptor();
  Encryptor(Encryptor&&) noexcept;
  Encryptor& operator=(Encryptor&&) noexcept;

  const PublicKey& key() const { return key_; }
  const FixedPointCodec& codec() const { return codec_; }

  Ciphertext Encrypt(double x) { return EncryptScaled(x, 1); }
  Ciphertext EncryptScaled(double x, int scale_exp);
  std::vector<Ciphertext> EncryptVector(const std::vector<double>& xs);

  Ciphertext Add(const Ciphertext& a, const Ciphertext& b);
  // a + x, with x encoded at a's scale.
  Ciphertext AddPlain(const Ciphertext& a, double x);
  // u * c; the result scale is c.scale_exp + 1.
  Ciphertext Mul(double u, const Ciphertext& c);
  // Σ u_i * c_i, which costs n cmuls and n-1 adds.
  Ciphertext Dot(const std::vector<double>& u,
                 const std::vector<Ciphertext>& cs);
  // Encryption of zero at the given scale, without randomness. Does not
  // count as an encryption.
  Ciphertext Zero(int scale_exp) const;

 private:
  Ciphertext MulEncoded(const BigInt& k, int k_scale, const Ciphertext& c);
  Ciphertext Rescale(const Ciphertext& c, int target_scale);
  void CheckKey(const Ciphertext& c) const;
  void CheckMagnitude(double bits) const;
  BigInt RandomUnit();

  PublicKey key_;
  FixedPointCodec codec_;
  EncOpCounter* counter_;
  struct Rng;
  std::unique_ptr<Rng> rng_;
};

class Decryptor {
 public:
  Decryptor(const KeyPair& keys, EncOpCounter* counter);

  const PublicKey& key() const { return keys_.pub; }
  const FixedPointCodec& codec() const { return codec_; }

  double Decrypt(const Ciphertext& c);
  std::vector<double> DecryptVector(const std::vector<Ciphertext>& cs);
  // Signed fixed-point integer, i.e. value * 2^(fraction_bits * scale).
  BigInt DecryptSigned(const Ciphertext& c);
  // Plaintext residue via CRT.
  BigInt DecryptResidue(const Ciphertext& c) const;
  // Textbook L(c^lambda mod n^2) * mu mod n; reference path for tests.
  BigInt DecryptResidueReference(const Ciphertext& c) const;

 private:
  KeyPair keys_;
  FixedPointCodec codec_;
  EncOpCounter* counter_;
};

// Key containers. Big integers are big-endian hex strings.
nlohmann::json PublicKeyToJson(const PublicKey& key);
PublicKey PublicKeyFromJson(const nlohmann::json& j);
nlohmann::json KeyPairToJson(const KeyPair& keys);
KeyPair KeyPairFromJson(const nlohmann::json& j);

std::string ToHexString(const BigInt& v);
BigInt FromHexString(const std::string& hex);

std::vector<uint8_t> ToBytes(const BigInt& v);  // big-endian, unsigned
BigInt FromBytes(const std::vector<uint8_t>& bytes);

// Binary ciphertext layout: [u64 key_tag][i8 scale][f64 magnitude]
// [u32 len][value bytes].
void WriteCiphertext(const Ciphertext& c, ByteWriter& out);
Ciphertext ReadCiphertext(ByteReader& in);
std::vector<uint8_t> SerializeCiphertext(const Ciphertext& c);
Ciphertext DeserializeCiphertext(const std::vector<uint8_t>& bytes);

const char* KeyModeName(KeyMode mode);
KeyMode KeyModeFromName(const std::string& name);

}  // namespace vfdebug::he

#endif  // VFDEBUG_PAILLIER_H_
