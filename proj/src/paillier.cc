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

#include "vfdebug/paillier.h"

#include <openssl/rand.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlohmann/json.hpp"
#include "vfdebug/digest.h"
#include "vfdebug/error.h"

namespace vfdebug::he {
namespace {

BigInt RandomSeed() {
  unsigned char buf[32];
  if (RAND_bytes(buf, sizeof(buf)) != 1) {
    throw KeyGenerationError("OS randomness unavailable");
  }
  BigInt s;
  mpz_import(s.get_mpz_t(), sizeof(buf), 1, 1, 1, 0, buf);
  return s;
}

// L(x) = (x - 1) / d
BigInt LFunc(const BigInt& x, const BigInt& d) { return (x - 1) / d; }

BigInt PowMod(const BigInt& base, const BigInt& exp, const BigInt& mod) {
  BigInt r;
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return r;
}

BigInt InvMod(const BigInt& a, const BigInt& mod) {
  BigInt r;
  if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0) {
    throw KeyGenerationError("value not invertible");
  }
  return r;
}

int BitLength(const BigInt& v) {
  return static_cast<int>(mpz_sizeinbase(v.get_mpz_t(), 2));
}

double LogSumBits(double a, double b) {
  double hi = std::max(a, b);
  double lo = std::min(a, b);
  return hi + std::log2(1.0 + std::exp2(lo - hi));
}

BigInt RandomPrime(gmp_randclass& rng, int bits) {
  BigInt candidate = rng.get_z_bits(bits);
  mpz_setbit(candidate.get_mpz_t(), bits - 1);
  mpz_setbit(candidate.get_mpz_t(), bits - 2);
  BigInt prime;
  mpz_nextprime(prime.get_mpz_t(), candidate.get_mpz_t());
  return prime;
}

}  // namespace

PublicKey PublicKey::FromModulus(const BigInt& n, KeyMode mode) {
  PublicKey key;
  key.n = n;
  key.n_squared = n * n;
  key.generator = n + 1;
  key.bits = BitLength(n);
  key.mode = mode;
  key.tag = Sha256Prefix64(ToBytes(n));
  return key;
}

KeyPair KeyPair::FromPrimes(const BigInt& p, const BigInt& q, KeyMode mode) {
  if (p == q) throw KeyGenerationError("primes must be distinct");
  KeyPair kp;
  kp.pub = PublicKey::FromModulus(p * q, mode);
  PrivateKey& sk = kp.priv;
  sk.p = p;
  sk.q = q;
  BigInt pm1 = p - 1;
  BigInt qm1 = q - 1;
  BigInt phi = pm1 * qm1;
  BigInt g;
  mpz_gcd(g.get_mpz_t(), kp.pub.n.get_mpz_t(), phi.get_mpz_t());
  if (g != 1) throw KeyGenerationError("gcd(n, phi(n)) != 1");
  mpz_lcm(sk.lambda.get_mpz_t(), pm1.get_mpz_t(), qm1.get_mpz_t());
  sk.mu = InvMod(
      LFunc(PowMod(kp.pub.generator, sk.lambda, kp.pub.n_squared), kp.pub.n),
      kp.pub.n);
  sk.p_squared = p * p;
  sk.q_squared = q * q;
  sk.hp = InvMod(LFunc(PowMod(kp.pub.generator, pm1, sk.p_squared), p), p);
  sk.hq = InvMod(LFunc(PowMod(kp.pub.generator, qm1, sk.q_squared), q), q);
  sk.q_inv_p = InvMod(q, p);
  return kp;
}

KeyPair GenerateKeyPair(int bits, KeyMode mode, std::optional<uint64_t> seed,
                        int max_attempts) {
  int min_bits = mode == KeyMode::kTest ? kMinTestKeyBits : kMinSecureKeyBits;
  if (bits < min_bits) {
    throw InvalidArgumentError("key size " + std::to_string(bits) +
                               " below minimum " + std::to_string(min_bits) +
                               " for " + KeyModeName(mode) + " mode");
  }
  if (max_attempts < 1) throw InvalidArgumentError("max_attempts must be >= 1");
  gmp_randclass rng(gmp_randinit_mt);
  if (mode == KeyMode::kTest) {
    rng.seed(static_cast<unsigned long>(seed.value_or(0)));
  } else {
    rng.seed(RandomSeed());
  }
  int p_bits = (bits + 1) / 2;
  int q_bits = bits / 2;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    BigInt p = RandomPrime(rng, p_bits);
    BigInt q = RandomPrime(rng, q_bits);
    if (p == q || BitLength(p) != p_bits || BitLength(q) != q_bits) continue;
    if (BitLength(p * q) != bits) continue;
    try {
      return KeyPair::FromPrimes(p, q, mode);
    } catch (const KeyGenerationError&) {
      continue;
    }
  }
  throw KeyGenerationError("prime generation failed after " +
                           std::to_string(max_attempts) + " attempts");
}

EncOpCounter& EncOpCounter::operator+=(const EncOpCounter& o) {
  adds += o.adds;
  cmuls += o.cmuls;
  encryptions += o.encryptions;
  decryptions += o.decryptions;
  plain_adds += o.plain_adds;
  rescales += o.rescales;
  return *this;
}

EncOpCounter operator-(EncOpCounter a, const EncOpCounter& b) {
  a.adds -= b.adds;
  a.cmuls -= b.cmuls;
  a.encryptions -= b.encryptions;
  a.decryptions -= b.decryptions;
  a.plain_adds -= b.plain_adds;
  a.rescales -= b.rescales;
  return a;
}

FixedPointCodec::FixedPointCodec(const PublicKey& key, int fraction_bits,
                                 int input_bits)
    : n_(key.n),
      half_n_(key.n / 2),
      fraction_bits_(fraction_bits),
      input_bits_(input_bits),
      capacity_bits_(key.bits - 2) {
  if (fraction_bits < 1 || input_bits < 1) {
    throw InvalidArgumentError("codec bit widths must be positive");
  }
  if (input_bits + fraction_bits * kMaxScaleExp >= capacity_bits_) {
    throw InvalidArgumentError("key too small for the fixed-point codec");
  }
}

BigInt FixedPointCodec::EncodeSigned(double x, int scale_exp) const {
  if (!std::isfinite(x)) throw OverflowError("cannot encode non-finite value");
  if (std::fabs(x) >= std::ldexp(1.0, input_bits_)) {
    throw OverflowError("value " + std::to_string(x) +
                        " exceeds codec input range 2^" +
                        std::to_string(input_bits_));
  }
  if (scale_exp < 0 || scale_exp > kMaxScaleExp) {
    throw InvalidArgumentError("scale exponent out of range");
  }
  double scaled = std::ldexp(x, fraction_bits_ * scale_exp);
  if (std::fabs(scaled) < std::ldexp(1.0, 53)) scaled = std::nearbyint(scaled);
  BigInt v;
  mpz_set_d(v.get_mpz_t(), scaled);
  return v;
}

BigInt FixedPointCodec::ToResidue(const BigInt& signed_value) const {
  if (abs(signed_value) > half_n_) {
    throw OverflowError("encoded magnitude exceeds the plaintext ring");
  }
  return signed_value < 0 ? BigInt(signed_value + n_) : signed_value;
}

BigInt FixedPointCodec::FromResidue(const BigInt& residue) const {
  return residue > half_n_ ? BigInt(residue - n_) : residue;
}

double FixedPointCodec::DecodeSigned(const BigInt& signed_value,
                                     int scale_exp) const {
  long exp = 0;
  double mant = mpz_get_d_2exp(&exp, signed_value.get_mpz_t());
  return std::ldexp(mant, static_cast<int>(exp) - fraction_bits_ * scale_exp);
}

double FixedPointCodec::Decode(const BigInt& residue, int scale_exp) const {
  return DecodeSigned(FromResidue(residue), scale_exp);
}

double FixedPointCodec::max_magnitude(int scale_exp) const {
  return std::ldexp(1.0, capacity_bits_ - fraction_bits_ * scale_exp);
}

struct Encryptor::Rng {
  gmp_randclass gen{gmp_randinit_mt};
};

Encryptor::Encryptor(const PublicKey& key, EncOpCounter* counter,
                     std::optional<uint64_t> seed)
    : key_(key), codec_(key), counter_(counter), rng_(std::make_unique<Rng>()) {
  if (seed.has_value()) {
    rng_->gen.seed(static_cast<unsigned long>(*seed));
  } else {
    rng_->gen.seed(RandomSeed());
  }
}

Encryptor::~Encryptor() = default;
Encryptor::Encryptor(Encryptor&&) noexcept = default;
Encryptor& Encryptor::operator=(Encryptor&&) noexcept = default;

BigInt Encryptor::RandomUnit() {
  for (;;) {
    BigInt r = rng_->gen.get_z_range(key_.n);
    if (r == 0) continue;
    BigInt g;
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), key_.n.get_mpz_t());
    if (g == 1) return r;
  }
}

void Encryptor::CheckKey(const Ciphertext& c) const {
  if (c.key_tag != key_.tag) {
    throw KeyMismatchError("ciphertext belongs to a different key");
  }
}

void Encryptor::CheckMagnitude(double bits) const {
  if (bits >= codec_.capacity_bits()) {
    throw OverflowError("encrypted magnitude bound 2^" + std::to_string(bits) +
                        " exceeds ring capacity 2^" +
                        std::to_string(codec_.capacity_bits()));
  }
}

Ciphertext Encryptor::EncryptScaled(double x, int scale_exp) {
  BigInt m = codec_.ToResidue(codec_.EncodeSigned(x, scale_exp));
  // (1 + m n) r^n mod n^2
  BigInt c = PowMod(RandomUnit(), key_.n, key_.n_squared);
  c *= m * key_.n + 1;
  c %= key_.n_squared;
  if (counter_) ++counter_->encryptions;
  Ciphertext out;
  out.value = std::move(c);
  out.key_tag = key_.tag;
  out.scale_exp = scale_exp;
  out.magnitude_bits = codec_.input_bits() + codec_.fraction_bits() * scale_exp;
  return out;
}

std::vector<Ciphertext> Encryptor::EncryptVector(const std::vector<double>& xs) {
  std::vector<Ciphertext> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(Encrypt(x));
  return out;
}

Ciphertext Encryptor::Zero(int scale_exp) const {
  Ciphertext z;
  z.value = 1;
  z.key_tag = key_.tag;
  z.scale_exp = scale_exp;
  z.magnitude_bits = 0.0;
  return z;
}

Ciphertext Encryptor::Rescale(const Ciphertext& c, int target_scale) {
  int diff = target_scale - c.scale_exp;
  if (diff <= 0) return c;
  BigInt factor;
  mpz_ui_pow_ui(factor.get_mpz_t(), 2,
                static_cast<unsigned long>(codec_.fraction_bits() * diff));
  Ciphertext out;
  out.value = PowMod(c.value, factor, key_.n_squared);
  out.key_tag = c.key_tag;
  out.scale_exp = target_scale;
  out.magnitude_bits = c.magnitude_bits + codec_.fraction_bits() * diff;
  CheckMagnitude(out.magnitude_bits);
  if (counter_) ++counter_->rescales;
  return out;
}

Ciphertext Encryptor::Add(const Ciphertext& a, const Ciphertext& b) {
  CheckKey(a);
  CheckKey(b);
  if (a.scale_exp != b.scale_exp) {
    int target = std::max(a.scale_exp, b.scale_exp);
    return Add(Rescale(a, target), Rescale(b, target));
  }
  double bits = LogSumBits(a.magnitude_bits, b.magnitude_bits);
  CheckMagnitude(bits);
  Ciphertext out;
  out.value = a.value * b.value;
  out.value %= key_.n_squared;
  out.key_tag = key_.tag;
  out.scale_exp = a.scale_exp;
  out.magnitude_bits = bits;
  if (counter_) ++counter_->adds;
  return out;
}

Ciphertext Encryptor::AddPlain(const Ciphertext& a, double x) {
  CheckKey(a);
  BigInt m = codec_.ToResidue(codec_.EncodeSigned(x, a.scale_exp));
  double bits = LogSumBits(a.magnitude_bits,
                           codec_.input_bits() +
                               codec_.fraction_bits() * a.scale_exp);
  CheckMagnitude(bits);
  Ciphertext out;
  out.value = a.value * (m * key_.n + 1);
  out.value %= key_.n_squared;
  out.key_tag = key_.tag;
  out.scale_exp = a.scale_exp;
  out.magnitude_bits = bits;
  if (counter_) ++counter_->plain_adds;
  return out;
}

Ciphertext Encryptor::MulEncoded(const BigInt& k, int k_scale,
                                 const Ciphertext& c) {
  CheckKey(c);
  int scale = c.scale_exp + k_scale;
  if (scale > kMaxScaleExp) {
    throw InvalidArgumentError("multiplication depth exceeds the codec limit");
  }
  double bits = c.magnitude_bits + codec_.input_bits() +
                codec_.fraction_bits() * k_scale;
  CheckMagnitude(bits);
  Ciphertext out;
  if (k < 0) {
    BigInt inv;
    if (mpz_invert(inv.get_mpz_t(), c.value.get_mpz_t(),
                   key_.n_squared.get_mpz_t()) == 0) {
      throw NumericError("ciphertext not invertible");
    }
    BigInt mk = -k;
    out.value = PowMod(inv, mk, key_.n_squared);
  } else {
    out.value = PowMod(c.value, k, key_.n_squared);
  }
  out.key_tag = key_.tag;
  out.scale_exp = scale;
  out.magnitude_bits = bits;
  if (counter_) ++counter_->cmuls;
  return out;
}

Ciphertext Encryptor::Mul(double u, const Ciphertext& c) {
  return MulEncoded(codec_.EncodeSigned(u, 1), 1, c);
}

Ciphertext Encryptor::Dot(const std::vector<double>& u,
                          const std::vector<Ciphertext>& cs) {
  if (u.size() != cs.size()) {
    throw InvalidArgumentError("dot: length mismatch");
  }
  if (u.empty()) return Zero(2);
  Ciphertext acc = Mul(u[0], cs[0]);
  for (size_t i = 1; i < u.size(); ++i) acc = Add(acc, Mul(u[i], cs[i]));
  return acc;
}

Decryptor::Decryptor(const KeyPair& keys, EncOpCounter* counter)
    : keys_(keys), codec_(keys.pub), counter_(counter) {}

BigInt Decryptor::DecryptResidue(const Ciphertext& c) const {
  if (c.key_tag != keys_.pub.tag) {
    throw KeyMismatchError("ciphertext was not produced under this key");
  }
  const PrivateKey& sk = keys_.priv;
  BigInt mp = LFunc(PowMod(c.value, sk.p - 1, sk.p_squared), sk.p) * sk.hp;
  mp %= sk.p;
  BigInt mq = LFunc(PowMod(c.value, sk.q - 1, sk.q_squared), sk.q) * sk.hq;
  mq %= sk.q;
  BigInt h = (mp - mq) * sk.q_inv_p;
  mpz_mod(h.get_mpz_t(), h.get_mpz_t(), sk.p.get_mpz_t());
  return mq + h * sk.q;
}

BigInt Decryptor::DecryptResidueReference(const Ciphertext& c) const {
  if (c.key_tag != keys_.pub.tag) {
    throw KeyMismatchError("ciphertext was not produced under this key");
  }
  BigInt m = LFunc(PowMod(c.value, keys_.priv.lambda, keys_.pub.n_squared),
                   keys_.pub.n) *
             keys_.priv.mu;
  m %= keys_.pub.n;
  return m;
}

double Decryptor::Decrypt(const Ciphertext& c) {
  BigInt m = DecryptResidue(c);
  if (counter_) ++counter_->decryptions;
  return codec_.Decode(m, c.scale_exp);
}

BigInt Decryptor::DecryptSigned(const Ciphertext& c) {
  BigInt m = DecryptResidue(c);
  if (counter_) ++counter_->decryptions;
  return codec_.FromResidue(m);
}

std::vector<double> Decryptor::DecryptVector(
    const std::vector<Ciphertext>& cs) {
  std::vector<double> out;
  out.reserve(cs.size());
  for (const auto& c : cs) out.push_back(Decrypt(c));
  return out;
}

const char* KeyModeName(KeyMode mode) {
  return mode == KeyMode::kTest ? "test" : "secure";
}

KeyMode KeyModeFromName(const std::string& name) {
  if (name == "test") return KeyMode::kTest;
  if (name == "secure") return KeyMode::kSecure;
  throw InvalidArgumentError("unknown key mode '" + name + "'");
}

std::string ToHexString(const BigInt& v) {
  if (v < 0) throw InvalidArgumentError("hex encoding of negative integer");
  return v.get_str(16);
}

BigInt FromHexString(const std::string& hex) {
  BigInt v;
  if (hex.empty() || v.set_str(hex, 16) != 0 || v < 0) {
    throw InvalidArgumentError("malformed hex integer");
  }
  return v;
}

std::vector<uint8_t> ToBytes(const BigInt& v) {
  size_t count = (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
  std::vector<uint8_t> out(count);
  size_t written = 0;
  mpz_export(out.data(), &written, 1, 1, 1, 0, v.get_mpz_t());
  out.resize(written);
  return out;
}

BigInt FromBytes(const std::vector<uint8_t>& bytes) {
  BigInt v;
  if (!bytes.empty()) {
    mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  }
  return v;
}

nlohmann::json PublicKeyToJson(const PublicKey& key) {
  return {{"format", "vfdebug.paillier.public"},
          {"version", 1},
          {"bits", key.bits},
          {"mode", KeyModeName(key.mode)},
          {"n", ToHexString(key.n)}};
}

PublicKey PublicKeyFromJson(const nlohmann::json& j) {
  try {
    PublicKey key = PublicKey::FromModulus(
        FromHexString(j.at("n").get<std::string>()),
        KeyModeFromName(j.at("mode").get<std::string>()));
    if (key.bits != j.at("bits").get<int>()) {
      throw InvalidArgumentError("key bit length does not match modulus");
    }
    return key;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgumentError(std::string("malformed public key: ") +
                               e.what());
  }
}

nlohmann::json KeyPairToJson(const KeyPair& keys) {
  nlohmann::json j = PublicKeyToJson(keys.pub);
  j["format"] = "vfdebug.paillier.keypair";
  j["p"] = ToHexString(keys.priv.p);
  j["q"] = ToHexString(keys.priv.q);
  return j;
}

KeyPair KeyPairFromJson(const nlohmann::json& j) {
  try {
    KeyMode mode = KeyModeFromName(j.at("mode").get<std::string>());
    KeyPair kp = KeyPair::FromPrimes(FromHexString(j.at("p").get<std::string>()),
                                     FromHexString(j.at("q").get<std::string>()),
                                     mode);
    if (kp.pub.n != FromHexString(j.at("n").get<std::string>())) {
      throw InvalidArgumentError("key pair modulus does not match primes");
    }
    return kp;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgumentError(std::string("malformed key pair: ") + e.what());
  }
}

void WriteCiphertext(const Ciphertext& c, ByteWriter& out) {
  out.PutU64(c.key_tag);
  out.PutU8(static_cast<uint8_t>(static_cast<int8_t>(c.scale_exp)));
  out.PutF64(c.magnitude_bits);
  out.PutBytes(ToBytes(c.value));
}

Ciphertext ReadCiphertext(ByteReader& in) {
  Ciphertext c;
  c.key_tag = in.GetU64();
  c.scale_exp = static_cast<int8_t>(in.GetU8());
  c.magnitude_bits = in.GetF64();
  c.value = FromBytes(in.GetBytes());
  if (c.scale_exp < 0 || c.scale_exp > kMaxScaleExp) {
    throw ProtocolError("ciphertext scale exponent out of range");
  }
  return c;
}

std::vector<uint8_t> SerializeCiphertext(const Ciphertext& c) {
  ByteWriter w;
  WriteCiphertext(c, w);
  return w.Release();
}

Ciphertext DeserializeCiphertext(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes);
  Ciphertext c = ReadCiphertext(r);
  if (!r.AtEnd()) throw ProtocolError("trailing bytes after ciphertext");
  return c;
}

}  // namespace vfdebug::he
