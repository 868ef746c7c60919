/*
 * Copyright 2026 The enctopk Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Paillier (layer 1, mod N^2) and Damgard-Jurik with s = 2 (layer 2, mod
// N^3), both with generator 1 + N.

#ifndef ENCTOPK_PAILLIER_HPP_
#define ENCTOPK_PAILLIER_HPP_

#include <gmpxx.h>

#include <cstdint>
#include <string_view>

#include "enctopk/bytes.hpp"
#include "enctopk/rng.hpp"

namespace enctopk {

struct Ciphertext1 {
  mpz_class v;
  bool operator==(const Ciphertext1& o) const { return v == o.v; }
};

struct Ciphertext2 {
  mpz_class v;
  bool operator==(const Ciphertext2& o) const { return v == o.v; }
};

class PublicKey {
 public:
  PublicKey() = default;
  explicit PublicKey(const mpz_class& n);

  const mpz_class& n() const { return n_; }
  const mpz_class& n2() const { return n2_; }
  const mpz_class& n3() const { return n3_; }
  unsigned bits() const { return bits_; }
  std::size_t ct1_bytes() const { return ct1_bytes_; }
  std::size_t ct2_bytes() const { return ct2_bytes_; }
  bool empty() const { return sgn(n_) == 0; }

  // Layer 1.
  Ciphertext1 encrypt(const mpz_class& m, Rng& rng) const;
  // 1 + mN: a valid encryption with randomness 1. Only used where the value
  // is re-randomized before anyone else sees it.
  Ciphertext1 trivial(const mpz_class& m) const;
  Ciphertext1 add(const Ciphertext1& a, const Ciphertext1& b) const;
  Ciphertext1 sub(const Ciphertext1& a, const Ciphertext1& b) const;
  Ciphertext1 scale(const Ciphertext1& c, const mpz_class& a) const;
  Ciphertext1 negate(const Ciphertext1& c) const;
  Ciphertext1 add_plain(const Ciphertext1& c, const mpz_class& m) const;
  Ciphertext1 rerandomize(const Ciphertext1& c, Rng& rng) const;
  void check(const Ciphertext1& c) const;

  // Layer 2: plaintexts in Z_{N^2}.
  Ciphertext2 encrypt2(const mpz_class& m, Rng& rng) const;
  // (1+N)^m mod N^3, the randomness-free layer-2 encoding of m.
  Ciphertext2 lift(const mpz_class& m) const;
  Ciphertext2 mul2(const Ciphertext2& a, const Ciphertext2& b) const;
  Ciphertext2 pow2(const Ciphertext2& a, const mpz_class& e) const;
  Ciphertext2 inv2(const Ciphertext2& a) const;
  // Etwo(Enc(m1))^Enc(m2) = Etwo(Enc(m1 + m2)).
  Ciphertext2 layered_exp(const Ciphertext2& outer,
                          const Ciphertext1& inner) const;
  void check(const Ciphertext2& c) const;

  // Signed view of Z_N.
  mpz_class encode_signed(const mpz_class& v) const;
  mpz_class to_signed(const mpz_class& m) const;

  void write_ct(ByteWriter& w, const Ciphertext1& c) const;
  void write_ct(ByteWriter& w, const Ciphertext2& c) const;
  Ciphertext1 read_ct1(ByteReader& r) const;
  Ciphertext2 read_ct2(ByteReader& r) const;

  Bytes serialize() const;
  static PublicKey deserialize(std::span<const std::uint8_t> b);
  Digest fingerprint() const;

  bool operator==(const PublicKey& o) const { return n_ == o.n_; }

 private:
  mpz_class n_, n2_, n3_;
  unsigned bits_ = 0;
  std::size_t ct1_bytes_ = 0;
  std::size_t ct2_bytes_ = 0;
};

class SecretKey {
 public:
  SecretKey() = default;
  SecretKey(const mpz_class& p, const mpz_class& q);

  const PublicKey& pk() const { return pk_; }
  const mpz_class& p() const { return p_; }
  const mpz_class& q() const { return q_; }

  mpz_class decrypt(const Ciphertext1& c) const;
  mpz_class decrypt2(const Ciphertext2& c) const;
  // CRT-accelerated encryption and re-randomization.
  Ciphertext1 encrypt(const mpz_class& m, Rng& rng) const;
  Ciphertext1 rerandomize(const Ciphertext1& c, Rng& rng) const;
  Ciphertext2 encrypt2(const mpz_class& m, Rng& rng) const;

  Bytes serialize() const;
  static SecretKey deserialize(std::span<const std::uint8_t> b);

 private:
  mpz_class noise1(Rng& rng) const;  // r^N mod N^2
  mpz_class noise2(Rng& rng) const;  // r^(N^2) mod N^3

  PublicKey pk_;
  mpz_class p_, q_;
  mpz_class pp_, qq_, ppp_, qqq_;
  mpz_class pm1_, qm1_;
  mpz_class hp_, hq_;            // layer-1 CRT decryption constants
  mpz_class qq_inv_pp_;          // (q^2)^-1 mod p^2
  mpz_class qqq_inv_ppp_;        // (q^3)^-1 mod p^3
  mpz_class q_inv_p_;            // q^-1 mod p
  mpz_class p_inv_q_;            // p^-1 mod q
  mpz_class e1p_, e1q_;          // N mod p(p-1), N mod q(q-1)
  mpz_class e2p_, e2q_;          // N^2 mod p^2(p-1), N^2 mod q^2(q-1)
  mpz_class pm1_inv_pp_, qm1_inv_qq_;
};

struct KeyPair {
  PublicKey pk;
  SecretKey sk;
};

KeyPair keygen(unsigned bits, Rng& rng);

// Key-size profiles: test = 512, bench = 2048, paper = 3072.
unsigned profile_bits(std::string_view profile);

// Short-name wrappers.
inline Ciphertext1 enc1(const PublicKey& pk, const mpz_class& m, Rng& rng) {
  return pk.encrypt(m, rng);
}
inline mpz_class dec1(const SecretKey& sk, const Ciphertext1& c) {
  return sk.decrypt(c);
}
inline Ciphertext1 add1(const PublicKey& pk, const Ciphertext1& a,
                        const Ciphertext1& b) {
  return pk.add(a, b);
}
inline Ciphertext1 scal1(const PublicKey& pk, const Ciphertext1& c,
                         const mpz_class& a) {
  return pk.scale(c, a);
}
inline Ciphertext2 enc2(const PublicKey& pk, const mpz_class& m, Rng& rng) {
  return pk.encrypt2(m, rng);
}
inline mpz_class dec2(const SecretKey& sk, const Ciphertext2& c) {
  return sk.decrypt2(c);
}
inline Ciphertext2 layered_exp(const PublicKey& pk, const Ciphertext2& outer,
                               const Ciphertext1& inner) {
  return pk.layered_exp(outer, inner);
}

}  // namespace enctopk

#endif  // ENCTOPK_PAILLIER_HPP_
