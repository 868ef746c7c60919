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

#include "enctopk/paillier.hpp"

#include <string>

#include "enctopk/errors.hpp"

namespace enctopk {
namespace {

mpz_class powm(const mpz_class& b, const mpz_class& e, const mpz_class& m) {
  mpz_class r;
  mpz_powm(r.get_mpz_t(), b.get_mpz_t(), e.get_mpz_t(), m.get_mpz_t());
  return r;
}

mpz_class invert(const mpz_class& a, const mpz_class& m) {
  mpz_class r;
  if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t()) == 0) {
    throw InvalidCiphertext("value not invertible");
  }
  return r;
}

mpz_class mod(const mpz_class& a, const mpz_class& m) {
  mpz_class r;
  mpz_mod(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
  return r;
}

// x = a mod m1, x = b mod m2, with m1inv = m2^-1 mod m1.
mpz_class crt(const mpz_class& a, const mpz_class& m1, const mpz_class& b,
              const mpz_class& m2, const mpz_class& m2inv_m1) {
  mpz_class t = mod((a - b) * m2inv_m1, m1);
  return b + m2 * t;
}

mpz_class random_prime(unsigned bits, Rng& rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    mpz_class c = rng.bits(bits);
    mpz_setbit(c.get_mpz_t(), bits - 1);
    mpz_setbit(c.get_mpz_t(), bits - 2);
    mpz_setbit(c.get_mpz_t(), 0);
    mpz_class p;
    mpz_nextprime(p.get_mpz_t(), c.get_mpz_t());
    if (mpz_sizeinbase(p.get_mpz_t(), 2) == bits) return p;
  }
  throw KeyError("prime generation failed");
}

}  // namespace

PublicKey::PublicKey(const mpz_class& n) : n_(n) {
  if (sgn(n) <= 0 || mpz_even_p(n.get_mpz_t())) {
    throw KeyError("modulus must be odd and positive");
  }
  n2_ = n_ * n_;
  n3_ = n2_ * n_;
  bits_ = static_cast<unsigned>(mpz_sizeinbase(n_.get_mpz_t(), 2));
  ct1_bytes_ = byte_width(n2_);
  ct2_bytes_ = byte_width(n3_);
}

Ciphertext1 PublicKey::trivial(const mpz_class& m) const {
  return {mod(1 + mod(m, n_) * n_, n2_)};
}

Ciphertext1 PublicKey::encrypt(const mpz_class& m, Rng& rng) const {
  if (sgn(m) < 0 || m >= n_) throw DomainError("plaintext outside Z_N");
  mpz_class r = rng.unit(n_);
  return {mod((1 + m * n_) * powm(r, n_, n2_), n2_)};
}

Ciphertext1 PublicKey::add(const Ciphertext1& a, const Ciphertext1& b) const {
  return {mod(a.v * b.v, n2_)};
}

Ciphertext1 PublicKey::sub(const Ciphertext1& a, const Ciphertext1& b) const {
  return {mod(a.v * invert(b.v, n2_), n2_)};
}

Ciphertext1 PublicKey::scale(const Ciphertext1& c, const mpz_class& a) const {
  mpz_class e = mod(a, n_);
  return {powm(c.v, e, n2_)};
}

Ciphertext1 PublicKey::negate(const Ciphertext1& c) const {
  return {invert(c.v, n2_)};
}

Ciphertext1 PublicKey::add_plain(const Ciphertext1& c,
                                 const mpz_class& m) const {
  return {mod(c.v * (1 + mod(m, n_) * n_), n2_)};
}

Ciphertext1 PublicKey::rerandomize(const Ciphertext1& c, Rng& rng) const {
  mpz_class r = rng.unit(n_);
  return {mod(c.v * powm(r, n_, n2_), n2_)};
}

void PublicKey::check(const Ciphertext1& c) const {
  if (sgn(c.v) <= 0 || c.v >= n2_) {
    throw InvalidCiphertext("layer-1 ciphertext out of range");
  }
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), c.v.get_mpz_t(), n_.get_mpz_t());
  if (g != 1) throw InvalidCiphertext("layer-1 ciphertext shares a factor with N");
}

void PublicKey::check(const Ciphertext2& c) const {
  if (sgn(c.v) <= 0 || c.v >= n3_) {
    throw InvalidCiphertext("layer-2 ciphertext out of range");
  }
}

Ciphertext2 PublicKey::lift(const mpz_class& m) const {
  // (1+N)^m = 1 + mN + C(m,2) N^2 mod N^3.
  mpz_class x = mod(m, n2_);
  mpz_class c2 = mod(x * (x - 1) / 2, n_);
  return {mod(1 + x * n_ + c2 * n2_, n3_)};
}

Ciphertext2 PublicKey::encrypt2(const mpz_class& m, Rng& rng) const {
  if (sgn(m) < 0 || m >= n2_) throw DomainError("plaintext outside Z_{N^2}");
  mpz_class r = rng.unit(n_);
  return {mod(lift(m).v * powm(r, n2_, n3_), n3_)};
}

Ciphertext2 PublicKey::mul2(const Ciphertext2& a, const Ciphertext2& b) const {
  return {mod(a.v * b.v, n3_)};
}

Ciphertext2 PublicKey::pow2(const Ciphertext2& a, const mpz_class& e) const {
  return {powm(a.v, mod(e, n2_), n3_)};
}

Ciphertext2 PublicKey::inv2(const Ciphertext2& a) const {
  return {invert(a.v, n3_)};
}

Ciphertext2 PublicKey::layered_exp(const Ciphertext2& outer,
                                   const Ciphertext1& inner) const {
  return {powm(outer.v, inner.v, n3_)};
}

mpz_class PublicKey::encode_signed(const mpz_class& v) const {
  return mod(v, n_);
}

mpz_class PublicKey::to_signed(const mpz_class& m) const {
  mpz_class half = n_ / 2;
  return m > half ? mpz_class(m - n_) : m;
}

void PublicKey::write_ct(ByteWriter& w, const Ciphertext1& c) const {
  w.fixed(c.v, ct1_bytes_);
}

void PublicKey::write_ct(ByteWriter& w, const Ciphertext2& c) const {
  w.fixed(c.v, ct2_bytes_);
}

Ciphertext1 PublicKey::read_ct1(ByteReader& r) const {
  Ciphertext1 c{r.fixed(ct1_bytes_)};
  check(c);
  return c;
}

Ciphertext2 PublicKey::read_ct2(ByteReader& r) const {
  Ciphertext2 c{r.fixed(ct2_bytes_)};
  check(c);
  return c;
}

Bytes PublicKey::serialize() const {
  ByteWriter w;
  w.mpz_lp(n_);
  return w.take();
}

PublicKey PublicKey::deserialize(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  mpz_class n = r.mpz_lp();
  r.expect_done();
  return PublicKey(n);
}

Digest PublicKey::fingerprint() const {
  ByteWriter w;
  w.raw(as_bytes("enctopk-pk"));
  w.mpz_lp(n_);
  return sha256(w.data());
}

SecretKey::SecretKey(const mpz_class& p, const mpz_class& q)
    : pk_(p * q), p_(p), q_(q) {
  if (p == q) throw KeyError("p and q must differ");
  pp_ = p_ * p_;
  qq_ = q_ * q_;
  ppp_ = pp_ * p_;
  qqq_ = qq_ * q_;
  pm1_ = p_ - 1;
  qm1_ = q_ - 1;
  const mpz_class& n = pk_.n();
  mpz_class g = n + 1;
  hp_ = invert((powm(g, pm1_, pp_) - 1) / p_, p_);
  hq_ = invert((powm(g, qm1_, qq_) - 1) / q_, q_);
  qq_inv_pp_ = invert(qq_, pp_);
  qqq_inv_ppp_ = invert(qqq_, ppp_);
  q_inv_p_ = invert(q_, p_);
  p_inv_q_ = invert(p_, q_);
  e1p_ = mod(n, p_ * pm1_);
  e1q_ = mod(n, q_ * qm1_);
  e2p_ = mod(pk_.n2(), pp_ * pm1_);
  e2q_ = mod(pk_.n2(), qq_ * qm1_);
  pm1_inv_pp_ = invert(pm1_, pp_);
  qm1_inv_qq_ = invert(qm1_, qq_);
}

mpz_class SecretKey::decrypt(const Ciphertext1& c) const {
  pk_.check(c);
  mpz_class mp = mod((powm(c.v, pm1_, pp_) - 1) / p_ * hp_, p_);
  mpz_class mq = mod((powm(c.v, qm1_, qq_) - 1) / q_ * hq_, q_);
  // CRT over p, q.
  mpz_class t = mod((mp - mq) * q_inv_p_, p_);
  return mq + q_ * t;
}

mpz_class SecretKey::decrypt2(const Ciphertext2& c) const {
  pk_.check(c);
  // For a prime f with cofactor g: c^(f-1) mod f^3 = (1+N)^x, x = m(f-1) mod
  // f^2. Expand (1+fg)^x = 1 + x f g + C(x,2) f^2 g^2 mod f^3 and solve
  // digit by digit.
  auto solve = [&](const mpz_class& f, const mpz_class& g, const mpz_class& ff,
                   const mpz_class& fff, const mpz_class& fm1,
                   const mpz_class& g_inv_f, const mpz_class& fm1_inv_ff) {
    mpz_class a = powm(c.v, fm1, fff);
    mpz_class l = (a - 1) / f;  // in [0, f^2)
    mpz_class x0 = mod(l * g_inv_f, f);
    mpz_class c2 = mod(x0 * (x0 - 1) / 2, f);
    mpz_class t = mod(l - x0 * g - c2 * f * g * g, ff);
    mpz_class x1 = mod((t / f) * g_inv_f, f);
    mpz_class x = x0 + f * x1;
    return mod(x * fm1_inv_ff, ff);
  };
  mpz_class mp = solve(p_, q_, pp_, ppp_, pm1_, q_inv_p_, pm1_inv_pp_);
  mpz_class mq = solve(q_, p_, qq_, qqq_, qm1_, p_inv_q_, qm1_inv_qq_);
  return crt(mp, pp_, mq, qq_, qq_inv_pp_);
}

mpz_class SecretKey::noise1(Rng& rng) const {
  mpz_class r = rng.unit(pk_.n());
  mpz_class rp = powm(r, e1p_, pp_);
  mpz_class rq = powm(r, e1q_, qq_);
  return crt(rp, pp_, rq, qq_, qq_inv_pp_);
}

mpz_class SecretKey::noise2(Rng& rng) const {
  mpz_class r = rng.unit(pk_.n());
  mpz_class rp = powm(r, e2p_, ppp_);
  mpz_class rq = powm(r, e2q_, qqq_);
  return crt(rp, ppp_, rq, qqq_, qqq_inv_ppp_);
}

Ciphertext1 SecretKey::encrypt(const mpz_class& m, Rng& rng) const {
  if (sgn(m) < 0 || m >= pk_.n()) throw DomainError("plaintext outside Z_N");
  return {mod((1 + m * pk_.n()) * noise1(rng), pk_.n2())};
}

Ciphertext1 SecretKey::rerandomize(const Ciphertext1& c, Rng& rng) const {
  return {mod(c.v * noise1(rng), pk_.n2())};
}

Ciphertext2 SecretKey::encrypt2(const mpz_class& m, Rng& rng) const {
  if (sgn(m) < 0 || m >= pk_.n2()) {
    throw DomainError("plaintext outside Z_{N^2}");
  }
  return {mod(pk_.lift(m).v * noise2(rng), pk_.n3())};
}

Bytes SecretKey::serialize() const {
  ByteWriter w;
  w.mpz_lp(p_);
  w.mpz_lp(q_);
  return w.take();
}

SecretKey SecretKey::deserialize(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  mpz_class p = r.mpz_lp();
  mpz_class q = r.mpz_lp();
  r.expect_done();
  if (p < 3 || q < 3) throw KeyError("malformed secret key");
  return SecretKey(p, q);
}

KeyPair keygen(unsigned bits, Rng& rng) {
  if (bits < 256) throw DomainError("key size below 256 bits");
  unsigned pbits = bits / 2;
  unsigned qbits = bits - pbits;
  for (int attempt = 0; attempt < 100; ++attempt) {
    mpz_class p = random_prime(pbits, rng);
    mpz_class q = random_prime(qbits, rng);
    if (p == q) continue;
    mpz_class n = p * q;
    if (mpz_sizeinbase(n.get_mpz_t(), 2) != bits) continue;
    mpz_class phi = (p - 1) * (q - 1);
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), n.get_mpz_t(), phi.get_mpz_t());
    if (g != 1) continue;
    SecretKey sk(p, q);
    return {sk.pk(), sk};
  }
  throw KeyError("key generation failed after bounded retries");
}

unsigned profile_bits(std::string_view profile) {
  if (profile == "test") return 512;
  if (profile == "bench") return 2048;
  if (profile == "paper") return 3072;
  throw UsageError("unknown key profile '" + std::string(profile) + "'");
}

}  // namespace enctopk
