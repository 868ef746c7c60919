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

#include "enctopk/rng.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <cstring>
#include <memory>
#include <numeric>

#include "enctopk/bytes.hpp"
#include "enctopk/errors.hpp"

namespace enctopk {

Rng::Rng(std::uint64_t seed) {
  ByteWriter w;
  w.raw(as_bytes("enctopk-rng-u64"));
  w.u64(seed);
  seed_ = sha256(w.data());
  key_ = hmac_sha256(seed_, as_bytes("key"));
}

Rng::Rng(std::span<const std::uint8_t> seed) {
  seed_ = sha256(seed);
  key_ = hmac_sha256(seed_, as_bytes("key"));
}

Rng Rng::from_entropy() {
  std::array<std::uint8_t, 32> s;
  if (RAND_bytes(s.data(), static_cast<int>(s.size())) != 1) {
    throw KeyError("OS entropy unavailable");
  }
  return Rng(std::span<const std::uint8_t>(s));
}

Rng Rng::fork(std::string_view label) const {
  Digest d = hmac_sha256(seed_, as_bytes(label));
  return Rng(std::span<const std::uint8_t>(d));
}

Rng Rng::fork(std::string_view label, std::uint64_t a, std::uint64_t b) const {
  ByteWriter w;
  w.raw(as_bytes(label));
  w.u64(a);
  w.u64(b);
  Digest d = hmac_sha256(seed_, w.data());
  return Rng(std::span<const std::uint8_t>(d));
}

void Rng::refill() {
  std::array<std::uint8_t, 16> iv{};
  std::uint64_t c = counter_;
  for (int i = 15; i >= 8; --i) {
    iv[i] = static_cast<std::uint8_t>(c);
    c >>= 8;
  }
  std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx(
      EVP_CIPHER_CTX_new(), EVP_CIPHER_CTX_free);
  std::array<std::uint8_t, 512> zeros{};
  int len = 0;
  if (!ctx ||
      EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_ctr(), nullptr, key_.data(),
                         iv.data()) != 1 ||
      EVP_EncryptUpdate(ctx.get(), buf_.data(), &len, zeros.data(),
                        static_cast<int>(zeros.size())) != 1) {
    throw KeyError("keystream generation failed");
  }
  counter_ += buf_.size() / 16;
  pos_ = 0;
}

void Rng::fill(std::uint8_t* out, std::size_t n) {
  while (n > 0) {
    if (pos_ == buf_.size()) refill();
    std::size_t take = std::min(n, buf_.size() - pos_);
    std::memcpy(out, buf_.data() + pos_, take);
    pos_ += take;
    out += take;
    n -= take;
  }
}

std::uint64_t Rng::next_u64() {
  std::uint8_t b[8];
  fill(b, 8);
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw DomainError("empty range");
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  for (;;) {
    std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

mpz_class Rng::bits(unsigned nbits) {
  if (nbits == 0) return 0;
  std::size_t nbytes = (nbits + 7) / 8;
  Bytes b(nbytes);
  fill(b.data(), nbytes);
  unsigned extra = static_cast<unsigned>(nbytes * 8 - nbits);
  b[0] &= static_cast<std::uint8_t>(0xFF >> extra);
  return mpz_from_bytes(b);
}

mpz_class Rng::below(const mpz_class& bound) {
  if (sgn(bound) <= 0) throw DomainError("empty range");
  unsigned nbits = static_cast<unsigned>(mpz_sizeinbase(bound.get_mpz_t(), 2));
  for (;;) {
    mpz_class v = bits(nbits);
    if (v < bound) return v;
  }
}

mpz_class Rng::unit(const mpz_class& bound) {
  for (;;) {
    mpz_class v = below(bound);
    if (sgn(v) == 0) continue;
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), v.get_mpz_t(), bound.get_mpz_t());
    if (g == 1) return v;
  }
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  shuffle(p);
  return p;
}

}  // namespace enctopk
