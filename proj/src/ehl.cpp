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

#include "enctopk/ehl.hpp"

#include <cmath>

#include "enctopk/errors.hpp"

namespace enctopk {

void EhlKeySet::validate() const {
  if (keys.empty()) throw DomainError("EHL needs s >= 1 keys");
  if (variant == EhlVariant::kClassic && list_length < keys.size()) {
    throw DomainError("classic EHL requires H >= s");
  }
  if (variant != EhlVariant::kClassic && variant != EhlVariant::kPlus) {
    throw DomainError("unknown EHL variant");
  }
}

EhlKeySet EhlKeySet::generate(EhlVariant variant, std::size_t s,
                              std::uint32_t list_length, Rng& rng) {
  EhlKeySet k;
  k.variant = variant;
  k.list_length = variant == EhlVariant::kClassic ? list_length : 0;
  k.keys.resize(s);
  for (auto& key : k.keys) rng.fill(key.data(), key.size());
  k.validate();
  return k;
}

Bytes EhlKeySet::serialize() const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(variant));
  w.u32(list_length);
  w.u16(static_cast<std::uint16_t>(keys.size()));
  for (const auto& key : keys) w.bytes_lp(key);
  return w.take();
}

EhlKeySet EhlKeySet::deserialize(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  EhlKeySet k;
  k.variant = static_cast<EhlVariant>(r.u8());
  k.list_length = r.u32();
  std::uint16_t s = r.u16();
  for (std::uint16_t i = 0; i < s; ++i) {
    Bytes key = r.bytes_lp();
    if (key.size() != 32) throw FormatError("EHL key must be 32 bytes");
    Digest d;
    std::copy(key.begin(), key.end(), d.begin());
    k.keys.push_back(d);
  }
  r.expect_done();
  k.validate();
  return k;
}

std::vector<std::uint32_t> ehl_positions(const EhlKeySet& keys,
                                         std::span<const std::uint8_t> id) {
  std::vector<std::uint32_t> pos;
  mpz_class h(keys.list_length);
  for (const auto& key : keys.keys) {
    Digest mac = hmac_sha256(key, id);
    mpz_class v = mpz_from_bytes(mac);
    pos.push_back(static_cast<std::uint32_t>(mpz_class(v % h).get_ui()));
  }
  return pos;
}

std::vector<mpz_class> ehl_plaintext(const EhlKeySet& keys,
                                     const PublicKey& pk,
                                     std::span<const std::uint8_t> object_id) {
  if (object_id.empty()) throw DomainError("empty object id");
  keys.validate();
  if (keys.variant == EhlVariant::kPlus) {
    std::vector<mpz_class> out;
    out.reserve(keys.s());
    for (const auto& key : keys.keys) {
      Digest mac = hmac_sha256(key, object_id);
      out.push_back(mpz_class(mpz_from_bytes(mac) % pk.n()));
    }
    return out;
  }
  std::vector<mpz_class> out(keys.list_length, 0);
  for (std::uint32_t p : ehl_positions(keys, object_id)) out[p] = 1;
  return out;
}

Ehl ehl_encode(const EhlKeySet& keys, const PublicKey& pk,
               std::span<const std::uint8_t> object_id, Rng& rng) {
  Ehl e;
  for (const auto& m : ehl_plaintext(keys, pk, object_id)) {
    e.slots.push_back(pk.encrypt(m, rng));
  }
  return e;
}

Ciphertext1 ehl_sub(const PublicKey& pk, const Ehl& a, const Ehl& b,
                    Rng& rng) {
  if (a.size() != b.size() || a.size() == 0) {
    throw DomainError("EHL length mismatch");
  }
  mpz_class acc = 1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    Ciphertext1 d = pk.sub(a.slots[i], b.slots[i]);
    mpz_class r = rng.below(pk.n());
    acc = acc * pk.scale(d, r).v % pk.n2();
  }
  return {acc};
}

Ehl ehl_blind(const PublicKey& pk, std::span<const Ciphertext1> masks,
              const Ehl& e) {
  if (masks.size() != e.size()) throw DomainError("mask length mismatch");
  Ehl out;
  out.slots.reserve(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    out.slots.push_back(pk.add(masks[i], e.slots[i]));
  }
  return out;
}

double fpr_bound_log2(const FprParams& p) {
  if (p.s == 0 || p.n == 0) throw DomainError("FPR parameters must be positive");
  if (p.variant == EhlVariant::kPlus) {
    if (p.modulus_bits < 2) throw DomainError("modulus bits must be positive");
    // N >= 2^(bits-1).
    return 2.0 * std::log2(static_cast<double>(p.n)) -
           static_cast<double>(p.s) * (p.modulus_bits - 1);
  }
  if (p.list_length == 0) throw DomainError("H must be positive");
  return static_cast<double>(p.list_length) / static_cast<double>(p.n) *
         std::log2(0.62);
}

double fpr_bound(const FprParams& p) {
  double l = fpr_bound_log2(p);
  return std::min(1.0, std::exp2(l));
}

void write_ehl(ByteWriter& w, const PublicKey& pk, EhlVariant variant,
               const Ehl& e) {
  w.u8(static_cast<std::uint8_t>(variant));
  w.u32(static_cast<std::uint32_t>(e.size()));
  for (const auto& c : e.slots) pk.write_ct(w, c);
}

Ehl read_ehl(ByteReader& r, const PublicKey& pk, EhlVariant variant,
             std::size_t slots) {
  if (r.u8() != static_cast<std::uint8_t>(variant)) {
    throw FormatError("EHL variant tag mismatch");
  }
  std::uint32_t n = r.u32();
  if (n != slots) throw FormatError("EHL slot count mismatch");
  Ehl e;
  e.slots.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) e.slots.push_back(pk.read_ct1(r));
  return e;
}

}  // namespace enctopk
