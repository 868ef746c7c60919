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

// Encrypted hash lists. The classic variant encrypts an H-bit list with s
// HMAC positions set; the plus variant encrypts s HMAC residues mod N.

#ifndef ENCTOPK_EHL_HPP_
#define ENCTOPK_EHL_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "enctopk/bytes.hpp"
#include "enctopk/paillier.hpp"
#include "enctopk/rng.hpp"

namespace enctopk {

enum class EhlVariant : std::uint8_t { kClassic = 0, kPlus = 1 };

struct EhlKeySet {
  EhlVariant variant = EhlVariant::kPlus;
  std::vector<Digest> keys;       // s HMAC keys
  std::uint32_t list_length = 0;  // H, classic only

  std::size_t s() const { return keys.size(); }
  std::size_t slots() const {
    return variant == EhlVariant::kPlus ? keys.size() : list_length;
  }
  void validate() const;

  static EhlKeySet generate(EhlVariant variant, std::size_t s,
                            std::uint32_t list_length, Rng& rng);
  Bytes serialize() const;
  static EhlKeySet deserialize(std::span<const std::uint8_t> b);
};

struct Ehl {
  std::vector<Ciphertext1> slots;
  std::size_t size() const { return slots.size(); }
};

// The deterministic plaintext slots behind an encoding.
std::vector<mpz_class> ehl_plaintext(const EhlKeySet& keys,
                                     const PublicKey& pk,
                                     std::span<const std::uint8_t> object_id);
// Classic variant: the s bit positions of an id.
std::vector<std::uint32_t> ehl_positions(const EhlKeySet& keys,
                                         std::span<const std::uint8_t> id);

Ehl ehl_encode(const EhlKeySet& keys, const PublicKey& pk,
               std::span<const std::uint8_t> object_id, Rng& rng);

// The randomized difference: prod_i (a_i / b_i)^{r_i}, r_i uniform in Z_N.
Ciphertext1 ehl_sub(const PublicKey& pk, const Ehl& a, const Ehl& b, Rng& rng);

// Slot-wise homomorphic addition of masks onto e.
Ehl ehl_blind(const PublicKey& pk, std::span<const Ciphertext1> masks,
              const Ehl& e);

struct FprParams {
  EhlVariant variant = EhlVariant::kPlus;
  std::uint64_t n = 0;
  std::size_t s = 0;
  std::uint32_t list_length = 0;  // classic
  unsigned modulus_bits = 0;      // plus
};

// Closed-form bounds: plus n^2 / N^s, classic 0.62^(H/n).
double fpr_bound(const FprParams& p);
double fpr_bound_log2(const FprParams& p);

void write_ehl(ByteWriter& w, const PublicKey& pk, EhlVariant variant,
               const Ehl& e);
Ehl read_ehl(ByteReader& r, const PublicKey& pk, EhlVariant variant,
             std::size_t slots);

}  // namespace enctopk

#endif  // ENCTOPK_EHL_HPP_
