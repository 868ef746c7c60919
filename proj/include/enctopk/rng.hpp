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

#ifndef ENCTOPK_RNG_HPP_
#define ENCTOPK_RNG_HPP_

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace enctopk {

// Deterministic random bit generator: AES-256-CTR keystream under a key
// derived from the seed. Streams can be split with fork().
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  explicit Rng(std::span<const std::uint8_t> seed);
  static Rng from_entropy();

  Rng(const Rng&) = default;
  Rng& operator=(const Rng&) = default;

  // Child stream determined by this stream's seed and the label only.
  Rng fork(std::string_view label) const;
  Rng fork(std::string_view label, std::uint64_t a, std::uint64_t b = 0) const;

  void fill(std::uint8_t* out, std::size_t n);
  std::uint64_t next_u64();
  // Uniform in [0, bound), bound > 0.
  std::uint64_t below(std::uint64_t bound);
  mpz_class below(const mpz_class& bound);
  // Uniform in [0, 2^bits).
  mpz_class bits(unsigned bits);
  // Uniform in [1, bound) coprime to bound.
  mpz_class unit(const mpz_class& bound);
  bool coin() { return (next_u64() & 1) != 0; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  void refill();

  std::array<std::uint8_t, 32> seed_{};
  std::array<std::uint8_t, 32> key_{};
  std::uint64_t counter_ = 0;
  std::array<std::uint8_t, 512> buf_{};
  std::size_t pos_ = 512;
};

}  // namespace enctopk

#endif  // ENCTOPK_RNG_HPP_
