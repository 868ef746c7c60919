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


// Batcher's odd-even merge sorting network.

#ifndef ENCTOPK_SORT_NETWORK_HPP_
#define ENCTOPK_SORT_NETWORK_HPP_

#include <cstddef>
#include <utility>
#include <vector>

namespace enctopk {

using Comparator = std::pair<std::size_t, std::size_t>;

// Comparators grouped into layers; comparators within a layer touch
// disjoint wires. Each comparator (i, j) has i < j and leaves the smaller
// element on i. For n that is not a power of two the network for the next
// power of two is pruned, treating the missing wires as +infinity.
inline std::vector<std::vector<Comparator>> batcher_layers(std::size_t n) {
  std::vector<std::vector<Comparator>> layers;
  std::size_t padded = 1;
  while (padded < n) padded <<= 1;
  for (std::size_t p = 1; p < padded; p <<= 1) {
    for (std::size_t k = p; k >= 1; k >>= 1) {
      std::vector<Comparator> layer;
      for (std::size_t j = k % p; j + k < padded; j += 2 * k) {
        for (std::size_t i = 0; i < k && i + j + k < padded; ++i) {
          std::size_t a = i + j, b = i + j + k;
          if (a / (2 * p) == b / (2 * p) && b < n) layer.emplace_back(a, b);
        }
      }
      if (!layer.empty()) layers.push_back(std::move(layer));
    }
  }
  return layers;
}

inline std::size_t batcher_size(std::size_t n) {
  std::size_t c = 0;
  for (const auto& l : batcher_layers(n)) c += l.size();
  return c;
}

// Comparator count of the full network on 2^t wires:
// (t^2 - t + 4) 2^(t-2) - 1.
inline std::size_t batcher_bound(std::size_t n) {
  if (n < 2) return 0;
  std::size_t t = 0;
  while ((std::size_t{1} << t) < n) ++t;
  if (t == 1) return 1;
  return (t * t - t + 4) * (std::size_t{1} << (t - 2)) - 1;
}

}  // namespace enctopk

#endif  // ENCTOPK_SORT_NETWORK_HPP_
