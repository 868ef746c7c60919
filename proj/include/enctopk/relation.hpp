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

#ifndef ENCTOPK_RELATION_HPP_
#define ENCTOPK_RELATION_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "enctopk/rng.hpp"

namespace enctopk {

// n objects with M non-negative integer attributes of `width` bits.
struct Relation {
  std::vector<std::string> attr_names;
  std::vector<std::string> ids;
  std::vector<std::vector<std::uint64_t>> values;  // n rows of M values
  unsigned width = 32;

  std::size_t n() const { return ids.size(); }
  std::size_t m() const { return attr_names.size(); }
  std::uint64_t at(std::size_t row, std::size_t attr) const {
    return values[row][attr];
  }
  std::size_t attr_index(std::string_view name) const;
  void validate() const;
};

// Header row of attribute names, first column the object id.
Relation read_csv(std::istream& in, unsigned width = 32);
Relation load_csv(const std::string& path, unsigned width = 32);
void write_csv(std::ostream& out, const Relation& r);

// Uniform values in [0, value_bound) with ids "o0", "o1", ...
Relation random_relation(std::size_t n, std::size_t m, unsigned width,
                         std::uint64_t value_bound, Rng& rng);

struct ListEntry {
  std::size_t row;
  std::uint64_t value;
};
using SortedList = std::vector<ListEntry>;

// One list per attribute, descending by value, ties by ascending id.
std::vector<SortedList> sorted_lists(const Relation& r);
SortedList sorted_list(const Relation& r, std::size_t attr);

}  // namespace enctopk

#endif  // ENCTOPK_RELATION_HPP_
