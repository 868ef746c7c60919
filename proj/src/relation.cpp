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

#include "enctopk/relation.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "enctopk/errors.hpp"

namespace enctopk {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::size_t Relation::attr_index(std::string_view name) const {
  for (std::size_t i = 0; i < attr_names.size(); ++i) {
    if (attr_names[i] == name) return i;
  }
  throw DomainError("unknown attribute '" + std::string(name) + "'");
}

void Relation::validate() const {
  if (ids.empty()) throw DomainError("relation has no rows");
  if (attr_names.empty()) throw DomainError("relation has no attributes");
  if (width == 0 || width > 62) throw DomainError("score width must be 1..62");
  if (values.size() != ids.size()) throw DomainError("row count mismatch");
  std::set<std::string> unique(ids.begin(), ids.end());
  if (unique.size() != ids.size()) throw DomainError("duplicate object id");
  for (const auto& id : ids) {
    if (id.empty()) throw DomainError("empty object id");
  }
  const std::uint64_t limit = std::uint64_t{1} << width;
  for (const auto& row : values) {
    if (row.size() != attr_names.size()) throw DomainError("ragged row");
    for (auto v : row) {
      if (v >= limit) {
        throw DomainError("value " + std::to_string(v) + " exceeds width " +
                          std::to_string(width));
      }
    }
  }
}

Relation read_csv(std::istream& in, unsigned width) {
  Relation r;
  r.width = width;
  std::string line;
  bool header = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (header) {
      if (cells.size() < 2) throw FormatError("CSV header needs id + attributes");
      r.attr_names.assign(cells.begin() + 1, cells.end());
      header = false;
      continue;
    }
    if (cells.size() != r.attr_names.size() + 1) {
      throw FormatError("CSV line " + std::to_string(lineno) +
                        ": wrong number of cells");
    }
    r.ids.push_back(cells[0]);
    std::vector<std::uint64_t> row;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      std::uint64_t v = 0;
      const auto& c = cells[i];
      auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (c.empty() || res.ec != std::errc() || res.ptr != c.data() + c.size()) {
        throw FormatError("CSV line " + std::to_string(lineno) +
                          ": not a non-negative integer: '" + c + "'");
      }
      row.push_back(v);
    }
    r.values.push_back(std::move(row));
  }
  if (header) throw FormatError("empty CSV");
  r.validate();
  return r;
}

Relation load_csv(const std::string& path, unsigned width) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_csv(in, width);
}

void write_csv(std::ostream& out, const Relation& r) {
  out << "id";
  for (const auto& a : r.attr_names) out << ',' << a;
  out << '\n';
  for (std::size_t i = 0; i < r.n(); ++i) {
    out << r.ids[i];
    for (auto v : r.values[i]) out << ',' << v;
    out << '\n';
  }
}

Relation random_relation(std::size_t n, std::size_t m, unsigned width,
                         std::uint64_t value_bound, Rng& rng) {
  Relation r;
  r.width = width;
  for (std::size_t j = 0; j < m; ++j) r.attr_names.push_back("a" + std::to_string(j));
  for (std::size_t i = 0; i < n; ++i) {
    r.ids.push_back("o" + std::to_string(i));
    std::vector<std::uint64_t> row;
    for (std::size_t j = 0; j < m; ++j) row.push_back(rng.below(value_bound));
    r.values.push_back(std::move(row));
  }
  r.validate();
  return r;
}

SortedList sorted_list(const Relation& r, std::size_t attr) {
  SortedList l;
  l.reserve(r.n());
  for (std::size_t i = 0; i < r.n(); ++i) l.push_back({i, r.at(i, attr)});
  std::sort(l.begin(), l.end(), [&](const ListEntry& a, const ListEntry& b) {
    if (a.value != b.value) return a.value > b.value;
    return r.ids[a.row] < r.ids[b.row];
  });
  return l;
}

std::vector<SortedList> sorted_lists(const Relation& r) {
  std::vector<SortedList> out;
  for (std::size_t j = 0; j < r.m(); ++j) out.push_back(sorted_list(r, j));
  return out;
}

}  // namespace enctopk
