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

// Plaintext reference algorithms: NRA top-k with per-depth bounds, and the
// top-k equi-join.

#ifndef ENCTOPK_ORACLE_HPP_
#define ENCTOPK_ORACLE_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "enctopk/relation.hpp"

namespace enctopk {

struct Bounds {
  std::uint64_t worst = 0;
  std::uint64_t best = 0;
  bool operator==(const Bounds& o) const {
    return worst == o.worst && best == o.best;
  }
};

struct TopKEntry {
  std::size_t row;
  std::string id;
  std::uint64_t worst;
  std::uint64_t best;
};

struct TopKAnswer {
  std::vector<TopKEntry> items;
  std::size_t depth = 0;
};

// A scoring query: attribute indices and their weights.
struct ScoringQuery {
  std::vector<std::size_t> attrs;
  std::vector<std::uint64_t> weights;  // empty means all 1

  std::uint64_t weight(std::size_t i) const {
    return weights.empty() ? 1 : weights[i];
  }
  void validate(const Relation& r) const;
};

// Incremental NRA bookkeeping over sorted access.
class NraState {
 public:
  NraState(const Relation& r, ScoringQuery q);

  // Read depth d+1 from every list.
  void step();
  std::size_t depth() const { return depth_; }
  std::size_t n() const { return r_.n(); }

  // Bounds of every object seen so far.
  std::map<std::size_t, Bounds> bounds() const;
  Bounds bounds_of(std::size_t row) const;
  bool seen(std::size_t row) const { return seen_count_[row] > 0; }
  std::size_t distinct_seen() const;
  // Weighted bottom values and their sum (the unseen-object best score).
  const std::vector<std::uint64_t>& bottoms() const { return bottoms_; }
  std::uint64_t unseen_bound() const;

  // Seen objects ordered by (worst desc, best desc, id asc).
  std::vector<std::size_t> ranking() const;
  // Halting test at the current depth.
  bool halts(std::size_t k) const;

 private:
  const Relation& r_;
  ScoringQuery q_;
  std::vector<SortedList> lists_;
  std::size_t depth_ = 0;
  std::vector<std::uint64_t> bottoms_;
  std::vector<std::uint64_t> known_;             // per row, sum of seen scores
  std::vector<std::vector<bool>> seen_in_;       // per row, per list
  std::vector<std::size_t> seen_count_;
};

// check_every = 1 mirrors full/elim mode; p mirrors batch mode, which tests
// the halting condition only at multiples of p (and at depth n).
TopKAnswer nra_topk(const Relation& r, const ScoringQuery& q, std::size_t k,
                    std::size_t check_every = 1);

std::map<std::size_t, Bounds> bounds_at_depth(const Relation& r,
                                              const ScoringQuery& q,
                                              std::size_t d);

std::uint64_t exact_score(const Relation& r, const ScoringQuery& q,
                          std::size_t row);
// Scores of the k best objects by exhaustive scoring, descending.
std::vector<std::uint64_t> brute_force_topk_scores(const Relation& r,
                                                   const ScoringQuery& q,
                                                   std::size_t k);

struct JoinRow {
  std::size_t row1;
  std::size_t row2;
  std::uint64_t score;
};

// Equi-join on R1.a = R2.b scored by R1.t3 + R2.t4, descending.
std::vector<JoinRow> plain_join(const Relation& r1, const Relation& r2,
                                std::size_t a, std::size_t b, std::size_t t3,
                                std::size_t t4);
std::vector<JoinRow> plain_join_topk(const Relation& r1, const Relation& r2,
                                     std::size_t a, std::size_t b,
                                     std::size_t t3, std::size_t t4,
                                     std::size_t k);

}  // namespace enctopk

#endif  // ENCTOPK_ORACLE_HPP_
