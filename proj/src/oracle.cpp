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

#include "enctopk/oracle.hpp"

#include <algorithm>
#include <set>

#include "enctopk/errors.hpp"

namespace enctopk {

void ScoringQuery::validate(const Relation& r) const {
  if (attrs.empty()) throw DomainError("empty attribute set");
  std::set<std::size_t> uniq(attrs.begin(), attrs.end());
  if (uniq.size() != attrs.size()) throw DomainError("duplicate attribute");
  for (auto a : attrs) {
    if (a >= r.m()) throw DomainError("attribute index out of range");
  }
  if (!weights.empty() && weights.size() != attrs.size()) {
    throw DomainError("weight count mismatch");
  }
}

NraState::NraState(const Relation& r, ScoringQuery q)
    : r_(r), q_(std::move(q)) {
  q_.validate(r_);
  for (auto a : q_.attrs) lists_.push_back(sorted_list(r_, a));
  bottoms_.assign(q_.attrs.size(), 0);
  known_.assign(r_.n(), 0);
  seen_in_.assign(r_.n(), std::vector<bool>(q_.attrs.size(), false));
  seen_count_.assign(r_.n(), 0);
}

void NraState::step() {
  if (depth_ >= r_.n()) throw DomainError("depth beyond list length");
  for (std::size_t l = 0; l < lists_.size(); ++l) {
    const ListEntry& e = lists_[l][depth_];
    std::uint64_t v = e.value * q_.weight(l);
    bottoms_[l] = v;
    known_[e.row] += v;
    seen_in_[e.row][l] = true;
    ++seen_count_[e.row];
  }
  ++depth_;
}

Bounds NraState::bounds_of(std::size_t row) const {
  Bounds b{known_[row], known_[row]};
  for (std::size_t l = 0; l < lists_.size(); ++l) {
    if (!seen_in_[row][l]) b.best += bottoms_[l];
  }
  return b;
}

std::map<std::size_t, Bounds> NraState::bounds() const {
  std::map<std::size_t, Bounds> out;
  for (std::size_t i = 0; i < r_.n(); ++i) {
    if (seen_count_[i] > 0) out[i] = bounds_of(i);
  }
  return out;
}

std::size_t NraState::distinct_seen() const {
  return static_cast<std::size_t>(std::count_if(
      seen_count_.begin(), seen_count_.end(), [](auto c) { return c > 0; }));
}

std::uint64_t NraState::unseen_bound() const {
  std::uint64_t s = 0;
  for (auto b : bottoms_) s += b;
  return s;
}

std::vector<std::size_t> NraState::ranking() const {
  std::vector<std::size_t> rows;
  std::vector<Bounds> b(r_.n());
  for (std::size_t i = 0; i < r_.n(); ++i) {
    if (seen_count_[i] > 0) {
      rows.push_back(i);
      b[i] = bounds_of(i);
    }
  }
  std::sort(rows.begin(), rows.end(), [&](std::size_t x, std::size_t y) {
    if (b[x].worst != b[y].worst) return b[x].worst > b[y].worst;
    if (b[x].best != b[y].best) return b[x].best > b[y].best;
    return r_.ids[x] < r_.ids[y];
  });
  return rows;
}

bool NraState::halts(std::size_t k) const {
  if (depth_ == r_.n()) return true;
  std::vector<std::size_t> rank = ranking();
  if (rank.size() < k) return false;
  std::uint64_t mk = bounds_of(rank[k - 1]).worst;
  for (std::size_t i = k; i < rank.size(); ++i) {
    if (bounds_of(rank[i]).best > mk) return false;
  }
  return unseen_bound() <= mk;
}

TopKAnswer nra_topk(const Relation& r, const ScoringQuery& q, std::size_t k,
                    std::size_t check_every) {
  if (k < 1) throw DomainError("k must be >= 1");
  if (check_every < 1) throw DomainError("check interval must be >= 1");
  NraState st(r, q);
  while (true) {
    st.step();
    bool check = st.depth() % check_every == 0 || st.depth() == r.n();
    if (check && st.halts(k)) break;
  }
  TopKAnswer ans;
  ans.depth = st.depth();
  auto rank = st.ranking();
  for (std::size_t i = 0; i < std::min(k, rank.size()); ++i) {
    Bounds b = st.bounds_of(rank[i]);
    ans.items.push_back({rank[i], r.ids[rank[i]], b.worst, b.best});
  }
  return ans;
}

std::map<std::size_t, Bounds> bounds_at_depth(const Relation& r,
                                              const ScoringQuery& q,
                                              std::size_t d) {
  if (d < 1 || d > r.n()) throw DomainError("depth out of range");
  NraState st(r, q);
  for (std::size_t i = 0; i < d; ++i) st.step();
  return st.bounds();
}

std::uint64_t exact_score(const Relation& r, const ScoringQuery& q,
                          std::size_t row) {
  std::uint64_t s = 0;
  for (std::size_t l = 0; l < q.attrs.size(); ++l) {
    s += r.at(row, q.attrs[l]) * q.weight(l);
  }
  return s;
}

std::vector<std::uint64_t> brute_force_topk_scores(const Relation& r,
                                                   const ScoringQuery& q,
                                                   std::size_t k) {
  q.validate(r);
  std::vector<std::uint64_t> s;
  for (std::size_t i = 0; i < r.n(); ++i) s.push_back(exact_score(r, q, i));
  std::sort(s.rbegin(), s.rend());
  s.resize(std::min(k, s.size()));
  return s;
}

std::vector<JoinRow> plain_join(const Relation& r1, const Relation& r2,
                                std::size_t a, std::size_t b, std::size_t t3,
                                std::size_t t4) {
  if (a >= r1.m() || t3 >= r1.m() || b >= r2.m() || t4 >= r2.m()) {
    throw DomainError("join attribute index out of range");
  }
  std::vector<JoinRow> out;
  for (std::size_t i = 0; i < r1.n(); ++i) {
    for (std::size_t j = 0; j < r2.n(); ++j) {
      if (r1.at(i, a) == r2.at(j, b)) {
        out.push_back({i, j, r1.at(i, t3) + r2.at(j, t4)});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const JoinRow& x, const JoinRow& y) {
                     return x.score > y.score;
                   });
  return out;
}

std::vector<JoinRow> plain_join_topk(const Relation& r1, const Relation& r2,
                                     std::size_t a, std::size_t b,
                                     std::size_t t3, std::size_t t4,
                                     std::size_t k) {
  auto all = plain_join(r1, r2, a, b, t3, t4);
  if (all.size() > k) all.resize(k);
  return all;
}

}  // namespace enctopk
