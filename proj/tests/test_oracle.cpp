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

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "enctopk/errors.hpp"
#include "enctopk/oracle.hpp"

namespace enctopk {
namespace {

Relation patients() { return load_csv(ENCTOPK_DATA_DIR "/patients.csv"); }

ScoringQuery query(const Relation& r, std::vector<std::string> names) {
  ScoringQuery q;
  for (const auto& n : names) q.attrs.push_back(r.attr_index(n));
  return q;
}

std::vector<std::uint64_t> scores_of(const Relation& r, const ScoringQuery& q,
                                     const TopKAnswer& a) {
  std::vector<std::uint64_t> s;
  for (const auto& it : a.items) s.push_back(exact_score(r, q, it.row));
  std::sort(s.rbegin(), s.rend());
  return s;
}

TEST(CsvTest, ParsesAndValidates) {
  Relation r = patients();
  EXPECT_EQ(r.n(), 5u);
  EXPECT_EQ(r.m(), 5u);
  EXPECT_EQ(r.ids[2], "David");
  EXPECT_EQ(r.at(2, r.attr_index("chol")), 248u);

  std::istringstream bad_width("id,a\nx,5000000000\n");
  EXPECT_THROW(read_csv(bad_width, 32), DomainError);
  std::istringstream dup("id,a\nx,1\nx,2\n");
  EXPECT_THROW(read_csv(dup), DomainError);
  std::istringstream neg("id,a\nx,-1\n");
  EXPECT_THROW(read_csv(neg), FormatError);
  std::istringstream ragged("id,a,b\nx,1\n");
  EXPECT_THROW(read_csv(ragged), FormatError);
}

TEST(SortedListTest, DescendingWithIdTieBreak) {
  std::istringstream in("id,a\nz,3\ny,5\nx,3\n");
  Relation r = read_csv(in);
  SortedList l = sorted_list(r, 0);
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(r.ids[l[0].row], "y");
  EXPECT_EQ(r.ids[l[1].row], "x");
  EXPECT_EQ(r.ids[l[2].row], "z");
}

TEST(NraTest, TableOneExample) {
  Relation r = patients();
  TopKAnswer a = nra_topk(r, query(r, {"chol", "thalach"}), 2);
  ASSERT_EQ(a.items.size(), 2u);
  EXPECT_EQ(a.items[0].id, "David");
  EXPECT_EQ(a.items[0].worst, 390u);
  EXPECT_EQ(a.items[1].id, "Emma");
  EXPECT_EQ(a.items[1].worst, 379u);
  EXPECT_EQ(a.depth, 5u);
}

TEST(NraTest, FullScanWhenKEqualsN) {
  Relation r = patients();
  ScoringQuery q = query(r, {"age", "trestbps", "chol"});
  TopKAnswer a = nra_topk(r, q, r.n());
  EXPECT_EQ(a.depth, r.n());
  ASSERT_EQ(a.items.size(), r.n());
  for (const auto& it : a.items) {
    EXPECT_EQ(it.worst, exact_score(r, q, it.row));
    EXPECT_EQ(it.best, it.worst);
  }
  EXPECT_EQ(scores_of(r, q, a), brute_force_topk_scores(r, q, r.n()));
  // k beyond n returns every object.
  EXPECT_EQ(nra_topk(r, q, 50).items.size(), r.n());
}

TEST(NraTest, RandomRelationsMatchBruteForce) {
  Rng rng(2024);
  for (int inst = 0; inst < 50; ++inst) {
    Relation r = random_relation(20, 4, 16, 1 << 6, rng);
    ScoringQuery q;
    std::size_t m = 1 + rng.below(4);
    auto perm = rng.permutation(4);
    q.attrs.assign(perm.begin(), perm.begin() + static_cast<long>(m));
    if (inst % 3 == 0) {
      for (std::size_t i = 0; i < m; ++i) q.weights.push_back(rng.below(4));
    }
    std::size_t k = 1 + rng.below(8);
    TopKAnswer a = nra_topk(r, q, k);
    ASSERT_EQ(scores_of(r, q, a), brute_force_topk_scores(r, q, k));
    for (std::size_t p : {2u, 5u}) {
      TopKAnswer b = nra_topk(r, q, k, p);
      ASSERT_EQ(scores_of(r, q, b), brute_force_topk_scores(r, q, k));
      ASSERT_GE(b.depth, a.depth);
      ASSERT_LT(b.depth, a.depth + p);
    }
  }
}

TEST(NraTest, HandComputedBounds) {
  std::istringstream in("id,x,y\na,5,1\nb,3,4\nc,1,6\n");
  Relation r = read_csv(in);
  ScoringQuery q{{0, 1}, {}};
  auto b1 = bounds_at_depth(r, q, 1);
  ASSERT_EQ(b1.size(), 2u);
  EXPECT_EQ(b1.at(0), (Bounds{5, 11}));
  EXPECT_EQ(b1.at(2), (Bounds{6, 11}));
  auto b2 = bounds_at_depth(r, q, 2);
  EXPECT_EQ(b2.at(0), (Bounds{5, 9}));
  EXPECT_EQ(b2.at(1), (Bounds{7, 7}));
  EXPECT_EQ(b2.at(2), (Bounds{6, 9}));
  auto b3 = bounds_at_depth(r, q, 3);
  for (auto& [row, b] : b3) {
    EXPECT_EQ(b.worst, exact_score(r, q, row));
    EXPECT_EQ(b.best, b.worst);
  }
  EXPECT_THROW(bounds_at_depth(r, q, 0), DomainError);
  EXPECT_THROW(bounds_at_depth(r, q, 4), DomainError);
}

TEST(NraTest, MonotoneBoundsAndHaltingInvariant) {
  Rng rng(7);
  for (int inst = 0; inst < 20; ++inst) {
    Relation r = random_relation(25, 3, 16, 100, rng);
    ScoringQuery q{{0, 1, 2}, {}};
    std::size_t k = 1 + rng.below(5);
    NraState st(r, q);
    std::map<std::size_t, Bounds> prev;
    while (st.depth() < r.n()) {
      st.step();
      auto cur = st.bounds();
      for (auto& [row, b] : prev) {
        ASSERT_LE(b.worst, cur.at(row).worst);
        ASSERT_GE(b.best, cur.at(row).best);
      }
      prev = cur;
      if (st.halts(k) && st.depth() < r.n()) {
        auto rank = st.ranking();
        std::uint64_t mk = cur.at(rank[k - 1]).worst;
        for (std::size_t i = k; i < rank.size(); ++i) {
          ASSERT_LE(cur.at(rank[i]).best, mk);
        }
        ASSERT_LE(st.unseen_bound(), mk);
      }
    }
  }
}

// Without the unseen-object bound, NRA would halt at depth 1 here with
// k = 2: the two seen objects fill the top-k and nothing seen lies outside
// it, yet the never-seen c has the highest score.
TEST(NraTest, UnseenBoundIsNecessary) {
  std::istringstream in("id,x,y\na,9,0\nb,0,9\nc,8,8\nd,1,1\n");
  Relation r = read_csv(in);
  ScoringQuery q{{0, 1}, {}};
  NraState st(r, q);
  st.step();
  EXPECT_EQ(st.ranking().size(), 2u);
  EXPECT_EQ(st.unseen_bound(), 18u);
  EXPECT_FALSE(st.halts(2));
  TopKAnswer a = nra_topk(r, q, 2);
  EXPECT_EQ(a.items[0].id, "c");
}

TEST(JoinOracleTest, NestedLoop) {
  std::istringstream in1("id,k,s\nr1,1,10\nr2,2,20\nr3,1,5\n");
  std::istringstream in2("id,k,s\nq1,1,3\nq2,3,7\nq3,1,1\n");
  Relation r1 = read_csv(in1), r2 = read_csv(in2);
  auto all = plain_join(r1, r2, 0, 0, 1, 1);
  ASSERT_EQ(all.size(), 4u);
  EXPECT_EQ(all[0].score, 13u);
  auto top = plain_join_topk(r1, r2, 0, 0, 1, 1, 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[1].score, 11u);

  std::istringstream in3("id,k,s\nz,9,1\n");
  Relation r3 = read_csv(in3);
  EXPECT_TRUE(plain_join(r1, r3, 0, 0, 1, 1).empty());
  EXPECT_THROW(plain_join(r1, r3, 5, 0, 1, 1), DomainError);
}

}  // namespace
}  // namespace enctopk
