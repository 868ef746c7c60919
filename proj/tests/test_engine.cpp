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
#include <map>

#include "cloud_fixture.hpp"
#include "enctopk/engine.hpp"
#include "enctopk/errors.hpp"
#include "enctopk/oracle.hpp"

namespace enctopk {
namespace {

class EngineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    Rng rng(51);
    kp_ = new KeyPair(keygen(512, rng));
    Rng krng(52);
    keys_ = new EhlKeySet(EhlKeySet::generate(EhlVariant::kPlus, 3, 0, krng));
    Rng prng(53);
    prp_ = new PrpKey(PrpKey::generate(prng));
  }
  static void TearDownTestSuite() {
    delete kp_;
    delete keys_;
    delete prp_;
  }

  EncryptedRelation encrypt(const Relation& r, std::uint64_t seed) {
    Rng rng(seed);
    return encrypt_relation(r, kp_->pk, *keys_, *prp_, rng);
  }

  std::map<std::string, Bounds> decrypt_state(const std::vector<TopItem>& t,
                                              const Relation& r) {
    PreimageTable ids(*keys_, kp_->pk);
    ids.add_all(r);
    std::map<std::string, Bounds> out;
    for (const auto& it : t) {
      mpz_class w = kp_->pk.to_signed(kp_->sk.decrypt(it.worst));
      mpz_class b = kp_->pk.to_signed(kp_->sk.decrypt(it.best));
      if (w == -1) {
        EXPECT_EQ(b, -1);
        continue;
      }
      auto id = ids.lookup(kp_->sk, it.ehl);
      EXPECT_TRUE(id.has_value());
      EXPECT_EQ(out.count(*id), 0u) << "duplicate " << *id;
      out[*id] = {w.get_ui(), b.get_ui()};
    }
    return out;
  }

  static std::map<std::string, Bounds> oracle_state(const Relation& r,
                                                    const ScoringQuery& q,
                                                    std::size_t d) {
    std::map<std::string, Bounds> out;
    for (const auto& [row, b] : bounds_at_depth(r, q, d)) out[r.ids[row]] = b;
    return out;
  }

  std::vector<PlainResultItem> run_query(const Relation& r,
                                         const EncryptedRelation& er,
                                         const ScoringQuery& q, std::uint32_t k,
                                         QueryMode mode, QueryResult* out = nullptr,
                                         PairRun* run = nullptr,
                                         DepthObserver observer = {}) {
    Token tok = make_token(*prp_, r.m(), q, k);
    QueryResult res;
    PairRun local;
    with_cloud(*kp_, [&](S1Session& s) {
      QueryEngine eng(s, nullptr);
      EngineOptions opt;
      opt.mode = mode;
      opt.observer = observer;
      res = eng.sec_query(tok, er, opt);
    }, run != nullptr ? *run : local, k * 31 + static_cast<std::uint64_t>(mode.kind));
    PreimageTable ids(*keys_, kp_->pk);
    ids.add_all(r);
    auto plain = decrypt_result(kp_->sk, ids, res.items);
    if (out != nullptr) *out = std::move(res);
    return plain;
  }

  static KeyPair* kp_;
  static EhlKeySet* keys_;
  static PrpKey* prp_;
};

KeyPair* EngineTest::kp_ = nullptr;
EhlKeySet* EngineTest::keys_ = nullptr;
PrpKey* EngineTest::prp_ = nullptr;

ScoringQuery by_name(const Relation& r, std::vector<std::string> names) {
  ScoringQuery q;
  for (const auto& n : names) q.attrs.push_back(r.attr_index(n));
  return q;
}

TEST_F(EngineTest, TableOneCholThalach) {
  Relation r = load_csv(ENCTOPK_DATA_DIR "/patients.csv");
  auto er = encrypt(r, 1);
  ScoringQuery q = by_name(r, {"chol", "thalach"});
  for (QueryMode mode : {QueryMode::full(), QueryMode::elim(), QueryMode::batch(2)}) {
    QueryResult res;
    auto got = run_query(r, er, q, 2, mode, &res);
    ASSERT_EQ(got.size(), 2u) << mode.to_string();
    EXPECT_EQ(got[0].id, "David");
    EXPECT_EQ(got[0].worst, 390);
    EXPECT_EQ(got[1].id, "Emma");
    EXPECT_EQ(got[1].worst, 379);
    if (mode.kind != ModeKind::kBatch) {
      EXPECT_EQ(res.depth, nra_topk(r, q, 2).depth);
    }
  }
}

TEST_F(EngineTest, ExhaustiveScanWhenKAtLeastN) {
  Relation r = load_csv(ENCTOPK_DATA_DIR "/patients.csv");
  auto er = encrypt(r, 2);
  ScoringQuery q = by_name(r, {"age", "trestbps", "thalach"});
  for (std::uint32_t k : {5u, 9u}) {
    QueryResult res;
    auto got = run_query(r, er, q, k, QueryMode::full(), &res);
    EXPECT_EQ(res.depth, r.n());
    ASSERT_EQ(got.size(), r.n());
    for (const auto& it : got) {
      std::size_t row = 0;
      while (r.ids[row] != it.id) ++row;
      EXPECT_EQ(it.worst, static_cast<std::int64_t>(exact_score(r, q, row)));
      EXPECT_EQ(it.best, it.worst);
    }
    for (std::size_t i = 1; i < got.size(); ++i) EXPECT_GE(got[i - 1].worst, got[i].worst);
  }
}

TEST_F(EngineTest, RandomRelationsMatchOracleInAllModes) {
  Rng rng(99);
  for (int trial = 0; trial < 4; ++trial) {
    Relation r = random_relation(20, 4, 8, trial % 2 == 0 ? 16 : 256, rng);
    auto er = encrypt(r, 100 + trial);
    ScoringQuery q;
    q.attrs = {0, 2, 3};
    if (trial == 3) q.weights = {1, 3, 2};
    for (std::uint32_t k : {1u, 3u}) {
      auto want = brute_force_topk_scores(r, q, k);
      for (QueryMode mode : {QueryMode::full(), QueryMode::elim(), QueryMode::batch(2 * k)}) {
        QueryResult res;
        auto got = run_query(r, er, q, k, mode, &res);
        std::vector<std::uint64_t> scores;
        for (const auto& it : got) {
          std::size_t row = 0;
          while (r.ids[row] != it.id) ++row;
          scores.push_back(exact_score(r, q, row));
        }
        std::sort(scores.rbegin(), scores.rend());
        EXPECT_EQ(scores, want) << "trial " << trial << " k " << k << " " << mode.to_string();
        auto oracle = nra_topk(r, q, k, mode.kind == ModeKind::kBatch ? mode.p : 1);
        EXPECT_EQ(res.depth, oracle.depth) << mode.to_string();
        ASSERT_EQ(got.size(), oracle.items.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
          EXPECT_EQ(static_cast<std::uint64_t>(got[i].worst), oracle.items[i].worst);
          EXPECT_EQ(static_cast<std::uint64_t>(got[i].best), oracle.items[i].best);
        }
      }
    }
  }
}

TEST_F(EngineTest, StateMatchesOracleBoundsAtEveryDepth) {
  Rng rng(7);
  Relation r = random_relation(12, 4, 8, 10, rng);
  auto er = encrypt(r, 8);
  ScoringQuery q;
  q.attrs = {0, 1, 2, 3};
  for (QueryMode mode : {QueryMode::full(), QueryMode::elim()}) {
    Token tok = make_token(*prp_, r.m(), q, 2);
    std::size_t checked = 0;
    with_cloud(*kp_, [&](S1Session& s) {
      QueryEngine eng(s, nullptr);
      EngineOptions opt;
      opt.mode = mode;
      opt.halting = false;
      opt.observer = [&](std::uint32_t d, const std::vector<TopItem>& t) {
        EXPECT_EQ(decrypt_state(t, r), oracle_state(r, q, d)) << "depth " << d;
        if (mode.kind == ModeKind::kFull) EXPECT_EQ(t.size(), q.attrs.size() * d);
        ++checked;
      };
      auto res = eng.sec_query(tok, er, opt);
      EXPECT_EQ(res.depth, r.n());
    });
    EXPECT_EQ(checked, r.n());
  }
}

TEST_F(EngineTest, UnseenBoundIsNeededForCorrectness) {
  // The best seen object has W = 10 after depth 1 while an unseen object
  // can still reach 6 + 6 = 12; halting on W_k vs B_(k+1) alone would
  // return a wrong answer.
  Relation r;
  r.attr_names = {"a", "b"};
  r.ids = {"p", "q", "u"};
  r.values = {{10, 0}, {0, 7}, {6, 6}};
  auto er = encrypt(r, 9);
  ScoringQuery q;
  q.attrs = {0, 1};
  auto got = run_query(r, er, q, 1, QueryMode::full());
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].id, "u");
  EXPECT_EQ(got[0].worst, 12);
}

TEST_F(EngineTest, HaltingCheckTieIsNonStrict) {
  const PublicKey& pk = kp_->pk;
  Rng rng(3);
  auto item = [&](long w, long b) {
    return TopItem{{}, {}, pk.encrypt(pk.encode_signed(w), rng),
                   pk.encrypt(pk.encode_signed(b), rng)};
  };
  std::vector<TopItem> t = {item(9, 9), item(5, 8), item(4, 5), item(-1, -1)};
  std::vector<Ciphertext1> low = {pk.encrypt(2, rng), pk.encrypt(3, rng)};
  std::vector<Ciphertext1> high = {pk.encrypt(2, rng), pk.encrypt(4, rng)};
  bool tie = false, over = true, unseen = true, k1 = true, few = true;
  with_cloud(*kp_, [&](S1Session& s) {
    tie = halting_check(s, t, low, 2);     // B_3 = 5 = W_2
    unseen = halting_check(s, t, high, 2); // 2 + 4 > 5
    k1 = halting_check(s, t, low, 1);      // B_2 = 8 < 9 but B_3 = 5
    t[2] = item(4, 6);
    over = halting_check(s, t, low, 2);
    few = halting_check(s, t, low, 5);
  });
  EXPECT_FALSE(few);
  EXPECT_TRUE(tie);
  EXPECT_FALSE(unseen);
  EXPECT_TRUE(k1);
  EXPECT_FALSE(over);
}

TEST_F(EngineTest, QueryPatternAndS1Leakage) {
  Relation r = load_csv(ENCTOPK_DATA_DIR "/patients.csv");
  auto er = encrypt(r, 4);
  ScoringQuery q = by_name(r, {"chol", "thalach"});
  Token tok = make_token(*prp_, r.m(), q, 2);
  Token other = make_token(*prp_, r.m(), by_name(r, {"age", "chol"}), 2);
  PairRun run;
  LeakageLog log;
  with_cloud(*kp_, [&](S1Session& s) {
    QueryEngine eng(s, &log);
    EngineOptions opt;
    eng.sec_query(tok, er, opt);
    eng.sec_query(other, er, opt);
    opt.mode = QueryMode::elim();
    eng.sec_query(tok, er, opt);
  }, run);
  std::vector<std::uint64_t> qp;
  std::set<LeakKind> kinds;
  for (const auto& e : log.events()) {
    kinds.insert(e.kind);
    if (e.kind == LeakKind::kQueryPattern) qp.push_back(e.value);
  }
  EXPECT_EQ(qp, (std::vector<std::uint64_t>{0, 0, 1}));
  EXPECT_EQ(kinds, (std::set<LeakKind>{LeakKind::kQueryPattern, LeakKind::kHaltDepth,
                                      LeakKind::kUniqueCount}));
}

TEST_F(EngineTest, PerDepthTrafficIsIndependentOfK) {
  Rng rng(12);
  Relation r = random_relation(10, 3, 8, 50, rng);
  auto er = encrypt(r, 13);
  ScoringQuery q;
  q.attrs = {0, 1, 2};
  std::vector<std::vector<DepthTraffic>> reports;
  for (std::uint32_t k : {1u, 4u}) {
    PairRun run;
    Token tok = make_token(*prp_, r.m(), q, k);
    with_cloud(*kp_, [&](S1Session& s) {
      QueryEngine eng(s, nullptr);
      EngineOptions opt;
      opt.halting = true;
      eng.sec_query(tok, er, opt);
    }, run, 5);
    reports.push_back(transcript_report(run.transcript));
  }
  std::size_t common = std::min(reports[0].size(), reports[1].size());
  ASSERT_GT(common, 1u);
  // The last common depth may end the shorter run.
  for (std::size_t i = 0; i + 1 < common; ++i) {
    EXPECT_EQ(reports[0][i].bytes[0], reports[1][i].bytes[0]) << i;
    EXPECT_EQ(reports[0][i].bytes[1], reports[1][i].bytes[1]) << i;
    EXPECT_EQ(reports[0][i].total_messages(), reports[1][i].total_messages()) << i;
  }
}

TEST_F(EngineTest, RejectsBadInputs) {
  Relation r = load_csv(ENCTOPK_DATA_DIR "/patients.csv");
  auto er = encrypt(r, 5);
  ScoringQuery q = by_name(r, {"chol", "thalach"});
  Token tok = make_token(*prp_, r.m(), q, 2);
  EngineOptions batch;
  batch.mode = QueryMode::batch(1);
  EXPECT_THROW(with_cloud(*kp_, [&](S1Session& s) {
    QueryEngine(s, nullptr).sec_query(tok, er, batch);
  }), DomainError);
  Token bad = tok;
  bad.lists[0] = 17;
  EXPECT_THROW(with_cloud(*kp_, [&](S1Session& s) {
    QueryEngine(s, nullptr).sec_query(bad, er, {});
  }), DomainError);
  Rng rng(1);
  KeyPair other = keygen(512, rng);
  EXPECT_THROW(with_cloud(other, [&](S1Session& s) {
    QueryEngine(s, nullptr).sec_query(tok, er, {});
  }), KeyError);
  EXPECT_THROW(QueryMode::parse("batch:"), UsageError);
  EXPECT_THROW(QueryMode::parse("fast"), UsageError);
  EXPECT_EQ(QueryMode::parse("batch:12").p, 12u);
}

TEST_F(EngineTest, DecryptResultRejectsSentinels) {
  const PublicKey& pk = kp_->pk;
  Rng rng(2);
  PreimageTable ids(*keys_, pk);
  ids.add("x");
  ScoredItem good{ehl_encode(*keys_, pk, as_bytes("x"), rng), pk.encrypt(3, rng),
                  pk.encrypt(4, rng)};
  ScoredItem bad{ehl_encode(*keys_, pk, as_bytes("x"), rng),
                 pk.encrypt(sentinel_score(pk), rng), pk.encrypt(sentinel_score(pk), rng)};
  EXPECT_EQ(decrypt_result(kp_->sk, ids, {good})[0].id, "x");
  EXPECT_TRUE(decrypt_result(kp_->sk, ids, {}).empty());
  EXPECT_THROW(decrypt_result(kp_->sk, ids, {good, bad}), ProtocolError);
}

TEST_F(EngineTest, JoinTopKMatchesPlainJoin) {
  Rng rng(21);
  for (int trial = 0; trial < 3; ++trial) {
    Relation r1 = random_relation(6, 3, 8, 4, rng);
    Relation r2 = random_relation(5, 2, 8, 4, rng);
    Rng erng(22 + trial);
    auto [j1, j2] = encrypt_join_relations(r1, r2, kp_->pk, *keys_, *prp_, erng);
    for (std::uint32_t k : {1u, 3u}) {
      JoinToken tok = make_join_token(*prp_, 3, 2, 0, 0, 1, 1, k);
      std::vector<JoinTuple> res;
      LeakageLog log;
      with_cloud(*kp_, [&](S1Session& s) {
        QueryEngine eng(s, &log);
        res = eng.join_topk(tok, j1, j2, Projection{});
      });
      auto plain = decrypt_join(kp_->sk, res);
      auto want = plain_join_topk(r1, r2, 0, 0, 1, 1, k);
      ASSERT_EQ(plain.size(), want.size());
      for (std::size_t i = 0; i < want.size(); ++i) EXPECT_EQ(plain[i].score, want[i].score);
      std::uint64_t count = 0;
      for (const auto& e : log.events()) {
        if (e.kind == LeakKind::kJoinCount) count = e.value;
      }
      EXPECT_EQ(count, plain_join(r1, r2, 0, 0, 1, 1).size());
    }
  }
}

TEST_F(EngineTest, EmptyJoin) {
  Relation r1, r2;
  r1.attr_names = {"k", "x"};
  r1.ids = {"a", "b"};
  r1.values = {{1, 3}, {2, 4}};
  r2.attr_names = {"k", "y"};
  r2.ids = {"c"};
  r2.values = {{9, 9}};
  Rng erng(3);
  auto [j1, j2] = encrypt_join_relations(r1, r2, kp_->pk, *keys_, *prp_, erng);
  JoinToken tok = make_join_token(*prp_, 2, 2, 0, 0, 1, 1, 2);
  std::vector<JoinTuple> res{JoinTuple{}};
  with_cloud(*kp_, [&](S1Session& s) {
    res = QueryEngine(s, nullptr).join_topk(tok, j1, j2, Projection{});
  });
  EXPECT_TRUE(res.empty());
}

}  // namespace
}  // namespace enctopk
