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

#include <sstream>

#include "cloud_fixture.hpp"
#include "enctopk/audit.hpp"
#include "enctopk/errors.hpp"

namespace enctopk {
namespace {

class AuditTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    Rng rng(61);
    kp_ = new KeyPair(keygen(512, rng));
    Rng krng(62);
    keys_ = new EhlKeySet(EhlKeySet::generate(EhlVariant::kPlus, 3, 0, krng));
  }
  static void TearDownTestSuite() {
    delete kp_;
    delete keys_;
  }

  // Runs the queries in one session with payloads kept.
  void run(const Relation& r, const std::vector<AuditQuery>& qs, PairRun& out,
           LeakageLog& s1_log) {
    Rng prng(63);
    PrpKey prp = PrpKey::generate(prng);
    Rng erng(64);
    auto er = encrypt_relation(r, kp_->pk, *keys_, prp, erng);
    run_pair(
        [&](Endpoint& ep, LeakageLog&) {
          S1Session s(ep, kp_->pk, Rng(65));
          QueryEngine eng(s, &s1_log);
          for (const auto& aq : qs) {
            EngineOptions opt;
            opt.mode = aq.mode;
            eng.sec_query(make_token(prp, r.m(), aq.query, aq.k), er, opt);
          }
        },
        crypto_cloud_program(kp_->sk, 66), ChannelKind::kInproc, out, true);
  }

  AuditInput input(const Relation& r, const std::vector<AuditQuery>& qs,
                   const PairRun& run, const LeakageLog& s1_log) {
    AuditInput in;
    in.relation = &r;
    in.queries = qs;
    in.s1 = s1_log.events();
    in.s2 = run.s2_log.events();
    in.frames = &run.transcript.frames();
    in.ehl_keys = keys_;
    in.pk = &kp_->pk;
    return in;
  }

  static KeyPair* kp_;
  static EhlKeySet* keys_;
};

KeyPair* AuditTest::kp_ = nullptr;
EhlKeySet* AuditTest::keys_ = nullptr;

AuditQuery aq(std::vector<std::size_t> attrs, std::uint32_t k, QueryMode mode) {
  AuditQuery a;
  a.query.attrs = std::move(attrs);
  a.k = k;
  a.mode = mode;
  return a;
}

TEST(PatternTest, AllDistinctDepthHasNoZeros) {
  Relation r;
  r.attr_names = {"a", "b"};
  r.ids = {"x", "y", "z"};
  r.values = {{9, 1}, {1, 9}, {5, 5}};
  ScoringQuery q;
  q.attrs = {0, 1};
  auto p = expected_pattern(r, q, QueryMode::full(), 3);
  EXPECT_EQ(p[0].worst_zeros, 0u);
  EXPECT_EQ(p[0].dedup_zeros, 0u);
  EXPECT_EQ(p[0].update_tests, 0u);
  // Depth 2 brings z in both lists, depth 3 brings y and x back.
  EXPECT_EQ(p[1].dedup_zeros, 1u);
  EXPECT_EQ(p[1].update_tests, 2u * 2u);
  EXPECT_EQ(p[2].update_zeros, 2u);
}

TEST(PatternTest, TripleAtDepthOneGivesThreeZeros) {
  Relation r;
  r.attr_names = {"a", "b", "c"};
  r.ids = {"x", "y"};
  r.values = {{9, 9, 9}, {1, 1, 1}};
  ScoringQuery q;
  q.attrs = {0, 1, 2};
  auto p = expected_pattern(r, q, QueryMode::elim(), 2);
  EXPECT_EQ(p[0].dedup_tests, 3u);
  EXPECT_EQ(p[0].dedup_zeros, 3u);
  EXPECT_EQ(p[0].worst_zeros, 6u);
  EXPECT_EQ(p[0].unique, 1u);
  EXPECT_EQ(p[1].update_tests, 1u);
  EXPECT_EQ(p[1].update_zeros, 0u);
}

TEST_F(AuditTest, CleanRunsPass) {
  Relation r = load_csv(ENCTOPK_DATA_DIR "/patients.csv");
  std::vector<AuditQuery> qs = {aq({3, 4}, 2, QueryMode::full()),
                                aq({0, 1, 4}, 1, QueryMode::elim()),
                                aq({3, 4}, 2, QueryMode::full()),
                                aq({0, 2, 3, 4}, 2, QueryMode::batch(2))};
  PairRun run;
  LeakageLog s1;
  this->run(r, qs, run, s1);
  auto rep = leakage_audit(input(r, qs, run, s1));
  for (const auto& v : rep.violations) ADD_FAILURE() << v;
  EXPECT_GT(rep.depths_checked, 4u);
  EXPECT_GT(rep.patterns_scanned, 20u);
  EXPECT_GT(rep.bytes_scanned, 10000u);
  EXPECT_GT(rep.frames_scanned, 0u);
  EXPECT_EQ(rep.frames_parsed, rep.frames_scanned);
  EXPECT_NO_THROW(enforce(rep));
}

TEST_F(AuditTest, DetectsViolations) {
  Relation r = load_csv(ENCTOPK_DATA_DIR "/patients.csv");
  std::vector<AuditQuery> qs = {aq({3, 4}, 2, QueryMode::full())};
  PairRun run;
  LeakageLog s1;
  this->run(r, qs, run, s1);

  {
    AuditInput in = input(r, qs, run, s1);
    LeakEvent extra;
    extra.party = Party::kS1;
    extra.kind = LeakKind::kUniqueCount;
    extra.query = 1;
    in.s1.push_back(extra);
    EXPECT_FALSE(leakage_audit(in).ok());
  }
  {
    AuditInput in = input(r, qs, run, s1);
    for (auto& e : in.s2) {
      if (e.kind == LeakKind::kEqualityPattern && e.phase == Phase::kDedup) ++e.value;
    }
    EXPECT_FALSE(leakage_audit(in).ok());
    EXPECT_THROW(enforce(leakage_audit(in)), LeakageViolation);
  }
  {
    std::vector<Bytes> frames = run.transcript.frames();
    Bytes leak(kFrameHeader, 0);
    for (char c : std::string("..Celvin..")) leak.push_back(static_cast<std::uint8_t>(c));
    frames.push_back(leak);
    Bytes cell(kFrameHeader + 3, 0);
    auto trivial = mpz_to_fixed(1 + 201 * kp_->pk.n(), kp_->pk.ct1_bytes());
    cell.insert(cell.end(), trivial.begin(), trivial.end());
    frames.push_back(cell);
    AuditInput in = input(r, qs, run, s1);
    in.frames = &frames;
    auto rep = leakage_audit(in);
    ASSERT_EQ(rep.violations.size(), 2u);
    EXPECT_NE(rep.violations[0].find("Celvin"), std::string::npos);
    EXPECT_NE(rep.violations[1].find("201"), std::string::npos);
  }
  {
    std::vector<AuditQuery> wrong = {aq({0, 4}, 2, QueryMode::full())};
    EXPECT_FALSE(leakage_audit(input(r, wrong, run, s1)).ok());
  }
}

TEST(LeakLinesTest, RoundTrip) {
  LeakageLog log;
  LeakEvent e;
  e.party = Party::kS2;
  e.kind = LeakKind::kEqualityPattern;
  e.query = 3;
  e.depth = 7;
  e.phase = Phase::kUpdate;
  e.count = 12;
  e.value = 2;
  log.append(e);
  e.party = Party::kS1;
  e.kind = LeakKind::kHaltDepth;
  e.phase = Phase::kControl;
  log.append(e);
  std::stringstream ss;
  log.export_lines(ss);
  auto back = parse_leak_lines(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].kind, LeakKind::kEqualityPattern);
  EXPECT_EQ(back[0].phase, Phase::kUpdate);
  EXPECT_EQ(back[0].count, 12u);
  EXPECT_EQ(back[1].party, Party::kS1);
  std::istringstream bad("s3 halt-depth 1 1 control 1 1\n");
  EXPECT_THROW(parse_leak_lines(bad), FormatError);
}

}  // namespace
}  // namespace enctopk
