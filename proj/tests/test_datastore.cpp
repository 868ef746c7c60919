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
#include <cstdio>
#include <filesystem>
#include <set>

#include "enctopk/datastore.hpp"
#include "enctopk/errors.hpp"

namespace enctopk {
namespace {

class DatastoreTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    Rng rng(31);
    keys_ = new KeyPair(keygen(512, rng));
    Rng other(32);
    other_ = new KeyPair(keygen(512, other));
  }
  static void TearDownTestSuite() {
    delete keys_;
    delete other_;
  }
  const PublicKey& pk() { return keys_->pk; }
  const SecretKey& sk() { return keys_->sk; }
  static KeyPair* keys_;
  static KeyPair* other_;
};

KeyPair* DatastoreTest::keys_ = nullptr;
KeyPair* DatastoreTest::other_ = nullptr;

Relation patients() { return load_csv(std::string(ENCTOPK_DATA_DIR) + "/patients.csv"); }

TEST(Prp, IsABijection) {
  Rng rng(1);
  for (std::size_t m = 1; m <= 24; ++m) {
    PrpKey k = PrpKey::generate(rng);
    auto p = prp_permutation(k, m);
    std::set<std::size_t> img(p.begin(), p.end());
    EXPECT_EQ(img.size(), m);
    EXPECT_EQ(*img.rbegin(), m - 1);
    for (std::size_t i = 0; i < m; ++i) EXPECT_EQ(prp_apply(k, i, m), p[i]);
  }
  PrpKey k = PrpKey::generate(rng);
  EXPECT_THROW(prp_apply(k, 4, 4), DomainError);
  EXPECT_THROW(prp_permutation(k, 0), DomainError);
}

TEST(Prp, ImageIsUniformOverKeys) {
  Rng rng(2);
  const std::size_t m = 5;
  const int trials = 5000;
  std::vector<int> counts(m, 0);
  for (int t = 0; t < trials; ++t) ++counts[prp_apply(PrpKey::generate(rng), 0, m)];
  double expect = static_cast<double>(trials) / m, chi2 = 0;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  // chi-square critical value, 4 degrees of freedom, p = 0.001.
  EXPECT_LT(chi2, 18.47);
}

TEST(Tokens, MapNamesThroughThePermutation) {
  Rng rng(3);
  PrpKey k = PrpKey::generate(rng);
  std::vector<std::string> schema = {"age", "id", "trestbps", "chol", "thalach"};
  Token t = make_token(k, schema, {"trestbps", "chol"}, {}, 2);
  auto p = prp_permutation(k, 5);
  EXPECT_EQ(t.lists, (std::vector<std::uint32_t>{static_cast<std::uint32_t>(p[2]),
                                                 static_cast<std::uint32_t>(p[3])}));
  EXPECT_EQ(t.k, 2u);
  EXPECT_EQ(t.weight(1), 1u);
  Token back = Token::deserialize(t.serialize());
  EXPECT_EQ(back.lists, t.lists);
  EXPECT_EQ(back.k, t.k);
  EXPECT_EQ(back.digest(), t.digest());

  Token w = make_token(k, schema, {"age", "chol"}, {3, 5}, 1);
  Token wb = Token::deserialize(w.serialize());
  EXPECT_EQ(wb.weights, (std::vector<std::uint64_t>{3, 5}));
  EXPECT_NE(w.digest(), t.digest());

  EXPECT_THROW(make_token(k, schema, {"bmi"}, {}, 1), DomainError);
  EXPECT_THROW(make_token(k, schema, {"age", "age"}, {}, 1), DomainError);
  EXPECT_THROW(make_token(k, schema, {"age"}, {}, 0), DomainError);
  EXPECT_THROW(make_token(k, schema, {"age"}, {1, 2}, 1), DomainError);
  EXPECT_THROW(Token::deserialize(Bytes{0, 0, 0, 1}), FormatError);
}

TEST_F(DatastoreTest, PatientListsDecryptToSortedColumns) {
  Relation r = patients();
  ASSERT_EQ(r.n(), 5u);
  ASSERT_EQ(r.m(), 5u);
  Rng rng(4);
  auto ek = EhlKeySet::generate(EhlVariant::kPlus, 2, 0, rng);
  PrpKey prp = PrpKey::generate(rng);
  auto er = encrypt_relation(r, pk(), ek, prp, rng, &sk());
  PreimageTable pre(ek, pk());
  pre.add_all(r);
  auto perm = prp_permutation(prp, 5);
  for (std::size_t j = 0; j < 5; ++j) {
    SortedList want = sorted_list(r, j);
    const auto& got = er.lists[perm[j]];
    ASSERT_EQ(got.size(), 5u);
    for (std::size_t d = 0; d < 5; ++d) {
      EXPECT_EQ(sk().decrypt(got[d].score), want[d].value);
      auto id = pre.lookup(sk(), got[d].ehl);
      ASSERT_TRUE(id.has_value());
      EXPECT_EQ(*id, r.ids[want[d].row]);
    }
  }
  // trestbps: 120 ties between Celvin and Emma, broken by id.
  const auto& l = er.lists[perm[2]];
  EXPECT_EQ(*pre.lookup(sk(), l[0].ehl), "Celvin");
  EXPECT_EQ(*pre.lookup(sk(), l[1].ehl), "Emma");
}

TEST_F(DatastoreTest, PublicAndOwnerEncryptionAgree) {
  Relation r = patients();
  Rng rng(5);
  auto ek = EhlKeySet::generate(EhlVariant::kClassic, 2, 8, rng);
  PrpKey prp = PrpKey::generate(rng);
  Rng a(6), b(6);
  auto e1 = encrypt_relation(r, pk(), ek, prp, a);
  auto e2 = encrypt_relation(r, pk(), ek, prp, b, &sk());
  for (std::size_t j = 0; j < 5; ++j) {
    for (std::size_t d = 0; d < 5; ++d) {
      EXPECT_EQ(sk().decrypt(e1.lists[j][d].score), sk().decrypt(e2.lists[j][d].score));
      for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_EQ(sk().decrypt(e1.lists[j][d].ehl.slots[i]),
                  sk().decrypt(e2.lists[j][d].ehl.slots[i]));
      }
    }
  }
}

TEST_F(DatastoreTest, SerializationRoundTripAndSize) {
  Rng rng(7);
  Relation r1 = random_relation(6, 3, 16, 1000, rng);
  Relation r2 = random_relation(6, 3, 16, 7, rng);
  auto ek = EhlKeySet::generate(EhlVariant::kPlus, 2, 0, rng);
  PrpKey prp = PrpKey::generate(rng);
  auto er1 = encrypt_relation(r1, pk(), ek, prp, rng);
  auto er2 = encrypt_relation(r2, pk(), ek, prp, rng);
  Bytes b1 = serialize_relation(er1, pk());
  Bytes b2 = serialize_relation(er2, pk());
  // Size depends on (n, M, s, |N|) only.
  EXPECT_EQ(b1.size(), b2.size());
  std::size_t header = 4 + 2 + 4 + 4 + 2 + 1 + 2 + 4 + 4 + 32;
  EXPECT_EQ(b1.size(), header + 6 * 3 * (5 + 3 * pk().ct1_bytes()));
  auto back = deserialize_relation(b1, pk());
  EXPECT_EQ(serialize_relation(back, pk()), b1);
  EXPECT_EQ(back.header.n, 6u);
  EXPECT_EQ(back.header.m, 3u);
}

TEST_F(DatastoreTest, RejectsCorruptInput) {
  Rng rng(8);
  Relation r = random_relation(3, 2, 8, 100, rng);
  auto ek = EhlKeySet::generate(EhlVariant::kPlus, 1, 0, rng);
  PrpKey prp = PrpKey::generate(rng);
  Bytes b = serialize_relation(encrypt_relation(r, pk(), ek, prp, rng), pk());

  Bytes magic = b;
  magic[0] = 'X';
  EXPECT_THROW(deserialize_relation(magic, pk()), FormatError);
  Bytes cut(b.begin(), b.end() - 1);
  EXPECT_THROW(deserialize_relation(cut, pk()), FormatError);
  Bytes extra = b;
  extra.push_back(0);
  EXPECT_THROW(deserialize_relation(extra, pk()), FormatError);
  EXPECT_THROW(deserialize_relation(b, other_->pk), KeyError);

  // Zero out the first score ciphertext.
  std::size_t header = 4 + 2 + 4 + 4 + 2 + 1 + 2 + 4 + 4 + 32;
  Bytes zero = b;
  std::size_t off = header + 5 + pk().ct1_bytes();
  std::fill(zero.begin() + off, zero.begin() + off + pk().ct1_bytes(), 0);
  EXPECT_THROW(deserialize_relation(zero, pk()), InvalidCiphertext);

  Rng fuzz(9);
  for (int t = 0; t < 300; ++t) {
    Bytes f = b;
    int flips = 1 + static_cast<int>(fuzz.below(4));
    for (int i = 0; i < flips; ++i) f[fuzz.below(f.size())] ^= 1 + fuzz.below(255);
    if (fuzz.coin()) f.resize(fuzz.below(f.size()));
    try {
      deserialize_relation(f, pk());
    } catch (const Error&) {
    }
  }
}

TEST_F(DatastoreTest, JoinRelationsCarryValuesAndRoundTrip) {
  Rng rng(10);
  Relation r1 = random_relation(4, 3, 8, 5, rng);
  Relation r2 = random_relation(5, 2, 8, 5, rng);
  auto ek = EhlKeySet::generate(EhlVariant::kPlus, 1, 0, rng);
  PrpKey prp = PrpKey::generate(rng);
  auto [j1, j2] = encrypt_join_relations(r1, r2, pk(), ek, prp, rng);
  ASSERT_EQ(j1.rows.size(), 4u);
  ASSERT_EQ(j2.rows.size(), 5u);
  auto p1 = prp_permutation(prp, 3);
  std::multiset<std::vector<std::uint64_t>> want, got;
  for (const auto& row : r1.values) want.insert(row);
  for (const auto& row : j1.rows) {
    std::vector<std::uint64_t> vals(3);
    for (std::size_t j = 0; j < 3; ++j) {
      const auto& cell = row[p1[j]];
      vals[j] = sk().decrypt(cell.score).get_ui();
      auto plain = ehl_plaintext(ek, pk(), encode_int_id(vals[j]));
      EXPECT_EQ(sk().decrypt(cell.ehl.slots[0]), plain[0]);
    }
    got.insert(vals);
  }
  EXPECT_EQ(got, want);

  Bytes b = serialize_join_relation(j2, pk());
  EXPECT_EQ(serialize_join_relation(deserialize_join_relation(b, pk()), pk()), b);
  EXPECT_THROW(deserialize_relation(b, pk()), FormatError);

  JoinToken t = make_join_token(prp, 3, 2, 0, 1, 2, 0, 3);
  JoinToken tb = JoinToken::deserialize(t.serialize());
  EXPECT_EQ(tb.t1, p1[0]);
  EXPECT_EQ(tb.t3, p1[2]);
  EXPECT_EQ(tb.t2, prp_permutation(prp, 2)[1]);
  EXPECT_EQ(tb.k, 3u);
  EXPECT_THROW(make_join_token(prp, 3, 2, 3, 0, 0, 0, 1), DomainError);
}

TEST_F(DatastoreTest, KeyFilesCheckTheirKind) {
  auto dir = std::filesystem::temp_directory_path() / "enctopk_keyfile_test";
  std::filesystem::create_directories(dir);
  std::string path = (dir / "pk.key").string();
  Bytes payload = pk().serialize();
  write_key_file(path, KeyKind::kPublic, payload);
  EXPECT_EQ(read_key_file(path, KeyKind::kPublic), payload);
  EXPECT_THROW(read_key_file(path, KeyKind::kSecret), KeyError);
  EXPECT_THROW(read_key_file((dir / "missing").string(), KeyKind::kPublic), IoError);
  write_file(path, as_bytes("garbage"));
  EXPECT_THROW(read_key_file(path, KeyKind::kPublic), FormatError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace enctopk
