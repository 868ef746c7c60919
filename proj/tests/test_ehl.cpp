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

#include <cmath>
#include <set>
#include <string>

#include "enctopk/ehl.hpp"
#include "enctopk/errors.hpp"

namespace enctopk {
namespace {

class EhlTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    Rng rng(23);
    keys_ = new KeyPair(keygen(512, rng));
  }
  static void TearDownTestSuite() { delete keys_; }
  const PublicKey& pk() { return keys_->pk; }
  const SecretKey& sk() { return keys_->sk; }
  static KeyPair* keys_;
};

KeyPair* EhlTest::keys_ = nullptr;

std::string id_of(int i) { return "obj-" + std::to_string(i); }

TEST_F(EhlTest, PlusSlotsAreHmacResidues) {
  Rng rng(1);
  auto keys = EhlKeySet::generate(EhlVariant::kPlus, 3, 0, rng);
  auto plain = ehl_plaintext(keys, pk(), as_bytes("Bob"));
  ASSERT_EQ(plain.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    Digest mac = hmac_sha256(keys.keys[i], as_bytes("Bob"));
    mpz_class v;
    mpz_import(v.get_mpz_t(), mac.size(), 1, 1, 1, 0, mac.data());
    EXPECT_EQ(plain[i], v % pk().n());
  }
  Ehl e = ehl_encode(keys, pk(), as_bytes("Bob"), rng);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(sk().decrypt(e.slots[i]), plain[i]);
}

TEST_F(EhlTest, ClassicSetsExactlyThePositions) {
  Rng rng(2);
  auto keys = EhlKeySet::generate(EhlVariant::kClassic, 5, 64, rng);
  auto pos = ehl_positions(keys, as_bytes("Emma"));
  auto plain = ehl_plaintext(keys, pk(), as_bytes("Emma"));
  ASSERT_EQ(plain.size(), 64u);
  std::set<std::uint32_t> want(pos.begin(), pos.end());
  for (std::uint32_t i = 0; i < 64; ++i) {
    EXPECT_EQ(plain[i], want.count(i) ? 1 : 0) << i;
  }
}

TEST_F(EhlTest, SubIsZeroForSameObject) {
  Rng rng(3);
  for (auto variant : {EhlVariant::kPlus, EhlVariant::kClassic}) {
    auto keys = EhlKeySet::generate(variant, 3, 40, rng);
    for (int i = 0; i < 10; ++i) {
      Ehl a = ehl_encode(keys, pk(), as_bytes(id_of(i)), rng);
      Ehl b = ehl_encode(keys, pk(), as_bytes(id_of(i)), rng);
      EXPECT_NE(a.slots[0].v, b.slots[0].v);
      EXPECT_EQ(sk().decrypt(ehl_sub(pk(), a, b, rng)), 0);
    }
  }
}

TEST_F(EhlTest, SubIsNonZeroForDistinctObjects) {
  Rng rng(4);
  auto keys = EhlKeySet::generate(EhlVariant::kPlus, 2, 0, rng);
  std::vector<Ehl> encs;
  for (int i = 0; i < 20; ++i) encs.push_back(ehl_encode(keys, pk(), as_bytes(id_of(i)), rng));
  std::set<std::string> seen;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      if (i == j) continue;
      mpz_class d = sk().decrypt(ehl_sub(pk(), encs[i], encs[j], rng));
      EXPECT_NE(d, 0);
      seen.insert(d.get_str(16));
    }
  }
  // Randomized differences do not repeat.
  EXPECT_EQ(seen.size(), 380u);
}

TEST_F(EhlTest, SubRejectsLengthMismatch) {
  Rng rng(5);
  auto k2 = EhlKeySet::generate(EhlVariant::kPlus, 2, 0, rng);
  auto k3 = EhlKeySet::generate(EhlVariant::kPlus, 3, 0, rng);
  Ehl a = ehl_encode(k2, pk(), as_bytes("x"), rng);
  Ehl b = ehl_encode(k3, pk(), as_bytes("x"), rng);
  EXPECT_THROW(ehl_sub(pk(), a, b, rng), DomainError);
}

TEST_F(EhlTest, BlindAddsMasksSlotwise) {
  Rng rng(6);
  auto keys = EhlKeySet::generate(EhlVariant::kPlus, 4, 0, rng);
  Ehl e = ehl_encode(keys, pk(), as_bytes("Flora"), rng);
  auto plain = ehl_plaintext(keys, pk(), as_bytes("Flora"));
  std::vector<mpz_class> m;
  std::vector<Ciphertext1> masks;
  for (int i = 0; i < 4; ++i) {
    m.push_back(rng.below(pk().n()));
    masks.push_back(pk().encrypt(m.back(), rng));
  }
  Ehl b = ehl_blind(pk(), masks, e);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(sk().decrypt(b.slots[i]), mpz_class((plain[i] + m[i]) % pk().n()));
  }
}

TEST(EhlFpr, PlusBoundMatchesClosedForm) {
  FprParams p{EhlVariant::kPlus, 1000, 2, 0, 1024};
  double want = 2 * std::log(1000.0) / std::log(2.0) - 2 * 1023.0;
  EXPECT_NEAR(fpr_bound_log2(p), want, 1e-9);
  EXPECT_EQ(fpr_bound(p), 0.0);
  FprParams tiny{EhlVariant::kPlus, 4, 1, 0, 8};
  EXPECT_NEAR(fpr_bound(tiny), 16.0 / 128.0, 1e-12);
}

TEST(EhlFpr, ClassicBoundMatchesClosedForm) {
  FprParams p{EhlVariant::kClassic, 100, 7, 1000, 0};
  EXPECT_NEAR(fpr_bound(p), std::pow(0.62, 10.0), 1e-12);
  EXPECT_THROW(fpr_bound(FprParams{EhlVariant::kClassic, 0, 7, 10, 0}), DomainError);
}

TEST_F(EhlTest, ClassicEmpiricalRateWithinBound) {
  Rng rng(7);
  const std::uint32_t n = 100, h = 1000;
  auto keys = EhlKeySet::generate(EhlVariant::kClassic, 7, h, rng);
  std::vector<bool> filter(h, false);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (auto p : ehl_positions(keys, as_bytes(id_of(i)))) filter[p] = true;
  }
  int fp = 0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    bool all = true;
    for (auto p : ehl_positions(keys, as_bytes("non-" + std::to_string(t)))) all = all && filter[p];
    fp += all;
  }
  double bound = fpr_bound({EhlVariant::kClassic, n, 7, h, 0});
  EXPECT_LE(static_cast<double>(fp) / trials, 1.5 * bound);
}

TEST_F(EhlTest, KeySetAndEncodingRoundTrip) {
  Rng rng(8);
  auto keys = EhlKeySet::generate(EhlVariant::kClassic, 3, 30, rng);
  auto back = EhlKeySet::deserialize(keys.serialize());
  EXPECT_EQ(back.variant, keys.variant);
  EXPECT_EQ(back.list_length, 30u);
  EXPECT_EQ(back.keys, keys.keys);

  Ehl e = ehl_encode(keys, pk(), as_bytes("David"), rng);
  ByteWriter w;
  write_ehl(w, pk(), keys.variant, e);
  EXPECT_EQ(w.size(), 5 + 30 * pk().ct1_bytes());
  ByteReader r(w.data());
  Ehl got = read_ehl(r, pk(), keys.variant, 30);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(got.slots[i].v, e.slots[i].v);

  ByteReader wrong(w.data());
  EXPECT_THROW(read_ehl(wrong, pk(), EhlVariant::kPlus, 30), FormatError);
  ByteReader count(w.data());
  EXPECT_THROW(read_ehl(count, pk(), keys.variant, 31), FormatError);
}

TEST(EhlKeys, RejectsBadParameters) {
  Rng rng(9);
  EXPECT_THROW(EhlKeySet::generate(EhlVariant::kPlus, 0, 0, rng), DomainError);
  EXPECT_THROW(EhlKeySet::generate(EhlVariant::kClassic, 5, 4, rng), DomainError);
  Bytes junk = {1, 0, 0, 0, 10, 0, 1, 0, 0, 0, 3, 1, 2, 3};
  EXPECT_THROW(EhlKeySet::deserialize(junk), FormatError);
}

}  // namespace
}  // namespace enctopk
