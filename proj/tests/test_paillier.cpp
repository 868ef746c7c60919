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

#include <set>

#include "enctopk/errors.hpp"
#include "enctopk/paillier.hpp"

namespace enctopk {
namespace {

class PaillierTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    Rng rng(11);
    keys_ = new KeyPair(keygen(512, rng));
  }
  static void TearDownTestSuite() { delete keys_; }
  const PublicKey& pk() { return keys_->pk; }
  const SecretKey& sk() { return keys_->sk; }
  static KeyPair* keys_;
};

KeyPair* PaillierTest::keys_ = nullptr;

// Textbook decryption via lambda = lcm(p-1, q-1), used as an independent
// oracle for the CRT path.
mpz_class textbook_dec(const SecretKey& sk, const Ciphertext1& c) {
  mpz_class n = sk.pk().n(), n2 = sk.pk().n2();
  mpz_class lambda;
  mpz_class pm1 = sk.p() - 1, qm1 = sk.q() - 1;
  mpz_lcm(lambda.get_mpz_t(), pm1.get_mpz_t(), qm1.get_mpz_t());
  mpz_class u;
  mpz_powm(u.get_mpz_t(), c.v.get_mpz_t(), lambda.get_mpz_t(), n2.get_mpz_t());
  mpz_class l = (u - 1) / n;
  mpz_class mu;
  mpz_invert(mu.get_mpz_t(), lambda.get_mpz_t(), n.get_mpz_t());
  return (l * mu) % n;
}

TEST_F(PaillierTest, KeyShape) {
  EXPECT_EQ(pk().bits(), 512u);
  EXPECT_EQ(sk().p() * sk().q(), pk().n());
  EXPECT_EQ(pk().n2(), pk().n() * pk().n());
  EXPECT_EQ(pk().ct1_bytes(), 128u);
  EXPECT_EQ(pk().ct2_bytes(), 192u);
}

TEST_F(PaillierTest, KeygenIsSeedDeterministic) {
  Rng a(99), b(99);
  KeyPair k1 = keygen(256, a);
  KeyPair k2 = keygen(256, b);
  EXPECT_EQ(k1.pk.n(), k2.pk.n());
  EXPECT_THROW(keygen(128, a), DomainError);
}

TEST_F(PaillierTest, RoundtripBoundaries) {
  Rng rng(1);
  EXPECT_EQ(sk().decrypt(pk().encrypt(0, rng)), 0);
  mpz_class top = pk().n() - 1;
  EXPECT_EQ(sk().decrypt(pk().encrypt(top, rng)), top);
  EXPECT_EQ(sk().decrypt(pk().encrypt(5, rng)), 5);
  EXPECT_THROW(pk().encrypt(pk().n(), rng), DomainError);
}

TEST_F(PaillierTest, RandomRoundtripMatchesTextbookDecryption) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    mpz_class m = rng.below(pk().n());
    Ciphertext1 c = pk().encrypt(m, rng);
    ASSERT_EQ(sk().decrypt(c), m);
    ASSERT_EQ(textbook_dec(sk(), c), m);
    Ciphertext1 c2 = sk().encrypt(m, rng);
    ASSERT_EQ(textbook_dec(sk(), c2), m);
  }
}

TEST_F(PaillierTest, ProbabilisticEncryption) {
  Rng rng(3);
  std::set<mpz_class> seen;
  for (int i = 0; i < 2000; ++i) seen.insert(sk().encrypt(5, rng).v);
  EXPECT_EQ(seen.size(), 2000u);
}

TEST_F(PaillierTest, HomomorphicAdditionAndScaling) {
  Rng rng(4);
  const mpz_class& n = pk().n();
  for (int i = 0; i < 100; ++i) {
    mpz_class a = rng.below(n), b = rng.below(n), s = rng.below(n);
    Ciphertext1 ca = pk().encrypt(a, rng), cb = pk().encrypt(b, rng);
    ASSERT_EQ(sk().decrypt(add1(pk(), ca, cb)), mpz_class((a + b) % n));
    ASSERT_EQ(sk().decrypt(scal1(pk(), ca, s)), mpz_class((a * s) % n));
    ASSERT_EQ(sk().decrypt(pk().sub(ca, cb)), pk().encode_signed(a - b));
  }
  Ciphertext1 x = pk().encrypt(42, rng);
  EXPECT_EQ(sk().decrypt(scal1(pk(), x, 1)), 42);
  EXPECT_EQ(sk().decrypt(scal1(pk(), x, 0)), 0);
  EXPECT_EQ(sk().decrypt(scal1(pk(), x, n - 1)), n - 42);
  EXPECT_EQ(sk().decrypt(add1(pk(), x, pk().encrypt(0, rng))), 42);
}

TEST_F(PaillierTest, SignedView) {
  const mpz_class& n = pk().n();
  for (long v : {1L, 7L, 1000000L}) {
    EXPECT_EQ(pk().encode_signed(-v), n - v);
    EXPECT_EQ(pk().to_signed(n - v), -v);
    EXPECT_EQ(pk().to_signed(mpz_class(v)), v);
  }
}

TEST_F(PaillierTest, Layer2Roundtrip) {
  Rng rng(5);
  EXPECT_EQ(sk().decrypt2(pk().encrypt2(0, rng)), 0);
  Ciphertext1 inner = pk().encrypt(7, rng);
  EXPECT_EQ(sk().decrypt2(pk().encrypt2(inner.v, rng)), inner.v);
  for (int i = 0; i < 100; ++i) {
    mpz_class m = rng.below(pk().n2());
    ASSERT_EQ(sk().decrypt2(pk().encrypt2(m, rng)), m);
    ASSERT_EQ(sk().decrypt2(sk().encrypt2(m, rng)), m);
  }
  EXPECT_THROW(pk().encrypt2(pk().n2(), rng), DomainError);
}

TEST_F(PaillierTest, LayeredExponentiation) {
  Rng rng(6);
  auto check = [&](const mpz_class& m1, const mpz_class& m2) {
    Ciphertext2 outer = pk().encrypt2(pk().encrypt(m1, rng).v, rng);
    Ciphertext2 r = layered_exp(pk(), outer, pk().encrypt(m2, rng));
    Ciphertext1 inner{sk().decrypt2(r)};
    return sk().decrypt(inner);
  };
  EXPECT_EQ(check(3, 4), 7);
  EXPECT_EQ(check(9, 0), 9);
  for (int i = 0; i < 50; ++i) {
    mpz_class a = rng.below(pk().n()), b = rng.below(pk().n());
    ASSERT_EQ(check(a, b), mpz_class((a + b) % pk().n()));
  }
}

TEST_F(PaillierTest, LiftEncodesPowerOfGenerator) {
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    mpz_class m = rng.below(pk().n2());
    mpz_class g = pk().n() + 1, expect;
    mpz_powm(expect.get_mpz_t(), g.get_mpz_t(), m.get_mpz_t(),
             pk().n3().get_mpz_t());
    ASSERT_EQ(pk().lift(m).v, expect);
  }
}

TEST_F(PaillierTest, InvalidCiphertextRejected) {
  EXPECT_THROW(sk().decrypt(Ciphertext1{sk().p()}), InvalidCiphertext);
  EXPECT_THROW(sk().decrypt(Ciphertext1{0}), InvalidCiphertext);
  EXPECT_THROW(sk().decrypt(Ciphertext1{pk().n2()}), InvalidCiphertext);
}

TEST_F(PaillierTest, SerializationIsFixedWidth) {
  Rng rng(8);
  Ciphertext1 small{1};
  ByteWriter w;
  pk().write_ct(w, small);
  pk().write_ct(w, pk().encrypt(3, rng));
  pk().write_ct(w, pk().encrypt2(3, rng));
  EXPECT_EQ(w.size(), 2 * pk().ct1_bytes() + pk().ct2_bytes());
  ByteReader r(w.data());
  EXPECT_EQ(pk().read_ct1(r), small);
  EXPECT_EQ(sk().decrypt(pk().read_ct1(r)), 3);
  EXPECT_EQ(sk().decrypt2(pk().read_ct2(r)), 3);
  EXPECT_TRUE(r.done());

  PublicKey pk2 = PublicKey::deserialize(pk().serialize());
  EXPECT_EQ(pk2, pk());
  SecretKey sk2 = SecretKey::deserialize(sk().serialize());
  EXPECT_EQ(sk2.decrypt(pk().encrypt(77, rng)), 77);
}

}  // namespace
}  // namespace enctopk
