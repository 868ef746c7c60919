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


#include "enctopk/crypto_cloud.hpp"

#include <algorithm>
#include <numeric>

#include "enctopk/ehl.hpp"
#include "enctopk/errors.hpp"

namespace enctopk {
namespace {

std::size_t checked_count(std::uint32_t n, std::size_t per_item,
                          const ByteReader& r) {
  if (per_item != 0 && n > r.remaining() / per_item) {
    throw FormatError("request count exceeds payload");
  }
  return n;
}

mpz_class pow2_mpz(unsigned e) {
  mpz_class v;
  mpz_ui_pow_ui(v.get_mpz_t(), 2, e);
  return v;
}

}  // namespace

CryptoCloud::CryptoCloud(SecretKey sk, Rng rng, LeakageLog* log)
    : sk_(std::move(sk)), pk_(sk_.pk()), rng_(std::move(rng)), log_(log) {}

void CryptoCloud::log(LeakKind kind, std::uint64_t count, std::uint64_t value,
                      Bytes detail) {
  if (log_ == nullptr) return;
  LeakEvent e;
  e.party = Party::kS2;
  e.kind = kind;
  e.query = ctx_.query;
  e.depth = ctx_.depth;
  e.phase = ctx_.phase;
  e.count = count;
  e.value = value;
  e.detail = std::move(detail);
  log_->append(std::move(e));
}

const PublicKey& CryptoCloud::additive() const {
  if (!additive_) throw ProtocolError("no session key for blinded packs");
  return *additive_;
}

void CryptoCloud::serve(Endpoint& ep) {
  while (true) {
    Frame f = ep.recv_any();
    ByteReader r(f.payload);
    switch (f.tag) {
      case tags::kBye:
        return;
      case tags::kBeginQuery:
        ctx_ = {r.u32(), 0, Phase::kControl};
        r.expect_done();
        break;
      case tags::kDepth:
        ctx_.depth = r.u32();
        ctx_.phase = Phase::kControl;
        r.expect_done();
        break;
      case tags::kEndQuery: {
        std::uint32_t d = r.u32();
        r.expect_done();
        ctx_.phase = Phase::kControl;
        log(LeakKind::kQueryEnd, 1, d);
        break;
      }
      case tags::kSessionKeys:
        session_keys(r);
        break;
      default: {
        ++requests_;
        ctx_.phase = phase_from_u8(r.u8());
        ep.set_context(ctx_);
        Bytes reply = handle(f.tag, r);
        ep.send(static_cast<std::uint16_t>(f.tag | tags::kReply),
                std::move(reply));
        break;
      }
    }
    ep.set_context(ctx_);
  }
}

void CryptoCloud::session_keys(ByteReader& r) {
  Bytes a = r.bytes_lp();
  Bytes m = r.bytes_lp();
  r.expect_done();
  if (!a.empty()) additive_ = PublicKey::deserialize(a);
  if (!m.empty()) multiplicative_ = PublicKey::deserialize(m);
  if (additive_ && additive_->bits() <= pk_.bits() + 1) {
    throw ProtocolError("additive session key too small");
  }
  if (multiplicative_ && multiplicative_->bits() <= 2 * pk_.bits() + 1) {
    throw ProtocolError("multiplicative session key too small");
  }
}

Bytes CryptoCloud::handle(std::uint16_t tag, ByteReader& r) {
  switch (tag) {
    case tags::kEcho: {
      auto rest = r.raw(r.remaining());
      return Bytes(rest.begin(), rest.end());
    }
    case tags::kEquality:
      return equality(r);
    case tags::kRecover:
      return recover(r);
    case tags::kCompare:
      return compare(r, false);
    case tags::kCompareEnc:
      return compare(r, true);
    case tags::kZeroTest:
      return zero(r);
    case tags::kBlindPass:
      return blind_pass(r);
    case tags::kRefresh:
      return refresh(r);
    case tags::kFilter:
      return filter(r);
    default:
      throw ProtocolError("unknown request tag " + std::to_string(tag));
  }
}

Bytes CryptoCloud::equality(ByteReader& r) {
  std::size_t n = checked_count(r.u32(), pk_.ct1_bytes(), r);
  ByteWriter w;
  Bytes bits;
  std::uint64_t zeros = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool t = sk_.decrypt(pk_.read_ct1(r)) == 0;
    zeros += t ? 1 : 0;
    bits.push_back(t ? 1 : 0);
    pk_.write_ct(w, sk_.encrypt2(t ? 1 : 0, rng_));
  }
  r.expect_done();
  log(LeakKind::kEqualityPattern, n, zeros, std::move(bits));
  return w.take();
}

Bytes CryptoCloud::recover(ByteReader& r) {
  std::size_t n = checked_count(r.u32(), pk_.ct2_bytes(), r);
  ByteWriter w;
  for (std::size_t i = 0; i < n; ++i) {
    mpz_class inner = sk_.decrypt2(pk_.read_ct2(r));
    Ciphertext1 c{inner};
    try {
      pk_.check(c);
    } catch (const InvalidCiphertext&) {
      throw ProtocolError("recovered value is not a ciphertext");
    }
    pk_.write_ct(w, sk_.rerandomize(c, rng_));
  }
  r.expect_done();
  log(LeakKind::kRecover, n);
  return w.take();
}

Bytes CryptoCloud::compare(ByteReader& r, bool hidden) {
  std::size_t n = checked_count(r.u32(), pk_.ct1_bytes(), r);
  ByteWriter w;
  for (std::size_t i = 0; i < n; ++i) {
    mpz_class v = pk_.to_signed(sk_.decrypt(pk_.read_ct1(r)));
    std::uint8_t g = sgn(v) < 0 ? 1 : 0;
    if (hidden) {
      pk_.write_ct(w, sk_.encrypt(g, rng_));
    } else {
      w.u8(g);
    }
  }
  r.expect_done();
  log(LeakKind::kCompare, n, hidden ? 1 : 0);
  return w.take();
}

Bytes CryptoCloud::zero(ByteReader& r) {
  bool z = sk_.decrypt(pk_.read_ct1(r)) == 0;
  r.expect_done();
  log(LeakKind::kZeroTest, 1, z ? 1 : 0);
  ByteWriter w;
  w.u8(z ? 1 : 0);
  return w.take();
}

Bytes CryptoCloud::blind_pass(ByteReader& r) {
  std::uint8_t mode = r.u8();
  if (mode > 3) throw ProtocolError("bad blind-pass mode");
  const bool dedup = (mode & 1) != 0;
  const bool drop = (mode & 2) != 0;
  std::uint8_t variant = r.u8();
  if (variant > 1) throw ProtocolError("bad EHL variant");
  const PublicKey& eph = additive();
  std::uint32_t q32 = r.u32();
  std::uint32_t slots = r.u32();
  std::uint32_t nf = r.u32();
  const std::size_t width = std::size_t{slots} + nf;
  if (width == 0) throw ProtocolError("empty records");
  std::vector<mpz_class> sentinel(nf);
  for (auto& v : sentinel) {
    v = r.mpz_lp();
    if (v >= pk_.n()) throw ProtocolError("sentinel out of range");
  }
  const std::size_t q = checked_count(
      q32, width * (pk_.ct1_bytes() + eph.ct1_bytes()), r);

  std::vector<std::vector<mpz_class>> vals(q, std::vector<mpz_class>(width));
  for (auto& row : vals) {
    for (auto& v : row) v = sk_.decrypt(pk_.read_ct1(r));
  }
  std::vector<std::vector<Ciphertext1>> packs(q);
  for (auto& row : packs) {
    for (std::size_t k = 0; k < width; ++k) row.push_back(eph.read_ct1(r));
  }

  std::vector<bool> voided(q, false);
  std::uint64_t pair_zeros = 0;
  if (dedup) {
    // Union-find over equal pairs; the first record of a group survives.
    std::vector<std::size_t> parent(q);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    Bytes bits;
    for (std::size_t a = 0; a < q; ++a) {
      for (std::size_t b = a + 1; b < q; ++b) {
        bool eq = sk_.decrypt(pk_.read_ct1(r)) == 0;
        bits.push_back(eq ? 1 : 0);
        if (eq) {
          ++pair_zeros;
          std::size_t ra = find(a), rb = find(b);
          if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
        }
      }
    }
    for (std::size_t i = 0; i < q; ++i) voided[i] = find(i) != i;
    std::size_t tested = bits.size();
    log(LeakKind::kEqualityPattern, tested, pair_zeros, std::move(bits));
  }
  for (std::size_t i = 0; i < q; ++i) {
    std::uint8_t present = r.u8();
    if (present > 1) throw ProtocolError("bad flag marker");
    if (present == 1) {
      mpz_class f = sk_.decrypt2(pk_.read_ct2(r));
      if (f > 1) throw ProtocolError("flag is not a bit");
      if (f == 1) voided[i] = true;
    }
  }
  r.expect_done();

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < q; ++i) {
    if (!(drop && voided[i])) keep.push_back(i);
  }
  rng_.shuffle(keep);
  std::size_t n_void = static_cast<std::size_t>(
      std::count(voided.begin(), voided.end(), true));
  log(LeakKind::kBlindPass, q, n_void);

  ByteWriter cts, out_packs;
  cts.u32(static_cast<std::uint32_t>(keep.size()));
  for (auto i : keep) {
    for (std::size_t k = 0; k < width; ++k) {
      mpz_class beta = rng_.below(pk_.n());
      if (!voided[i]) {
        pk_.write_ct(cts, sk_.encrypt((vals[i][k] + beta) % pk_.n(), rng_));
        eph.write_ct(out_packs, eph.add(packs[i][k], eph.encrypt(beta, rng_)));
      } else {
        mpz_class target;
        if (k < slots) {
          target = variant == static_cast<std::uint8_t>(EhlVariant::kPlus)
                       ? rng_.below(pk_.n())
                       : mpz_class(rng_.coin() ? 1 : 0);
        } else {
          target = sentinel[k - slots];
        }
        mpz_class alpha = rng_.below(pk_.n());
        pk_.write_ct(cts, sk_.encrypt((target + alpha + beta) % pk_.n(), rng_));
        eph.write_ct(out_packs, eph.encrypt(alpha + beta, rng_));
      }
    }
  }
  cts.raw(out_packs.data());
  return cts.take();
}

Bytes CryptoCloud::refresh(ByteReader& r) {
  std::uint16_t m = r.u16();
  std::uint16_t width = r.u16();
  if (m == 0 || width == 0 || std::size_t{m} * width >= pk_.bits()) {
    throw ProtocolError("bad packed layout");
  }
  std::uint32_t n32 = r.u32();
  std::vector<mpz_class> bottoms(m);
  for (auto& b : bottoms) b = sk_.decrypt(pk_.read_ct1(r));
  std::size_t n = checked_count(n32, pk_.ct1_bytes(), r);
  const mpz_class field_mask = pow2_mpz(width) - 1;
  ByteWriter w;
  for (std::size_t j = 0; j < n; ++j) {
    mpz_class v = sk_.decrypt(pk_.read_ct1(r));
    mpz_class top = v >> (std::size_t{m} * width);
    std::vector<mpz_class> u(m);
    mpz_class sum = 0;
    for (std::size_t l = 0; l < m; ++l) {
      u[l] = (v >> (l * width)) & field_mask;
      sum += u[l] * bottoms[l];
    }
    pk_.write_ct(w, sk_.encrypt(top, rng_));
    pk_.write_ct(w, sk_.encrypt(sum % pk_.n(), rng_));
    for (const auto& x : u) pk_.write_ct(w, sk_.encrypt(x, rng_));
  }
  r.expect_done();
  log(LeakKind::kRefresh, n);
  return w.take();
}

Bytes CryptoCloud::filter(ByteReader& r) {
  if (!multiplicative_) throw ProtocolError("no session key for filter");
  const PublicKey& ms = *multiplicative_;
  std::uint32_t n32 = r.u32();
  std::uint32_t na = r.u32();
  if (na > 0) additive();
  const std::size_t per = pk_.ct1_bytes() + ms.ct1_bytes() +
                          na * (pk_.ct1_bytes() + (na > 0 ? additive().ct1_bytes() : 0));
  std::size_t n = checked_count(n32, per, r);
  struct Row {
    mpz_class score;
    Ciphertext1 pack;
    std::vector<mpz_class> attrs;
    std::vector<Ciphertext1> packs;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < n; ++i) {
    Row row;
    row.score = sk_.decrypt(pk_.read_ct1(r));
    row.pack = ms.read_ct1(r);
    for (std::uint32_t a = 0; a < na; ++a) {
      row.attrs.push_back(sk_.decrypt(pk_.read_ct1(r)));
      row.packs.push_back(additive().read_ct1(r));
    }
    if (row.score != 0) rows.push_back(std::move(row));
  }
  r.expect_done();
  rng_.shuffle(rows);
  log(LeakKind::kFilter, n, rows.size());
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(rows.size()));
  for (const auto& row : rows) {
    mpz_class gamma = rng_.unit(pk_.n());
    mpz_class gamma_inv;
    mpz_invert(gamma_inv.get_mpz_t(), gamma.get_mpz_t(), pk_.n().get_mpz_t());
    pk_.write_ct(w, sk_.encrypt(row.score * gamma % pk_.n(), rng_));
    ms.write_ct(w, ms.rerandomize(ms.scale(row.pack, gamma_inv), rng_));
    for (std::uint32_t a = 0; a < na; ++a) {
      mpz_class beta = rng_.below(pk_.n());
      pk_.write_ct(w, sk_.encrypt((row.attrs[a] + beta) % pk_.n(), rng_));
      additive().write_ct(w, additive().add(row.packs[a],
                                            additive().encrypt(beta, rng_)));
    }
  }
  return w.take();
}

PartyProgram crypto_cloud_program(const SecretKey& sk, std::uint64_t seed) {
  return [sk, seed](Endpoint& ep, LeakageLog& log) {
    CryptoCloud cloud(sk, Rng(seed).fork("s2"), &log);
    cloud.serve(ep);
  };
}

}  // namespace enctopk
