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


#include "enctopk/protocols.hpp"

#include <algorithm>
#include <numeric>

#include "enctopk/errors.hpp"
#include "enctopk/sort_network.hpp"

namespace enctopk {
namespace {

void put_cts(ByteWriter& w, const PublicKey& pk,
             const std::vector<Ciphertext1>& cts) {
  for (const auto& c : cts) pk.write_ct(w, c);
}

std::vector<Ciphertext1> get_cts(ByteReader& r, const PublicKey& pk,
                                 std::size_t n) {
  std::vector<Ciphertext1> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(pk.read_ct1(r));
  return out;
}

std::uint32_t u32_size(std::size_t n) {
  if (n > 0xffffffffu) throw DomainError("batch too large");
  return static_cast<std::uint32_t>(n);
}

mpz_class pow2_mpz(unsigned e) {
  mpz_class v;
  mpz_ui_pow_ui(v.get_mpz_t(), 2, e);
  return v;
}

// Sends blinded layer-2 values and strips the additive masks rs.
std::vector<Ciphertext1> recover_blinded(S1Session& s,
                                         const std::vector<Ciphertext2>& blinded,
                                         const std::vector<mpz_class>& rs) {
  if (blinded.empty()) return {};
  const PublicKey& pk = s.pk();
  ByteWriter w = s.request();
  w.u32(u32_size(blinded.size()));
  for (const auto& c : blinded) pk.write_ct(w, c);
  Bytes reply = s.call(tags::kRecover, w);
  ByteReader r(reply);
  auto got = get_cts(r, pk, blinded.size());
  r.expect_done();
  for (std::size_t i = 0; i < got.size(); ++i) got[i] = pk.add_plain(got[i], -rs[i]);
  s.counters().recoveries += blinded.size();
  return got;
}

// Blinded comparison values; coins[i] records the sign flip.
std::vector<Ciphertext1> compare_values(S1Session& s,
    const std::vector<std::pair<Ciphertext1, Ciphertext1>>& pairs,
    std::vector<bool>& coins, bool rerandomize) {
  const PublicKey& pk = s.pk();
  std::vector<Ciphertext1> out;
  out.reserve(pairs.size());
  coins.assign(pairs.size(), false);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [a, b] = pairs[i];
    // 2(a - b) - 1 is odd, so never zero.
    Ciphertext1 d = pk.add_plain(pk.sub(pk.scale(a, 2), pk.scale(b, 2)), -1);
    mpz_class r = s.rng().below(pow2_mpz(kKappa)) + 1;
    Ciphertext1 v = pk.scale(d, r);
    coins[i] = s.rng().coin();
    if (coins[i]) v = pk.negate(v);
    if (rerandomize) v = pk.rerandomize(v, s.rng());
    out.push_back(std::move(v));
  }
  s.counters().comparisons += pairs.size();
  return out;
}

std::vector<bool> compare_raw(S1Session& s,
    const std::vector<std::pair<Ciphertext1, Ciphertext1>>& pairs,
    bool rerandomize) {
  if (pairs.empty()) return {};
  std::vector<bool> coins;
  auto vals = compare_values(s, pairs, coins, rerandomize);
  ByteWriter w = s.request();
  w.u32(u32_size(vals.size()));
  put_cts(w, s.pk(), vals);
  Bytes reply = s.call(tags::kCompare, w);
  ByteReader r(reply);
  std::vector<bool> out(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::uint8_t g = r.u8();
    if (g > 1) throw ProtocolError("bad comparison reply");
    out[i] = (g != 0) != coins[i];
  }
  r.expect_done();
  return out;
}

}  // namespace

S1Session::S1Session(Endpoint& ep, const PublicKey& pk, Rng rng)
    : ep_(ep), pk_(pk), rng_(std::move(rng)) {}

const KeyPair& S1Session::additive_key() {
  if (!additive_) {
    Rng r = rng_.fork("s1-additive-key");
    additive_ = keygen(pk_.bits() + 8, r);
    send_keys();
  }
  return *additive_;
}

const KeyPair& S1Session::multiplicative_key() {
  if (!multiplicative_) {
    Rng r = rng_.fork("s1-multiplicative-key");
    multiplicative_ = keygen(2 * pk_.bits() + 8, r);
    send_keys();
  }
  return *multiplicative_;
}

void S1Session::send_keys() {
  Phase prev = ep_.phase();
  ep_.set_phase(Phase::kControl);
  ByteWriter w;
  w.bytes_lp(additive_ ? additive_->pk.serialize() : Bytes{});
  w.bytes_lp(multiplicative_ ? multiplicative_->pk.serialize() : Bytes{});
  ep_.send(tags::kSessionKeys, w.take());
  ep_.set_phase(prev);
}

void S1Session::begin_query(std::uint32_t query) {
  ep_.set_context({query, 0, Phase::kControl});
  ByteWriter w;
  w.u32(query);
  ep_.send(tags::kBeginQuery, w.take());
}

void S1Session::set_depth(std::uint32_t depth) {
  ep_.set_depth(depth);
  ep_.set_phase(Phase::kControl);
  ByteWriter w;
  w.u32(depth);
  ep_.send(tags::kDepth, w.take());
}

void S1Session::end_query(std::uint32_t halting_depth) {
  ep_.set_phase(Phase::kControl);
  ByteWriter w;
  w.u32(halting_depth);
  ep_.send(tags::kEndQuery, w.take());
}

ByteWriter S1Session::request() const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(ep_.phase()));
  return w;
}

Bytes S1Session::call(std::uint16_t tag, ByteWriter& body) {
  ++counters_.rounds;
  return ep_.call(tag, body.take());
}

std::vector<Ciphertext2> equality_bits(S1Session& s,
                                       std::vector<Ciphertext1> diffs) {
  if (diffs.empty()) return {};
  const PublicKey& pk = s.pk();
  auto perm = s.rng().permutation(diffs.size());
  ByteWriter w = s.request();
  w.u32(u32_size(diffs.size()));
  for (auto i : perm) pk.write_ct(w, diffs[i]);
  Bytes reply = s.call(tags::kEquality, w);
  ByteReader r(reply);
  std::vector<Ciphertext2> out(diffs.size());
  for (auto i : perm) out[i] = pk.read_ct2(r);
  r.expect_done();
  s.counters().equality_tests += diffs.size();
  return out;
}

std::vector<Ciphertext1> recover_enc(S1Session& s,
                                     const std::vector<Ciphertext2>& wrapped) {
  const PublicKey& pk = s.pk();
  std::vector<Ciphertext2> blinded;
  std::vector<mpz_class> rs;
  for (const auto& c : wrapped) {
    pk.check(c);
    mpz_class r = s.rng().below(pk.n());
    blinded.push_back(pk.layered_exp(c, pk.encrypt(r, s.rng())));
    rs.push_back(r);
  }
  s.counters().layered_exps += wrapped.size();
  return recover_blinded(s, blinded, rs);
}

std::vector<Ciphertext1> select(S1Session& s,
                                const std::vector<SelectSpec>& specs) {
  const PublicKey& pk = s.pk();
  std::vector<Ciphertext2> blinded;
  std::vector<mpz_class> rs;
  blinded.reserve(specs.size());
  for (const auto& spec : specs) {
    if (spec.bits.size() != spec.values.size()) {
      throw DomainError("select: bit/value count mismatch");
    }
    mpz_class r = s.rng().below(pk.n());
    Ciphertext1 cr = pk.encrypt(r, s.rng());
    // Etwo(t_i)^((c_i - c_0) c_r) * (1+N)^(c_0 c_r) = Etwo(c_sel * c_r).
    mpz_class base = spec.fallback.v * cr.v % pk.n2();
    Ciphertext2 acc = pk.lift(base);
    for (std::size_t i = 0; i < spec.bits.size(); ++i) {
      mpz_class e = (spec.values[i].v - spec.fallback.v) * cr.v;
      acc = pk.mul2(acc, pk.pow2(spec.bits[i], e));
    }
    s.counters().layered_exps += spec.bits.size();
    blinded.push_back(std::move(acc));
    rs.push_back(std::move(r));
  }
  return recover_blinded(s, blinded, rs);
}

std::vector<bool> enc_compare(
    S1Session& s,
    const std::vector<std::pair<Ciphertext1, Ciphertext1>>& pairs) {
  return compare_raw(s, pairs, true);
}

std::vector<Ciphertext1> enc_compare_hidden(
    S1Session& s,
    const std::vector<std::pair<Ciphertext1, Ciphertext1>>& pairs) {
  if (pairs.empty()) return {};
  const PublicKey& pk = s.pk();
  std::vector<bool> coins;
  auto vals = compare_values(s, pairs, coins, true);
  ByteWriter w = s.request();
  w.u32(u32_size(vals.size()));
  put_cts(w, pk, vals);
  Bytes reply = s.call(tags::kCompareEnc, w);
  ByteReader r(reply);
  auto got = get_cts(r, pk, vals.size());
  r.expect_done();
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (coins[i]) got[i] = pk.add_plain(pk.negate(got[i]), 1);
  }
  return got;
}

bool zero_test(S1Session& s, const Ciphertext1& v) {
  const PublicKey& pk = s.pk();
  Ciphertext1 c = pk.rerandomize(pk.scale(v, s.rng().unit(pk.n())), s.rng());
  ByteWriter w = s.request();
  pk.write_ct(w, c);
  Bytes reply = s.call(tags::kZeroTest, w);
  ByteReader r(reply);
  std::uint8_t z = r.u8();
  r.expect_done();
  if (z > 1) throw ProtocolError("bad zero-test reply");
  ++s.counters().zero_tests;
  return z == 1;
}

std::vector<std::size_t> enc_sort_order(S1Session& s,
                                        const std::vector<Ciphertext1>& keys,
                                        bool descending) {
  const PublicKey& pk = s.pk();
  std::size_t n = keys.size();
  std::vector<std::size_t> idx = s.rng().permutation(n);
  std::vector<Ciphertext1> work;
  work.reserve(n);
  for (auto i : idx) work.push_back(pk.rerandomize(keys[i], s.rng()));
  for (const auto& layer : batcher_layers(n)) {
    std::vector<std::pair<Ciphertext1, Ciphertext1>> pairs;
    pairs.reserve(layer.size());
    for (auto [a, b] : layer) {
      if (descending) {
        pairs.emplace_back(work[b], work[a]);
      } else {
        pairs.emplace_back(work[a], work[b]);
      }
    }
    auto ok = compare_raw(s, pairs, false);
    for (std::size_t i = 0; i < layer.size(); ++i) {
      if (!ok[i]) {
        auto [a, b] = layer[i];
        std::swap(work[a], work[b]);
        std::swap(idx[a], idx[b]);
      }
    }
  }
  return idx;
}

std::vector<std::pair<Ciphertext1, Ciphertext1>> enc_sort(
    S1Session& s,
    const std::vector<std::pair<Ciphertext1, Ciphertext1>>& list) {
  std::vector<Ciphertext1> values;
  for (const auto& p : list) values.push_back(p.second);
  auto order = enc_sort_order(s, values, false);
  std::vector<std::pair<Ciphertext1, Ciphertext1>> out;
  out.reserve(list.size());
  for (auto i : order) {
    out.emplace_back(s.pk().rerandomize(list[i].first, s.rng()),
                     s.pk().rerandomize(list[i].second, s.rng()));
  }
  return out;
}

ScoredItem rand_blind(const PublicKey& pk, const ScoredItem& item,
                      std::span<const Ciphertext1> alpha,
                      const Ciphertext1& beta, const Ciphertext1& gamma) {
  ScoredItem out;
  out.ehl = ehl_blind(pk, alpha, item.ehl);
  out.worst = pk.add(item.worst, beta);
  out.best = pk.add(item.best, gamma);
  return out;
}

mpz_class sentinel_score(const PublicKey& pk) { return pk.n() - 1; }

std::vector<Record> blind_pass(S1Session& s, std::vector<Record> records,
                               const BlindPassOptions& opt) {
  if (records.empty()) return {};
  const PublicKey& pk = s.pk();
  const std::size_t q = records.size();
  const std::size_t slots = records[0].ehl.size();
  const std::size_t nf = records[0].fields.size();
  if (opt.sentinel_fields.size() != nf) {
    throw DomainError("blind pass: sentinel field count mismatch");
  }
  if (!opt.flags.empty() && opt.flags.size() != q) {
    throw DomainError("blind pass: flag count mismatch");
  }
  for (const auto& rec : records) {
    if (rec.ehl.size() != slots || rec.fields.size() != nf) {
      throw DomainError("blind pass: ragged records");
    }
  }
  const KeyPair& eph = s.additive_key();

  auto perm = s.rng().permutation(q);
  ByteWriter w = s.request();
  w.u8(static_cast<std::uint8_t>((opt.dedup ? 1 : 0) | (opt.drop ? 2 : 0)));
  w.u8(static_cast<std::uint8_t>(opt.variant));
  w.u32(u32_size(q));
  w.u32(u32_size(slots));
  w.u32(u32_size(nf));
  for (const auto& v : opt.sentinel_fields) w.mpz_lp(v);

  ByteWriter packs;
  for (auto i : perm) {
    const Record& rec = records[i];
    auto blind = [&](const Ciphertext1& c) {
      mpz_class a = s.rng().below(pk.n());
      pk.write_ct(w, pk.add(c, pk.encrypt(a, s.rng())));
      eph.pk.write_ct(packs, eph.sk.encrypt(a, s.rng()));
    };
    for (const auto& c : rec.ehl.slots) blind(c);
    for (const auto& c : rec.fields) blind(c);
  }
  w.raw(packs.data());
  if (opt.dedup) {
    for (std::size_t a = 0; a < q; ++a) {
      for (std::size_t b = a + 1; b < q; ++b) {
        pk.write_ct(w, ehl_sub(pk, records[perm[a]].ehl, records[perm[b]].ehl,
                               s.rng()));
      }
    }
    s.counters().equality_tests += q * (q - 1) / 2;
  }
  for (auto i : perm) {
    if (opt.flags.empty() || !opt.flags[i]) {
      w.u8(0);
    } else {
      w.u8(1);
      pk.write_ct(w, *opt.flags[i]);
    }
  }

  Bytes reply = s.call(tags::kBlindPass, w);
  ByteReader r(reply);
  std::uint32_t out_n = r.u32();
  if (out_n > q || (!opt.drop && out_n != q)) {
    throw ProtocolError("blind pass: unexpected output size");
  }
  const std::size_t width = slots + nf;
  std::vector<std::vector<Ciphertext1>> cts(out_n);
  for (auto& row : cts) row = get_cts(r, pk, width);
  std::vector<Record> out(out_n);
  for (std::size_t i = 0; i < out_n; ++i) {
    for (std::size_t k = 0; k < width; ++k) {
      mpz_class mask = eph.sk.decrypt(eph.pk.read_ct1(r)) % pk.n();
      Ciphertext1 c = pk.add_plain(cts[i][k], -mask);
      if (k < slots) {
        out[i].ehl.slots.push_back(std::move(c));
      } else {
        out[i].fields.push_back(std::move(c));
      }
    }
  }
  r.expect_done();
  s.counters().blind_items += q;
  return out;
}

namespace {

std::vector<ScoredItem> dedup_common(S1Session& s, std::vector<ScoredItem> q,
                                     EhlVariant variant, bool drop) {
  PhaseScope phase(s, Phase::kDedup);
  ++s.counters().sec_dedup;
  std::vector<Record> recs;
  recs.reserve(q.size());
  for (auto& it : q) recs.push_back({std::move(it.ehl), {it.worst, it.best}});
  BlindPassOptions opt;
  opt.dedup = true;
  opt.drop = drop;
  opt.variant = variant;
  opt.sentinel_fields = {sentinel_score(s.pk()), sentinel_score(s.pk())};
  auto out = blind_pass(s, std::move(recs), opt);
  std::vector<ScoredItem> items;
  items.reserve(out.size());
  for (auto& rec : out) {
    items.push_back({std::move(rec.ehl), rec.fields[0], rec.fields[1]});
  }
  return items;
}

}  // namespace

std::vector<ScoredItem> sec_dedup(S1Session& s, std::vector<ScoredItem> q,
                                  EhlVariant variant) {
  if (q.empty()) throw DomainError("sec_dedup needs at least one item");
  return dedup_common(s, std::move(q), variant, false);
}

std::vector<ScoredItem> sec_dupelim(S1Session& s, std::vector<ScoredItem> q,
                                    EhlVariant variant) {
  if (q.empty()) throw DomainError("sec_dupelim needs at least one item");
  return dedup_common(s, std::move(q), variant, true);
}

std::vector<Ciphertext1> match_sums(S1Session& s,
                                    const std::vector<MatchQuery>& queries) {
  const PublicKey& pk = s.pk();
  std::vector<Ciphertext1> diffs;
  for (const auto& q : queries) {
    if (q.candidates.size() != q.values.size()) {
      throw DomainError("match_sums: candidate/value count mismatch");
    }
    for (const Ehl* c : q.candidates) {
      diffs.push_back(ehl_sub(pk, *q.probe, *c, s.rng()));
    }
  }
  auto bits = equality_bits(s, std::move(diffs));
  std::vector<SelectSpec> specs;
  std::size_t k = 0;
  for (const auto& q : queries) {
    for (std::size_t j = 0; j < q.candidates.size(); ++j) {
      specs.push_back({{bits[k++]}, {q.values[j]}, pk.trivial(0)});
    }
  }
  auto sel = select(s, specs);
  std::vector<Ciphertext1> out;
  out.reserve(queries.size());
  k = 0;
  for (const auto& q : queries) {
    Ciphertext1 acc = pk.encrypt(0, s.rng());
    for (std::size_t j = 0; j < q.candidates.size(); ++j) {
      acc = pk.add(acc, sel[k++]);
    }
    out.push_back(std::move(acc));
  }
  return out;
}

Ciphertext1 sec_worst(S1Session& s, const EncItem& item,
                      const std::vector<EncItem>& h) {
  PhaseScope phase(s, Phase::kWorst);
  ++s.counters().sec_worst;
  MatchQuery q;
  q.probe = &item.ehl;
  for (const auto& it : h) {
    q.candidates.push_back(&it.ehl);
    q.values.push_back(it.score);
  }
  return match_sums(s, {q})[0];
}

SecBestResult sec_best(S1Session& s, const EncItem& item,
                       const std::vector<std::vector<EncItem>>& prefixes,
                       const std::vector<Ciphertext1>& bottoms) {
  PhaseScope phase(s, Phase::kBest);
  ++s.counters().sec_best;
  const PublicKey& pk = s.pk();
  if (bottoms.size() != prefixes.size()) {
    throw DomainError("sec_best: missing bottoms");
  }
  std::vector<Ciphertext1> diffs;
  for (const auto& pre : prefixes) {
    for (const auto& it : pre) diffs.push_back(ehl_sub(pk, item.ehl, it.ehl, s.rng()));
  }
  auto bits = equality_bits(s, std::move(diffs));
  std::vector<SelectSpec> specs;
  std::size_t k = 0;
  for (std::size_t j = 0; j < prefixes.size(); ++j) {
    SelectSpec score{{}, {}, bottoms[j]};
    SelectSpec unseen{{}, {}, pk.trivial(1)};
    for (const auto& it : prefixes[j]) {
      score.bits.push_back(bits[k]);
      score.values.push_back(it.score);
      unseen.bits.push_back(bits[k]);
      unseen.values.push_back(pk.trivial(0));
      ++k;
    }
    specs.push_back(std::move(score));
    specs.push_back(std::move(unseen));
  }
  auto sel = select(s, specs);
  SecBestResult res;
  res.partial = pk.encrypt(0, s.rng());
  for (std::size_t j = 0; j < prefixes.size(); ++j) {
    res.partial = pk.add(res.partial, sel[2 * j]);
    res.unseen.push_back(sel[2 * j + 1]);
  }
  return res;
}

mpz_class PackLayout::shift() const { return pow2_mpz(static_cast<unsigned>(m * w)); }

mpz_class PackLayout::unit(std::size_t l) const {
  return pow2_mpz(static_cast<unsigned>(l * w));
}

mpz_class PackLayout::all_unseen() const {
  mpz_class v = 0;
  for (std::size_t l = 0; l < m; ++l) v += unit(l);
  return v;
}

mpz_class PackLayout::sentinel(const PublicKey& pk) const {
  return pk.n() - shift();
}

void PackLayout::validate(const PublicKey& pk) const {
  if (m == 0) throw DomainError("query needs at least one list");
  if (lsum == 0) throw DomainError("score width must be positive");
  // Refresh decodes W' = W + a_W above the m unseen fields.
  std::size_t packed = m * w + lsum + kKappa + 2;
  // Sort keys W 2^(lsum+2) + B blinded by a kappa-bit factor, doubled.
  std::size_t keys = 2 * (lsum + 2) + kKappa + 4;
  if (packed + 2 >= pk.bits() || keys + 2 >= pk.bits()) {
    throw DomainError("key too small for " + std::to_string(m) +
                      " lists of " + std::to_string(lsum) + "-bit sums");
  }
}

std::vector<TopItem> sec_update(S1Session& s, const PackLayout& layout,
                                std::vector<TopItem> t,
                                std::vector<Record> gamma, bool elim,
                                EhlVariant variant) {
  PhaseScope phase(s, Phase::kUpdate);
  ++s.counters().sec_update;
  const PublicKey& pk = s.pk();
  std::vector<std::optional<Ciphertext2>> flags(t.size() + gamma.size());

  if (!t.empty() && !gamma.empty()) {
    std::vector<Ciphertext1> diffs;
    diffs.reserve(gamma.size() * t.size());
    for (const auto& g : gamma) {
      for (const auto& item : t) diffs.push_back(ehl_sub(pk, g.ehl, item.ehl, s.rng()));
    }
    auto bits = equality_bits(s, std::move(diffs));
    // A new item's packed state minus the all-unseen base is exactly what a
    // matching T item must add.
    std::vector<Ciphertext1> delta;
    for (const auto& g : gamma) delta.push_back(pk.add_plain(g.fields[0], -layout.all_unseen()));
    std::vector<SelectSpec> specs;
    specs.reserve(t.size());
    for (std::size_t j = 0; j < t.size(); ++j) {
      SelectSpec spec{{}, {}, t[j].packed};
      for (std::size_t i = 0; i < gamma.size(); ++i) {
        spec.bits.push_back(bits[i * t.size() + j]);
        spec.values.push_back(pk.add(t[j].packed, delta[i]));
      }
      specs.push_back(std::move(spec));
    }
    auto merged = select(s, specs);
    for (std::size_t j = 0; j < t.size(); ++j) t[j].packed = std::move(merged[j]);
    for (std::size_t i = 0; i < gamma.size(); ++i) {
      Ciphertext2 tau = bits[i * t.size()];
      for (std::size_t j = 1; j < t.size(); ++j) tau = pk.mul2(tau, bits[i * t.size() + j]);
      flags[t.size() + i] = std::move(tau);
    }
  }

  std::vector<Record> recs;
  recs.reserve(t.size() + gamma.size());
  for (auto& item : t) recs.push_back({std::move(item.ehl), {item.packed}});
  for (auto& g : gamma) recs.push_back(std::move(g));
  BlindPassOptions opt;
  opt.drop = elim;
  opt.variant = variant;
  opt.sentinel_fields = {layout.sentinel(pk)};
  bool any_flag = std::any_of(flags.begin(), flags.end(),
                              [](const auto& f) { return f.has_value(); });
  if (any_flag) opt.flags = std::move(flags);
  auto out = blind_pass(s, std::move(recs), opt);
  std::vector<TopItem> items;
  items.reserve(out.size());
  for (auto& rec : out) {
    items.push_back({std::move(rec.ehl), rec.fields[0], {}, {}});
  }
  return items;
}

void refresh(S1Session& s, const PackLayout& layout,
             std::vector<TopItem>& items,
             const std::vector<Ciphertext1>& bottoms) {
  if (items.empty()) return;
  PhaseScope phase(s, Phase::kRefresh);
  const PublicKey& pk = s.pk();
  const std::size_t m = layout.m;
  if (bottoms.size() != m) throw DomainError("refresh: bottom count mismatch");
  const mpz_class bottom_mask = pow2_mpz(layout.lsum + kKappa);
  const mpz_class bit_mask = pow2_mpz(kKappa);

  std::vector<mpz_class> b(m);
  ByteWriter w = s.request();
  w.u16(static_cast<std::uint16_t>(m));
  w.u16(static_cast<std::uint16_t>(layout.w));
  w.u32(u32_size(items.size()));
  for (std::size_t l = 0; l < m; ++l) {
    b[l] = s.rng().below(bottom_mask);
    pk.write_ct(w, pk.rerandomize(pk.add_plain(bottoms[l], b[l]), s.rng()));
  }
  std::vector<std::vector<mpz_class>> a(items.size(), std::vector<mpz_class>(m));
  std::vector<mpz_class> aw(items.size());
  for (std::size_t j = 0; j < items.size(); ++j) {
    mpz_class mask = 0;
    for (std::size_t l = 0; l < m; ++l) {
      a[j][l] = s.rng().below(bit_mask);
      mask += a[j][l] * layout.unit(l);
    }
    aw[j] = s.rng().below(bottom_mask) + 1;
    mask += aw[j] * layout.shift();
    pk.write_ct(w, pk.add_plain(pk.rerandomize(items[j].packed, s.rng()), mask));
  }
  Bytes reply = s.call(tags::kRefresh, w);
  ByteReader r(reply);
  for (std::size_t j = 0; j < items.size(); ++j) {
    Ciphertext1 wp = pk.read_ct1(r);
    Ciphertext1 prod = pk.read_ct1(r);
    auto ups = get_cts(r, pk, m);
    Ciphertext1 worst = pk.add_plain(wp, -aw[j]);
    // prod = sum (u + a)(x + b); strip u b + a x + a b.
    mpz_class ab = 0;
    Ciphertext1 corr = pk.trivial(0);
    for (std::size_t l = 0; l < m; ++l) {
      Ciphertext1 u = pk.add_plain(ups[l], -a[j][l]);
      corr = pk.add(corr, pk.scale(u, b[l]));
      if (a[j][l] != 0) corr = pk.add(corr, pk.scale(bottoms[l], a[j][l]));
      ab += a[j][l] * b[l];
    }
    Ciphertext1 rest = pk.add_plain(pk.sub(prod, corr), -ab);
    items[j].worst = worst;
    items[j].best = pk.add(worst, rest);
  }
  r.expect_done();
  s.counters().refreshed += items.size();
}

Projection Projection::all(std::size_t m1, std::size_t m2) {
  Projection p;
  for (std::size_t i = 0; i < m1; ++i) p.left.push_back(static_cast<std::uint32_t>(i));
  for (std::size_t i = 0; i < m2; ++i) p.right.push_back(static_cast<std::uint32_t>(i));
  return p;
}

std::vector<JoinTuple> sec_join(S1Session& s, const JoinToken& token,
                                const JoinEncryptedRelation& r1,
                                const JoinEncryptedRelation& r2,
                                const Projection& proj) {
  PhaseScope phase(s, Phase::kJoin);
  ++s.counters().sec_join;
  const PublicKey& pk = s.pk();
  const std::size_t m1 = r1.header.m, m2 = r2.header.m;
  if (token.t1 >= m1 || token.t3 >= m1 || token.t2 >= m2 || token.t4 >= m2) {
    throw DomainError("join token does not fit the relations");
  }
  for (auto a : proj.left) {
    if (a >= m1) throw DomainError("projection out of range");
  }
  for (auto a : proj.right) {
    if (a >= m2) throw DomainError("projection out of range");
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < r1.rows.size(); ++i) {
    for (std::size_t j = 0; j < r2.rows.size(); ++j) pairs.emplace_back(i, j);
  }
  s.rng().shuffle(pairs);
  std::vector<Ciphertext1> diffs;
  diffs.reserve(pairs.size());
  for (auto [i, j] : pairs) {
    diffs.push_back(ehl_sub(pk, r1.rows[i][token.t1].ehl, r2.rows[j][token.t2].ehl,
                            s.rng()));
  }
  auto bits = equality_bits(s, std::move(diffs));
  const std::size_t width = 1 + proj.left.size() + proj.right.size();
  std::vector<SelectSpec> specs;
  specs.reserve(pairs.size() * width);
  const Ciphertext1 zero = pk.trivial(0);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    auto [i, j] = pairs[p];
    Ciphertext1 score = pk.add_plain(
        pk.add(r1.rows[i][token.t3].score, r2.rows[j][token.t4].score), 1);
    specs.push_back({{bits[p]}, {score}, zero});
    for (auto a : proj.left) specs.push_back({{bits[p]}, {r1.rows[i][a].score}, zero});
    for (auto a : proj.right) specs.push_back({{bits[p]}, {r2.rows[j][a].score}, zero});
  }
  auto sel = select(s, specs);
  std::vector<JoinTuple> out(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    out[p].score = sel[p * width];
    out[p].attrs.assign(sel.begin() + static_cast<std::ptrdiff_t>(p * width + 1),
                        sel.begin() + static_cast<std::ptrdiff_t>((p + 1) * width));
  }
  return out;
}

std::vector<JoinTuple> sec_filter(S1Session& s, std::vector<JoinTuple> tuples) {
  PhaseScope phase(s, Phase::kFilter);
  ++s.counters().sec_filter;
  if (tuples.empty()) return {};
  const PublicKey& pk = s.pk();
  const std::size_t na = tuples[0].attrs.size();
  const KeyPair& add_key = s.additive_key();
  const KeyPair& mul_key = s.multiplicative_key();
  s.rng().shuffle(tuples);
  ByteWriter w = s.request();
  w.u32(u32_size(tuples.size()));
  w.u32(u32_size(na));
  for (const auto& t : tuples) {
    if (t.attrs.size() != na) throw DomainError("sec_filter: ragged tuples");
    mpz_class rho = s.rng().unit(pk.n());
    mpz_class rho_inv;
    mpz_invert(rho_inv.get_mpz_t(), rho.get_mpz_t(), pk.n().get_mpz_t());
    pk.write_ct(w, pk.rerandomize(pk.scale(t.score, rho), s.rng()));
    mul_key.pk.write_ct(w, mul_key.sk.encrypt(rho_inv, s.rng()));
    for (const auto& c : t.attrs) {
      mpz_class a = s.rng().below(pk.n());
      pk.write_ct(w, pk.add(c, pk.encrypt(a, s.rng())));
      add_key.pk.write_ct(w, add_key.sk.encrypt(a, s.rng()));
    }
  }
  Bytes reply = s.call(tags::kFilter, w);
  ByteReader r(reply);
  std::uint32_t n = r.u32();
  if (n > tuples.size()) throw ProtocolError("sec_filter: too many survivors");
  std::vector<JoinTuple> out(n);
  for (auto& t : out) {
    Ciphertext1 score = pk.read_ct1(r);
    mpz_class factor = mul_key.sk.decrypt(mul_key.pk.read_ct1(r)) % pk.n();
    t.score = pk.scale(score, factor);
    for (std::size_t k = 0; k < na; ++k) {
      Ciphertext1 c = pk.read_ct1(r);
      mpz_class mask = add_key.sk.decrypt(add_key.pk.read_ct1(r)) % pk.n();
      t.attrs.push_back(pk.add_plain(c, -mask));
    }
  }
  r.expect_done();
  return out;
}

}  // namespace enctopk
