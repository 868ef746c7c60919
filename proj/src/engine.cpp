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


#include "enctopk/engine.hpp"

#include <algorithm>
#include <chrono>

#include "enctopk/errors.hpp"

namespace enctopk {
namespace {

mpz_class pow2_mpz(unsigned e) {
  mpz_class v;
  mpz_ui_pow_ui(v.get_mpz_t(), 2, e);
  return v;
}

}  // namespace

QueryMode QueryMode::parse(const std::string& s) {
  if (s == "full") return full();
  if (s == "elim") return elim();
  if (s.rfind("batch:", 0) == 0) {
    std::string num = s.substr(6);
    if (num.empty() || num.size() > 9 ||
        !std::all_of(num.begin(), num.end(), ::isdigit)) {
      throw UsageError("bad batch parameter in mode '" + s + "'");
    }
    return batch(static_cast<std::uint32_t>(std::stoul(num)));
  }
  throw UsageError("unknown mode '" + s + "' (full, elim or batch:P)");
}

std::string QueryMode::to_string() const {
  switch (kind) {
    case ModeKind::kFull:
      return "full";
    case ModeKind::kElim:
      return "elim";
    case ModeKind::kBatch:
      return "batch:" + std::to_string(p);
  }
  return "?";
}

void QueryMode::validate(std::uint32_t k) const {
  if (kind == ModeKind::kBatch && p < k) {
    throw DomainError("batch mode needs p >= k");
  }
}

bool QueryMode::checks_at(std::size_t depth, std::size_t n) const {
  if (kind != ModeKind::kBatch) return true;
  return depth % p == 0 || depth == n;
}

unsigned score_sum_bits(const RelationHeader& h, const Token& token) {
  mpz_class max_sum = 0;
  mpz_class top = pow2_mpz(h.width) - 1;
  for (std::size_t l = 0; l < token.lists.size(); ++l) {
    max_sum += top * mpz_class(std::to_string(token.weight(l)));
  }
  if (max_sum == 0) return 1;
  return static_cast<unsigned>(mpz_sizeinbase(max_sum.get_mpz_t(), 2));
}

void sort_by_bounds(S1Session& s, const PackLayout& layout,
                    std::vector<TopItem>& t) {
  const PublicKey& pk = s.pk();
  const mpz_class hi = pow2_mpz(layout.lsum + 2);
  std::vector<Ciphertext1> keys;
  keys.reserve(t.size());
  for (const auto& it : t) keys.push_back(pk.add(pk.scale(it.worst, hi), it.best));
  auto order = enc_sort_order(s, keys, true);
  std::vector<TopItem> sorted;
  sorted.reserve(t.size());
  for (auto i : order) sorted.push_back(std::move(t[i]));
  t = std::move(sorted);
}

bool halting_check(S1Session& s, const std::vector<TopItem>& t,
                   const std::vector<Ciphertext1>& bottoms, std::size_t k) {
  if (k == 0) throw DomainError("k must be >= 1");
  PhaseScope phase(s, Phase::kHalt);
  const PublicKey& pk = s.pk();
  // With fewer than k items the threshold is -1, which no unseen bound meets.
  const Ciphertext1 wk = t.size() >= k ? t[k - 1].worst
                                       : pk.encrypt(pk.encode_signed(-1), s.rng());
  std::vector<std::pair<Ciphertext1, Ciphertext1>> pairs;
  pairs.reserve(t.size() + 1);
  // The first k slots are masked so the message size does not depend on k.
  for (std::size_t j = 0; j < t.size(); ++j) {
    pairs.emplace_back(j < k ? pk.encrypt(pk.encode_signed(-1), s.rng()) : t[j].best, wk);
  }
  Ciphertext1 unseen = pk.trivial(0);
  for (const auto& b : bottoms) unseen = pk.add(unseen, b);
  pairs.emplace_back(unseen, wk);
  auto bits = enc_compare_hidden(s, pairs);
  Ciphertext1 v = pk.encrypt(pairs.size(), s.rng());
  for (const auto& b : bits) v = pk.sub(v, b);
  return zero_test(s, v);
}

QueryEngine::QueryEngine(S1Session& s, LeakageLog* log) : s_(s), log_(log) {}

void QueryEngine::log(LeakKind kind, std::uint64_t count, std::uint64_t value,
                      Bytes detail) {
  if (log_ == nullptr) return;
  const Context& c = s_.ep().context();
  LeakEvent e;
  e.party = Party::kS1;
  e.kind = kind;
  e.query = c.query;
  e.depth = c.depth;
  e.phase = c.phase;
  e.count = count;
  e.value = value;
  e.detail = std::move(detail);
  log_->append(std::move(e));
}

std::uint32_t QueryEngine::begin(const Digest& query_digest) {
  std::uint32_t q = next_query_++;
  s_.begin_query(q);
  bool repeated = !seen_queries_.insert(query_digest).second;
  log(LeakKind::kQueryPattern, 1, repeated ? 1 : 0,
      Bytes(query_digest.begin(), query_digest.end()));
  return q;
}

QueryResult QueryEngine::sec_query(const Token& token,
                                   const EncryptedRelation& er,
                                   const EngineOptions& opt) {
  const PublicKey& pk = s_.pk();
  const RelationHeader& h = er.header;
  if (h.pk_fingerprint != pk.fingerprint()) {
    throw KeyError("relation was encrypted under a different key");
  }
  if (token.lists.empty()) throw DomainError("token names no lists");
  if (token.k < 1) throw DomainError("k must be >= 1");
  if (!token.weights.empty() && token.weights.size() != token.lists.size()) {
    throw DomainError("token weight count mismatch");
  }
  for (auto l : token.lists) {
    if (l >= er.lists.size()) throw DomainError("token list index out of range");
  }
  if (er.lists.size() != h.m || h.n == 0) throw FormatError("malformed relation");
  for (const auto& list : er.lists) {
    if (list.size() != h.n) throw FormatError("malformed relation");
  }
  opt.mode.validate(token.k);

  const std::size_t n = h.n;
  const std::size_t m = token.lists.size();
  const std::size_t k = token.k;
  PackLayout layout(m, score_sum_bits(h, token));
  layout.validate(pk);
  const bool elim = opt.mode.eliminates();

  begin(token.digest());
  QueryResult res;
  std::vector<TopItem> t;
  std::vector<Ciphertext1> bottoms(m);
  bool halted = false;
  std::uint32_t depth = 0;

  for (std::size_t d = 1; d <= n && !halted; ++d) {
    auto start = std::chrono::steady_clock::now();
    depth = static_cast<std::uint32_t>(d);
    s_.set_depth(depth);

    std::vector<EncItem> items(m);
    for (std::size_t l = 0; l < m; ++l) {
      const EncItem& src = er.lists[token.lists[l]][d - 1];
      items[l].ehl = src.ehl;
      std::uint64_t wl = token.weight(l);
      items[l].score = wl == 1 ? src.score
                               : pk.scale(src.score, mpz_class(std::to_string(wl)));
      bottoms[l] = items[l].score;
    }

    // Same-depth packed state of each new item:
    // (x_l + same-depth co-occurrences) 2^(mw) + unseen bits of the others.
    std::vector<Record> gamma(m);
    {
      PhaseScope phase(s_, Phase::kWorst);
      std::vector<Ciphertext1> contrib(m);
      for (std::size_t l = 0; l < m; ++l) {
        contrib[l] = pk.add_plain(pk.scale(items[l].score, layout.shift()),
                                  -layout.unit(l));
      }
      std::vector<MatchQuery> queries(m);
      for (std::size_t l = 0; l < m; ++l) {
        queries[l].probe = &items[l].ehl;
        for (std::size_t j = 0; j < m; ++j) {
          if (j == l) continue;
          queries[l].candidates.push_back(&items[j].ehl);
          queries[l].values.push_back(contrib[j]);
        }
      }
      auto sums = match_sums(s_, queries);
      s_.counters().sec_worst += m;
      for (std::size_t l = 0; l < m; ++l) {
        Ciphertext1 base = pk.add_plain(pk.scale(items[l].score, layout.shift()),
                                        layout.all_unseen() - layout.unit(l));
        gamma[l] = {items[l].ehl, {pk.add(base, sums[l])}};
      }
    }
    {
      PhaseScope phase(s_, Phase::kDedup);
      ++s_.counters().sec_dedup;
      BlindPassOptions bo;
      bo.dedup = true;
      bo.drop = elim;
      bo.variant = h.variant;
      bo.sentinel_fields = {layout.sentinel(pk)};
      gamma = blind_pass(s_, std::move(gamma), bo);
    }
    t = sec_update(s_, layout, std::move(t), std::move(gamma), elim, h.variant);
    if (elim) log(LeakKind::kUniqueCount, 1, t.size());

    const bool last = d == n;
    const bool check = opt.halting ? opt.mode.checks_at(d, n) : last;
    if (check || opt.observer) refresh(s_, layout, t, bottoms);
    if (opt.observer) opt.observer(depth, t);
    if (check) {
      {
        PhaseScope phase(s_, Phase::kSort);
        sort_by_bounds(s_, layout, t);
      }
      if (last) {
        halted = true;
      } else if (opt.halting) {
        halted = halting_check(s_, t, bottoms, k);
      }
    }
    res.t_sizes.push_back(t.size());
    res.depth_ms.push_back(std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - start)
                               .count());
  }

  s_.end_query(depth);
  log(LeakKind::kHaltDepth, 1, depth);
  res.depth = depth;
  std::size_t take = std::min({k, n, t.size()});
  for (std::size_t i = 0; i < take; ++i) {
    res.items.push_back({std::move(t[i].ehl), t[i].worst, t[i].best});
  }
  res.counters = s_.counters();
  return res;
}

std::vector<JoinTuple> QueryEngine::join_topk(const JoinToken& token,
                                              const JoinEncryptedRelation& r1,
                                              const JoinEncryptedRelation& r2,
                                              const Projection& proj) {
  const PublicKey& pk = s_.pk();
  if (r1.header.pk_fingerprint != pk.fingerprint() ||
      r2.header.pk_fingerprint != pk.fingerprint()) {
    throw KeyError("relation was encrypted under a different key");
  }
  if (token.k < 1) throw DomainError("k must be >= 1");
  Bytes tb = token.serialize();
  begin(sha256(tb));
  auto kept = sec_filter(s_, sec_join(s_, token, r1, r2, proj));
  log(LeakKind::kJoinCount, 1, kept.size());
  std::vector<Ciphertext1> scores;
  for (auto& tup : kept) {
    tup.score = pk.add_plain(tup.score, -1);
    scores.push_back(tup.score);
  }
  std::vector<std::size_t> order;
  {
    PhaseScope phase(s_, Phase::kSort);
    order = enc_sort_order(s_, scores, true);
  }
  std::vector<JoinTuple> out;
  for (std::size_t i = 0; i < order.size() && i < token.k; ++i) {
    out.push_back(std::move(kept[order[i]]));
  }
  s_.end_query(0);
  return out;
}

std::vector<PlainResultItem> decrypt_result(const SecretKey& sk,
                                            const PreimageTable& ids,
                                            const std::vector<ScoredItem>& items) {
  const PublicKey& pk = sk.pk();
  std::vector<PlainResultItem> out;
  for (const auto& it : items) {
    mpz_class w = pk.to_signed(sk.decrypt(it.worst));
    mpz_class b = pk.to_signed(sk.decrypt(it.best));
    if (sgn(w) < 0 || sgn(b) < 0) throw ProtocolError("sentinel item in result");
    auto id = ids.lookup(sk, it.ehl);
    if (!id) throw ProtocolError("result item matches no known object");
    if (!w.fits_slong_p() || !b.fits_slong_p()) {
      throw ProtocolError("result score out of range");
    }
    out.push_back({*id, w.get_si(), b.get_si()});
  }
  return out;
}

std::vector<PlainJoinTuple> decrypt_join(const SecretKey& sk,
                                         const std::vector<JoinTuple>& tuples) {
  std::vector<PlainJoinTuple> out;
  for (const auto& t : tuples) {
    PlainJoinTuple p;
    mpz_class s = sk.decrypt(t.score);
    if (!s.fits_ulong_p()) throw ProtocolError("join score out of range");
    p.score = s.get_ui();
    for (const auto& a : t.attrs) {
      mpz_class v = sk.decrypt(a);
      if (!v.fits_ulong_p()) throw ProtocolError("join attribute out of range");
      p.attrs.push_back(v.get_ui());
    }
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

constexpr std::uint8_t kResultMagic[4] = {'E', 'T', 'K', 'R'};

void write_result_header(ByteWriter& w, const PublicKey& pk, std::uint8_t kind,
                         std::size_t count) {
  w.raw(kResultMagic);
  w.u8(kind);
  w.raw(pk.fingerprint());
  w.u32(static_cast<std::uint32_t>(count));
}

std::uint32_t read_result_header(ByteReader& r, const PublicKey& pk,
                                 std::uint8_t kind) {
  auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kResultMagic) || r.u8() != kind) {
    throw FormatError("not an encrypted result file of the expected kind");
  }
  auto fp = r.raw(32);
  Digest want = pk.fingerprint();
  if (!std::equal(fp.begin(), fp.end(), want.begin())) {
    throw KeyError("result was produced under a different key");
  }
  return r.u32();
}

}  // namespace

Bytes serialize_result(const PublicKey& pk, const std::vector<ScoredItem>& items) {
  ByteWriter w;
  write_result_header(w, pk, 1, items.size());
  for (const auto& it : items) {
    w.u32(static_cast<std::uint32_t>(it.ehl.size()));
    for (const auto& c : it.ehl.slots) pk.write_ct(w, c);
    pk.write_ct(w, it.worst);
    pk.write_ct(w, it.best);
  }
  return w.take();
}

std::vector<ScoredItem> deserialize_result(const PublicKey& pk,
                                           std::span<const std::uint8_t> b) {
  ByteReader r(b);
  std::uint32_t n = read_result_header(r, pk, 1);
  std::vector<ScoredItem> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    ScoredItem it;
    std::uint32_t slots = r.u32();
    if (slots > r.remaining()) throw FormatError("bad EHL size in result");
    for (std::uint32_t j = 0; j < slots; ++j) it.ehl.slots.push_back(pk.read_ct1(r));
    it.worst = pk.read_ct1(r);
    it.best = pk.read_ct1(r);
    out.push_back(std::move(it));
  }
  r.expect_done();
  return out;
}

Bytes serialize_join_result(const PublicKey& pk,
                            const std::vector<JoinTuple>& tuples) {
  ByteWriter w;
  write_result_header(w, pk, 2, tuples.size());
  for (const auto& t : tuples) {
    pk.write_ct(w, t.score);
    w.u32(static_cast<std::uint32_t>(t.attrs.size()));
    for (const auto& c : t.attrs) pk.write_ct(w, c);
  }
  return w.take();
}

std::vector<JoinTuple> deserialize_join_result(const PublicKey& pk,
                                               std::span<const std::uint8_t> b) {
  ByteReader r(b);
  std::uint32_t n = read_result_header(r, pk, 2);
  std::vector<JoinTuple> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    JoinTuple t;
    t.score = pk.read_ct1(r);
    std::uint32_t na = r.u32();
    if (na > r.remaining()) throw FormatError("bad attribute count in result");
    for (std::uint32_t j = 0; j < na; ++j) t.attrs.push_back(pk.read_ct1(r));
    out.push_back(std::move(t));
  }
  r.expect_done();
  return out;
}

}  // namespace enctopk
