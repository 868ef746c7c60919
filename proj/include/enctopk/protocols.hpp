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


// Two-party sub-protocols, S1 side. Each function drives one or more
// request/reply rounds with the crypto cloud (S2) through an S1Session.

#ifndef ENCTOPK_PROTOCOLS_HPP_
#define ENCTOPK_PROTOCOLS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "enctopk/datastore.hpp"
#include "enctopk/ehl.hpp"
#include "enctopk/paillier.hpp"
#include "enctopk/rng.hpp"
#include "enctopk/runtime.hpp"

namespace enctopk {

// Statistical blinding parameter (bits).
constexpr unsigned kKappa = 40;

struct ProtocolCounters {
  std::uint64_t equality_tests = 0;  // decrypted differences
  std::uint64_t recoveries = 0;
  std::uint64_t layered_exps = 0;
  std::uint64_t comparisons = 0;
  std::uint64_t zero_tests = 0;
  std::uint64_t blind_items = 0;
  std::uint64_t refreshed = 0;
  std::uint64_t sec_worst = 0;
  std::uint64_t sec_best = 0;
  std::uint64_t sec_dedup = 0;
  std::uint64_t sec_update = 0;
  std::uint64_t sec_join = 0;
  std::uint64_t sec_filter = 0;
  std::uint64_t rounds = 0;
};

// S1's half of a session: the channel, pk, S1's randomness and S1's
// ephemeral keys (sent to S2 on first use).
class S1Session {
 public:
  S1Session(Endpoint& ep, const PublicKey& pk, Rng rng);

  Endpoint& ep() { return ep_; }
  const PublicKey& pk() const { return pk_; }
  Rng& rng() { return rng_; }
  ProtocolCounters& counters() { return counters_; }

  // |N| + 8 bits, for additive BlindPacks.
  const KeyPair& additive_key();
  // 2|N| + 8 bits, for SecFilter's multiplicative randomness.
  const KeyPair& multiplicative_key();

  void begin_query(std::uint32_t query);
  void set_depth(std::uint32_t depth);
  void end_query(std::uint32_t halting_depth);
  void set_phase(Phase p) { ep_.set_phase(p); }

  // Request with the current phase as the first payload byte.
  Bytes call(std::uint16_t tag, ByteWriter& body);
  ByteWriter request() const;

 private:
  void send_keys();

  Endpoint& ep_;
  PublicKey pk_;
  Rng rng_;
  std::optional<KeyPair> additive_;
  std::optional<KeyPair> multiplicative_;
  ProtocolCounters counters_;
};

// Scoped phase label for transcript accounting.
class PhaseScope {
 public:
  PhaseScope(S1Session& s, Phase p) : s_(s), prev_(s.ep().phase()) {
    s_.set_phase(p);
  }
  ~PhaseScope() { s_.set_phase(prev_); }
  PhaseScope(const PhaseScope&) = delete;
  PhaseScope& operator=(const PhaseScope&) = delete;

 private:
  S1Session& s_;
  Phase prev_;
};

// ---------------------------------------------------------------------------
// Primitives.

// For each difference (an EHL ⊖ result) S2 returns Etwo(t), t = [dec = 0].
// The batch is shuffled before sending and un-shuffled on return.
std::vector<Ciphertext2> equality_bits(S1Session& s,
                                       std::vector<Ciphertext1> diffs);

// Strips the outer layer: Etwo(Enc(c)) -> Enc(c).
std::vector<Ciphertext1> recover_enc(S1Session& s,
                                     const std::vector<Ciphertext2>& wrapped);

// One output per entry: values[i] if bits[i] decrypts to 1, fallback if all
// bits are 0. At most one bit may be 1.
struct SelectSpec {
  std::vector<Ciphertext2> bits;
  std::vector<Ciphertext1> values;
  Ciphertext1 fallback;
};
std::vector<Ciphertext1> select(S1Session& s,
                                const std::vector<SelectSpec>& specs);

// f = [a <= b] for each pair.
std::vector<bool> enc_compare(
    S1Session& s,
    const std::vector<std::pair<Ciphertext1, Ciphertext1>>& pairs);
// As enc_compare, but S1 receives Enc(f) and learns nothing.
std::vector<Ciphertext1> enc_compare_hidden(
    S1Session& s,
    const std::vector<std::pair<Ciphertext1, Ciphertext1>>& pairs);
// True iff v decrypts to 0; S2 sees v times a random unit.
bool zero_test(S1Session& s, const Ciphertext1& v);

// Order of `keys` after sorting (ascending unless descending is set);
// out[i] is the index of the i-th element.
std::vector<std::size_t> enc_sort_order(S1Session& s,
                                        const std::vector<Ciphertext1>& keys,
                                        bool descending = false);
// Sorts (key, value) pairs by value, ascending; output is re-randomized.
std::vector<std::pair<Ciphertext1, Ciphertext1>> enc_sort(
    S1Session& s, const std::vector<std::pair<Ciphertext1, Ciphertext1>>& list);

// ---------------------------------------------------------------------------
// Scored items and blinded passes.

struct ScoredItem {
  Ehl ehl;
  Ciphertext1 worst;
  Ciphertext1 best;
};

// An EHL with an arbitrary number of attached layer-1 fields.
struct Record {
  Ehl ehl;
  std::vector<Ciphertext1> fields;
};

// Local blinding: EHL slots ⊙ alpha, worst + beta, best + gamma.
ScoredItem rand_blind(const PublicKey& pk, const ScoredItem& item,
                      std::span<const Ciphertext1> alpha,
                      const Ciphertext1& beta, const Ciphertext1& gamma);

struct BlindPassOptions {
  bool dedup = false;  // S2 tests all pairs and voids all but one per group
  bool drop = false;   // void means remove instead of sentinel
  // Optional per-record Etwo flags; a record whose flag is 1 is voided.
  std::vector<std::optional<Ciphertext2>> flags;
  // Plaintext values of a voided record's fields.
  std::vector<mpz_class> sentinel_fields;
  EhlVariant variant = EhlVariant::kPlus;
};

// Blinded pass: S1 blinds and shuffles, S2 voids, re-blinds and
// shuffles again, S1 unblinds through its BlindPack.
std::vector<Record> blind_pass(S1Session& s, std::vector<Record> records,
                               const BlindPassOptions& opt);

// The voided-item sentinel score, N - 1 (that is, -1).
mpz_class sentinel_score(const PublicKey& pk);

// Duplicates voided to (random EHL, -1, -1), output re-shuffled.
std::vector<ScoredItem> sec_dedup(S1Session& s, std::vector<ScoredItem> q,
                                  EhlVariant variant = EhlVariant::kPlus);
// Duplicates removed.
std::vector<ScoredItem> sec_dupelim(S1Session& s, std::vector<ScoredItem> q,
                                    EhlVariant variant = EhlVariant::kPlus);

// ---------------------------------------------------------------------------
// Scoring protocols.

// Enc(sum of values[j] over candidates j equal to probe), one result per query.
struct MatchQuery {
  const Ehl* probe = nullptr;
  std::vector<const Ehl*> candidates;
  std::vector<Ciphertext1> values;
};
std::vector<Ciphertext1> match_sums(S1Session& s,
                                    const std::vector<MatchQuery>& queries);

// Enc(W_H): the scores of items in H that hold the same object as `item`.
Ciphertext1 sec_worst(S1Session& s, const EncItem& item,
                      const std::vector<EncItem>& h);

struct SecBestResult {
  Ciphertext1 partial;              // sum over other lists of seen score or bottom
  std::vector<Ciphertext1> unseen;  // Enc(1) where the object is unseen
};
// prefixes[j] holds list j's items at depths 1..d; bottoms[j] its bottom.
SecBestResult sec_best(S1Session& s, const EncItem& item,
                       const std::vector<std::vector<EncItem>>& prefixes,
                       const std::vector<Ciphertext1>& bottoms);

// Packed engine state: one plaintext holding the worst score above m
// unseen-bit fields of w bits each, W * 2^(m w) + sum_l u_l 2^(l w).
struct PackLayout {
  std::size_t m = 0;
  unsigned w = kKappa + 2;
  unsigned lsum = 0;  // genuine sums are < 2^lsum

  PackLayout() = default;
  PackLayout(std::size_t lists, unsigned sum_bits)
      : m(lists), lsum(sum_bits) {}
  mpz_class shift() const;          // 2^(m w)
  mpz_class unit(std::size_t l) const;  // 2^(l w)
  mpz_class all_unseen() const;     // sum_l 2^(l w)
  mpz_class sentinel(const PublicKey& pk) const;  // W = -1, no unseen bits
  void validate(const PublicKey& pk) const;
};

struct TopItem {
  Ehl ehl;
  Ciphertext1 packed;
  Ciphertext1 worst;
  Ciphertext1 best;
};

// Folds the deduplicated depth-d items (EHL + packed same-depth state) into
// T: each T item absorbs its match, matched new items are voided (or
// dropped with elim), the union is re-blinded and shuffled by S2.
// worst/best of the output are left unset; see refresh().
std::vector<TopItem> sec_update(S1Session& s, const PackLayout& layout,
                                std::vector<TopItem> t,
                                std::vector<Record> gamma, bool elim,
                                EhlVariant variant);

// Recomputes worst and best of every item from its packed state and the
// current (weighted) bottoms.
void refresh(S1Session& s, const PackLayout& layout,
             std::vector<TopItem>& items,
             const std::vector<Ciphertext1>& bottoms);

// ---------------------------------------------------------------------------
// Join.

struct JoinTuple {
  Ciphertext1 score;
  std::vector<Ciphertext1> attrs;
};

// Which stored attribute positions of each relation are carried along.
struct Projection {
  std::vector<std::uint32_t> left;
  std::vector<std::uint32_t> right;
  static Projection all(std::size_t m1, std::size_t m2);
};

// All n1*n2 pairs in random order; score is t*(x + y + 1).
std::vector<JoinTuple> sec_join(S1Session& s, const JoinToken& token,
                                const JoinEncryptedRelation& r1,
                                const JoinEncryptedRelation& r2,
                                const Projection& proj);
// Keeps tuples whose score is non-zero.
std::vector<JoinTuple> sec_filter(S1Session& s, std::vector<JoinTuple> tuples);

}  // namespace enctopk

#endif  // ENCTOPK_PROTOCOLS_HPP_
