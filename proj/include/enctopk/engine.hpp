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


// Encrypted top-k query processing (S1 side) and the top-k join pipeline.

#ifndef ENCTOPK_ENGINE_HPP_
#define ENCTOPK_ENGINE_HPP_

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "enctopk/datastore.hpp"
#include "enctopk/protocols.hpp"

namespace enctopk {

enum class ModeKind : std::uint8_t { kFull = 0, kElim = 1, kBatch = 2 };

struct QueryMode {
  ModeKind kind = ModeKind::kFull;
  std::uint32_t p = 0;  // batch only

  static QueryMode full() { return {ModeKind::kFull, 0}; }
  static QueryMode elim() { return {ModeKind::kElim, 0}; }
  static QueryMode batch(std::uint32_t p) { return {ModeKind::kBatch, p}; }
  // "full", "elim" or "batch:P".
  static QueryMode parse(const std::string& s);
  std::string to_string() const;
  void validate(std::uint32_t k) const;
  bool eliminates() const { return kind != ModeKind::kFull; }
  bool checks_at(std::size_t depth, std::size_t n) const;
};

// Called after each depth's state is complete; T is in no particular order.
using DepthObserver =
    std::function<void(std::uint32_t depth, const std::vector<TopItem>& t)>;

struct EngineOptions {
  QueryMode mode;
  DepthObserver observer;
  // Off: run to the last depth without halting checks (observer runs).
  bool halting = true;
};

struct QueryResult {
  std::vector<ScoredItem> items;  // best first
  std::uint32_t depth = 0;        // halting depth
  std::vector<std::size_t> t_sizes;
  std::vector<double> depth_ms;
  ProtocolCounters counters;
};

// Genuine score sums are below 2^(returned value) for this relation and
// token.
unsigned score_sum_bits(const RelationHeader& h, const Token& token);

class QueryEngine {
 public:
  // log receives S1's own observations; it may be null.
  QueryEngine(S1Session& s, LeakageLog* log);

  QueryResult sec_query(const Token& token, const EncryptedRelation& er,
                        const EngineOptions& opt);

  std::vector<JoinTuple> join_topk(const JoinToken& token,
                                   const JoinEncryptedRelation& r1,
                                   const JoinEncryptedRelation& r2,
                                   const Projection& proj);

 private:
  void log(LeakKind kind, std::uint64_t count, std::uint64_t value,
           Bytes detail = {});
  std::uint32_t begin(const Digest& query_digest);

  S1Session& s_;
  LeakageLog* log_;
  std::uint32_t next_query_ = 1;
  std::set<Digest> seen_queries_;
};

// Sorts T by (worst, best) descending in place.
void sort_by_bounds(S1Session& s, const PackLayout& layout,
                    std::vector<TopItem>& t);

// T sorted best-first. True iff |T| >= k, every item outside the first k
// has best <= W_k and the unseen bound sum(bottoms) <= W_k. Only the final
// bit is revealed to S1, and the traffic does not depend on k.
bool halting_check(S1Session& s, const std::vector<TopItem>& t,
                   const std::vector<Ciphertext1>& bottoms, std::size_t k);

// Authorized-client view of a result.
struct PlainResultItem {
  std::string id;
  std::int64_t worst = 0;
  std::int64_t best = 0;
};
std::vector<PlainResultItem> decrypt_result(const SecretKey& sk,
                                            const PreimageTable& ids,
                                            const std::vector<ScoredItem>& items);

struct PlainJoinTuple {
  std::uint64_t score = 0;
  std::vector<std::uint64_t> attrs;
};
std::vector<PlainJoinTuple> decrypt_join(const SecretKey& sk,
                                         const std::vector<JoinTuple>& tuples);

// Encrypted answers as handed to the client.
Bytes serialize_result(const PublicKey& pk, const std::vector<ScoredItem>& items);
std::vector<ScoredItem> deserialize_result(const PublicKey& pk,
                                           std::span<const std::uint8_t> b);
Bytes serialize_join_result(const PublicKey& pk,
                            const std::vector<JoinTuple>& tuples);
std::vector<JoinTuple> deserialize_join_result(const PublicKey& pk,
                                               std::span<const std::uint8_t> b);

}  // namespace enctopk

#endif  // ENCTOPK_ENGINE_HPP_
