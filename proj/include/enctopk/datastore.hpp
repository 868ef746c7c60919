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

// Relation encryption, attribute permutation, tokens and on-disk formats.
// Attribute indices are 0-based throughout.

#ifndef ENCTOPK_DATASTORE_HPP_
#define ENCTOPK_DATASTORE_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "enctopk/bytes.hpp"
#include "enctopk/ehl.hpp"
#include "enctopk/oracle.hpp"
#include "enctopk/paillier.hpp"
#include "enctopk/relation.hpp"

namespace enctopk {

struct EncItem {
  Ehl ehl;
  Ciphertext1 score;
};

struct RelationHeader {
  std::uint32_t n = 0;
  std::uint32_t m = 0;
  std::uint16_t width = 32;
  EhlVariant variant = EhlVariant::kPlus;
  std::uint16_t s = 0;
  std::uint32_t list_length = 0;
  Digest pk_fingerprint{};

  std::size_t ehl_slots() const {
    return variant == EhlVariant::kPlus ? s : list_length;
  }
};

// M sorted lists of n cells, stored at their permuted positions.
struct EncryptedRelation {
  RelationHeader header;
  std::vector<std::vector<EncItem>> lists;
};

struct PrpKey {
  Digest key{};
  static PrpKey generate(Rng& rng);
};

std::vector<std::size_t> prp_permutation(const PrpKey& k, std::size_t m);
std::size_t prp_apply(const PrpKey& k, std::size_t i, std::size_t m);

struct Token {
  std::vector<std::uint32_t> lists;    // permuted indices
  std::vector<std::uint64_t> weights;  // empty means all 1
  std::uint32_t k = 1;

  std::uint64_t weight(std::size_t i) const {
    return weights.empty() ? 1 : weights[i];
  }
  Bytes serialize() const;
  static Token deserialize(std::span<const std::uint8_t> b);
  Digest digest() const;
};

Token make_token(const PrpKey& key, const std::vector<std::string>& schema,
                 const std::vector<std::string>& attrs,
                 const std::vector<std::uint64_t>& weights, std::uint32_t k);
Token make_token(const PrpKey& key, std::size_t m, const ScoringQuery& q,
                 std::uint32_t k);

// The owner may pass its secret key to use CRT encryption; the output is
// distributed identically.
EncryptedRelation encrypt_relation(const Relation& r, const PublicKey& pk,
                                   const EhlKeySet& ehl_keys,
                                   const PrpKey& prp, Rng& rng,
                                   const SecretKey* owner_sk = nullptr);

Bytes serialize_relation(const EncryptedRelation& er, const PublicKey& pk);
EncryptedRelation deserialize_relation(std::span<const std::uint8_t> b,
                                       const PublicKey& pk);

// Join relations: every cell carries an EHL over its value and Enc(value),
// attribute positions permuted, rows shuffled.
struct JoinEncryptedRelation {
  RelationHeader header;
  std::vector<std::vector<EncItem>> rows;
};

struct JoinToken {
  std::uint32_t t1 = 0, t2 = 0, t3 = 0, t4 = 0;
  std::uint32_t k = 1;
  Bytes serialize() const;
  static JoinToken deserialize(std::span<const std::uint8_t> b);
};

JoinToken make_join_token(const PrpKey& key, std::size_t m1, std::size_t m2,
                          std::size_t a, std::size_t b, std::size_t t3,
                          std::size_t t4, std::uint32_t k);

std::pair<JoinEncryptedRelation, JoinEncryptedRelation> encrypt_join_relations(
    const Relation& r1, const Relation& r2, const PublicKey& pk,
    const EhlKeySet& ehl_keys, const PrpKey& prp, Rng& rng,
    const SecretKey* owner_sk = nullptr);

Bytes serialize_join_relation(const JoinEncryptedRelation& jr,
                              const PublicKey& pk);
JoinEncryptedRelation deserialize_join_relation(std::span<const std::uint8_t> b,
                                                const PublicKey& pk);

// Maps EHL plaintexts back to ids; held by the authorized client.
class PreimageTable {
 public:
  PreimageTable(const EhlKeySet& keys, const PublicKey& pk)
      : keys_(keys), pk_(pk) {}
  void add(const std::string& id);
  void add_all(const Relation& r);
  std::optional<std::string> lookup(const std::vector<mpz_class>& plain) const;
  std::optional<std::string> lookup(const SecretKey& sk, const Ehl& e) const;

 private:
  static std::string fingerprint(const std::vector<mpz_class>& plain);
  EhlKeySet keys_;
  PublicKey pk_;
  std::map<std::string, std::string> table_;
};

// Key material files.
enum class KeyKind : std::uint8_t {
  kPublic = 1,
  kSecret = 2,
  kEhl = 3,
  kPrp = 4,
  kToken = 5,
  kJoinToken = 6,
};

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> data);
void write_key_file(const std::string& path, KeyKind kind,
                    std::span<const std::uint8_t> payload);
Bytes read_key_file(const std::string& path, KeyKind kind);

}  // namespace enctopk

#endif  // ENCTOPK_DATASTORE_HPP_
