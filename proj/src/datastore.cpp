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

#include "enctopk/datastore.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "enctopk/errors.hpp"

namespace enctopk {
namespace {

constexpr char kRelationMagic[4] = {'E', 'T', 'K', '1'};
constexpr char kJoinMagic[4] = {'E', 'T', 'J', '1'};
constexpr char kKeyMagic[4] = {'E', 'T', 'K', 'K'};
constexpr std::uint16_t kVersion = 1;

Ciphertext1 owner_encrypt(const PublicKey& pk, const SecretKey* sk,
                          const mpz_class& m, Rng& rng) {
  return sk != nullptr ? sk->encrypt(m, rng) : pk.encrypt(m, rng);
}

EncItem encrypt_cell(const PublicKey& pk, const SecretKey* sk,
                     const EhlKeySet& keys, std::span<const std::uint8_t> id,
                     std::uint64_t value, Rng& rng) {
  EncItem item;
  for (const auto& m : ehl_plaintext(keys, pk, id)) {
    item.ehl.slots.push_back(owner_encrypt(pk, sk, m, rng));
  }
  item.score = owner_encrypt(pk, sk, mpz_class(static_cast<unsigned long>(value)), rng);
  return item;
}

void check_magic(ByteReader& r, const char (&magic)[4]) {
  auto m = r.raw(4);
  if (std::memcmp(m.data(), magic, 4) != 0) throw FormatError("bad magic");
  if (r.u16() != kVersion) throw FormatError("unsupported format version");
}

void write_header(ByteWriter& w, const RelationHeader& h, const PublicKey& pk) {
  w.u32(h.n);
  w.u32(h.m);
  w.u16(h.width);
  w.u8(static_cast<std::uint8_t>(h.variant));
  w.u16(h.s);
  w.u32(h.list_length);
  w.u32(static_cast<std::uint32_t>(pk.ct1_bytes()));
  w.raw(h.pk_fingerprint);
}

RelationHeader read_header(ByteReader& r, const PublicKey& pk) {
  RelationHeader h;
  h.n = r.u32();
  h.m = r.u32();
  h.width = r.u16();
  std::uint8_t v = r.u8();
  if (v > 1) throw FormatError("unknown EHL variant");
  h.variant = static_cast<EhlVariant>(v);
  h.s = r.u16();
  h.list_length = r.u32();
  std::uint32_t ctw = r.u32();
  auto fp = r.raw(32);
  std::copy(fp.begin(), fp.end(), h.pk_fingerprint.begin());
  if (h.pk_fingerprint != pk.fingerprint() || ctw != pk.ct1_bytes()) {
    throw KeyError("encrypted relation was produced under a different key");
  }
  if (h.n == 0 || h.m == 0 || h.ehl_slots() == 0) {
    throw FormatError("empty relation header");
  }
  // Each cell needs at least (slots + 1) ciphertexts.
  std::size_t cell = (h.ehl_slots() + 1) * pk.ct1_bytes();
  if (r.remaining() / cell < static_cast<std::size_t>(h.n) * h.m) {
    throw FormatError("truncated encrypted relation");
  }
  return h;
}

RelationHeader make_header(const Relation& r, const PublicKey& pk,
                           const EhlKeySet& keys) {
  RelationHeader h;
  h.n = static_cast<std::uint32_t>(r.n());
  h.m = static_cast<std::uint32_t>(r.m());
  h.width = static_cast<std::uint16_t>(r.width);
  h.variant = keys.variant;
  h.s = static_cast<std::uint16_t>(keys.s());
  h.list_length = keys.list_length;
  h.pk_fingerprint = pk.fingerprint();
  return h;
}

void write_cell(ByteWriter& w, const PublicKey& pk, EhlVariant v,
                const EncItem& it) {
  write_ehl(w, pk, v, it.ehl);
  pk.write_ct(w, it.score);
}

EncItem read_cell(ByteReader& r, const PublicKey& pk, const RelationHeader& h) {
  EncItem it;
  it.ehl = read_ehl(r, pk, h.variant, h.ehl_slots());
  it.score = pk.read_ct1(r);
  return it;
}

}  // namespace

PrpKey PrpKey::generate(Rng& rng) {
  PrpKey k;
  rng.fill(k.key.data(), k.key.size());
  return k;
}

std::vector<std::size_t> prp_permutation(const PrpKey& k, std::size_t m) {
  if (m == 0) throw DomainError("PRP domain is empty");
  ByteWriter w;
  w.raw(as_bytes("prp"));
  w.u64(m);
  Digest seed = hmac_sha256(k.key, w.data());
  Rng rng{std::span<const std::uint8_t>(seed)};
  return rng.permutation(m);
}

std::size_t prp_apply(const PrpKey& k, std::size_t i, std::size_t m) {
  if (i >= m) throw DomainError("attribute index out of range");
  return prp_permutation(k, m)[i];
}

Bytes Token::serialize() const {
  ByteWriter w;
  w.u32(k);
  w.u16(static_cast<std::uint16_t>(lists.size()));
  w.u8(weights.empty() ? 0 : 1);
  for (std::size_t i = 0; i < lists.size(); ++i) {
    w.u32(lists[i]);
    if (!weights.empty()) w.u64(weights[i]);
  }
  return w.take();
}

Token Token::deserialize(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  Token t;
  t.k = r.u32();
  std::uint16_t count = r.u16();
  bool weighted = r.u8() != 0;
  for (std::uint16_t i = 0; i < count; ++i) {
    t.lists.push_back(r.u32());
    if (weighted) t.weights.push_back(r.u64());
  }
  r.expect_done();
  if (t.k < 1 || t.lists.empty()) throw FormatError("malformed token");
  return t;
}

Digest Token::digest() const { return sha256(serialize()); }

Token make_token(const PrpKey& key, std::size_t m, const ScoringQuery& q,
                 std::uint32_t k) {
  if (k < 1) throw DomainError("k must be >= 1");
  if (q.attrs.empty()) throw DomainError("empty attribute set");
  std::set<std::size_t> uniq(q.attrs.begin(), q.attrs.end());
  if (uniq.size() != q.attrs.size()) throw DomainError("duplicate attribute");
  if (!q.weights.empty() && q.weights.size() != q.attrs.size()) {
    throw DomainError("weight count mismatch");
  }
  auto perm = prp_permutation(key, m);
  Token t;
  t.k = k;
  for (auto a : q.attrs) {
    if (a >= m) throw DomainError("attribute index out of range");
    t.lists.push_back(static_cast<std::uint32_t>(perm[a]));
  }
  t.weights = q.weights;
  return t;
}

Token make_token(const PrpKey& key, const std::vector<std::string>& schema,
                 const std::vector<std::string>& attrs,
                 const std::vector<std::uint64_t>& weights, std::uint32_t k) {
  ScoringQuery q;
  for (const auto& a : attrs) {
    auto it = std::find(schema.begin(), schema.end(), a);
    if (it == schema.end()) throw DomainError("unknown attribute '" + a + "'");
    q.attrs.push_back(static_cast<std::size_t>(it - schema.begin()));
  }
  q.weights = weights;
  return make_token(key, schema.size(), q, k);
}

EncryptedRelation encrypt_relation(const Relation& r, const PublicKey& pk,
                                   const EhlKeySet& ehl_keys,
                                   const PrpKey& prp, Rng& rng,
                                   const SecretKey* owner_sk) {
  r.validate();
  ehl_keys.validate();
  if (r.width + 2 >= pk.bits()) throw DomainError("score width too large for key");
  EncryptedRelation er;
  er.header = make_header(r, pk, ehl_keys);
  auto perm = prp_permutation(prp, r.m());
  er.lists.resize(r.m());
  for (std::size_t j = 0; j < r.m(); ++j) {
    SortedList l = sorted_list(r, j);
    auto& out = er.lists[perm[j]];
    out.reserve(r.n());
    for (std::size_t d = 0; d < l.size(); ++d) {
      Rng cell_rng = rng.fork("cell", j, d);
      out.push_back(encrypt_cell(pk, owner_sk, ehl_keys,
                                 as_bytes(r.ids[l[d].row]), l[d].value,
                                 cell_rng));
    }
  }
  return er;
}

Bytes serialize_relation(const EncryptedRelation& er, const PublicKey& pk) {
  ByteWriter w;
  w.raw({reinterpret_cast<const std::uint8_t*>(kRelationMagic), 4});
  w.u16(kVersion);
  write_header(w, er.header, pk);
  if (er.lists.size() != er.header.m) throw FormatError("list count mismatch");
  for (const auto& list : er.lists) {
    if (list.size() != er.header.n) throw FormatError("list length mismatch");
    for (const auto& it : list) write_cell(w, pk, er.header.variant, it);
  }
  return w.take();
}

EncryptedRelation deserialize_relation(std::span<const std::uint8_t> b,
                                       const PublicKey& pk) {
  ByteReader r(b);
  check_magic(r, kRelationMagic);
  EncryptedRelation er;
  er.header = read_header(r, pk);
  er.lists.resize(er.header.m);
  for (auto& list : er.lists) {
    list.reserve(er.header.n);
    for (std::uint32_t d = 0; d < er.header.n; ++d) {
      list.push_back(read_cell(r, pk, er.header));
    }
  }
  r.expect_done();
  return er;
}

Bytes JoinToken::serialize() const {
  ByteWriter w;
  w.u32(t1);
  w.u32(t2);
  w.u32(t3);
  w.u32(t4);
  w.u32(k);
  return w.take();
}

JoinToken JoinToken::deserialize(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  JoinToken t;
  t.t1 = r.u32();
  t.t2 = r.u32();
  t.t3 = r.u32();
  t.t4 = r.u32();
  t.k = r.u32();
  r.expect_done();
  if (t.k < 1) throw FormatError("malformed join token");
  return t;
}

JoinToken make_join_token(const PrpKey& key, std::size_t m1, std::size_t m2,
                          std::size_t a, std::size_t b, std::size_t t3,
                          std::size_t t4, std::uint32_t k) {
  if (k < 1) throw DomainError("k must be >= 1");
  if (a >= m1 || t3 >= m1 || b >= m2 || t4 >= m2) {
    throw DomainError("join attribute index out of range");
  }
  auto p1 = prp_permutation(key, m1);
  auto p2 = prp_permutation(key, m2);
  JoinToken t;
  t.t1 = static_cast<std::uint32_t>(p1[a]);
  t.t2 = static_cast<std::uint32_t>(p2[b]);
  t.t3 = static_cast<std::uint32_t>(p1[t3]);
  t.t4 = static_cast<std::uint32_t>(p2[t4]);
  t.k = k;
  return t;
}

namespace {

JoinEncryptedRelation encrypt_join_one(const Relation& r, const PublicKey& pk,
                                       const EhlKeySet& keys, const PrpKey& prp,
                                       Rng& rng, const SecretKey* sk,
                                       std::uint64_t tag) {
  r.validate();
  JoinEncryptedRelation jr;
  jr.header = make_header(r, pk, keys);
  auto perm = prp_permutation(prp, r.m());
  Rng order_rng = rng.fork("join-order", tag);
  auto rows = order_rng.permutation(r.n());
  for (std::size_t i = 0; i < r.n(); ++i) {
    std::size_t row = rows[i];
    std::vector<EncItem> cells(r.m());
    for (std::size_t j = 0; j < r.m(); ++j) {
      Rng cell_rng = rng.fork("join-cell", tag, i * r.m() + j);
      Bytes id = encode_int_id(r.at(row, j));
      cells[perm[j]] = encrypt_cell(pk, sk, keys, id, r.at(row, j), cell_rng);
    }
    jr.rows.push_back(std::move(cells));
  }
  return jr;
}

}  // namespace

std::pair<JoinEncryptedRelation, JoinEncryptedRelation> encrypt_join_relations(
    const Relation& r1, const Relation& r2, const PublicKey& pk,
    const EhlKeySet& ehl_keys, const PrpKey& prp, Rng& rng,
    const SecretKey* owner_sk) {
  ehl_keys.validate();
  return {encrypt_join_one(r1, pk, ehl_keys, prp, rng, owner_sk, 1),
          encrypt_join_one(r2, pk, ehl_keys, prp, rng, owner_sk, 2)};
}

Bytes serialize_join_relation(const JoinEncryptedRelation& jr,
                              const PublicKey& pk) {
  ByteWriter w;
  w.raw({reinterpret_cast<const std::uint8_t*>(kJoinMagic), 4});
  w.u16(kVersion);
  write_header(w, jr.header, pk);
  if (jr.rows.size() != jr.header.n) throw FormatError("row count mismatch");
  for (const auto& row : jr.rows) {
    if (row.size() != jr.header.m) throw FormatError("row width mismatch");
    for (const auto& it : row) write_cell(w, pk, jr.header.variant, it);
  }
  return w.take();
}

JoinEncryptedRelation deserialize_join_relation(std::span<const std::uint8_t> b,
                                                const PublicKey& pk) {
  ByteReader r(b);
  check_magic(r, kJoinMagic);
  JoinEncryptedRelation jr;
  jr.header = read_header(r, pk);
  for (std::uint32_t i = 0; i < jr.header.n; ++i) {
    std::vector<EncItem> row;
    for (std::uint32_t j = 0; j < jr.header.m; ++j) {
      row.push_back(read_cell(r, pk, jr.header));
    }
    jr.rows.push_back(std::move(row));
  }
  r.expect_done();
  return jr;
}

std::string PreimageTable::fingerprint(const std::vector<mpz_class>& plain) {
  ByteWriter w;
  for (const auto& v : plain) w.mpz_lp(v);
  return to_hex(sha256(w.data()));
}

void PreimageTable::add(const std::string& id) {
  table_[fingerprint(ehl_plaintext(keys_, pk_, as_bytes(id)))] = id;
}

void PreimageTable::add_all(const Relation& r) {
  for (const auto& id : r.ids) add(id);
}

std::optional<std::string> PreimageTable::lookup(
    const std::vector<mpz_class>& plain) const {
  auto it = table_.find(fingerprint(plain));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> PreimageTable::lookup(const SecretKey& sk,
                                                 const Ehl& e) const {
  std::vector<mpz_class> plain;
  for (const auto& c : e.slots) plain.push_back(sk.decrypt(c));
  return lookup(plain);
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed for " + path);
}

void write_key_file(const std::string& path, KeyKind kind,
                    std::span<const std::uint8_t> payload) {
  ByteWriter w;
  w.raw({reinterpret_cast<const std::uint8_t*>(kKeyMagic), 4});
  w.u16(kVersion);
  w.u8(static_cast<std::uint8_t>(kind));
  w.bytes_lp(payload);
  write_file(path, w.data());
}

Bytes read_key_file(const std::string& path, KeyKind kind) {
  Bytes data = read_file(path);
  ByteReader r(data);
  check_magic(r, kKeyMagic);
  if (r.u8() != static_cast<std::uint8_t>(kind)) {
    throw KeyError(path + " holds a different kind of key material");
  }
  Bytes payload = r.bytes_lp();
  r.expect_done();
  return payload;
}

}  // namespace enctopk
