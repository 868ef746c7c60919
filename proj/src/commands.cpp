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


#include "enctopk/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "enctopk/audit.hpp"
#include "enctopk/crypto_cloud.hpp"
#include "enctopk/datastore.hpp"
#include "enctopk/errors.hpp"

namespace enctopk {
namespace {

Rng make_rng(const std::optional<std::uint64_t>& seed, std::string_view label) {
  return (seed ? Rng(*seed) : Rng::from_entropy()).fork(label);
}

void need(const std::string& v, const char* flag) {
  if (v.empty()) throw UsageError(std::string("missing required flag ") + flag);
}

PublicKey load_pk(const std::string& path) {
  need(path, "--pk");
  return PublicKey::deserialize(read_key_file(path, KeyKind::kPublic));
}

SecretKey load_sk(const std::string& path) {
  return SecretKey::deserialize(read_key_file(path, KeyKind::kSecret));
}

SecretKey load_sk_for(const std::string& path, const PublicKey& pk) {
  SecretKey sk = load_sk(path);
  if (!(sk.pk() == pk)) throw KeyError("secret key does not match the public key");
  return sk;
}

PrpKey load_prp(const std::string& path) {
  need(path, "--prp-key");
  Bytes b = read_key_file(path, KeyKind::kPrp);
  if (b.size() != 32) throw FormatError("PRP key must be 32 bytes");
  PrpKey k;
  std::copy(b.begin(), b.end(), k.key.begin());
  return k;
}

EhlKeySet load_ehl(const std::string& path) {
  need(path, "--ehl-keys");
  return EhlKeySet::deserialize(read_key_file(path, KeyKind::kEhl));
}

std::size_t index_of(const std::vector<std::string>& schema, const std::string& a) {
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i] == a) return i;
  }
  throw DomainError("unknown attribute '" + a + "'");
}

std::string handle(const Ciphertext1& c) {
  Digest d = sha256(mpz_to_bytes(c.v));
  return to_hex(std::span<const std::uint8_t>(d.data(), 8));
}

void write_text(const std::string& path, const std::string& text) {
  write_file(path, as_bytes(text));
}

// Runs an S1 program against an in-process cloud or a remote one.
void run_s1(const RunOptions& o, const PublicKey& pk,
            const std::function<void(S1Session&, LeakageLog&)>& body,
            std::ostream& out) {
  ChannelSpec spec = ChannelSpec::parse(o.channel);
  if (spec.tcp && !o.decrypt_with.empty()) {
    throw UsageError("--decrypt-with is refused for remote channels");
  }
  const bool keep = !o.frames.empty();
  const std::uint64_t seed = o.seed.value_or(0);
  Transcript transcript;
  LeakageLog s1_log, s2_log;
  auto program = [&](Endpoint& ep, LeakageLog&) {
    S1Session s(ep, pk, make_rng(o.seed, "s1"));
    body(s, s1_log);
  };
  if (spec.tcp) {
    transcript.keep_payloads(keep);
    auto ch = tcp_connect(spec.host, spec.port);
    Endpoint ep(*ch, Party::kS1, &transcript);
    program(ep, s1_log);
    ep.set_phase(Phase::kControl);
    ep.send(tags::kBye, {});
    ch->close();
  } else {
    need(o.sk, "--sk (the in-process crypto cloud's key)");
    SecretKey sk = load_sk_for(o.sk, pk);
    PairRun run;
    PartyProgram cloud = o.seed ? crypto_cloud_program(sk, seed)
                                : crypto_cloud_program(sk, Rng::from_entropy().next_u64());
    run_pair(program, cloud, ChannelKind::kInproc, run, keep);
    transcript = std::move(run.transcript);
    for (auto& e : run.s2_log.events()) s2_log.append(e);
  }
  if (!o.s1_log.empty()) {
    std::ostringstream ss;
    s1_log.export_lines(ss);
    write_text(o.s1_log, ss.str());
  }
  if (!o.s2_log.empty()) {
    if (spec.tcp) throw UsageError("--s2-log needs an in-process cloud; use serve --log");
    std::ostringstream ss;
    s2_log.export_lines(ss);
    write_text(o.s2_log, ss.str());
  }
  if (keep) write_frames(o.frames, transcript.frames());
  if (!o.transcript.empty()) {
    std::ostringstream ss;
    transcript.export_lines(ss);
    write_text(o.transcript, ss.str());
  }
  if (o.report) write_report(out, transcript_report(transcript));
  out << "traffic " << transcript.messages(Direction::kToS2) << " msgs "
      << transcript.bytes(Direction::kToS2) << " bytes to S2, "
      << transcript.messages(Direction::kToS1) << " msgs "
      << transcript.bytes(Direction::kToS1) << " bytes to S1\n";
}

void print_plain(const SecretKey& sk, const PublicKey& pk, const std::string& ehl_keys,
                 const std::string& csv, const std::vector<ScoredItem>& items,
                 std::ostream& out) {
  need(ehl_keys, "--ehl-keys");
  need(csv, "--csv");
  PreimageTable ids(load_ehl(ehl_keys), pk);
  ids.add_all(load_csv(csv));
  auto plain = decrypt_result(sk, ids, items);
  for (std::size_t i = 0; i < plain.size(); ++i) {
    out << "result " << i + 1 << " " << plain[i].id << " " << plain[i].worst << " "
        << plain[i].best << "\n";
  }
}

void print_plain(const SecretKey& sk, const std::vector<JoinTuple>& tuples,
                 std::ostream& out) {
  auto plain = decrypt_join(sk, tuples);
  for (std::size_t i = 0; i < plain.size(); ++i) {
    out << "result " << i + 1 << " " << plain[i].score;
    for (auto a : plain[i].attrs) out << " " << a;
    out << "\n";
  }
}

}  // namespace

std::string resolve_profile(const std::string& flag) {
  if (!flag.empty()) return flag;
  const char* env = std::getenv("ENCTOPK_PROFILE");
  return env != nullptr && *env != '\0' ? env : "test";
}

void cmd_keygen(const KeygenOptions& o, std::ostream& out) {
  need(o.pk, "--pk");
  need(o.sk, "--sk");
  need(o.ehl_keys, "--ehl-keys");
  need(o.prp_key, "--prp-key");
  unsigned bits = profile_bits(o.profile);
  Rng root = o.seed ? Rng(*o.seed) : Rng::from_entropy();
  Rng prng = root.fork("paillier");
  KeyPair kp = keygen(bits, prng);
  Rng erng = root.fork("ehl");
  EhlKeySet ehl = EhlKeySet::generate(o.variant, o.ehl_s, o.list_length, erng);
  Rng krng = root.fork("prp");
  PrpKey prp = PrpKey::generate(krng);
  write_key_file(o.pk, KeyKind::kPublic, kp.pk.serialize());
  write_key_file(o.sk, KeyKind::kSecret, kp.sk.serialize());
  write_key_file(o.ehl_keys, KeyKind::kEhl, ehl.serialize());
  write_key_file(o.prp_key, KeyKind::kPrp, prp.key);
  out << "keygen " << o.profile << ": " << bits << "-bit modulus, "
      << (o.variant == EhlVariant::kPlus ? "EHL+" : "classic EHL") << " s=" << o.ehl_s
      << ", pk fingerprint " << to_hex(kp.pk.fingerprint()).substr(0, 16) << "\n";
}

void cmd_encrypt(const EncryptOptions& o, std::ostream& out) {
  need(o.csv, "--csv");
  need(o.out, "--out");
  PublicKey pk = load_pk(o.pk);
  EhlKeySet ehl = load_ehl(o.ehl_keys);
  PrpKey prp = load_prp(o.prp_key);
  std::optional<SecretKey> sk;
  if (!o.sk.empty()) sk = load_sk_for(o.sk, pk);
  Relation r = load_csv(o.csv, o.width);
  Rng rng = make_rng(o.seed, "encrypt");
  auto start = std::chrono::steady_clock::now();
  if (!o.join_csv.empty()) {
    need(o.join_out, "--join-out");
    Relation r2 = load_csv(o.join_csv, o.width);
    auto [j1, j2] = encrypt_join_relations(r, r2, pk, ehl, prp, rng,
                                           sk ? &*sk : nullptr);
    write_file(o.out, serialize_join_relation(j1, pk));
    write_file(o.join_out, serialize_join_relation(j2, pk));
    out << "encrypted join relations " << r.n() << "x" << r.m() << " and "
        << r2.n() << "x" << r2.m();
  } else {
    auto er = encrypt_relation(r, pk, ehl, prp, rng, sk ? &*sk : nullptr);
    write_file(o.out, serialize_relation(er, pk));
    out << "encrypted " << r.n() << " objects x " << r.m() << " attributes";
  }
  double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << " in " << std::fixed << std::setprecision(2) << s << " s\n";
}

void cmd_token(const TokenOptions& o, std::ostream& out) {
  need(o.out, "--out");
  need(o.csv, "--csv");
  PrpKey prp = load_prp(o.prp_key);
  std::vector<std::string> schema = load_csv(o.csv).attr_names;
  if (!o.join_csv.empty()) {
    std::vector<std::string> schema2 = load_csv(o.join_csv).attr_names;
    need(o.on_left, "--on");
    need(o.score_left, "--score");
    JoinToken t = make_join_token(prp, schema.size(), schema2.size(),
                                  index_of(schema, o.on_left), index_of(schema2, o.on_right),
                                  index_of(schema, o.score_left),
                                  index_of(schema2, o.score_right), o.k);
    write_key_file(o.out, KeyKind::kJoinToken, t.serialize());
    out << "join token k=" << t.k << "\n";
    return;
  }
  Token t = make_token(prp, schema, o.attrs, o.weights, o.k);
  write_key_file(o.out, KeyKind::kToken, t.serialize());
  out << "token for " << o.attrs.size() << " lists, k=" << t.k << "\n";
}

void cmd_serve(const ServeOptions& o, std::ostream& out) {
  need(o.sk, "--sk");
  SecretKey sk = load_sk(o.sk);
  ChannelSpec spec = ChannelSpec::parse("tcp:" + o.listen);
  TcpListener listener(spec.host, spec.port);
  out << "listening " << spec.host << ":" << listener.port() << std::endl;
  Rng root = make_rng(o.seed, "serve");
  std::mutex log_mu;
  std::vector<std::thread> workers;
  for (std::size_t i = 0; o.connections == 0 || i < o.connections; ++i) {
    std::shared_ptr<Channel> ch = listener.accept();
    Rng rng = root.fork("connection", i);
    workers.emplace_back([&, ch, rng]() mutable {
      LeakageLog log;
      try {
        Endpoint ep(*ch, Party::kS2);
        CryptoCloud cloud(sk, rng, &log);
        cloud.serve(ep);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(log_mu);
        std::cerr << "connection error: " << e.what() << std::endl;
      }
      ch->close();
      if (!o.log.empty()) {
        std::lock_guard<std::mutex> lock(log_mu);
        std::ofstream f(o.log, std::ios::app);
        log.export_lines(f);
      }
    });
  }
  for (auto& w : workers) w.join();
}

void cmd_query(const QueryOptions& o, std::ostream& out) {
  need(o.token, "--token");
  need(o.er, "--er");
  PublicKey pk = load_pk(o.pk);
  Token token = Token::deserialize(read_key_file(o.token, KeyKind::kToken));
  EncryptedRelation er = deserialize_relation(read_file(o.er), pk);
  EngineOptions opt;
  opt.mode = QueryMode::parse(o.mode);
  QueryResult res;
  run_s1(o, pk, [&](S1Session& s, LeakageLog& log) {
    QueryEngine eng(s, &log);
    res = eng.sec_query(token, er, opt);
  }, out);
  out << "halted at depth " << res.depth << " of " << er.header.n << "\n";
  if (!o.result_out.empty()) write_file(o.result_out, serialize_result(pk, res.items));
  if (o.decrypt_with.empty()) {
    for (std::size_t i = 0; i < res.items.size(); ++i) {
      out << "result " << i + 1 << " " << handle(res.items[i].worst) << "\n";
    }
    return;
  }
  print_plain(load_sk_for(o.decrypt_with, pk), pk, o.ehl_keys, o.csv, res.items, out);
}

void cmd_join(const JoinOptions& o, std::ostream& out) {
  need(o.token, "--token");
  need(o.er1, "--er");
  need(o.er2, "--er2");
  PublicKey pk = load_pk(o.pk);
  JoinToken token = JoinToken::deserialize(read_key_file(o.token, KeyKind::kJoinToken));
  auto r1 = deserialize_join_relation(read_file(o.er1), pk);
  auto r2 = deserialize_join_relation(read_file(o.er2), pk);
  std::vector<JoinTuple> res;
  run_s1(o, pk, [&](S1Session& s, LeakageLog& log) {
    QueryEngine eng(s, &log);
    res = eng.join_topk(token, r1, r2, Projection::all(r1.header.m, r2.header.m));
  }, out);
  if (!o.result_out.empty()) write_file(o.result_out, serialize_join_result(pk, res));
  if (o.decrypt_with.empty()) {
    for (std::size_t i = 0; i < res.size(); ++i) {
      out << "result " << i + 1 << " " << handle(res[i].score) << "\n";
    }
    return;
  }
  print_plain(load_sk_for(o.decrypt_with, pk), res, out);
}

void cmd_decrypt(const DecryptOptions& o, std::ostream& out) {
  need(o.result, "--result");
  need(o.sk, "--sk");
  PublicKey pk = load_pk(o.pk);
  SecretKey sk = load_sk_for(o.sk, pk);
  Bytes b = read_file(o.result);
  if (o.join) {
    print_plain(sk, deserialize_join_result(pk, b), out);
  } else {
    print_plain(sk, pk, o.ehl_keys, o.csv, deserialize_result(pk, b), out);
  }
}

void cmd_bench(const BenchOptions& o, std::ostream& out) {
  if (o.lists == 0 || o.lists > o.attrs) throw UsageError("--lists must be in 1..attrs");
  Rng root(o.seed);
  Rng drng = root.fork("data");
  std::uint64_t bound = o.width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << o.width);
  Relation r = random_relation(o.rows, o.attrs, o.width, bound, drng);
  Rng krng = root.fork("keys");
  auto t0 = std::chrono::steady_clock::now();
  KeyPair kp = keygen(profile_bits(o.profile), krng);
  EhlKeySet ehl = EhlKeySet::generate(EhlVariant::kPlus, 3, 0, krng);
  PrpKey prp = PrpKey::generate(krng);
  auto t1 = std::chrono::steady_clock::now();
  Rng erng = root.fork("encrypt");
  EncryptedRelation er = encrypt_relation(r, kp.pk, ehl, prp, erng, &kp.sk);
  auto t2 = std::chrono::steady_clock::now();
  ScoringQuery q;
  for (std::size_t l = 0; l < o.lists; ++l) q.attrs.push_back(l);
  Token token = make_token(prp, r.m(), q, o.k);
  EngineOptions opt;
  opt.mode = QueryMode::parse(o.mode);
  QueryResult res;
  PairRun run;
  run_pair(
      [&](Endpoint& ep, LeakageLog&) {
        S1Session s(ep, kp.pk, root.fork("s1"));
        res = QueryEngine(s, nullptr).sec_query(token, er, opt);
      },
      crypto_cloud_program(kp.sk, o.seed), ChannelKind::kInproc, run);
  auto t3 = std::chrono::steady_clock::now();
  auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
  out << std::fixed << std::setprecision(2);
  out << "bench " << o.rows << "x" << o.attrs << " width " << o.width << ", m=" << o.lists
      << ", k=" << o.k << ", mode " << opt.mode.to_string() << ", " << kp.pk.bits()
      << "-bit keys\n";
  out << "keygen " << secs(t0, t1) << " s, encrypt " << secs(t1, t2) << " s, query "
      << secs(t2, t3) << " s, halting depth " << res.depth << "\n";
  out << "depth ms bytes_s1_s2 bytes_s2_s1 msgs items\n";
  auto rows = transcript_report(run.transcript);
  double total_ms = 0;
  for (const auto& row : rows) {
    if (row.depth == 0 || row.depth > res.depth_ms.size()) continue;
    double ms = res.depth_ms[row.depth - 1];
    total_ms += ms;
    out << row.depth << " " << ms << " " << row.bytes[0] << " " << row.bytes[1] << " "
        << row.total_messages() << " " << res.t_sizes[row.depth - 1] << "\n";
  }
  if (res.depth > 0) {
    out << "average " << total_ms / res.depth << " ms per depth, "
        << run.transcript.total_bytes() / res.depth << " bytes per depth\n";
  }
}

void cmd_audit(const AuditOptions& o, std::ostream& out) {
  need(o.csv, "--csv");
  need(o.s1_log, "--s1-log");
  need(o.s2_log, "--s2-log");
  if (o.queries.empty()) throw UsageError("missing --query");
  Relation r = load_csv(o.csv);
  AuditInput in;
  in.relation = &r;
  for (const auto& spec : o.queries) {
    auto c1 = spec.find(':');
    auto c2 = spec.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw UsageError("query spec must be attrs:k:mode, got '" + spec + "'");
    }
    AuditQuery aq;
    std::stringstream attrs(spec.substr(0, c1));
    std::string a;
    while (std::getline(attrs, a, ',')) aq.query.attrs.push_back(r.attr_index(a));
    try {
      aq.k = static_cast<std::uint32_t>(std::stoul(spec.substr(c1 + 1, c2 - c1 - 1)));
    } catch (const std::exception&) {
      throw UsageError("bad k in query spec '" + spec + "'");
    }
    aq.mode = QueryMode::parse(spec.substr(c2 + 1));
    in.queries.push_back(aq);
  }
  {
    std::ifstream f1(o.s1_log), f2(o.s2_log);
    if (!f1 || !f2) throw IoError("cannot read leakage logs");
    in.s1 = parse_leak_lines(f1);
    in.s2 = parse_leak_lines(f2);
  }
  std::vector<Bytes> frames;
  std::optional<PublicKey> pk;
  std::optional<EhlKeySet> ehl;
  if (!o.frames.empty()) {
    frames = read_frames(o.frames);
    in.frames = &frames;
  }
  if (!o.pk.empty()) {
    pk = load_pk(o.pk);
    in.pk = &*pk;
  }
  if (!o.ehl_keys.empty()) {
    ehl = load_ehl(o.ehl_keys);
    in.ehl_keys = &*ehl;
  }
  AuditReport rep = leakage_audit(in);
  for (const auto& v : rep.violations) out << "violation: " << v << "\n";
  enforce(rep);
  out << "audit ok: " << in.queries.size() << " queries, " << rep.depths_checked
      << " depths, " << rep.patterns_scanned << " patterns over " << rep.bytes_scanned
      << " bytes in " << rep.frames_scanned << " frames (" << rep.frames_parsed << " parsed)\n";
}

void write_frames(const std::string& path, const std::vector<Bytes>& frames) {
  ByteWriter w;
  for (const auto& f : frames) w.raw(f);
  write_file(path, w.data());
}

std::vector<Bytes> read_frames(const std::string& path) {
  Bytes all = read_file(path);
  std::vector<Bytes> out;
  std::size_t pos = 0;
  while (pos < all.size()) {
    if (all.size() - pos < kFrameHeader) throw FormatError("truncated frames file");
    std::size_t len = (std::size_t{all[pos]} << 24) | (std::size_t{all[pos + 1]} << 16) |
                      (std::size_t{all[pos + 2]} << 8) | all[pos + 3];
    if (all.size() - pos - kFrameHeader < len) throw FormatError("truncated frames file");
    auto first = all.begin() + static_cast<std::ptrdiff_t>(pos);
    out.emplace_back(first, first + static_cast<std::ptrdiff_t>(kFrameHeader + len));
    pos += kFrameHeader + len;
  }
  return out;
}

}  // namespace enctopk
