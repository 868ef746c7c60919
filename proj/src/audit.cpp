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


#include "enctopk/audit.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <unordered_map>

#include "enctopk/errors.hpp"

namespace enctopk {
namespace {

std::uint64_t load_be(const std::uint8_t* p, std::size_t n) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) v = (v << 8) | p[i];
  return v;
}

using Field = std::pair<std::size_t, std::size_t>;  // offset, length

// Splits protocol payloads into their value-carrying fields (ciphertexts,
// big integers, key blobs). Counts, modes, flags and result bits are left
// out. Replies are parsed with the parameters of the preceding request.
class WireWalker {
 public:
  explicit WireWalker(const PublicKey& pk) : pk_(pk) {}

  // Empty optional: not parseable, scan the whole payload.
  std::optional<std::vector<Field>> fields(std::uint16_t tag,
                                           std::span<const std::uint8_t> p) {
    try {
      Cursor c{p, 0, {}};
      const bool reply = (tag & tags::kReply) != 0;
      const std::uint16_t base = tag & 0x7fff;
      if (reply) {
        if (base != last_.tag) return std::nullopt;
        parse_reply(c);
      } else {
        parse_request(base, c);
      }
      if (c.at != p.size()) return std::nullopt;
      return c.out;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

 private:
  struct Cursor {
    std::span<const std::uint8_t> p;
    std::size_t at;
    std::vector<Field> out;

    void need(std::size_t n) const {
      if (p.size() - at < n) throw FormatError("short field");
    }
    std::uint64_t num(std::size_t n) {
      need(n);
      std::uint64_t v = 0;
      for (std::size_t i = 0; i < n; ++i) v = (v << 8) | p[at + i];
      at += n;
      return v;
    }
    void value(std::size_t n) {
      need(n);
      out.emplace_back(at, n);
      at += n;
    }
    void values(std::uint64_t count, std::size_t width) {
      if (width == 0 || count > (p.size() - at) / width) throw FormatError("bad count");
      for (std::uint64_t i = 0; i < count; ++i) value(width);
    }
    std::span<const std::uint8_t> blob() {
      std::size_t n = num(4);
      need(n);
      auto b = p.subspan(at, n);
      value(n);
      return b;
    }
  };

  struct Request {
    std::uint16_t tag = 0;
    std::uint64_t n = 0, width = 0, na = 0;
  };

  std::size_t ct1() const { return pk_.ct1_bytes(); }
  std::size_t ct2() const { return pk_.ct2_bytes(); }
  std::size_t additive() const {
    if (additive_ == 0) throw FormatError("no session key");
    return additive_;
  }

  void parse_request(std::uint16_t tag, Cursor& c) {
    last_ = {};
    switch (tag) {
      case tags::kBeginQuery:
      case tags::kDepth:
      case tags::kEndQuery:
        c.num(4);
        return;
      case tags::kBye:
        return;
      case tags::kSessionKeys: {
        auto a = c.blob();
        auto m = c.blob();
        if (!a.empty()) additive_ = PublicKey::deserialize(a).ct1_bytes();
        if (!m.empty()) multiplicative_ = PublicKey::deserialize(m).ct1_bytes();
        return;
      }
      default:
        break;
    }
    c.num(1);  // phase
    last_.tag = tag;
    switch (tag) {
      case tags::kEquality:
      case tags::kCompare:
      case tags::kCompareEnc:
        last_.n = c.num(4);
        c.values(last_.n, ct1());
        return;
      case tags::kRecover:
        last_.n = c.num(4);
        c.values(last_.n, ct2());
        return;
      case tags::kZeroTest:
        c.value(ct1());
        return;
      case tags::kBlindPass: {
        const std::uint64_t mode = c.num(1);
        c.num(1);
        const std::uint64_t q = c.num(4), slots = c.num(4), nf = c.num(4);
        last_.width = slots + nf;
        for (std::uint64_t i = 0; i < nf; ++i) c.blob();
        c.values(q * last_.width, ct1());
        c.values(q * last_.width, additive());
        if ((mode & 1) != 0) c.values(q * (q - 1) / 2, ct1());
        for (std::uint64_t i = 0; i < q; ++i) {
          if (c.num(1) == 1) c.value(ct2());
        }
        return;
      }
      case tags::kRefresh: {
        const std::uint64_t m = c.num(2);
        c.num(2);
        last_.n = c.num(4);
        last_.width = m + 2;
        c.values(m, ct1());
        c.values(last_.n, ct1());
        return;
      }
      case tags::kFilter: {
        last_.n = c.num(4);
        last_.na = c.num(4);
        filter_rows(c, last_.n, last_.na);
        return;
      }
      default:
        throw FormatError("unknown tag");
    }
  }

  void filter_rows(Cursor& c, std::uint64_t n, std::uint64_t na) {
    if (multiplicative_ == 0) throw FormatError("no session key");
    for (std::uint64_t i = 0; i < n; ++i) {
      c.value(ct1());
      c.value(multiplicative_);
      for (std::uint64_t a = 0; a < na; ++a) {
        c.value(ct1());
        c.value(additive());
      }
    }
  }

  void parse_reply(Cursor& c) {
    switch (last_.tag) {
      case tags::kEquality:
        c.values(last_.n, ct2());
        return;
      case tags::kRecover:
      case tags::kCompareEnc:
        c.values(last_.n, ct1());
        return;
      case tags::kCompare:
        c.need(last_.n);  // result bits
        c.at += last_.n;
        return;
      case tags::kZeroTest:
        c.num(1);
        return;
      case tags::kBlindPass: {
        const std::uint64_t q = c.num(4);
        c.values(q * last_.width, ct1());
        c.values(q * last_.width, additive());
        return;
      }
      case tags::kRefresh:
        c.values(last_.n * last_.width, ct1());
        return;
      case tags::kFilter:
        filter_rows(c, c.num(4), last_.na);
        return;
      default:
        throw FormatError("unknown reply");
    }
  }

  const PublicKey& pk_;
  std::size_t additive_ = 0;
  std::size_t multiplicative_ = 0;
  Request last_;
};

// Forbidden byte strings, indexed by a 4-byte prefix (short strings) or an
// 8-byte suffix (fixed-width encodings).
class PatternSet {
 public:
  void add(Bytes pattern, std::string label) {
    if (pattern.size() < 4) return;
    if (pattern.size() < 8) {
      short_[static_cast<std::uint32_t>(load_be(pattern.data(), 4))].push_back(
          {std::move(pattern), std::move(label)});
    } else {
      long_[load_be(pattern.data() + pattern.size() - 8, 8)].push_back(
          {std::move(pattern), std::move(label)});
    }
    ++count_;
  }
  std::size_t size() const { return count_; }

  // data is one field; base is its offset in the payload.
  void scan(std::span<const std::uint8_t> data, std::size_t base, std::size_t frame,
            std::vector<std::string>& hits) const {
    const std::size_t n = data.size();
    for (std::size_t i = 0; i + 4 <= n; ++i) {
      auto s = short_.find(static_cast<std::uint32_t>(load_be(&data[i], 4)));
      if (s != short_.end()) {
        for (const auto& [pat, label] : s->second) {
          if (i + pat.size() <= n &&
              std::equal(pat.begin(), pat.end(), data.begin() + static_cast<std::ptrdiff_t>(i))) {
            hits.push_back(label + where(data, base, frame, i, pat.size()));
          }
        }
      }
      if (i + 8 > n) continue;
      auto l = long_.find(load_be(&data[i], 8));
      if (l == long_.end()) continue;
      std::size_t end = i + 8;
      for (const auto& [pat, label] : l->second) {
        if (end >= pat.size() &&
            std::equal(pat.begin(), pat.end(),
                       data.begin() + static_cast<std::ptrdiff_t>(end - pat.size()))) {
          hits.push_back(label + where(data, base, frame, end - pat.size(), pat.size()));
        }
      }
    }
  }

  static std::string where(std::span<const std::uint8_t> data, std::size_t base,
                           std::size_t frame, std::size_t at, std::size_t len) {
    std::size_t from = at >= 8 ? at - 8 : 0;
    std::size_t to = std::min(data.size(), at + len + 8);
    return " in frame " + std::to_string(frame) + " at payload offset " +
           std::to_string(base + at) +
           " (bytes " + to_hex(std::span<const std::uint8_t>(data.data() + from, to - from)) +
           ")";
  }

 private:
  std::unordered_map<std::uint32_t, std::vector<std::pair<Bytes, std::string>>> short_;
  std::unordered_map<std::uint64_t, std::vector<std::pair<Bytes, std::string>>> long_;
  std::size_t count_ = 0;
};

struct PhaseTally {
  std::uint64_t tests = 0;
  std::uint64_t zeros = 0;
};

std::string where(std::uint32_t q, std::uint32_t d, const char* what) {
  return "query " + std::to_string(q) + " depth " + std::to_string(d) + ": " + what;
}

bool same_query(const AuditQuery& a, const AuditQuery& b) {
  return a.join == b.join && a.k == b.k && a.query.attrs == b.query.attrs &&
         a.query.weights == b.query.weights;
}

}  // namespace

std::vector<DepthPattern> expected_pattern(const Relation& r,
                                           const ScoringQuery& q,
                                           QueryMode mode, std::size_t depths) {
  q.validate(r);
  if (depths > r.n()) throw DomainError("depth out of range");
  std::vector<SortedList> lists;
  for (auto a : q.attrs) lists.push_back(sorted_list(r, a));
  const std::size_t m = lists.size();
  std::set<std::size_t> seen;
  std::size_t t_size = 0;
  std::vector<DepthPattern> out;
  for (std::size_t d = 0; d < depths; ++d) {
    DepthPattern p;
    std::vector<std::size_t> rows(m);
    for (std::size_t l = 0; l < m; ++l) rows[l] = lists[l][d].row;
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        if (a == b) continue;
        ++p.worst_tests;
        if (rows[a] == rows[b]) ++p.worst_zeros;
      }
    }
    p.dedup_tests = m * (m - 1) / 2;
    p.dedup_zeros = p.worst_zeros / 2;
    std::set<std::size_t> distinct(rows.begin(), rows.end());
    const std::size_t gamma = mode.eliminates() ? distinct.size() : m;
    p.update_tests = gamma * t_size;
    if (t_size > 0) {
      for (auto row : distinct) p.update_zeros += seen.count(row);
    }
    seen.insert(distinct.begin(), distinct.end());
    t_size = mode.eliminates() ? seen.size() : t_size + m;
    p.unique = seen.size();
    out.push_back(p);
  }
  return out;
}

AuditReport leakage_audit(const AuditInput& in) {
  if (in.relation == nullptr) throw DomainError("audit needs the plaintext relation");
  const Relation& r = *in.relation;
  AuditReport rep;
  auto violate = [&](std::string v) { rep.violations.push_back(std::move(v)); };

  // S1 only sees the query pattern, the halting depth, the unique count in
  // eliminating modes and the join cardinality.
  std::map<std::uint32_t, std::uint64_t> s1_halt, s2_end;
  std::map<std::uint32_t, std::vector<std::uint64_t>> s1_unique;
  std::map<std::uint32_t, std::uint64_t> s1_qp;
  for (const auto& e : in.s1) {
    if (e.party != Party::kS1) {
      violate("S2 event in S1 log");
      continue;
    }
    if (e.query == 0 || e.query > in.queries.size()) {
      violate("S1 event for unknown query " + std::to_string(e.query));
      continue;
    }
    const AuditQuery& aq = in.queries[e.query - 1];
    switch (e.kind) {
      case LeakKind::kQueryPattern:
        s1_qp[e.query] = e.value;
        break;
      case LeakKind::kHaltDepth:
        if (aq.join) violate(where(e.query, e.depth, "halting depth on a join"));
        s1_halt[e.query] = e.value;
        break;
      case LeakKind::kUniqueCount:
        if (aq.join || !aq.mode.eliminates()) {
          violate(where(e.query, e.depth, "unique count outside elimination mode"));
        }
        s1_unique[e.query].push_back(e.value);
        break;
      case LeakKind::kJoinCount:
        if (!aq.join) violate(where(e.query, e.depth, "join count on a top-k query"));
        break;
      default:
        violate(where(e.query, e.depth, "S1 observed ") + leak_kind_name(e.kind));
    }
  }
  for (std::size_t i = 0; i < in.queries.size(); ++i) {
    bool repeated = false;
    for (std::size_t j = 0; j < i; ++j) repeated |= same_query(in.queries[i], in.queries[j]);
    auto qp = s1_qp.find(static_cast<std::uint32_t>(i + 1));
    if (qp == s1_qp.end()) {
      violate("query " + std::to_string(i + 1) + ": no query-pattern event");
    } else if ((qp->second != 0) != repeated) {
      violate("query " + std::to_string(i + 1) + ": query pattern flag is wrong");
    }
  }

  std::map<std::tuple<std::uint32_t, std::uint32_t, Phase>, PhaseTally> tally;
  for (const auto& e : in.s2) {
    if (e.party != Party::kS2) {
      violate("S1 event in S2 log");
      continue;
    }
    if (e.kind == LeakKind::kQueryEnd) s2_end[e.query] = e.value;
    if (e.kind != LeakKind::kEqualityPattern) continue;
    auto& t = tally[{e.query, e.depth, e.phase}];
    t.tests += e.count;
    t.zeros += e.value;
  }

  for (std::size_t i = 0; i < in.queries.size(); ++i) {
    const AuditQuery& aq = in.queries[i];
    const auto qid = static_cast<std::uint32_t>(i + 1);
    if (aq.join) continue;
    auto halt = s1_halt.find(qid);
    if (halt == s1_halt.end()) {
      violate("query " + std::to_string(qid) + ": no halting depth");
      continue;
    }
    std::size_t depth = halt->second;
    if (s2_end.count(qid) == 0 || s2_end[qid] != depth) {
      violate("query " + std::to_string(qid) + ": S2 saw a different halting depth");
    }
    if (depth == 0 || depth > r.n()) {
      violate("query " + std::to_string(qid) + ": halting depth out of range");
      continue;
    }
    std::size_t interval = aq.mode.kind == ModeKind::kBatch ? aq.mode.p : 1;
    std::size_t want_depth = nra_topk(r, aq.query, aq.k, interval).depth;
    if (depth != want_depth) {
      violate("query " + std::to_string(qid) + ": halting depth " +
              std::to_string(depth) + " differs from plaintext " +
              std::to_string(want_depth));
    }
    auto pattern = expected_pattern(r, aq.query, aq.mode, depth);
    const auto& uniq = s1_unique[qid];
    if (aq.mode.eliminates() && uniq.size() != depth) {
      violate("query " + std::to_string(qid) + ": unique count missing");
    }
    for (std::size_t d = 1; d <= depth; ++d) {
      const DepthPattern& p = pattern[d - 1];
      const auto dd = static_cast<std::uint32_t>(d);
      auto check = [&](Phase ph, std::uint64_t tests, std::uint64_t zeros) {
        PhaseTally t;
        auto it = tally.find({qid, dd, ph});
        if (it != tally.end()) t = it->second;
        if (t.tests != tests || t.zeros != zeros) {
          violate(where(qid, dd, phase_name(ph)) + std::string(" equality pattern ") +
                  std::to_string(t.zeros) + "/" + std::to_string(t.tests) +
                  " expected " + std::to_string(zeros) + "/" + std::to_string(tests));
        }
      };
      check(Phase::kWorst, p.worst_tests, p.worst_zeros);
      check(Phase::kDedup, p.dedup_tests, p.dedup_zeros);
      check(Phase::kUpdate, p.update_tests, p.update_zeros);
      if (aq.mode.eliminates() && d <= uniq.size() && uniq[d - 1] != p.unique) {
        violate(where(qid, dd, "unique count differs from plaintext"));
      }
      ++rep.depths_checked;
    }
  }

  if (in.frames != nullptr) {
    PatternSet patterns;
    for (const auto& id : r.ids) {
      patterns.add(Bytes(id.begin(), id.end()), "object id '" + id + "'");
    }
    std::set<std::uint64_t> values;
    for (const auto& row : r.values) values.insert(row.begin(), row.end());
    for (const auto& aq : in.queries) {
      if (aq.join) continue;
      for (std::size_t i = 0; i < r.n(); ++i) values.insert(exact_score(r, aq.query, i));
    }
    for (auto v : values) {
      if (v >= 256) {
        ByteWriter w;
        w.u64(v);
        patterns.add(w.take(), "score " + std::to_string(v));
      }
    }
    if (in.pk != nullptr) {
      const PublicKey& pk = *in.pk;
      values.insert(0);
      values.insert(1);
      for (auto v : values) {
        mpz_class trivial = 1 + mpz_class(std::to_string(v)) * pk.n();
        patterns.add(mpz_to_fixed(trivial, pk.ct1_bytes()),
                     "unrandomized encryption of " + std::to_string(v));
      }
      if (in.ehl_keys != nullptr) {
        for (const auto& id : r.ids) {
          for (const auto& slot : ehl_plaintext(*in.ehl_keys, pk, as_bytes(id))) {
            if (slot < 256) continue;
            patterns.add(mpz_to_fixed(slot, pk.ct1_bytes()), "EHL plaintext of '" + id + "'");
            patterns.add(mpz_to_fixed(slot, byte_width(pk.n())),
                         "EHL plaintext of '" + id + "'");
          }
        }
      }
    }
    rep.patterns_scanned = patterns.size();
    std::optional<WireWalker> walker;
    if (in.pk != nullptr) walker.emplace(*in.pk);
    std::vector<std::string> hits;
    for (std::size_t f = 0; f < in.frames->size(); ++f) {
      const Bytes& frame = (*in.frames)[f];
      // Skip the frame header; it only carries length, tag and sequence.
      Bytes payload(frame.begin() + static_cast<std::ptrdiff_t>(std::min(frame.size(), kFrameHeader)),
                    frame.end());
      std::size_t before = hits.size();
      std::optional<std::vector<Field>> fields;
      if (walker && frame.size() >= kFrameHeader) {
        fields = walker->fields(static_cast<std::uint16_t>((frame[4] << 8) | frame[5]), payload);
      }
      if (fields) ++rep.frames_parsed;
      if (!fields) fields = std::vector<Field>{{0, payload.size()}};
      for (const auto& [off, len] : *fields) {
        patterns.scan(std::span<const std::uint8_t>(payload).subspan(off, len), off, f, hits);
      }
      if (frame.size() >= kFrameHeader) {
        std::uint16_t tag = static_cast<std::uint16_t>((frame[4] << 8) | frame[5]);
        for (std::size_t h = before; h < hits.size(); ++h) {
          hits[h] += ", tag " + std::to_string(tag & 0x7fff) +
                     ((tag & 0x8000) != 0 ? " reply" : " request") + ", payload " +
                     std::to_string(payload.size()) + " bytes";
        }
      }
      rep.bytes_scanned += frame.size();
      ++rep.frames_scanned;
    }
    for (auto& h : hits) violate("plaintext on the wire: " + h);
  }
  return rep;
}

void enforce(const AuditReport& report) {
  if (report.ok()) return;
  std::string msg = std::to_string(report.violations.size()) + " leakage violation(s)";
  for (std::size_t i = 0; i < report.violations.size() && i < 5; ++i) {
    msg += "; " + report.violations[i];
  }
  throw LeakageViolation(msg);
}

std::vector<LeakEvent> parse_leak_lines(std::istream& in) {
  std::map<std::string, LeakKind> kinds;
  for (int k : {1, 2, 3, 4, 16, 17, 18, 19, 20, 21, 22, 23}) {
    auto kind = static_cast<LeakKind>(k);
    kinds[leak_kind_name(kind)] = kind;
  }
  std::map<std::string, Phase> phases;
  for (std::size_t p = 0; p < kPhaseCount; ++p) {
    phases[phase_name(static_cast<Phase>(p))] = static_cast<Phase>(p);
  }
  std::vector<LeakEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string party, kind, phase;
    LeakEvent e;
    if (!(ls >> party >> kind >> e.query >> e.depth >> phase >> e.count >> e.value) ||
        (party != "s1" && party != "s2") || kinds.count(kind) == 0 ||
        phases.count(phase) == 0) {
      throw FormatError("bad leakage log line " + std::to_string(lineno));
    }
    e.party = party == "s1" ? Party::kS1 : Party::kS2;
    e.kind = kinds[kind];
    e.phase = phases[phase];
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace enctopk
