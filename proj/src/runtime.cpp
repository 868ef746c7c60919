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


#include "enctopk/runtime.hpp"

#include <condition_variable>
#include <deque>
#include <exception>
#include <thread>

#include "enctopk/errors.hpp"

namespace enctopk {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::kControl: return "control";
    case Phase::kWorst: return "worst";
    case Phase::kBest: return "best";
    case Phase::kDedup: return "dedup";
    case Phase::kUpdate: return "update";
    case Phase::kRefresh: return "refresh";
    case Phase::kSort: return "sort";
    case Phase::kHalt: return "halt";
    case Phase::kJoin: return "join";
    case Phase::kFilter: return "filter";
    case Phase::kMisc: return "misc";
  }
  return "unknown";
}

Phase phase_from_u8(std::uint8_t v) {
  if (v >= kPhaseCount) throw FormatError("unknown phase " + std::to_string(v));
  return static_cast<Phase>(v);
}

const char* leak_kind_name(LeakKind k) {
  switch (k) {
    case LeakKind::kQueryPattern: return "query-pattern";
    case LeakKind::kHaltDepth: return "halt-depth";
    case LeakKind::kUniqueCount: return "unique-count";
    case LeakKind::kJoinCount: return "join-count";
    case LeakKind::kEqualityPattern: return "equality-pattern";
    case LeakKind::kRecover: return "recover";
    case LeakKind::kCompare: return "compare";
    case LeakKind::kZeroTest: return "zero-test";
    case LeakKind::kBlindPass: return "blind-pass";
    case LeakKind::kRefresh: return "refresh";
    case LeakKind::kFilter: return "filter";
    case LeakKind::kQueryEnd: return "query-end";
  }
  return "unknown";
}

Bytes encode_frame(const Frame& f) {
  if (f.payload.size() > kMaxPayload) throw ProtocolError("frame too large");
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(f.payload.size()));
  w.u16(f.tag);
  w.u32(f.seq);
  w.raw(f.payload);
  return w.take();
}

Frame decode_frame(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  Frame f;
  std::uint32_t len = r.u32();
  f.tag = r.u16();
  f.seq = r.u32();
  if (len != r.remaining()) throw FormatError("frame length mismatch");
  auto p = r.raw(len);
  f.payload.assign(p.begin(), p.end());
  return f;
}

namespace {

struct InprocShared {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Bytes> queue[2];
  bool closed = false;
};

class InprocChannel : public Channel {
 public:
  InprocChannel(std::shared_ptr<InprocShared> s, int side)
      : s_(std::move(s)), side_(side) {}
  ~InprocChannel() override { close(); }

  void send(Bytes frame) override {
    std::lock_guard<std::mutex> lock(s_->mu);
    if (s_->closed) throw IoError("channel closed");
    s_->queue[1 - side_].push_back(std::move(frame));
    s_->cv.notify_all();
  }

  Bytes recv() override {
    std::unique_lock<std::mutex> lock(s_->mu);
    auto& q = s_->queue[side_];
    s_->cv.wait(lock, [&] { return !q.empty() || s_->closed; });
    if (q.empty()) throw IoError("channel closed");
    Bytes b = std::move(q.front());
    q.pop_front();
    return b;
  }

  void close() override {
    std::lock_guard<std::mutex> lock(s_->mu);
    s_->closed = true;
    s_->cv.notify_all();
  }

 private:
  std::shared_ptr<InprocShared> s_;
  int side_;
};

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> inproc_pair() {
  auto shared = std::make_shared<InprocShared>();
  return {std::make_unique<InprocChannel>(shared, 0),
          std::make_unique<InprocChannel>(shared, 1)};
}

ChannelSpec ChannelSpec::parse(const std::string& s) {
  ChannelSpec spec;
  if (s == "inproc") return spec;
  if (s.rfind("tcp:", 0) != 0) {
    throw UsageError("channel must be 'inproc' or 'tcp:HOST:PORT'");
  }
  auto rest = s.substr(4);
  auto colon = rest.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw UsageError("channel must be 'inproc' or 'tcp:HOST:PORT'");
  }
  spec.tcp = true;
  spec.host = rest.substr(0, colon);
  unsigned long port = 0;
  try {
    port = std::stoul(rest.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("bad port in channel spec");
  }
  if (port > 65535) throw UsageError("bad port in channel spec");
  spec.port = static_cast<std::uint16_t>(port);
  return spec;
}

void Transcript::record(const Context& ctx, Direction dir, const Bytes& frame) {
  TrafficRecord rec;
  rec.query = ctx.query;
  rec.depth = ctx.depth;
  rec.phase = ctx.phase;
  rec.dir = dir;
  rec.tag = static_cast<std::uint16_t>((frame[4] << 8) | frame[5]);
  rec.bytes = frame.size();
  records_.push_back(rec);
  Bytes chain(hash_.begin(), hash_.end());
  chain.push_back(static_cast<std::uint8_t>(dir));
  chain.insert(chain.end(), frame.begin(), frame.end());
  hash_ = sha256(chain);
  if (keep_) frames_.push_back(frame);
}

std::uint64_t Transcript::messages(Direction dir) const {
  std::uint64_t n = 0;
  for (const auto& r : records_) n += r.dir == dir;
  return n;
}

std::uint64_t Transcript::bytes(Direction dir) const {
  std::uint64_t n = 0;
  for (const auto& r : records_) {
    if (r.dir == dir) n += r.bytes;
  }
  return n;
}

std::uint64_t Transcript::total_bytes() const {
  return bytes(Direction::kToS2) + bytes(Direction::kToS1);
}

void Transcript::export_lines(std::ostream& out) const {
  for (const auto& r : records_) {
    out << r.query << ' ' << r.depth << ' ' << phase_name(r.phase) << ' '
        << (r.dir == Direction::kToS2 ? "s1->s2" : "s2->s1") << ' ' << r.tag
        << ' ' << r.bytes << '\n';
  }
}

std::vector<DepthTraffic> transcript_report(const Transcript& t) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, DepthTraffic> rows;
  for (const auto& r : t.records()) {
    auto& row = rows[{r.query, r.depth}];
    row.query = r.query;
    row.depth = r.depth;
    auto d = static_cast<std::size_t>(r.dir);
    row.messages[d] += 1;
    row.bytes[d] += r.bytes;
    row.phase_bytes[r.phase] += r.bytes;
  }
  std::vector<DepthTraffic> out;
  for (auto& [key, row] : rows) out.push_back(std::move(row));
  return out;
}

void write_report(std::ostream& out, const std::vector<DepthTraffic>& rows) {
  out << "query depth msgs_s1_s2 msgs_s2_s1 bytes_s1_s2 bytes_s2_s1\n";
  for (const auto& r : rows) {
    out << r.query << ' ' << r.depth << ' ' << r.messages[0] << ' '
        << r.messages[1] << ' ' << r.bytes[0] << ' ' << r.bytes[1] << '\n';
  }
}

void Endpoint::send(std::uint16_t tag, Bytes payload) {
  Bytes frame = encode_frame({tag, send_seq_++, std::move(payload)});
  if (transcript_ != nullptr) transcript_->record(ctx_, out_dir(), frame);
  ch_.send(std::move(frame));
}

Frame Endpoint::recv_any() {
  Bytes raw = ch_.recv();
  Frame f = decode_frame(raw);
  if (f.seq != recv_seq_) {
    throw ProtocolError("sequence desync: expected " +
                        std::to_string(recv_seq_) + ", got " +
                        std::to_string(f.seq));
  }
  ++recv_seq_;
  if (transcript_ != nullptr) {
    Direction in = self_ == Party::kS1 ? Direction::kToS1 : Direction::kToS2;
    transcript_->record(ctx_, in, raw);
  }
  return f;
}

Bytes Endpoint::recv(std::uint16_t expected_tag) {
  Frame f = recv_any();
  if (f.tag != expected_tag) {
    throw ProtocolError("unexpected tag " + std::to_string(f.tag) +
                        " (expected " + std::to_string(expected_tag) +
                        ") in phase " + phase_name(ctx_.phase));
  }
  return std::move(f.payload);
}

Bytes Endpoint::call(std::uint16_t tag, Bytes payload) {
  send(tag, std::move(payload));
  return recv(static_cast<std::uint16_t>(tag | tags::kReply));
}

void LeakageLog::append(LeakEvent e) {
  std::lock_guard<std::mutex> lock(mu_);
  events_.push_back(std::move(e));
}

std::vector<LeakEvent> LeakageLog::events() const {
  std::lock_guard<std::mutex> lock(mu_);
  return events_;
}

void LeakageLog::export_lines(std::ostream& out) const {
  for (const auto& e : events()) {
    out << (e.party == Party::kS1 ? "s1" : "s2") << ' ' << leak_kind_name(e.kind)
        << ' ' << e.query << ' ' << e.depth << ' ' << phase_name(e.phase) << ' '
        << e.count << ' ' << e.value << '\n';
  }
}

void run_pair(const PartyProgram& s1, const PartyProgram& s2,
              ChannelKind kind, PairRun& out, bool keep_payloads) {
  std::unique_ptr<Channel> c1, c2;
  std::unique_ptr<TcpListener> listener;
  std::exception_ptr s2_error;
  out.transcript.keep_payloads(keep_payloads);

  if (kind == ChannelKind::kInproc) {
    std::tie(c1, c2) = inproc_pair();
  } else {
    listener = std::make_unique<TcpListener>("127.0.0.1", 0);
  }

  std::thread helper([&] {
    try {
      std::unique_ptr<Channel> ch =
          kind == ChannelKind::kInproc ? std::move(c2) : listener->accept();
      Endpoint ep(*ch, Party::kS2);
      s2(ep, out.s2_log);
    } catch (...) {
      s2_error = std::current_exception();
    }
  });

  std::exception_ptr s1_error;
  try {
    if (kind == ChannelKind::kTcp) c1 = tcp_connect("127.0.0.1", listener->port());
    Endpoint ep(*c1, Party::kS1, &out.transcript);
    s1(ep, out.s1_log);
    ep.set_phase(Phase::kControl);
    ep.send(tags::kBye, {});
  } catch (...) {
    s1_error = std::current_exception();
    if (c1) c1->close();
    if (!c1 && listener) listener->shutdown();
  }
  helper.join();
  if (c1) c1->close();
  if (s2_error) {
    // A failure on S2 usually surfaces on S1 as a closed channel.
    bool s1_io = false;
    if (s1_error) {
      try {
        std::rethrow_exception(s1_error);
      } catch (const IoError&) {
        s1_io = true;
      } catch (...) {
      }
    }
    if (!s1_error || s1_io) std::rethrow_exception(s2_error);
  }
  if (s1_error) std::rethrow_exception(s1_error);
}

}  // namespace enctopk
