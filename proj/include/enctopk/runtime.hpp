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


// Two-party plumbing: framed channels (in-process or TCP), endpoints with
// sequence checking, transcripts and the leakage log.

#ifndef ENCTOPK_RUNTIME_HPP_
#define ENCTOPK_RUNTIME_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "enctopk/bytes.hpp"

namespace enctopk {

enum class Party : std::uint8_t { kS1 = 1, kS2 = 2 };

enum class Direction : std::uint8_t { kToS2 = 0, kToS1 = 1 };

enum class Phase : std::uint8_t {
  kControl = 0,
  kWorst = 1,
  kBest = 2,
  kDedup = 3,
  kUpdate = 4,
  kRefresh = 5,
  kSort = 6,
  kHalt = 7,
  kJoin = 8,
  kFilter = 9,
  kMisc = 10,
};
constexpr std::size_t kPhaseCount = 11;
const char* phase_name(Phase p);
Phase phase_from_u8(std::uint8_t v);

// Frame tags. Replies carry the request tag with the high bit set.
namespace tags {
constexpr std::uint16_t kBeginQuery = 1;
constexpr std::uint16_t kDepth = 2;
constexpr std::uint16_t kEndQuery = 3;
constexpr std::uint16_t kBye = 4;
constexpr std::uint16_t kSessionKeys = 5;
constexpr std::uint16_t kEquality = 16;
constexpr std::uint16_t kRecover = 17;
constexpr std::uint16_t kCompare = 18;
constexpr std::uint16_t kCompareEnc = 19;
constexpr std::uint16_t kZeroTest = 20;
constexpr std::uint16_t kBlindPass = 21;
constexpr std::uint16_t kRefresh = 22;
constexpr std::uint16_t kFilter = 23;
constexpr std::uint16_t kEcho = 30;
constexpr std::uint16_t kReply = 0x8000;
}  // namespace tags

struct Frame {
  std::uint16_t tag = 0;
  std::uint32_t seq = 0;
  Bytes payload;
};

// [u32 BE payload length][u16 tag][u32 seq][payload]
constexpr std::size_t kFrameHeader = 10;
constexpr std::size_t kMaxPayload = std::size_t{1} << 30;
Bytes encode_frame(const Frame& f);
Frame decode_frame(std::span<const std::uint8_t> b);

class Channel {
 public:
  virtual ~Channel() = default;
  // Sends one encoded frame.
  virtual void send(Bytes frame) = 0;
  // Blocks for the next encoded frame; throws IoError once closed.
  virtual Bytes recv() = 0;
  virtual void close() = 0;
};

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> inproc_pair();

class TcpListener {
 public:
  TcpListener(const std::string& host, std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  std::uint16_t port() const { return port_; }
  std::unique_ptr<Channel> accept();
  // Unblocks a pending accept().
  void shutdown();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

std::unique_ptr<Channel> tcp_connect(const std::string& host,
                                     std::uint16_t port);

// "inproc" or "tcp:HOST:PORT".
struct ChannelSpec {
  bool tcp = false;
  std::string host;
  std::uint16_t port = 0;
  static ChannelSpec parse(const std::string& s);
};

struct Context {
  std::uint32_t query = 0;
  std::uint32_t depth = 0;
  Phase phase = Phase::kControl;
};

struct TrafficRecord {
  std::uint32_t query = 0;
  std::uint32_t depth = 0;
  Phase phase = Phase::kControl;
  Direction dir = Direction::kToS2;
  std::uint16_t tag = 0;
  std::uint64_t bytes = 0;
};

class Transcript {
 public:
  void record(const Context& ctx, Direction dir, const Bytes& frame);
  const std::vector<TrafficRecord>& records() const { return records_; }
  std::uint64_t messages(Direction dir) const;
  std::uint64_t bytes(Direction dir) const;
  std::uint64_t total_bytes() const;
  // Running SHA-256 chain over every frame in order.
  const Digest& hash() const { return hash_; }
  void keep_payloads(bool keep) { keep_ = keep; }
  const std::vector<Bytes>& frames() const { return frames_; }
  // One line per frame: query depth phase direction tag bytes.
  void export_lines(std::ostream& out) const;

 private:
  std::vector<TrafficRecord> records_;
  Digest hash_{};
  bool keep_ = false;
  std::vector<Bytes> frames_;
};

struct DepthTraffic {
  std::uint32_t query = 0;
  std::uint32_t depth = 0;
  std::uint64_t messages[2] = {0, 0};
  std::uint64_t bytes[2] = {0, 0};
  std::map<Phase, std::uint64_t> phase_bytes;
  std::uint64_t total_bytes() const { return bytes[0] + bytes[1]; }
  std::uint64_t total_messages() const { return messages[0] + messages[1]; }
};

// Per (query, depth) traffic, ordered by query then depth.
std::vector<DepthTraffic> transcript_report(const Transcript& t);
void write_report(std::ostream& out, const std::vector<DepthTraffic>& rows);

// One side of a channel. Checks sequence numbers and, on S1, records the
// transcript for both directions.
class Endpoint {
 public:
  Endpoint(Channel& ch, Party self, Transcript* transcript = nullptr)
      : ch_(ch), self_(self), transcript_(transcript) {}

  void send(std::uint16_t tag, Bytes payload);
  Frame recv_any();
  Bytes recv(std::uint16_t expected_tag);
  // Request/reply round trip.
  Bytes call(std::uint16_t tag, Bytes payload);
  void close() { ch_.close(); }

  Party self() const { return self_; }
  const Context& context() const { return ctx_; }
  void set_context(const Context& c) { ctx_ = c; }
  void set_query(std::uint32_t q) { ctx_.query = q; }
  void set_depth(std::uint32_t d) { ctx_.depth = d; }
  void set_phase(Phase p) { ctx_.phase = p; }
  Phase phase() const { return ctx_.phase; }

 private:
  Direction out_dir() const {
    return self_ == Party::kS1 ? Direction::kToS2 : Direction::kToS1;
  }
  Channel& ch_;
  Party self_;
  Transcript* transcript_;
  Context ctx_;
  std::uint32_t send_seq_ = 0;
  std::uint32_t recv_seq_ = 0;
};

enum class LeakKind : std::uint8_t {
  // S1 side.
  kQueryPattern = 1,
  kHaltDepth = 2,
  kUniqueCount = 3,
  kJoinCount = 4,
  // S2 side.
  kEqualityPattern = 16,
  kRecover = 17,
  kCompare = 18,
  kZeroTest = 19,
  kBlindPass = 20,
  kRefresh = 21,
  kFilter = 22,
  kQueryEnd = 23,
};
const char* leak_kind_name(LeakKind k);

struct LeakEvent {
  Party party = Party::kS2;
  LeakKind kind = LeakKind::kEqualityPattern;
  std::uint32_t query = 0;
  std::uint32_t depth = 0;
  Phase phase = Phase::kControl;
  std::uint64_t count = 0;  // observations in the event
  std::uint64_t value = 0;  // e.g. zero count, halting depth
  Bytes detail;             // e.g. permuted equality bits, token digest
};

class LeakageLog {
 public:
  void append(LeakEvent e);
  std::vector<LeakEvent> events() const;
  void export_lines(std::ostream& out) const;

 private:
  mutable std::mutex mu_;
  std::vector<LeakEvent> events_;
};

enum class ChannelKind { kInproc, kTcp };

struct PairRun {
  Transcript transcript;
  LeakageLog s1_log;
  LeakageLog s2_log;
};

using PartyProgram = std::function<void(Endpoint&, LeakageLog&)>;

// Runs S2 on a helper thread and S1 on the caller's thread. A Bye frame is
// sent after the S1 program returns; the S2 program must return on it.
void run_pair(const PartyProgram& s1, const PartyProgram& s2,
              ChannelKind kind, PairRun& out, bool keep_payloads = false);

}  // namespace enctopk

#endif  // ENCTOPK_RUNTIME_HPP_
