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


// Command implementations behind the enctopk command-line tool. Each one
// composes datastore, runtime and engine operations; the tool only parses
// flags.

#ifndef ENCTOPK_COMMANDS_HPP_
#define ENCTOPK_COMMANDS_HPP_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "enctopk/ehl.hpp"
#include "enctopk/engine.hpp"

namespace enctopk {

// Profile from the flag, else ENCTOPK_PROFILE, else "test".
std::string resolve_profile(const std::string& flag);

struct KeygenOptions {
  std::string profile = "test";
  std::string pk, sk, ehl_keys, prp_key;  // output paths
  std::optional<std::uint64_t> seed;
  EhlVariant variant = EhlVariant::kPlus;
  std::size_t ehl_s = 3;
  std::uint32_t list_length = 0;  // classic only
};
void cmd_keygen(const KeygenOptions& o, std::ostream& out);

struct EncryptOptions {
  std::string csv, pk, ehl_keys, prp_key, out;
  std::string sk;  // optional, owner-side CRT encryption
  // Join relations: a second CSV and output.
  std::string join_csv, join_out;
  unsigned width = 32;
  std::optional<std::uint64_t> seed;
};
void cmd_encrypt(const EncryptOptions& o, std::ostream& out);

struct TokenOptions {
  std::string prp_key, csv, out;
  std::vector<std::string> attrs;
  std::vector<std::uint64_t> weights;
  std::uint32_t k = 1;
  // Join token: R1.on_left = R2.on_right scored by R1.score_left +
  // R2.score_right; the second CSV supplies R2's schema.
  std::string join_csv, on_left, on_right, score_left, score_right;
};
void cmd_token(const TokenOptions& o, std::ostream& out);

struct ServeOptions {
  std::string sk;
  std::string listen = "127.0.0.1:0";
  std::size_t connections = 0;  // 0 means serve forever
  std::string log;              // S2 leakage log, appended per connection
  std::optional<std::uint64_t> seed;
};
// Prints "listening HOST:PORT" once bound.
void cmd_serve(const ServeOptions& o, std::ostream& out);

struct RunOptions {
  std::string pk, channel = "inproc";
  std::string sk;            // inproc: the local crypto cloud's key
  std::string decrypt_with;  // verification only, refused for tcp
  std::string ehl_keys, csv, join_csv;  // id lookup for decryption
  std::optional<std::uint64_t> seed;
  std::string s1_log, s2_log, frames, transcript;
  std::string result_out;  // encrypted answer for a later `decrypt`
  bool report = false;
};

struct QueryOptions : RunOptions {
  std::string token, er;
  std::string mode = "full";
};
void cmd_query(const QueryOptions& o, std::ostream& out);

struct JoinOptions : RunOptions {
  std::string token, er1, er2;
};
void cmd_join(const JoinOptions& o, std::ostream& out);

// Client side: decrypts a result file written by query or join.
struct DecryptOptions {
  std::string pk, sk, result;
  std::string ehl_keys, csv;  // query results: id lookup
  bool join = false;
};
void cmd_decrypt(const DecryptOptions& o, std::ostream& out);

struct BenchOptions {
  std::string profile = "test";
  std::size_t rows = 1000, attrs = 4, lists = 2;
  std::uint32_t k = 2;
  unsigned width = 16;
  std::string mode = "full";
  std::uint64_t seed = 1;
};
void cmd_bench(const BenchOptions& o, std::ostream& out);

struct AuditOptions {
  std::string csv, s1_log, s2_log, frames, pk, ehl_keys;
  // "attr,attr:k:mode", one per query in session order.
  std::vector<std::string> queries;
};
// Throws LeakageViolation on failure.
void cmd_audit(const AuditOptions& o, std::ostream& out);

// Frames file: the transcript's frames back to back.
void write_frames(const std::string& path, const std::vector<Bytes>& frames);
std::vector<Bytes> read_frames(const std::string& path);

}  // namespace enctopk

#endif  // ENCTOPK_COMMANDS_HPP_
