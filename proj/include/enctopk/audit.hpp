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


// Test-harness leakage auditor. It needs the plaintext relation, so it is
// never part of a deployed party.

#ifndef ENCTOPK_AUDIT_HPP_
#define ENCTOPK_AUDIT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "enctopk/ehl.hpp"
#include "enctopk/engine.hpp"
#include "enctopk/oracle.hpp"
#include "enctopk/relation.hpp"
#include "enctopk/runtime.hpp"

namespace enctopk {

// Equality tests S2 runs at one depth and how many of them come out zero.
struct DepthPattern {
  std::uint64_t worst_tests = 0, worst_zeros = 0;
  std::uint64_t dedup_tests = 0, dedup_zeros = 0;
  std::uint64_t update_tests = 0, update_zeros = 0;
  std::uint64_t unique = 0;  // distinct objects seen up to this depth
};

// Plaintext expectation for depths 1..depths.
std::vector<DepthPattern> expected_pattern(const Relation& r,
                                           const ScoringQuery& q,
                                           QueryMode mode, std::size_t depths);

struct AuditQuery {
  ScoringQuery query;
  std::uint32_t k = 1;
  QueryMode mode;
  bool join = false;
};

struct AuditInput {
  const Relation* relation = nullptr;
  std::vector<AuditQuery> queries;  // in session order, ids 1, 2, ...
  std::vector<LeakEvent> s1;
  std::vector<LeakEvent> s2;
  // Optional payload scan.
  const std::vector<Bytes>* frames = nullptr;
  const EhlKeySet* ehl_keys = nullptr;
  const PublicKey* pk = nullptr;
};

struct AuditReport {
  std::vector<std::string> violations;
  std::uint64_t depths_checked = 0;
  std::uint64_t patterns_scanned = 0;
  std::uint64_t bytes_scanned = 0;
  std::uint64_t frames_scanned = 0;
  std::uint64_t frames_parsed = 0;  // split into value fields
  bool ok() const { return violations.empty(); }
};

AuditReport leakage_audit(const AuditInput& in);
// Throws LeakageViolation naming the first violations.
void enforce(const AuditReport& report);

// Parses LeakageLog::export_lines output (details are not exported).
std::vector<LeakEvent> parse_leak_lines(std::istream& in);

}  // namespace enctopk

#endif  // ENCTOPK_AUDIT_HPP_
