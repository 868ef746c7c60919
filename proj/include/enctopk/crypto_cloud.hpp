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


// The crypto cloud (S2): holds the secret key and answers S1's requests.

#ifndef ENCTOPK_CRYPTO_CLOUD_HPP_
#define ENCTOPK_CRYPTO_CLOUD_HPP_

#include <optional>

#include "enctopk/paillier.hpp"
#include "enctopk/rng.hpp"
#include "enctopk/runtime.hpp"

namespace enctopk {

class CryptoCloud {
 public:
  CryptoCloud(SecretKey sk, Rng rng, LeakageLog* log = nullptr);

  // Serves requests until S1 says goodbye or the channel closes.
  void serve(Endpoint& ep);

  std::uint64_t requests() const { return requests_; }

 private:
  Bytes handle(std::uint16_t tag, ByteReader& r);
  Bytes equality(ByteReader& r);
  Bytes recover(ByteReader& r);
  Bytes compare(ByteReader& r, bool hidden);
  Bytes zero(ByteReader& r);
  Bytes blind_pass(ByteReader& r);
  Bytes refresh(ByteReader& r);
  Bytes filter(ByteReader& r);
  void session_keys(ByteReader& r);
  void log(LeakKind kind, std::uint64_t count, std::uint64_t value = 0,
           Bytes detail = {});
  const PublicKey& additive() const;

  SecretKey sk_;
  PublicKey pk_;
  Rng rng_;
  LeakageLog* log_;
  Context ctx_;
  std::optional<PublicKey> additive_;
  std::optional<PublicKey> multiplicative_;
  std::uint64_t requests_ = 0;
};

// run_pair() program for S2.
PartyProgram crypto_cloud_program(const SecretKey& sk, std::uint64_t seed);

}  // namespace enctopk

#endif  // ENCTOPK_CRYPTO_CLOUD_HPP_
