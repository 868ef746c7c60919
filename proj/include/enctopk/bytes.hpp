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

#ifndef ENCTOPK_BYTES_HPP_
#define ENCTOPK_BYTES_HPP_

#include <gmpxx.h>

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace enctopk {

using Bytes = std::vector<std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

// Big-endian encoding of a non-negative integer, left-padded to `width`.
// Throws DomainError if the value does not fit.
Bytes mpz_to_fixed(const mpz_class& v, std::size_t width);
void mpz_to_fixed(const mpz_class& v, std::uint8_t* out, std::size_t width);
// Minimal big-endian encoding (empty for zero).
Bytes mpz_to_bytes(const mpz_class& v);
mpz_class mpz_from_bytes(std::span<const std::uint8_t> b);

std::size_t byte_width(const mpz_class& modulus);

Digest sha256(std::span<const std::uint8_t> data);
Digest hmac_sha256(std::span<const std::uint8_t> key,
                   std::span<const std::uint8_t> data);
std::string to_hex(std::span<const std::uint8_t> data);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Integer ids are MACed as 8-byte big-endian strings.
Bytes encode_int_id(std::uint64_t id);

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void raw(std::span<const std::uint8_t> b);
  void fixed(const mpz_class& v, std::size_t width);
  // u32 length prefix followed by the minimal big-endian encoding.
  void mpz_lp(const mpz_class& v);
  void bytes_lp(std::span<const std::uint8_t> b);

  const Bytes& data() const { return buf_; }
  Bytes take() { return std::move(buf_); }
  std::size_t size() const { return buf_.size(); }

 private:
  Bytes buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::span<const std::uint8_t> raw(std::size_t n);
  mpz_class fixed(std::size_t width);
  mpz_class mpz_lp();
  Bytes bytes_lp();

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }
  void expect_done() const;

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace enctopk

#endif  // ENCTOPK_BYTES_HPP_
