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

#include "enctopk/bytes.hpp"

#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <cstring>

#include "enctopk/errors.hpp"

namespace enctopk {

const char* error_class_name(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::kDomain: return "domain";
    case ErrorClass::kKey: return "key";
    case ErrorClass::kInvalidCiphertext: return "invalid-ciphertext";
    case ErrorClass::kFormat: return "format";
    case ErrorClass::kIo: return "io";
    case ErrorClass::kProtocol: return "protocol";
    case ErrorClass::kLeakage: return "leakage-violation";
    case ErrorClass::kUsage: return "usage";
  }
  return "unknown";
}

void mpz_to_fixed(const mpz_class& v, std::uint8_t* out, std::size_t width) {
  if (sgn(v) < 0) throw DomainError("negative integer cannot be serialized");
  std::size_t len = (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
  if (sgn(v) == 0) len = 0;
  if (len > width) throw DomainError("integer does not fit fixed width");
  std::memset(out, 0, width - len);
  if (len > 0) {
    std::size_t written = 0;
    mpz_export(out + (width - len), &written, 1, 1, 1, 0, v.get_mpz_t());
  }
}

Bytes mpz_to_fixed(const mpz_class& v, std::size_t width) {
  Bytes out(width);
  mpz_to_fixed(v, out.data(), width);
  return out;
}

Bytes mpz_to_bytes(const mpz_class& v) {
  if (sgn(v) < 0) throw DomainError("negative integer cannot be serialized");
  if (sgn(v) == 0) return {};
  return mpz_to_fixed(v, (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8);
}

mpz_class mpz_from_bytes(std::span<const std::uint8_t> b) {
  mpz_class v;
  if (!b.empty()) mpz_import(v.get_mpz_t(), b.size(), 1, 1, 1, 0, b.data());
  return v;
}

std::size_t byte_width(const mpz_class& modulus) {
  return (mpz_sizeinbase(modulus.get_mpz_t(), 2) + 7) / 8;
}

Digest sha256(std::span<const std::uint8_t> data) {
  Digest d;
  SHA256(data.data(), data.size(), d.data());
  return d;
}

Digest hmac_sha256(std::span<const std::uint8_t> key,
                   std::span<const std::uint8_t> data) {
  Digest d;
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(),
       data.size(), d.data(), &len);
  return d;
}

std::string to_hex(std::span<const std::uint8_t> data) {
  static const char* kHex = "0123456789abcdef";
  std::string s;
  s.reserve(data.size() * 2);
  for (auto b : data) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 15]);
  }
  return s;
}

Bytes encode_int_id(std::uint64_t id) {
  ByteWriter w;
  w.u64(id);
  return w.take();
}

void ByteWriter::u16(std::uint16_t v) {
  buf_.push_back(static_cast<std::uint8_t>(v >> 8));
  buf_.push_back(static_cast<std::uint8_t>(v));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
}

void ByteWriter::raw(std::span<const std::uint8_t> b) {
  buf_.insert(buf_.end(), b.begin(), b.end());
}

void ByteWriter::fixed(const mpz_class& v, std::size_t width) {
  std::size_t at = buf_.size();
  buf_.resize(at + width);
  mpz_to_fixed(v, buf_.data() + at, width);
}

void ByteWriter::mpz_lp(const mpz_class& v) { bytes_lp(mpz_to_bytes(v)); }

void ByteWriter::bytes_lp(std::span<const std::uint8_t> b) {
  u32(static_cast<std::uint32_t>(b.size()));
  raw(b);
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n) {
  if (n > remaining()) throw FormatError("truncated input");
  auto s = data_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::uint8_t ByteReader::u8() { return raw(1)[0]; }

std::uint16_t ByteReader::u16() {
  auto b = raw(2);
  return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t ByteReader::u32() {
  auto b = raw(4);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

std::uint64_t ByteReader::u64() {
  std::uint64_t hi = u32();
  return (hi << 32) | u32();
}

mpz_class ByteReader::fixed(std::size_t width) { return mpz_from_bytes(raw(width)); }

mpz_class ByteReader::mpz_lp() {
  std::uint32_t n = u32();
  return mpz_from_bytes(raw(n));
}

Bytes ByteReader::bytes_lp() {
  std::uint32_t n = u32();
  auto s = raw(n);
  return Bytes(s.begin(), s.end());
}

void ByteReader::expect_done() const {
  if (!done()) throw FormatError("trailing bytes after message");
}

}  // namespace enctopk
