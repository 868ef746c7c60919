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

#ifndef ENCTOPK_ERRORS_HPP_
#define ENCTOPK_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace enctopk {

// Error classes. Each maps to a distinct CLI exit code.
enum class ErrorClass : int {
  kDomain = 2,
  kKey = 3,
  kInvalidCiphertext = 4,
  kFormat = 5,
  kIo = 6,
  kProtocol = 7,
  kLeakage = 8,
  kUsage = 9,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what)
      : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const { return cls_; }
  int exit_code() const { return static_cast<int>(cls_); }

 private:
  ErrorClass cls_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorClass::kDomain, w) {}
};
struct KeyError : Error {
  explicit KeyError(const std::string& w) : Error(ErrorClass::kKey, w) {}
};
struct InvalidCiphertext : Error {
  explicit InvalidCiphertext(const std::string& w)
      : Error(ErrorClass::kInvalidCiphertext, w) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error(ErrorClass::kFormat, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorClass::kIo, w) {}
};
struct ProtocolError : Error {
  explicit ProtocolError(const std::string& w)
      : Error(ErrorClass::kProtocol, w) {}
};
struct LeakageViolation : Error {
  explicit LeakageViolation(const std::string& w)
      : Error(ErrorClass::kLeakage, w) {}
};
struct UsageError : Error {
  explicit UsageError(const std::string& w) : Error(ErrorClass::kUsage, w) {}
};

const char* error_class_name(ErrorClass cls);

}  // namespace enctopk

#endif  // ENCTOPK_ERRORS_HPP_
