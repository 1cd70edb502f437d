// Copyright 2026 The capgan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CAPGAN_COMMON_ERROR_HPP_
#define CAPGAN_COMMON_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace capgan {

// Error categories. The C API maps each one onto a status code, and the CLI
// prints the category name as the first field of its error line.
enum class ErrorKind {
  kDimension,   // shape mismatch
  kDomain,      // argument outside the function's domain (e.g. log of <= 0)
  kContract,    // precondition violated by the caller
  kDegenerate,  // input that admits no meaningful result (empty, all-masked)
  kRange,       // index out of range
  kLoad,        // malformed or inconsistent file contents
  kIo,          // filesystem failure
  kNumeric,     // NaN/Inf or a zero-norm vector where one is not allowed
  kConfig,      // bad configuration key or value
  kExists,      // refusing to overwrite existing output
  kNotFound,    // required input missing
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void Require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace capgan

#endif  // CAPGAN_COMMON_ERROR_HPP_
