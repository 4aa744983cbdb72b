// asem/error.h

// Copyright 2026  The asem authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ASEM_ERROR_H_
#define ASEM_ERROR_H_

#include <sstream>
#include <stdexcept>
#include <string>

namespace asem {

/// Broad failure category; the command-line front end maps these onto exit
/// codes (usage 1, data 2, numeric 3).
enum class ErrorKind { kUsage, kData, kShape, kNumeric, kState };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

namespace internal {

inline void Append(std::ostringstream &) {}

template <typename T, typename... Rest>
void Append(std::ostringstream &os, const T &first, const Rest &...rest) {
  os << first;
  Append(os, rest...);
}

}  // namespace internal

/// Builds an Error from streamable pieces: Fail(ErrorKind::kData, "bad id ", id).
template <typename... Args>
[[noreturn]] void Fail(ErrorKind kind, const Args &...args) {
  std::ostringstream os;
  internal::Append(os, args...);
  throw Error(kind, os.str());
}

}  // namespace asem

#endif  // ASEM_ERROR_H_
