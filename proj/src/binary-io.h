// src/binary-io.h

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

#ifndef ASEM_SRC_BINARY_IO_H_
#define ASEM_SRC_BINARY_IO_H_

// Little-endian helpers shared by the checkpoint and corpus formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>

#include "asem/error.h"

namespace asem {
namespace internal {

inline void PutU32(std::string &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void PutU8(std::string &out, std::uint8_t v) {
  out.push_back(static_cast<char>(v));
}

inline void PutF32(std::string &out, float v) {
  PutU32(out, std::bit_cast<std::uint32_t>(v));
}

inline void PutString(std::string &out, std::string_view s) {
  PutU32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

/// Sequential reader over an in-memory file image.  Every failure reports
/// the byte offset at which the format was violated.
class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string source)
      : bytes_(bytes), source_(std::move(source)) {}

  std::size_t offset() const { return pos_; }
  bool AtEnd() const { return pos_ == bytes_.size(); }

  [[noreturn]] void Malformed(const std::string &what) const {
    Fail(ErrorKind::kData, source_, ": malformed file at byte offset ", pos_,
         ": ", what);
  }

  std::string_view Take(std::size_t n, const char *what) {
    if (bytes_.size() - pos_ < n)
      Malformed(std::string("truncated while reading ") + what);
    std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::uint32_t U32(const char *what) {
    std::string_view b = Take(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }

  std::uint8_t U8(const char *what) {
    return static_cast<std::uint8_t>(Take(1, what)[0]);
  }

  float F32(const char *what) { return std::bit_cast<float>(U32(what)); }

  std::string String(const char *what) {
    std::uint32_t n = U32(what);
    return std::string(Take(n, what));
  }

 private:
  std::string_view bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

inline std::string ReadFileBytes(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorKind::kData, "cannot open ", path, " for reading");
  return std::string(std::istreambuf_iterator<char>(is),
                     std::istreambuf_iterator<char>());
}

inline void WriteFileBytes(const std::string &path, const std::string &bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Fail(ErrorKind::kData, "cannot open ", path, " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) Fail(ErrorKind::kData, "write to ", path, " failed");
}

}  // namespace internal
}  // namespace asem

#endif  // ASEM_SRC_BINARY_IO_H_
