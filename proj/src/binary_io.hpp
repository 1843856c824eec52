/*
 * Copyright 2026 The imgrec Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Little-endian primitives shared by the IFV1 and IMR1 formats. Readers track
// the byte offset so format errors can say where they happened.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "error.hpp"

namespace imgrec::binary {

inline void putU8(std::ostream& out, uint8_t v) {
  out.put(static_cast<char>(v));
}

inline void putU16(std::ostream& out, uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

inline void putU32(std::ostream& out, uint32_t v) {
  char b[4];
  for (int k = 0; k < 4; ++k) {
    b[k] = static_cast<char>((v >> (8 * k)) & 0xff);
  }
  out.write(b, 4);
}

inline void putF32(std::ostream& out, float v) {
  putU32(out, std::bit_cast<uint32_t>(v));
}

class Reader {
 public:
  Reader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  uint64_t offset() const { return offset_; }

  [[noreturn]] void fail(const std::string& why) const { failAt(offset_, why); }

  [[noreturn]] void failAt(uint64_t offset, const std::string& why) const {
    throw Error(ErrorCode::kFormat,
                what_ + ": " + why + " at byte offset " + std::to_string(offset));
  }

  void bytes(char* dst, size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) {
      failAt(offset_ + static_cast<uint64_t>(in_.gcount()), "unexpected end of file");
    }
    offset_ += n;
  }

  uint8_t u8() {
    unsigned char b;
    bytes(reinterpret_cast<char*>(&b), 1);
    return b;
  }

  uint16_t u16() {
    unsigned char b[2];
    bytes(reinterpret_cast<char*>(b), 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
  }

  uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  }

  float f32() { return std::bit_cast<float>(u32()); }

  void expectEnd() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      fail("trailing bytes after last record");
    }
  }

 private:
  std::istream& in_;
  std::string what_;
  uint64_t offset_ = 0;
};

}  // namespace imgrec::binary
