// Copyright 2026 The stgloc Authors.
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

// Little-endian primitives shared by the checkpoint and feature-file codecs.

#ifndef STGLOC_BINARY_IO_HPP_
#define STGLOC_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "stgloc/errors.hpp"

namespace stg::binary {

template <typename UInt>
void write_uint(std::ostream& out, UInt value) {
  char bytes[sizeof(UInt)];
  for (std::size_t i = 0; i < sizeof(UInt); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  out.write(bytes, sizeof(UInt));
}

inline void write_f64(std::ostream& out, double value) {
  write_uint<std::uint64_t>(out, std::bit_cast<std::uint64_t>(value));
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename UInt>
UInt read_uint(std::istream& in, const char* what) {
  unsigned char bytes[sizeof(UInt)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(UInt))) {
    throw LoadError(std::string("truncated file while reading ") + what);
  }
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) value |= static_cast<UInt>(bytes[i]) << (8 * i);
  return value;
}

inline double read_f64(std::istream& in, const char* what) {
  return std::bit_cast<double>(read_uint<std::uint64_t>(in, what));
}

inline std::string read_string(std::istream& in, const char* what, std::uint32_t max_len = 1u << 20) {
  const auto n = read_uint<std::uint32_t>(in, what);
  if (n > max_len) throw LoadError(std::string("implausible length for ") + what);
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw LoadError(std::string("truncated file while reading ") + what);
  return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[5], const std::string& path) {
  char got[4] = {};
  if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0) {
    throw LoadError(path + ": bad magic, expected \"" + std::string(magic, 4) + "\"");
  }
}

}  // namespace stg::binary

#endif  // STGLOC_BINARY_IO_HPP_
