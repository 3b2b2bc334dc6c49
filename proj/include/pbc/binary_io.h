// Copyright 2026 The pbc-rerank Authors
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

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "pbc/error.h"

// Little-endian primitives shared by the feature, score-matrix and index
// file formats.
namespace pbc::io {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

// Thrown by BinaryReader when the stream ends early. Callers translate it
// into the error type of their format.
class TruncatedError : public Error {
 public:
  using Error::Error;
};

template <typename T>
T byteswap_if_big(T value) {
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
      std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

// 64-bit FNV-1a, used for gallery fingerprints.
class Fnv1a {
 public:
  void update(const void* data, std::size_t n);
  void update(std::string_view s) { update(s.data(), s.size()); }
  template <typename T>
    requires std::is_arithmetic_v<T>
  void update_value(T v) {
    v = byteswap_if_big(v);
    update(&v, sizeof(T));
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T value) {
    value = byteswap_if_big(value);
    write_raw(&value, sizeof(T));
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put_array(std::span<const T> values) {
    if constexpr (std::endian::native == std::endian::little) {
      write_raw(values.data(), values.size_bytes());
    } else {
      for (T v : values) put(v);
    }
  }

  void put_bytes(std::string_view bytes) { write_raw(bytes.data(), bytes.size()); }

  // u16 length prefix followed by the raw bytes.
  void put_short_string(std::string_view s);
  // u32 length prefix followed by the raw bytes.
  void put_string(std::string_view s);

  bool good() const { return out_.good(); }

  // Every byte written afterwards is also fed to `hash`.
  void attach_hash(Fnv1a* hash) { hash_ = hash; }

 private:
  void write_raw(const void* src, std::size_t n) {
    if (hash_) hash_->update(src, n);
    out_.write(static_cast<const char*>(src), static_cast<std::streamsize>(n));
  }

  std::ostream& out_;
  Fnv1a* hash_ = nullptr;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    T value;
    read_raw(&value, sizeof(T));
    return byteswap_if_big(value);
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void get_array(std::span<T> out) {
    read_raw(out.data(), out.size_bytes());
    if constexpr (std::endian::native == std::endian::big) {
      for (T& v : out) v = byteswap_if_big(v);
    }
  }

  std::string get_bytes(std::size_t n);
  std::string get_short_string();
  std::string get_string();

  // True when no byte is left in the stream.
  bool at_end();

  // Every byte read afterwards is also fed to `hash`.
  void attach_hash(Fnv1a* hash) { hash_ = hash; }

 private:
  void read_raw(void* dst, std::size_t n);

  std::istream& in_;
  Fnv1a* hash_ = nullptr;
};


}  // namespace pbc::io
