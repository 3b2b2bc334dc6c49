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

#include "pbc/binary_io.h"

#include <limits>

namespace pbc::io {

void BinaryWriter::put_short_string(std::string_view s) {
  if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw ValidationError("string longer than 65535 bytes: " +
                          std::string(s.substr(0, 32)) + "...");
  }
  put(static_cast<std::uint16_t>(s.size()));
  put_bytes(s);
}

void BinaryWriter::put_string(std::string_view s) {
  put(static_cast<std::uint32_t>(s.size()));
  put_bytes(s);
}

void BinaryReader::read_raw(void* dst, std::size_t n) {
  if (n == 0) return;
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) {
    throw TruncatedError("unexpected end of data");
  }
  if (hash_) hash_->update(dst, n);
}

std::string BinaryReader::get_bytes(std::size_t n) {
  std::string s(n, '\0');
  read_raw(s.data(), n);
  return s;
}

std::string BinaryReader::get_short_string() {
  return get_bytes(get<std::uint16_t>());
}

std::string BinaryReader::get_string() {
  return get_bytes(get<std::uint32_t>());
}

bool BinaryReader::at_end() {
  return in_.peek() == std::char_traits<char>::eof();
}

void Fnv1a::update(const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    state_ ^= bytes[i];
    state_ *= 0x100000001b3ULL;
  }
}

}  // namespace pbc::io
