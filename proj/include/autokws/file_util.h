// Copyright (c) 2026 The autokws Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AUTOKWS_FILE_UTIL_H_
#define AUTOKWS_FILE_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace autokws {

// Writes `bytes` to a temporary sibling of `path` and renames it into place,
// so readers never observe a partially written file.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes);

std::string ReadFileBytes(const std::filesystem::path& path);

// Little-endian helpers for the binary formats.
void AppendU32(std::string& out, std::uint32_t v);
void AppendU64(std::string& out, std::uint64_t v);
void AppendF32(std::string& out, float v);
void AppendF64(std::string& out, double v);

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string context)
      : data_(data), context_(std::move(context)) {}

  std::uint8_t U8();
  std::uint32_t U32();
  std::uint64_t U64();
  float F32();
  double F64();
  std::string_view Bytes(std::size_t n);

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void Need(std::size_t n) const;

  std::string_view data_;
  std::string context_;
  std::size_t pos_ = 0;
};

// Deterministic 64-bit FNV-1a; used to derive per-file random seeds.
std::uint64_t Fnv1a64(std::string_view text);

}  // namespace autokws

#endif  // AUTOKWS_FILE_UTIL_H_
