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

#include "autokws/file_util.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "autokws/error.h"

namespace autokws {

namespace fs = std::filesystem;

void WriteFileAtomic(const fs::path& path, std::string_view bytes) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kIo, "cannot open " + tmp.string() + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorCode::kIo, "write failed for " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot rename into " + path.string());
  }
}

std::string ReadFileBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed for " + path.string());
  return ss.str();
}

namespace {

template <typename T>
void AppendLittleEndian(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little,
                "binary formats assume a little-endian host");
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

}  // namespace

void AppendU32(std::string& out, std::uint32_t v) { AppendLittleEndian(out, v); }
void AppendU64(std::string& out, std::uint64_t v) { AppendLittleEndian(out, v); }
void AppendF32(std::string& out, float v) { AppendLittleEndian(out, v); }
void AppendF64(std::string& out, double v) { AppendLittleEndian(out, v); }

void ByteReader::Need(std::size_t n) const {
  if (remaining() < n) {
    throw Error(ErrorCode::kFormat, context_ + ": truncated at byte " +
                                        std::to_string(pos_));
  }
}

std::string_view ByteReader::Bytes(std::size_t n) {
  Need(n);
  auto v = data_.substr(pos_, n);
  pos_ += n;
  return v;
}

std::uint8_t ByteReader::U8() {
  return static_cast<std::uint8_t>(Bytes(1)[0]);
}

std::uint32_t ByteReader::U32() {
  std::uint32_t v;
  std::memcpy(&v, Bytes(4).data(), 4);
  return v;
}

std::uint64_t ByteReader::U64() {
  std::uint64_t v;
  std::memcpy(&v, Bytes(8).data(), 8);
  return v;
}

float ByteReader::F32() {
  float v;
  std::memcpy(&v, Bytes(4).data(), 4);
  return v;
}

double ByteReader::F64() {
  double v;
  std::memcpy(&v, Bytes(8).data(), 8);
  return v;
}

std::uint64_t Fnv1a64(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace autokws
