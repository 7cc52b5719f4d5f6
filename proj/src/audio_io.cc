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

#include "autokws/audio_io.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "autokws/error.h"
#include "autokws/file_util.h"

namespace autokws {

namespace fs = std::filesystem;

AudioClip::AudioClip(std::vector<double> samples, int sample_rate_hz,
                     std::string source_id)
    : samples_(std::move(samples)),
      sample_rate_hz_(sample_rate_hz),
      source_id_(std::move(source_id)) {
  if (sample_rate_hz_ <= 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "sample rate must be positive, got " +
                    std::to_string(sample_rate_hz_));
  }
}

double AudioClip::MeanPower() const {
  if (samples_.empty()) return 0.0;
  double acc = 0.0;
  for (double s : samples_) acc += s * s;
  return acc / static_cast<double>(samples_.size());
}

double AudioClip::Rms() const { return std::sqrt(MeanPower()); }

AudioClip LoadWav(const fs::path& path) {
  const std::string bytes = ReadFileBytes(path);
  const std::string ctx = path.string();
  ByteReader reader(bytes, ctx);
  if (bytes.size() < 12 || reader.Bytes(4) != "RIFF") {
    throw Error(ErrorCode::kFormat, ctx + ": not a RIFF file");
  }
  reader.U32();  // riff size, not trusted
  if (reader.Bytes(4) != "WAVE") {
    throw Error(ErrorCode::kFormat, ctx + ": not a WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t codec = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (reader.remaining() >= 8) {
    const std::string_view id = reader.Bytes(4);
    std::uint32_t size = reader.U32();
    if (id == "fmt ") {
      if (size < 16) throw Error(ErrorCode::kFormat, ctx + ": short fmt chunk");
      ByteReader fmt(reader.Bytes(size), ctx);
      codec = static_cast<std::uint16_t>(fmt.U8() | (fmt.U8() << 8));
      channels = static_cast<std::uint16_t>(fmt.U8() | (fmt.U8() << 8));
      rate = fmt.U32();
      fmt.U32();  // byte rate
      fmt.U8();   // block align
      fmt.U8();
      bits = static_cast<std::uint16_t>(fmt.U8() | (fmt.U8() << 8));
      have_fmt = true;
      if (size % 2 == 1 && reader.remaining() > 0) reader.Bytes(1);  // pad
    } else if (id == "data") {
      if (!have_fmt) {
        throw Error(ErrorCode::kFormat, ctx + ": data chunk before fmt chunk");
      }
      if (codec != 1) {
        throw Error(ErrorCode::kFormat,
                    ctx + ": unsupported codec=" + std::to_string(codec) +
                        " (need PCM=1)");
      }
      if (channels != 1) {
        throw Error(ErrorCode::kFormat,
                    ctx + ": unsupported channels=" + std::to_string(channels) +
                        " (need 1)");
      }
      if (bits != 16) {
        throw Error(ErrorCode::kFormat,
                    ctx + ": unsupported bits_per_sample=" +
                        std::to_string(bits) + " (need 16)");
      }
      if (rate != static_cast<std::uint32_t>(kSampleRate)) {
        throw Error(ErrorCode::kFormat,
                    ctx + ": unsupported sample_rate=" + std::to_string(rate) +
                        " (need 16000)");
      }
      // Tolerate a data size that overruns the file (streamed writers).
      size = static_cast<std::uint32_t>(
          std::min<std::size_t>(size, reader.remaining()));
      const std::string_view raw = reader.Bytes(size - size % 2);
      std::vector<double> samples(raw.size() / 2);
      for (std::size_t i = 0; i < samples.size(); ++i) {
        std::int16_t v;
        std::memcpy(&v, raw.data() + 2 * i, 2);
        samples[i] = static_cast<double>(v) / kInt16Scale;
      }
      return AudioClip(std::move(samples), kSampleRate,
                       path.stem().string());
    } else {
      if (size > reader.remaining()) break;
      reader.Bytes(std::min<std::size_t>(size + size % 2, reader.remaining()));
    }
  }
  throw Error(ErrorCode::kFormat, ctx + ": no data chunk");
}

std::int16_t QuantizeSample(double value) {
  double scaled = std::round(value * kInt16Scale);
  scaled = std::clamp(scaled, -32768.0, 32767.0);
  return static_cast<std::int16_t>(scaled);
}

void WriteWav(const AudioClip& clip, const fs::path& path) {
  const auto n = static_cast<std::uint32_t>(clip.size());
  const std::uint32_t data_bytes = n * 2;
  const auto rate = static_cast<std::uint32_t>(clip.sample_rate_hz());
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  AppendU32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  AppendU32(out, 16);
  AppendU32(out, 1u | (1u << 16));  // PCM, mono
  AppendU32(out, rate);
  AppendU32(out, rate * 2);
  AppendU32(out, 2u | (16u << 16));  // block align, bits per sample
  out += "data";
  AppendU32(out, data_bytes);
  for (double s : clip.samples()) {
    std::int16_t q = QuantizeSample(s);
    char buf[2];
    std::memcpy(buf, &q, 2);
    out.append(buf, 2);
  }
  WriteFileAtomic(path, out);
}

AudioClip Splice(const AudioClip& a, const AudioClip& b) {
  if (a.sample_rate_hz() != b.sample_rate_hz()) {
    throw Error(ErrorCode::kRateMismatch,
                std::to_string(a.sample_rate_hz()) + " vs " +
                    std::to_string(b.sample_rate_hz()));
  }
  std::vector<double> s;
  s.reserve(a.size() + b.size());
  s.insert(s.end(), a.samples().begin(), a.samples().end());
  s.insert(s.end(), b.samples().begin(), b.samples().end());
  return AudioClip(std::move(s), a.sample_rate_hz(),
                   a.source_id() + "+" + b.source_id());
}

AudioClip ApplyGain(const AudioClip& clip, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kInvalidScale,
                "gain scale must be positive, got " + std::to_string(scale));
  }
  std::vector<double> s(clip.samples().begin(), clip.samples().end());
  for (double& v : s) v *= scale;
  return AudioClip(std::move(s), clip.sample_rate_hz(), clip.source_id());
}

std::vector<fs::path> ListWavFiles(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  }
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace autokws
