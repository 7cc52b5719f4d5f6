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

#ifndef AUTOKWS_AUDIO_IO_H_
#define AUTOKWS_AUDIO_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace autokws {

inline constexpr int kSampleRate = 16000;

// int16 samples are mapped to [-1, 1) by dividing by 32768, so that the
// full representable range is symmetric around zero.
inline constexpr double kInt16Scale = 32768.0;

// Mono PCM audio. Samples are real-valued and unclipped in memory; saturation
// to the int16 range happens only in WriteWav.
class AudioClip {
 public:
  AudioClip() = default;
  AudioClip(std::vector<double> samples, int sample_rate_hz,
            std::string source_id = {});

  std::span<const double> samples() const { return samples_; }
  int sample_rate_hz() const { return sample_rate_hz_; }
  const std::string& source_id() const { return source_id_; }

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  double duration_seconds() const {
    return static_cast<double>(samples_.size()) / sample_rate_hz_;
  }

  double Rms() const;
  double MeanPower() const;

 private:
  std::vector<double> samples_;
  int sample_rate_hz_ = kSampleRate;
  std::string source_id_;
};

// Reads a RIFF/WAVE file holding 16-bit PCM, mono, 16 kHz. Anything else is
// rejected with a FormatError naming the offending field.
AudioClip LoadWav(const std::filesystem::path& path);

// Writes 16-bit mono PCM. Values outside [-1, 1) saturate.
void WriteWav(const AudioClip& clip, const std::filesystem::path& path);

// Quantizes one in-memory sample exactly as WriteWav does.
std::int16_t QuantizeSample(double value);

AudioClip Splice(const AudioClip& a, const AudioClip& b);

AudioClip ApplyGain(const AudioClip& clip, double scale);

// Sorted list of *.wav files directly inside `dir`.
std::vector<std::filesystem::path> ListWavFiles(
    const std::filesystem::path& dir);

}  // namespace autokws

#endif  // AUTOKWS_AUDIO_IO_H_
