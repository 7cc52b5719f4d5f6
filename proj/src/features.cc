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

#include "autokws/features.h"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "autokws/error.h"
#include "autokws/file_util.h"
#include "fft.h"

namespace autokws {

namespace fs = std::filesystem;

FeatureMatrix::FeatureMatrix(std::size_t num_frames, std::size_t dim,
                             double frame_shift_seconds, std::string source_id)
    : FeatureMatrix(num_frames, dim, std::vector<float>(num_frames * dim, 0.f),
                    frame_shift_seconds, std::move(source_id)) {}

FeatureMatrix::FeatureMatrix(std::size_t num_frames, std::size_t dim,
                             std::vector<float> values,
                             double frame_shift_seconds, std::string source_id)
    : num_frames_(num_frames),
      dim_(dim),
      values_(std::move(values)),
      frame_shift_seconds_(frame_shift_seconds),
      source_id_(std::move(source_id)) {
  if (values_.size() != num_frames_ * dim_) {
    throw Error(ErrorCode::kInvalidArgument,
                "feature value count " + std::to_string(values_.size()) +
                    " does not match " + std::to_string(num_frames_) + "x" +
                    std::to_string(dim_));
  }
}

FeatureMatrix FeatureMatrix::FromRows(
    const std::vector<std::vector<double>>& rows, double frame_shift_seconds,
    std::string source_id) {
  const std::size_t dim = rows.empty() ? 0 : rows.front().size();
  std::vector<float> values;
  values.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    if (r.size() != dim) {
      throw Error(ErrorCode::kDimMismatch, "ragged feature rows");
    }
    for (double v : r) values.push_back(static_cast<float>(v));
  }
  return FeatureMatrix(rows.size(), dim, std::move(values),
                       frame_shift_seconds, std::move(source_id));
}

FeatureMatrix FeatureMatrix::Slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > num_frames_) {
    throw Error(ErrorCode::kInvalidArgument, "bad frame slice");
  }
  std::vector<float> v(values_.begin() + begin * dim_,
                       values_.begin() + end * dim_);
  return FeatureMatrix(end - begin, dim_, std::move(v), frame_shift_seconds_,
                       source_id_);
}

FeatureMatrix ConcatFrames(std::span<const FeatureMatrix> parts) {
  if (parts.empty()) throw Error(ErrorCode::kEmptyInput, "nothing to concat");
  const std::size_t dim = parts.front().dim();
  std::size_t total = 0;
  std::vector<float> values;
  for (const auto& p : parts) {
    if (p.dim() != dim) {
      throw Error(ErrorCode::kDimMismatch,
                  std::to_string(p.dim()) + " vs " + std::to_string(dim));
    }
    total += p.num_frames();
    values.insert(values.end(), p.values().begin(), p.values().end());
  }
  return FeatureMatrix(total, dim, std::move(values),
                       parts.front().frame_shift_seconds(),
                       parts.front().source_id());
}

int FeatureConfig::frame_length_samples(int rate) const {
  return static_cast<int>(std::lround(frame_length_seconds * rate));
}

int FeatureConfig::frame_shift_samples(int rate) const {
  return static_cast<int>(std::lround(frame_shift_seconds * rate));
}

void FeatureConfig::Validate() const {
  if (!(frame_length_seconds > 0) || !(frame_shift_seconds > 0) ||
      frame_shift_seconds > frame_length_seconds) {
    throw Error(ErrorCode::kInvalidArgument,
                "need 0 < frame_shift <= frame_length");
  }
  if (num_mel_filters < 1 || num_cepstra < 1 || num_cepstra > num_mel_filters) {
    throw Error(ErrorCode::kInvalidArgument,
                "need 1 <= num_cepstra <= num_mel_filters");
  }
  if (!(pre_emphasis >= 0.0 && pre_emphasis < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "pre_emphasis must be in [0,1)");
  }
}

std::size_t NumFrames(std::size_t num_samples, int frame_len, int frame_shift) {
  const auto len = static_cast<std::size_t>(frame_len);
  if (num_samples < len) return 0;
  return 1 + (num_samples - len) / static_cast<std::size_t>(frame_shift);
}

namespace {

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

// num_filters x num_bins triangular weights, triangles defined on the mel
// axis.
std::vector<std::vector<double>> MelFilterbank(int num_filters,
                                               std::size_t fft_size, int rate,
                                               double low_hz) {
  const std::size_t num_bins = fft_size / 2 + 1;
  const double high_hz = rate / 2.0;
  const double mel_low = HzToMel(low_hz);
  const double mel_high = HzToMel(high_hz);
  const double delta = (mel_high - mel_low) / (num_filters + 1);
  std::vector<std::vector<double>> bank(num_filters,
                                        std::vector<double>(num_bins, 0.0));
  for (int m = 0; m < num_filters; ++m) {
    const double left = mel_low + m * delta;
    const double center = left + delta;
    const double right = center + delta;
    for (std::size_t k = 0; k < num_bins; ++k) {
      const double mel = HzToMel(static_cast<double>(k) * rate / fft_size);
      if (mel > left && mel < right) {
        bank[m][k] = mel <= center ? (mel - left) / (center - left)
                                   : (right - mel) / (right - center);
      }
    }
  }
  return bank;
}

}  // namespace

FeatureMatrix ExtractMfcc(const AudioClip& clip, const FeatureConfig& config) {
  config.Validate();
  const int rate = clip.sample_rate_hz();
  const int frame_len = config.frame_length_samples(rate);
  const int shift = config.frame_shift_samples(rate);
  const std::size_t num_frames = NumFrames(clip.size(), frame_len, shift);
  if (num_frames == 0) {
    throw Error(ErrorCode::kTooShort,
                "clip '" + clip.source_id() + "' has " +
                    std::to_string(clip.size()) +
                    " samples, shorter than one frame of " +
                    std::to_string(frame_len));
  }

  const std::size_t fft_size =
      internal::NextPowerOfTwo(static_cast<std::size_t>(frame_len));
  internal::RealFft fft(fft_size);
  const auto bank =
      MelFilterbank(config.num_mel_filters, fft_size, rate, config.low_freq_hz);

  // Periodic Hann.
  std::vector<double> window(frame_len);
  for (int n = 0; n < frame_len; ++n) {
    window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / frame_len);
  }

  // Orthonormal DCT-II basis, num_cepstra x num_mel_filters.
  const int num_mel = config.num_mel_filters;
  const int num_ceps = config.num_cepstra;
  std::vector<double> dct(static_cast<std::size_t>(num_ceps) * num_mel);
  for (int c = 0; c < num_ceps; ++c) {
    const double norm =
        c == 0 ? std::sqrt(1.0 / num_mel) : std::sqrt(2.0 / num_mel);
    for (int m = 0; m < num_mel; ++m) {
      dct[c * num_mel + m] =
          norm * std::cos(std::numbers::pi * c * (m + 0.5) / num_mel);
    }
  }

  constexpr double kEnergyFloor = 1e-20;
  FeatureMatrix out(num_frames, static_cast<std::size_t>(num_ceps),
                    config.frame_shift_seconds, clip.source_id());
  const auto samples = clip.samples();
  std::vector<double> frame(frame_len);
  std::vector<double> log_mel(num_mel);
  for (std::size_t t = 0; t < num_frames; ++t) {
    const std::size_t offset = t * static_cast<std::size_t>(shift);
    for (int n = frame_len - 1; n > 0; --n) {
      frame[n] = samples[offset + n] - config.pre_emphasis * samples[offset + n - 1];
    }
    frame[0] = samples[offset] * (1.0 - config.pre_emphasis);
    for (int n = 0; n < frame_len; ++n) frame[n] *= window[n];

    const auto spectrum = fft.Forward(frame);
    for (int m = 0; m < num_mel; ++m) {
      double e = 0.0;
      const auto& w = bank[m];
      for (std::size_t k = 0; k < spectrum.size(); ++k) {
        if (w[k] != 0.0) e += w[k] * std::norm(spectrum[k]);
      }
      log_mel[m] = std::log(std::max(e, kEnergyFloor));
    }
    auto row = out.row(t);
    for (int c = 0; c < num_ceps; ++c) {
      double acc = 0.0;
      for (int m = 0; m < num_mel; ++m) acc += dct[c * num_mel + m] * log_mel[m];
      row[c] = static_cast<float>(acc);
    }
  }
  return config.apply_cmvn ? ApplyCmvn(out) : out;
}

FeatureMatrix ApplyCmvn(const FeatureMatrix& m) {
  const std::size_t T = m.num_frames();
  const std::size_t D = m.dim();
  FeatureMatrix out = m;
  if (T == 0) return out;
  for (std::size_t d = 0; d < D; ++d) {
    double mean = 0.0;
    for (std::size_t t = 0; t < T; ++t) mean += m(t, d);
    mean /= static_cast<double>(T);
    double var = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double c = m(t, d) - mean;
      var += c * c;
    }
    var /= static_cast<double>(T);
    const double stddev = std::sqrt(var);
    const double scale = stddev > 1e-10 ? 1.0 / stddev : 1.0;
    for (std::size_t t = 0; t < T; ++t) {
      out(t, d) = static_cast<float>((m(t, d) - mean) * scale);
    }
  }
  return out;
}

namespace {

constexpr std::string_view kKwsfMagic = "KWSF";
constexpr std::uint8_t kKwsfVersion = 1;

void CheckFinite(const FeatureMatrix& m, const std::string& context) {
  for (float v : m.values()) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kFormat, context + ": non-finite feature value");
    }
  }
}

FeatureMatrix ReadCsvFeatures(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) {
          throw std::invalid_argument(cell);
        }
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::kFormat, path.string() + ":" +
                                            std::to_string(line_no) +
                                            ": bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::kFormat, path.string() + ":" +
                                          std::to_string(line_no) +
                                          ": row width differs");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) {
    throw Error(ErrorCode::kFormat, path.string() + ": empty feature file");
  }
  auto m = FeatureMatrix::FromRows(rows, 0.01, path.stem().string());
  CheckFinite(m, path.string());
  return m;
}

}  // namespace

std::string EncodeFeatures(const FeatureMatrix& m) {
  if (m.num_frames() == 0 || m.dim() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "cannot encode an empty matrix");
  }
  std::string out;
  out.reserve(13 + m.values().size() * 4);
  out += kKwsfMagic;
  out.push_back(static_cast<char>(kKwsfVersion));
  AppendU32(out, static_cast<std::uint32_t>(m.num_frames()));
  AppendU32(out, static_cast<std::uint32_t>(m.dim()));
  for (float v : m.values()) AppendF32(out, v);
  return out;
}

void WriteFeatures(const FeatureMatrix& m, const fs::path& path) {
  WriteFileAtomic(path, EncodeFeatures(m));
}

FeatureMatrix DecodeFeatures(std::string_view bytes,
                             const std::string& context) {
  ByteReader reader(bytes, context);
  if (bytes.size() < 5 || reader.Bytes(4) != kKwsfMagic) {
    throw Error(ErrorCode::kFormat, context + ": missing KWSF magic");
  }
  const std::uint8_t version = reader.U8();
  if (version != kKwsfVersion) {
    throw Error(ErrorCode::kFormat, context + ": unsupported KWSF version " +
                                        std::to_string(version));
  }
  const std::uint32_t T = reader.U32();
  const std::uint32_t D = reader.U32();
  if (T == 0 || D == 0) {
    throw Error(ErrorCode::kFormat, context + ": empty shape");
  }
  const std::uint64_t count = std::uint64_t{T} * D;
  if (reader.remaining() < count * 4) {
    throw Error(ErrorCode::kFormat,
                context + ": shape " + std::to_string(T) + "x" +
                    std::to_string(D) + " exceeds payload");
  }
  std::vector<float> values(count);
  for (auto& v : values) v = reader.F32();
  FeatureMatrix m(T, D, std::move(values));
  CheckFinite(m, context);
  return m;
}

FeatureMatrix ReadFeatures(const fs::path& path) {
  if (path.extension() == ".csv") return ReadCsvFeatures(path);
  const std::string bytes = ReadFileBytes(path);
  FeatureMatrix m = DecodeFeatures(bytes, path.string());
  if (bytes.size() != 13 + m.values().size() * 4) {
    throw Error(ErrorCode::kFormat, path.string() + ": trailing bytes");
  }
  m.set_source_id(path.stem().string());
  return m;
}

namespace {

void NormalizeInPlace(std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::kInvalidArgument,
                "embedding has zero or non-finite norm");
  }
  for (double& x : v) x /= norm;
}

}  // namespace

SpeakerEmbedding SpeakerStatsEmbedding(const FeatureMatrix& m) {
  const std::size_t T = m.num_frames();
  const std::size_t D = m.dim();
  if (T < 2) {
    throw Error(ErrorCode::kTooShort,
                "speaker embedding needs >= 2 frames, got " + std::to_string(T));
  }
  std::vector<double> v(2 * D, 0.0);
  for (std::size_t d = 0; d < D; ++d) {
    double mean = 0.0;
    for (std::size_t t = 0; t < T; ++t) mean += m(t, d);
    mean /= static_cast<double>(T);
    double var = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double c = m(t, d) - mean;
      var += c * c;
    }
    v[d] = mean;
    v[D + d] = std::sqrt(var / static_cast<double>(T));
  }
  NormalizeInPlace(v);
  return {std::move(v), EmbeddingKind::kStats};
}

SpeakerEmbedding MakeExternalEmbedding(std::vector<double> vector) {
  if (vector.empty()) throw Error(ErrorCode::kEmptyInput, "empty embedding");
  NormalizeInPlace(vector);
  return {std::move(vector), EmbeddingKind::kExternal};
}

double CosineSimilarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimMismatch, "embedding dims " +
                                             std::to_string(a.size()) + " vs " +
                                             std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na < 1e-24 || nb < 1e-24) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace autokws
