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

#ifndef AUTOKWS_FEATURES_H_
#define AUTOKWS_FEATURES_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "autokws/audio_io.h"

namespace autokws {

// T x D frame-level features, row-major, stored as float so that the KWSF
// file round-trip is bit-exact.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t num_frames, std::size_t dim,
                double frame_shift_seconds = 0.01, std::string source_id = {});
  FeatureMatrix(std::size_t num_frames, std::size_t dim,
                std::vector<float> values, double frame_shift_seconds = 0.01,
                std::string source_id = {});

  // Builds a matrix from rows; all rows must share one dimension.
  static FeatureMatrix FromRows(const std::vector<std::vector<double>>& rows,
                                double frame_shift_seconds = 0.01,
                                std::string source_id = {});

  std::size_t num_frames() const { return num_frames_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return num_frames_ == 0; }

  std::span<const float> row(std::size_t t) const {
    return {values_.data() + t * dim_, dim_};
  }
  std::span<float> row(std::size_t t) {
    return {values_.data() + t * dim_, dim_};
  }
  float operator()(std::size_t t, std::size_t d) const {
    return values_[t * dim_ + d];
  }
  float& operator()(std::size_t t, std::size_t d) {
    return values_[t * dim_ + d];
  }

  std::span<const float> values() const { return values_; }
  double frame_shift_seconds() const { return frame_shift_seconds_; }
  const std::string& source_id() const { return source_id_; }
  void set_source_id(std::string id) { source_id_ = std::move(id); }

  // Rows [begin, end).
  FeatureMatrix Slice(std::size_t begin, std::size_t end) const;

  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    return a.num_frames_ == b.num_frames_ && a.dim_ == b.dim_ &&
           a.values_ == b.values_;
  }

 private:
  std::size_t num_frames_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> values_;
  double frame_shift_seconds_ = 0.01;
  std::string source_id_;
};

// Stacks the rows of all inputs in order. Inputs must share one dimension.
FeatureMatrix ConcatFrames(std::span<const FeatureMatrix> parts);

struct FeatureConfig {
  double frame_length_seconds = 0.025;
  double frame_shift_seconds = 0.010;
  int num_mel_filters = 40;
  int num_cepstra = 40;
  double pre_emphasis = 0.97;
  double low_freq_hz = 20.0;
  bool apply_cmvn = true;

  int frame_length_samples(int rate) const;
  int frame_shift_samples(int rate) const;
  // Throws InvalidArgument when the invariants do not hold.
  void Validate() const;
};

// 1 + floor((num_samples - frame_len) / shift), or 0 when shorter than one
// frame.
std::size_t NumFrames(std::size_t num_samples, int frame_len, int frame_shift);

// MFCC pipeline: per-frame pre-emphasis, periodic Hann window, power
// spectrum on the next power-of-two FFT, HTK mel filterbank
// (2595 * log10(1 + f / 700)), log, orthonormal DCT-II. Optional
// per-utterance CMVN.
FeatureMatrix ExtractMfcc(const AudioClip& clip, const FeatureConfig& config);

// Per-dimension mean subtraction; dimensions with nonzero spread are also
// scaled to unit variance.
FeatureMatrix ApplyCmvn(const FeatureMatrix& m);

// KWSF v1: "KWSF" 0x01, u32 T, u32 D, T*D little-endian float32 row-major.
void WriteFeatures(const FeatureMatrix& m, const std::filesystem::path& path);
std::string EncodeFeatures(const FeatureMatrix& m);
// Reads KWSF, or comma-separated text (one frame per line) for ".csv".
FeatureMatrix ReadFeatures(const std::filesystem::path& path);
FeatureMatrix DecodeFeatures(std::string_view bytes, const std::string& context);

enum class EmbeddingKind { kStats = 0, kExternal = 1 };

struct SpeakerEmbedding {
  std::vector<double> vector;  // unit L2 norm
  EmbeddingKind kind = EmbeddingKind::kStats;

  friend bool operator==(const SpeakerEmbedding&,
                         const SpeakerEmbedding&) = default;
};

// [per-dim mean || per-dim std] over frames, L2-normalized. Needs >= 2
// frames.
SpeakerEmbedding SpeakerStatsEmbedding(const FeatureMatrix& m);

// Wraps an externally computed embedding, normalizing it to unit length.
SpeakerEmbedding MakeExternalEmbedding(std::vector<double> vector);

double CosineSimilarity(std::span<const double> a, std::span<const double> b);

}  // namespace autokws

#endif  // AUTOKWS_FEATURES_H_
