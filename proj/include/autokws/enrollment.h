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

#ifndef AUTOKWS_ENROLLMENT_H_
#define AUTOKWS_ENROLLMENT_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "autokws/audio_io.h"
#include "autokws/detector_config.h"
#include "autokws/features.h"

namespace autokws {

enum class FeatureKind { kBuiltinMfcc = 0, kExternal = 1 };

inline constexpr std::size_t kMaxEnrollmentItems = 10;

struct EnrollmentProfile {
  std::string speaker_id;
  FeatureMatrix templ;
  SpeakerEmbedding embedding;
  double qbe_threshold = 0.80;
  double sv_threshold = 0.83;
  // When false the detector falls back to the config thresholds.
  bool qbe_calibrated = false;
  bool sv_calibrated = false;
  FeatureKind feature_kind = FeatureKind::kBuiltinMfcc;
  std::int64_t created_at = 0;  // unix seconds

  friend bool operator==(const EnrollmentProfile&,
                         const EnrollmentProfile&) = default;
};

// Index minimizing the sum of normalized DTW distances to all other inputs;
// lowest index wins ties.
std::size_t SelectMedoid(std::span<const FeatureMatrix> features,
                         const DtwConfig& dtw);

// DTW-aligns every input to the medoid and replaces each medoid frame by the
// mean of itself and every frame aligned to it. Output length equals the
// medoid's length.
FeatureMatrix AverageTemplate(std::span<const FeatureMatrix> features,
                              const DtwConfig& dtw);

// margin * min(pairwise SLN-DTW similarity), clamped to [floor, ceiling].
// A single enrollment yields the floor.
double CalibrateThreshold(std::span<const FeatureMatrix> enroll_features,
                          const DetectorConfig& config);
double ThresholdFromMinSimilarity(double min_similarity,
                                  const DetectorConfig& config);

// Stage-2 threshold for the statistics embedding:
// max(0.5, mean - 2 * stddev) of pairwise cosine similarities between
// per-utterance embeddings, capped at 1.
double CalibrateSvThreshold(std::span<const FeatureMatrix> raw_features);

struct ProfileOptions {
  std::string speaker_id;
  std::int64_t created_at = 0;
};

// Audio route: built-in MFCC features for the template, statistics
// embedding over the spliced enrollment audio.
EnrollmentProfile BuildProfile(std::span<const AudioClip> clips,
                               const DetectorConfig& config,
                               const ProfileOptions& options);

// Feature route for externally computed features; the embedding is taken
// over the concatenated frames.
EnrollmentProfile BuildProfileFromFeatures(
    std::span<const FeatureMatrix> features, const DetectorConfig& config,
    const ProfileOptions& options);

// Replaces the embedding with an externally computed one; stage 2 then uses
// the configured gamma2.
void AttachExternalEmbedding(EnrollmentProfile& profile,
                             std::vector<double> embedding,
                             const DetectorConfig& config);

// "KWSP" profile container, version 1.
std::string EncodeProfile(const EnrollmentProfile& profile);
EnrollmentProfile DecodeProfile(std::string_view bytes,
                                const std::string& context);
void SaveProfile(const EnrollmentProfile& profile,
                 const std::filesystem::path& path);
EnrollmentProfile LoadProfile(const std::filesystem::path& path);

// Loads an enrollment directory: *.wav clips, or *.kwsf / *.csv features.
struct EnrollmentInput {
  std::vector<AudioClip> clips;
  std::vector<FeatureMatrix> features;
  std::int64_t latest_mtime = 0;
};
EnrollmentInput LoadEnrollmentDir(const std::filesystem::path& dir);

}  // namespace autokws

#endif  // AUTOKWS_ENROLLMENT_H_
