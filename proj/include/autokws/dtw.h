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

#ifndef AUTOKWS_DTW_H_
#define AUTOKWS_DTW_H_

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "autokws/features.h"

namespace autokws {

enum class FrameDistance { kCosine, kEuclidean };

struct DtwConfig {
  FrameDistance distance = FrameDistance::kCosine;
  bool normalize_by_path_length = true;
  // Sakoe-Chiba radius for full-sequence DTW. The effective radius is
  // max(band_radius, |T_a - T_b|) so the end cell stays reachable.
  std::optional<int> band_radius;

  void Validate() const;
};

// similarity = 1 - clamp(normalized_distance, 0, 1); frames are inclusive
// bounds in the test sequence.
struct MatchResult {
  double similarity = 0.0;
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;
  double normalized_distance = 0.0;

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

double SimilarityFromDistance(double normalized_distance);

// Cosine distance is 1 - cos(u, v) in [0, 2]; identical frames give exactly
// 0 and a frame with norm < 1e-12 is at distance 1 from everything else.
double FrameDistanceValue(std::span<const float> u, std::span<const float> v,
                          FrameDistance kind);

using WarpingPath = std::vector<std::pair<std::size_t, std::size_t>>;

struct Alignment {
  double cost = 0.0;        // accumulated cost along the path
  std::size_t length = 0;   // cells on the path
  WarpingPath path;         // (row in a, row in b), in order

  double normalized() const { return cost / static_cast<double>(length); }
};

// Full-sequence DTW with steps (i-1,j), (i,j-1), (i-1,j-1). With
// normalize_by_path_length the path minimizing average cell cost is chosen.
Alignment DtwAlign(const FeatureMatrix& a, const FeatureMatrix& b,
                   const DtwConfig& config);
double DtwFull(const FeatureMatrix& a, const FeatureMatrix& b,
               const DtwConfig& config);

// Subsequence DTW with segmental local normalization: the template must be
// traversed completely, entry and exit along the test axis are free, and
// the path minimizing average cell cost wins. Ties go to the smallest start
// frame, then the smallest end frame. The band is not applied.
MatchResult SlnDtw(const FeatureMatrix& templ, const FeatureMatrix& test,
                   const DtwConfig& config);

// Fixed-window scan: normalized DtwFull of the template against each window
// of `window_frames` test frames at `hop_frames` spacing (the last window is
// aligned to the end of the test). Returns the best window.
MatchResult ScanSegments(const FeatureMatrix& templ, const FeatureMatrix& test,
                         const DtwConfig& config, std::size_t window_frames,
                         std::size_t hop_frames);

// Exhaustive enumeration of warping paths; exponential, so limited to
// T_a * T_b <= kDtwOracleMaxCells. Returns the minimal (normalized when
// config.normalize_by_path_length or subsequence) cost.
inline constexpr std::size_t kDtwOracleMaxCells = 64;
double DtwOracle(const FeatureMatrix& a, const FeatureMatrix& b,
                 bool subsequence, const DtwConfig& config);

}  // namespace autokws

#endif  // AUTOKWS_DTW_H_
