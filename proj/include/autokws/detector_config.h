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

#ifndef AUTOKWS_DETECTOR_CONFIG_H_
#define AUTOKWS_DETECTOR_CONFIG_H_

#include "autokws/dtw.h"
#include "autokws/features.h"

namespace autokws {

enum class MatchMode { kSlnDtw, kSegmentScan };

struct DetectorConfig {
  // Stage-1 alarm threshold on DTW similarity. Used when the profile carries
  // no calibrated threshold.
  double qbe_threshold_gamma1 = 0.80;
  // Stage-2 cosine threshold for externally supplied speaker embeddings.
  double sv_threshold_gamma2 = 0.83;
  bool use_sv_stage = true;
  MatchMode match_mode = MatchMode::kSlnDtw;
  DtwConfig dtw;
  FeatureConfig feature;

  // Enrollment: derive the stage-1 threshold from intra-enrollment DTW
  // similarities instead of using qbe_threshold_gamma1.
  bool calibrate_qbe_threshold = true;
  double calibration_margin = 0.9;
  double calibration_floor = 0.45;
  double calibration_ceiling = 0.60;

  // Segment scan geometry, as multiples of the template length in frames.
  double scan_window_factor = 1.5;
  double scan_hop_factor = 0.25;

  void Validate() const;
};

}  // namespace autokws

#endif  // AUTOKWS_DETECTOR_CONFIG_H_
