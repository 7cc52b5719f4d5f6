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

#ifndef AUTOKWS_DETECTOR_H_
#define AUTOKWS_DETECTOR_H_

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "autokws/audio_io.h"
#include "autokws/detector_config.h"
#include "autokws/dtw.h"
#include "autokws/enrollment.h"
#include "autokws/features.h"

namespace autokws {

struct TestItem {
  std::string utt_id;
  std::variant<AudioClip, FeatureMatrix> input;
  // Required when the profile carries an external embedding.
  std::optional<std::vector<double>> external_embedding;
};

struct Decision {
  std::string utt_id;
  bool wake = false;
  MatchResult qbe;
  // Present iff stage 1 fired and the SV stage is enabled.
  std::optional<double> sv_similarity;
  // Set when the item could not be scored; such items never wake.
  std::optional<std::string> error;
};

// The two-stage gate. `sv_score` is invoked only when stage 1 fires and the
// SV stage is enabled.
Decision ApplyGates(const MatchResult& qbe,
                    const std::function<double()>& sv_score, double gamma1,
                    double gamma2, bool use_sv_stage);

// Effective thresholds: calibrated profile values win over the config, unless
// config.calibrate_qbe_threshold is off (stage 1 then uses gamma1).
double EffectiveQbeThreshold(const EnrollmentProfile& profile,
                             const DetectorConfig& config);
double EffectiveSvThreshold(const EnrollmentProfile& profile,
                            const DetectorConfig& config);

// Stage-1 match of the profile template against test features.
MatchResult MatchTemplate(const FeatureMatrix& templ, const FeatureMatrix& test,
                          const DetectorConfig& config);

Decision Decide(const EnrollmentProfile& profile, const TestItem& item,
                const DetectorConfig& config);

struct BatchResult {
  std::vector<Decision> decisions;  // same order as the input
  double wall_seconds = 0.0;
};

// Per-item failures become wake=false decisions carrying the error text.
// `jobs` > 1 fans items out across threads; results are order-preserving.
BatchResult PredictBatch(const EnrollmentProfile& profile,
                         const std::vector<TestItem>& items,
                         const DetectorConfig& config, int jobs = 1);

}  // namespace autokws

#endif  // AUTOKWS_DETECTOR_H_
