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

#include "autokws/detector.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "autokws/error.h"

namespace autokws {

void DetectorConfig::Validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(qbe_threshold_gamma1) || !in_unit(sv_threshold_gamma2)) {
    throw Error(ErrorCode::kInvalidArgument, "thresholds must lie in [0,1]");
  }
  if (!in_unit(calibration_floor) || !in_unit(calibration_ceiling) ||
      calibration_floor > calibration_ceiling) {
    throw Error(ErrorCode::kInvalidArgument,
                "calibration clamp must satisfy 0 <= floor <= ceiling <= 1");
  }
  if (!(calibration_margin > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "calibration margin must be > 0");
  }
  if (!(scan_window_factor > 0.0) || !(scan_hop_factor > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "scan factors must be > 0");
  }
  dtw.Validate();
  feature.Validate();
}

Decision ApplyGates(const MatchResult& qbe,
                    const std::function<double()>& sv_score, double gamma1,
                    double gamma2, bool use_sv_stage) {
  Decision d;
  d.qbe = qbe;
  if (qbe.similarity < gamma1) return d;
  if (!use_sv_stage) {
    d.wake = true;
    return d;
  }
  d.sv_similarity = sv_score();
  d.wake = *d.sv_similarity >= gamma2;
  return d;
}

double EffectiveQbeThreshold(const EnrollmentProfile& profile,
                             const DetectorConfig& config) {
  return profile.qbe_calibrated && config.calibrate_qbe_threshold
             ? profile.qbe_threshold
             : config.qbe_threshold_gamma1;
}

double EffectiveSvThreshold(const EnrollmentProfile& profile,
                            const DetectorConfig& config) {
  return profile.sv_calibrated ? profile.sv_threshold
                               : config.sv_threshold_gamma2;
}

MatchResult MatchTemplate(const FeatureMatrix& templ, const FeatureMatrix& test,
                          const DetectorConfig& config) {
  if (config.match_mode == MatchMode::kSlnDtw) {
    return SlnDtw(templ, test, config.dtw);
  }
  const double len = static_cast<double>(templ.num_frames());
  const auto window = static_cast<std::size_t>(
      std::max(1.0, std::round(config.scan_window_factor * len)));
  const auto hop = static_cast<std::size_t>(
      std::max(1.0, std::round(config.scan_hop_factor * len)));
  return ScanSegments(templ, test, config.dtw, window, hop);
}

Decision Decide(const EnrollmentProfile& profile, const TestItem& item,
                const DetectorConfig& config) {
  FeatureMatrix qbe_features;
  FeatureMatrix sv_features;
  if (const auto* clip = std::get_if<AudioClip>(&item.input)) {
    if (profile.feature_kind != FeatureKind::kBuiltinMfcc) {
      throw Error(ErrorCode::kInvalidArgument,
                  "profile expects external features but test item '" +
                      item.utt_id + "' is audio");
    }
    FeatureConfig raw_cfg = config.feature;
    raw_cfg.apply_cmvn = false;
    sv_features = ExtractMfcc(*clip, raw_cfg);
    qbe_features =
        config.feature.apply_cmvn ? ApplyCmvn(sv_features) : sv_features;
  } else {
    qbe_features = std::get<FeatureMatrix>(item.input);
    sv_features = qbe_features;
  }
  if (qbe_features.dim() != profile.templ.dim()) {
    throw Error(ErrorCode::kDimMismatch,
                "test '" + item.utt_id + "' has dim " +
                    std::to_string(qbe_features.dim()) + ", profile template " +
                    std::to_string(profile.templ.dim()));
  }

  const MatchResult qbe = MatchTemplate(profile.templ, qbe_features, config);
  auto sv_score = [&]() -> double {
    if (profile.embedding.kind == EmbeddingKind::kExternal) {
      if (!item.external_embedding) {
        throw Error(ErrorCode::kInvalidArgument,
                    "profile uses an external embedding; test '" +
                        item.utt_id + "' supplies none");
      }
      const SpeakerEmbedding e = MakeExternalEmbedding(*item.external_embedding);
      return CosineSimilarity(profile.embedding.vector, e.vector);
    }
    const SpeakerEmbedding e = SpeakerStatsEmbedding(sv_features);
    return CosineSimilarity(profile.embedding.vector, e.vector);
  };
  Decision d = ApplyGates(qbe, sv_score, EffectiveQbeThreshold(profile, config),
                          EffectiveSvThreshold(profile, config),
                          config.use_sv_stage);
  d.utt_id = item.utt_id;
  return d;
}

namespace {

Decision DecideOrAnnotate(const EnrollmentProfile& profile,
                          const TestItem& item, const DetectorConfig& config) {
  try {
    return Decide(profile, item, config);
  } catch (const std::exception& e) {
    Decision d;
    d.utt_id = item.utt_id;
    d.error = e.what();
    return d;
  }
}

}  // namespace

BatchResult PredictBatch(const EnrollmentProfile& profile,
                         const std::vector<TestItem>& items,
                         const DetectorConfig& config, int jobs) {
  if (items.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no test items to predict");
  }
  const auto t0 = std::chrono::steady_clock::now();
  BatchResult out;
  out.decisions.resize(items.size());
  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1,
                              items.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      out.decisions[i] = DecideOrAnnotate(profile, items[i], config);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < items.size(); i = next++) {
          out.decisions[i] = DecideOrAnnotate(profile, items[i], config);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  out.wall_seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
  return out;
}

}  // namespace autokws
