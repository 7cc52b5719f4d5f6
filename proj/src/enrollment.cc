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

#include "autokws/enrollment.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <sys/stat.h>

#include "autokws/dtw.h"
#include "autokws/error.h"
#include "autokws/file_util.h"

namespace autokws {

namespace fs = std::filesystem;

namespace {

void CheckEnrollmentSet(std::span<const FeatureMatrix> features) {
  if (features.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no enrollment features");
  }
  for (const auto& f : features) {
    if (f.dim() != features.front().dim()) {
      throw Error(ErrorCode::kDimMismatch,
                  "enrollment dims " + std::to_string(f.dim()) + " vs " +
                      std::to_string(features.front().dim()));
    }
    if (f.empty()) {
      throw Error(ErrorCode::kEmptySequence, "enrollment item has no frames");
    }
  }
}

DtwConfig Normalized(DtwConfig dtw) {
  dtw.normalize_by_path_length = true;
  return dtw;
}

}  // namespace

std::size_t SelectMedoid(std::span<const FeatureMatrix> features,
                         const DtwConfig& dtw) {
  CheckEnrollmentSet(features);
  const std::size_t n = features.size();
  if (n == 1) return 0;
  const DtwConfig cfg = Normalized(dtw);
  std::vector<double> row_sum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = DtwFull(features[i], features[j], cfg);
      row_sum[i] += d;
      row_sum[j] += d;
    }
  }
  return static_cast<std::size_t>(
      std::min_element(row_sum.begin(), row_sum.end()) - row_sum.begin());
}

FeatureMatrix AverageTemplate(std::span<const FeatureMatrix> features,
                              const DtwConfig& dtw) {
  const std::size_t medoid_index = SelectMedoid(features, dtw);
  const FeatureMatrix& medoid = features[medoid_index];
  const std::size_t T = medoid.num_frames();
  const std::size_t D = medoid.dim();

  std::vector<double> sum(T * D);
  std::vector<std::size_t> count(T, 1);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t d = 0; d < D; ++d) sum[t * D + d] = medoid(t, d);
  }
  for (std::size_t k = 0; k < features.size(); ++k) {
    if (k == medoid_index) continue;
    const Alignment al = DtwAlign(features[k], medoid, dtw);
    for (const auto& [src, dst] : al.path) {
      const auto row = features[k].row(src);
      for (std::size_t d = 0; d < D; ++d) sum[dst * D + d] += row[d];
      ++count[dst];
    }
  }
  FeatureMatrix out(T, D, medoid.frame_shift_seconds(), medoid.source_id());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t d = 0; d < D; ++d) {
      out(t, d) = static_cast<float>(sum[t * D + d] /
                                     static_cast<double>(count[t]));
    }
  }
  return out;
}

double ThresholdFromMinSimilarity(double min_similarity,
                                  const DetectorConfig& config) {
  return std::clamp(config.calibration_margin * min_similarity,
                    config.calibration_floor, config.calibration_ceiling);
}

double CalibrateThreshold(std::span<const FeatureMatrix> enroll_features,
                          const DetectorConfig& config) {
  CheckEnrollmentSet(enroll_features);
  if (enroll_features.size() < 2) return config.calibration_floor;
  double min_sim = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < enroll_features.size(); ++i) {
    for (std::size_t j = 0; j < enroll_features.size(); ++j) {
      if (i == j) continue;
      const MatchResult m =
          SlnDtw(enroll_features[i], enroll_features[j], config.dtw);
      min_sim = std::min(min_sim, m.similarity);
    }
  }
  return ThresholdFromMinSimilarity(min_sim, config);
}

double CalibrateSvThreshold(std::span<const FeatureMatrix> raw_features) {
  constexpr double kFloor = 0.5;
  if (raw_features.size() < 2) return kFloor;
  std::vector<SpeakerEmbedding> emb;
  emb.reserve(raw_features.size());
  for (const auto& f : raw_features) emb.push_back(SpeakerStatsEmbedding(f));
  std::vector<double> sims;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    for (std::size_t j = i + 1; j < emb.size(); ++j) {
      sims.push_back(CosineSimilarity(emb[i].vector, emb[j].vector));
    }
  }
  double mean = 0.0;
  for (double s : sims) mean += s;
  mean /= static_cast<double>(sims.size());
  double var = 0.0;
  for (double s : sims) var += (s - mean) * (s - mean);
  const double stddev = std::sqrt(var / static_cast<double>(sims.size()));
  return std::min(1.0, std::max(kFloor, mean - 2.0 * stddev));
}

namespace {

void CheckItemCount(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "no enrollment items");
  if (n > kMaxEnrollmentItems) {
    throw Error(ErrorCode::kInvalidArgument,
                "at most " + std::to_string(kMaxEnrollmentItems) +
                    " enrollment items supported, got " + std::to_string(n));
  }
}

}  // namespace

EnrollmentProfile BuildProfile(std::span<const AudioClip> clips,
                               const DetectorConfig& config,
                               const ProfileOptions& options) {
  config.Validate();
  CheckItemCount(clips.size());
  FeatureConfig raw_cfg = config.feature;
  raw_cfg.apply_cmvn = false;

  std::vector<FeatureMatrix> raw, qbe;
  raw.reserve(clips.size());
  qbe.reserve(clips.size());
  for (const auto& clip : clips) {
    raw.push_back(ExtractMfcc(clip, raw_cfg));
    qbe.push_back(config.feature.apply_cmvn ? ApplyCmvn(raw.back())
                                            : raw.back());
  }

  AudioClip spliced = clips.front();
  for (std::size_t i = 1; i < clips.size(); ++i) {
    spliced = Splice(spliced, clips[i]);
  }

  EnrollmentProfile p;
  p.speaker_id = options.speaker_id;
  p.created_at = options.created_at;
  p.feature_kind = FeatureKind::kBuiltinMfcc;
  p.templ = AverageTemplate(qbe, config.dtw);
  p.templ.set_source_id(options.speaker_id);
  p.embedding = SpeakerStatsEmbedding(ExtractMfcc(spliced, raw_cfg));
  if (config.calibrate_qbe_threshold) {
    p.qbe_threshold = CalibrateThreshold(qbe, config);
    p.qbe_calibrated = true;
  } else {
    p.qbe_threshold = config.qbe_threshold_gamma1;
  }
  p.sv_threshold = CalibrateSvThreshold(raw);
  p.sv_calibrated = true;
  return p;
}

EnrollmentProfile BuildProfileFromFeatures(
    std::span<const FeatureMatrix> features, const DetectorConfig& config,
    const ProfileOptions& options) {
  config.Validate();
  CheckItemCount(features.size());
  CheckEnrollmentSet(features);

  EnrollmentProfile p;
  p.speaker_id = options.speaker_id;
  p.created_at = options.created_at;
  p.feature_kind = FeatureKind::kExternal;
  p.templ = AverageTemplate(features, config.dtw);
  p.templ.set_source_id(options.speaker_id);
  p.embedding = SpeakerStatsEmbedding(ConcatFrames(features));
  if (config.calibrate_qbe_threshold) {
    p.qbe_threshold = CalibrateThreshold(features, config);
    p.qbe_calibrated = true;
  } else {
    p.qbe_threshold = config.qbe_threshold_gamma1;
  }
  p.sv_threshold = CalibrateSvThreshold(features);
  p.sv_calibrated = true;
  return p;
}

void AttachExternalEmbedding(EnrollmentProfile& profile,
                             std::vector<double> embedding,
                             const DetectorConfig& config) {
  profile.embedding = MakeExternalEmbedding(std::move(embedding));
  profile.sv_threshold = config.sv_threshold_gamma2;
  profile.sv_calibrated = false;
}

namespace {

constexpr std::string_view kProfileMagic = "KWSP";
constexpr std::uint8_t kProfileVersion = 1;

}  // namespace

// Layout: magic, u8 version, u32 id length + id bytes, u8 feature kind,
// u8 flags (bit0 qbe calibrated, bit1 sv calibrated), i64 created_at,
// u32 length + KWSF template, u8 embedding kind, u32 dim + f64 values,
// f64 qbe threshold, f64 sv threshold.
std::string EncodeProfile(const EnrollmentProfile& p) {
  std::string out(kProfileMagic);
  out.push_back(static_cast<char>(kProfileVersion));
  AppendU32(out, static_cast<std::uint32_t>(p.speaker_id.size()));
  out += p.speaker_id;
  out.push_back(static_cast<char>(p.feature_kind));
  out.push_back(static_cast<char>((p.qbe_calibrated ? 1 : 0) |
                                  (p.sv_calibrated ? 2 : 0)));
  AppendU64(out, static_cast<std::uint64_t>(p.created_at));
  const std::string templ = EncodeFeatures(p.templ);
  AppendU32(out, static_cast<std::uint32_t>(templ.size()));
  out += templ;
  out.push_back(static_cast<char>(p.embedding.kind));
  AppendU32(out, static_cast<std::uint32_t>(p.embedding.vector.size()));
  for (double v : p.embedding.vector) AppendF64(out, v);
  AppendF64(out, p.qbe_threshold);
  AppendF64(out, p.sv_threshold);
  return out;
}

EnrollmentProfile DecodeProfile(std::string_view bytes,
                                const std::string& context) {
  ByteReader r(bytes, context);
  if (bytes.size() < 5 || r.Bytes(4) != kProfileMagic) {
    throw Error(ErrorCode::kFormat, context + ": missing KWSP magic");
  }
  const std::uint8_t version = r.U8();
  if (version != kProfileVersion) {
    throw Error(ErrorCode::kFormat, context + ": unsupported profile version " +
                                        std::to_string(version));
  }
  EnrollmentProfile p;
  p.speaker_id = std::string(r.Bytes(r.U32()));
  const std::uint8_t kind = r.U8();
  if (kind > 1) throw Error(ErrorCode::kFormat, context + ": bad feature kind");
  p.feature_kind = static_cast<FeatureKind>(kind);
  const std::uint8_t flags = r.U8();
  p.qbe_calibrated = (flags & 1) != 0;
  p.sv_calibrated = (flags & 2) != 0;
  p.created_at = static_cast<std::int64_t>(r.U64());
  const std::uint32_t templ_len = r.U32();
  const std::string_view templ = r.Bytes(templ_len);
  p.templ = DecodeFeatures(templ, context + " (template)");
  if (templ.size() != 13 + p.templ.values().size() * 4) {
    throw Error(ErrorCode::kFormat, context + ": template length mismatch");
  }
  p.templ.set_source_id(p.speaker_id);
  const std::uint8_t emb_kind = r.U8();
  if (emb_kind > 1) {
    throw Error(ErrorCode::kFormat, context + ": bad embedding kind");
  }
  p.embedding.kind = static_cast<EmbeddingKind>(emb_kind);
  const std::uint32_t dim = r.U32();
  if (static_cast<std::uint64_t>(dim) * 8 > r.remaining()) {
    throw Error(ErrorCode::kFormat, context + ": embedding exceeds payload");
  }
  p.embedding.vector.resize(dim);
  for (auto& v : p.embedding.vector) v = r.F64();
  p.qbe_threshold = r.F64();
  p.sv_threshold = r.F64();
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kFormat, context + ": trailing bytes");
  }
  for (double t : {p.qbe_threshold, p.sv_threshold}) {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw Error(ErrorCode::kFormat, context + ": threshold outside [0,1]");
    }
  }
  return p;
}

void SaveProfile(const EnrollmentProfile& profile, const fs::path& path) {
  WriteFileAtomic(path, EncodeProfile(profile));
}

EnrollmentProfile LoadProfile(const fs::path& path) {
  return DecodeProfile(ReadFileBytes(path), path.string());
}

EnrollmentInput LoadEnrollmentDir(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::kIo, "enrollment directory not found: " +
                                    dir.string());
  }
  std::vector<fs::path> wavs, feats;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext == ".wav") wavs.push_back(entry.path());
    if (ext == ".kwsf" || ext == ".csv") feats.push_back(entry.path());
  }
  if (!wavs.empty() && !feats.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                dir.string() + " mixes audio and feature files");
  }
  if (wavs.empty() && feats.empty()) {
    throw Error(ErrorCode::kEmptyInput,
                "no .wav/.kwsf/.csv files in " + dir.string());
  }
  std::sort(wavs.begin(), wavs.end());
  std::sort(feats.begin(), feats.end());
  EnrollmentInput in;
  for (const auto& p : wavs.empty() ? feats : wavs) {
    struct stat st{};
    if (::stat(p.c_str(), &st) == 0) {
      in.latest_mtime = std::max<std::int64_t>(in.latest_mtime, st.st_mtime);
    }
  }
  for (const auto& p : wavs) in.clips.push_back(LoadWav(p));
  for (const auto& p : feats) in.features.push_back(ReadFeatures(p));
  return in;
}

}  // namespace autokws
