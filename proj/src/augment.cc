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

#include "autokws/augment.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "autokws/error.h"
#include "autokws/file_util.h"
#include "autokws/task_layout.h"
#include "fft.h"

namespace autokws {

namespace fs = std::filesystem;

AudioClip AddNoise(const AudioClip& clip, const AudioClip& noise, double snr_db,
                   std::uint64_t seed) {
  if (clip.sample_rate_hz() != noise.sample_rate_hz()) {
    throw Error(ErrorCode::kRateMismatch, "noise sample rate differs");
  }
  if (noise.empty()) throw Error(ErrorCode::kSilentNoise, "empty noise clip");
  if (!std::isfinite(snr_db)) {
    throw Error(ErrorCode::kInvalidArgument, "SNR must be finite");
  }
  const double signal_power = clip.MeanPower();
  if (!(signal_power > 0.0)) {
    throw Error(ErrorCode::kSilentSignal,
                "clip '" + clip.source_id() + "' is silent; SNR undefined");
  }
  std::mt19937_64 rng(seed);
  const std::size_t offset =
      std::uniform_int_distribution<std::size_t>(0, noise.size() - 1)(rng);
  const auto n = noise.samples();
  std::vector<double> segment(clip.size());
  for (std::size_t i = 0; i < segment.size(); ++i) {
    segment[i] = n[(offset + i) % n.size()];
  }
  double noise_power = 0.0;
  for (double v : segment) noise_power += v * v;
  noise_power /= static_cast<double>(segment.size());
  if (!(noise_power > 0.0)) {
    throw Error(ErrorCode::kSilentNoise,
                "noise segment from '" + noise.source_id() + "' is silent");
  }
  const double gain =
      std::sqrt(signal_power / (noise_power * std::pow(10.0, snr_db / 10.0)));
  std::vector<double> out(clip.samples().begin(), clip.samples().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += gain * segment[i];
  return AudioClip(std::move(out), clip.sample_rate_hz(), clip.source_id());
}

AudioClip AddReverb(const AudioClip& clip, const AudioClip& rir,
                    double mixture_weight) {
  if (!(mixture_weight >= 0.0 && mixture_weight <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mixture weight must be in [0,1]");
  }
  if (clip.sample_rate_hz() != rir.sample_rate_hz()) {
    throw Error(ErrorCode::kRateMismatch, "RIR sample rate differs");
  }
  if (!(rir.MeanPower() > 0.0)) {
    throw Error(ErrorCode::kSilentRir, "RIR '" + rir.source_id() + "' is silent");
  }
  std::vector<double> wet = internal::Convolve(clip.samples(), rir.samples());
  wet.resize(clip.size());
  double wet_power = 0.0;
  for (double v : wet) wet_power += v * v;
  const double dry_rms = clip.Rms();
  const double wet_rms =
      wet.empty() ? 0.0 : std::sqrt(wet_power / static_cast<double>(wet.size()));
  const double wet_gain = wet_rms > 0.0 ? dry_rms / wet_rms : 0.0;

  std::vector<double> out(clip.size());
  const auto dry = clip.samples();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - mixture_weight) * dry[i] +
             mixture_weight * (wet[i] * wet_gain);
  }
  return AudioClip(std::move(out), clip.sample_rate_hz(), clip.source_id());
}

AudioClip PerturbVolume(const AudioClip& clip, double scale) {
  if (!(scale >= kMinVolumeScale && scale <= kMaxVolumeScale)) {
    throw Error(ErrorCode::kInvalidScale,
                fmt::format("volume scale {} outside [{}, {}]", scale,
                            kMinVolumeScale, kMaxVolumeScale));
  }
  return ApplyGain(clip, scale);
}

double MeasureSnrDb(const AudioClip& clean, const AudioClip& mixed) {
  if (clean.size() != mixed.size()) {
    throw Error(ErrorCode::kInvalidArgument, "length mismatch");
  }
  double noise = 0.0;
  const auto a = clean.samples();
  const auto b = mixed.samples();
  for (std::size_t i = 0; i < a.size(); ++i) {
    noise += (b[i] - a[i]) * (b[i] - a[i]);
  }
  noise /= static_cast<double>(a.size());
  return 10.0 * std::log10(clean.MeanPower() / noise);
}

std::string_view AugmentOpName(AugmentOp op) {
  switch (op) {
    case AugmentOp::kSplice: return "splice";
    case AugmentOp::kAddNoise: return "add_noise";
    case AugmentOp::kAddReverb: return "add_reverb";
    case AugmentOp::kPerturbVolume: return "perturb_volume";
  }
  return "unknown";
}

void AugmentSpec::Validate() const {
  const bool noise = op == AugmentOp::kAddNoise;
  const bool reverb = op == AugmentOp::kAddReverb;
  const bool volume = op == AugmentOp::kPerturbVolume;
  const bool splice = op == AugmentOp::kSplice;
  if (snr_db.has_value() != noise || noise_path.has_value() != noise ||
      mixture_weight.has_value() != reverb || rir_path.has_value() != reverb ||
      scale.has_value() != volume || partner_path.has_value() != splice ||
      (append_partner && !splice)) {
    throw Error(ErrorCode::kInvalidArgument,
                "augment spec fields do not match op " +
                    std::string(AugmentOpName(op)));
  }
  if (reverb && !(*mixture_weight >= 0.0 && *mixture_weight <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mixture weight outside [0,1]");
  }
  if (volume && !(*scale > 0.0)) {
    throw Error(ErrorCode::kInvalidScale, "scale must be positive");
  }
}

double AugmentPreset::TotalMultiplier() const {
  double total = 1.0;
  for (const auto& e : entries) total += e.corpus_fraction;
  return total;
}

bool AugmentPreset::NeedsNoise() const {
  return std::any_of(entries.begin(), entries.end(), [](const PresetEntry& e) {
    return e.op == AugmentOp::kAddNoise;
  });
}

bool AugmentPreset::NeedsRir() const {
  return std::any_of(entries.begin(), entries.end(), [](const PresetEntry& e) {
    return e.op == AugmentOp::kAddReverb;
  });
}

AugmentPreset TestsetExpansionPreset() {
  AugmentPreset p{"testset", {}};
  p.entries.push_back({.op = AugmentOp::kSplice, .tag = "splice"});
  p.entries.push_back({.op = AugmentOp::kAddNoise,
                       .snr_min_db = 5.0,
                       .snr_max_db = 25.0,
                       .tag = "noise"});
  p.entries.push_back(
      {.op = AugmentOp::kAddReverb, .mixture_weight = 0.5, .tag = "reverb"});
  p.entries.push_back({.op = AugmentOp::kPerturbVolume,
                       .scale_min = 0.5,
                       .scale_max = 2.0,
                       .tag = "volume"});
  return p;
}

AugmentPreset SvTrainingPreset() {
  AugmentPreset p{"sv_training", {}};
  p.entries.push_back({.op = AugmentOp::kAddReverb,
                       .corpus_fraction = 0.5,
                       .mixture_weight = 0.5,
                       .source_subdir = "smallroom",
                       .tag = "smallroom"});
  p.entries.push_back({.op = AugmentOp::kAddReverb,
                       .corpus_fraction = 0.5,
                       .mixture_weight = 0.5,
                       .source_subdir = "mediumroom",
                       .tag = "mediumroom"});
  p.entries.push_back({.op = AugmentOp::kAddNoise,
                       .corpus_fraction = 0.5,
                       .snr_choices = {15.0, 10.0, 5.0},
                       .source_subdir = "noise",
                       .tag = "noise"});
  p.entries.push_back({.op = AugmentOp::kAddNoise,
                       .corpus_fraction = 0.5,
                       .snr_choices = {20.0, 15.0, 10.0},
                       .source_subdir = "music",
                       .tag = "music"});
  return p;
}

AugmentPreset VolumeOnlyPreset() {
  AugmentPreset p{"volume", {}};
  p.entries.push_back({.op = AugmentOp::kPerturbVolume, .tag = "volume"});
  return p;
}

AugmentPreset PresetByName(const std::string& name) {
  if (name == "testset") return TestsetExpansionPreset();
  if (name == "sv_training") return SvTrainingPreset();
  if (name == "volume") return VolumeOnlyPreset();
  throw Error(ErrorCode::kInvalidArgument, "unknown augmentation preset '" +
                                               name + "'");
}

namespace {

std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view id,
                         std::uint64_t k) {
  const std::uint64_t h = Fnv1a64(id);
  std::seed_seq ss{static_cast<std::uint32_t>(seed),
                   static_cast<std::uint32_t>(seed >> 32),
                   static_cast<std::uint32_t>(h),
                   static_cast<std::uint32_t>(h >> 32),
                   static_cast<std::uint32_t>(k)};
  std::mt19937_64 g(ss);
  return g();
}

}  // namespace

std::vector<std::vector<std::size_t>> PlanAugmentation(
    std::size_t num_items, const AugmentPreset& preset, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> plan;
  for (std::size_t e = 0; e < preset.entries.size(); ++e) {
    const double fraction = preset.entries[e].corpus_fraction;
    std::vector<std::size_t> idx(num_items);
    std::iota(idx.begin(), idx.end(), 0);
    if (fraction < 1.0) {
      std::mt19937_64 rng(DeriveSeed(seed, "plan", e));
      std::shuffle(idx.begin(), idx.end(), rng);
      const auto keep = static_cast<std::size_t>(
          std::lround(std::max(0.0, fraction) * static_cast<double>(num_items)));
      idx.resize(std::min(keep, num_items));
      std::sort(idx.begin(), idx.end());
    }
    plan.push_back(std::move(idx));
  }
  return plan;
}

namespace {

class SourcePool {
 public:
  SourcePool(std::optional<fs::path> root, std::string what)
      : root_(std::move(root)), what_(std::move(what)) {}

  const std::vector<fs::path>& Files(const std::string& subdir) {
    auto it = files_.find(subdir);
    if (it != files_.end()) return it->second;
    if (!root_) {
      throw Error(ErrorCode::kIo, "preset needs a " + what_ + " directory");
    }
    fs::path dir = *root_;
    if (!subdir.empty() && fs::is_directory(dir / subdir)) dir /= subdir;
    auto files = ListWavFiles(dir);
    if (files.empty()) {
      throw Error(ErrorCode::kIo, "no WAV files in " + what_ + " directory " +
                                      dir.string());
    }
    return files_.emplace(subdir, std::move(files)).first->second;
  }

  const AudioClip& Load(const fs::path& p) {
    auto it = clips_.find(p);
    if (it == clips_.end()) it = clips_.emplace(p, LoadWav(p)).first;
    return it->second;
  }

 private:
  std::optional<fs::path> root_;
  std::string what_;
  std::map<std::string, std::vector<fs::path>> files_;
  std::map<fs::path, AudioClip> clips_;
};

std::string ProvenanceLine(const std::string& file_id,
                           const std::string& source_id,
                           const AugmentSpec& spec) {
  std::string line = fmt::format("{} op={} source={}", file_id,
                                 AugmentOpName(spec.op), source_id);
  if (spec.snr_db) line += fmt::format(" snr_db={}", *spec.snr_db);
  if (spec.mixture_weight) {
    line += fmt::format(" mixture_weight={}", *spec.mixture_weight);
  }
  if (spec.scale) line += fmt::format(" scale={}", *spec.scale);
  if (spec.partner_path) {
    line += fmt::format(" partner={} position={}",
                        spec.partner_path->filename().string(),
                        spec.append_partner ? "suffix" : "prefix");
  }
  if (spec.noise_path) line += " noise=" + spec.noise_path->filename().string();
  if (spec.rir_path) line += " rir=" + spec.rir_path->filename().string();
  line += fmt::format(" seed={}\n", spec.seed);
  return line;
}

}  // namespace

ExpansionSummary ExpandTestset(const fs::path& in_root, const fs::path& out_root,
                               const std::optional<fs::path>& noise_dir,
                               const std::optional<fs::path>& rir_dir,
                               const AugmentPreset& preset, std::uint64_t seed) {
  const TaskManifest manifest = LoadTaskManifest(in_root);
  if (preset.NeedsNoise() && (!noise_dir || !fs::is_directory(*noise_dir))) {
    throw Error(ErrorCode::kIo, "preset '" + preset.name +
                                    "' needs an existing noise directory");
  }
  if (preset.NeedsRir() && (!rir_dir || !fs::is_directory(*rir_dir))) {
    throw Error(ErrorCode::kIo, "preset '" + preset.name +
                                    "' needs an existing RIR directory");
  }
  std::error_code ec;
  if (fs::exists(out_root, ec) &&
      fs::equivalent(fs::absolute(in_root), fs::absolute(out_root), ec)) {
    throw Error(ErrorCode::kInvalidArgument,
                "output directory must differ from the input task");
  }

  SourcePool noises(noise_dir, "noise");
  SourcePool rirs(rir_dir, "RIR");
  ExpansionSummary summary;
  std::string provenance;

  for (const auto& task : manifest.speakers) {
    const fs::path spk_out = out_root / task.speaker_id;
    fs::create_directories(spk_out / "enroll");
    fs::create_directories(spk_out / "test");
    for (const auto& wav : ListWavFiles(task.enroll_dir)) {
      fs::copy_file(wav, spk_out / "enroll" / wav.filename(),
                    fs::copy_options::overwrite_existing);
    }

    std::vector<LabeledUtt> labels = ReadLabels(task.labels_path);
    std::sort(labels.begin(), labels.end(),
              [](const LabeledUtt& a, const LabeledUtt& b) {
                return a.utt_id < b.utt_id;
              });
    std::vector<AudioClip> clips;
    std::vector<fs::path> paths;
    for (const auto& l : labels) {
      paths.push_back(task.test_dir / (l.utt_id + ".wav"));
      clips.push_back(LoadWav(paths.back()));
      fs::copy_file(paths.back(), spk_out / "test" / (l.utt_id + ".wav"),
                    fs::copy_options::overwrite_existing);
    }
    summary.originals += labels.size();
    std::vector<LabeledUtt> out_labels = labels;

    const auto plan = PlanAugmentation(
        labels.size(), preset, DeriveSeed(seed, task.speaker_id, 0));
    for (std::size_t e = 0; e < preset.entries.size(); ++e) {
      const PresetEntry& entry = preset.entries[e];
      for (std::size_t i : plan[e]) {
        const LabeledUtt& src = labels[i];
        AugmentSpec spec;
        spec.op = entry.op;
        spec.seed = DeriveSeed(seed, task.speaker_id + "/" + src.utt_id, e + 1);
        std::mt19937_64 rng(spec.seed);
        AudioClip out;
        switch (entry.op) {
          case AugmentOp::kSplice: {
            std::vector<std::size_t> candidates;
            for (std::size_t j = 0; j < labels.size(); ++j) {
              if (j != i && labels[j].label == 0) candidates.push_back(j);
            }
            if (candidates.empty() && src.label == 1) {
              for (std::size_t j = 0; j < labels.size(); ++j) {
                if (j != i) candidates.push_back(j);
              }
            }
            if (candidates.empty()) continue;
            const std::size_t partner = candidates[std::uniform_int_distribution<
                std::size_t>(0, candidates.size() - 1)(rng)];
            spec.partner_path = paths[partner];
            // Negatives may take the partner on either side; positives must
            // keep the keyword last.
            spec.append_partner =
                src.label == 0 && std::bernoulli_distribution(0.5)(rng);
            out = spec.append_partner ? Splice(clips[i], clips[partner])
                                      : Splice(clips[partner], clips[i]);
            break;
          }
          case AugmentOp::kAddNoise: {
            const auto& files = noises.Files(entry.source_subdir);
            spec.noise_path = files[std::uniform_int_distribution<std::size_t>(
                0, files.size() - 1)(rng)];
            if (!entry.snr_choices.empty()) {
              spec.snr_db = entry.snr_choices[std::uniform_int_distribution<
                  std::size_t>(0, entry.snr_choices.size() - 1)(rng)];
            } else {
              spec.snr_db = std::uniform_real_distribution<double>(
                  entry.snr_min_db, entry.snr_max_db)(rng);
            }
            out = AddNoise(clips[i], noises.Load(*spec.noise_path), *spec.snr_db,
                           rng());
            break;
          }
          case AugmentOp::kAddReverb: {
            const auto& files = rirs.Files(entry.source_subdir);
            spec.rir_path = files[std::uniform_int_distribution<std::size_t>(
                0, files.size() - 1)(rng)];
            spec.mixture_weight = entry.mixture_weight;
            out = AddReverb(clips[i], rirs.Load(*spec.rir_path),
                            entry.mixture_weight);
            break;
          }
          case AugmentOp::kPerturbVolume: {
            spec.scale = std::uniform_real_distribution<double>(
                entry.scale_min, entry.scale_max)(rng);
            out = PerturbVolume(clips[i], *spec.scale);
            break;
          }
        }
        spec.Validate();
        const std::string utt_id = fmt::format("{}-aug{}-{}", src.utt_id, e,
                                               entry.tag.empty()
                                                   ? AugmentOpName(entry.op)
                                                   : entry.tag);
        WriteWav(out, spk_out / "test" / (utt_id + ".wav"));
        out_labels.push_back({utt_id, src.label});
        provenance +=
            ProvenanceLine(task.speaker_id + "/" + utt_id, src.utt_id, spec);
        ++summary.emitted;
      }
    }
    WriteLabels(out_labels, spk_out / "labels.txt");
  }
  WriteFileAtomic(out_root / "provenance.txt", provenance);
  return summary;
}

}  // namespace autokws
