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

#ifndef AUTOKWS_AUGMENT_H_
#define AUTOKWS_AUGMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "autokws/audio_io.h"

namespace autokws {

// clip + g * noise, with g chosen so that the full-clip power ratio equals
// snr_db. Noise shorter than the clip is tiled; the segment offset is drawn
// uniformly from `seed`.
AudioClip AddNoise(const AudioClip& clip, const AudioClip& noise, double snr_db,
                   std::uint64_t seed);

// (1 - w) * clip + w * wet, where wet is the full convolution clip * rir
// truncated to the clip length and rescaled to the dry clip's RMS.
AudioClip AddReverb(const AudioClip& clip, const AudioClip& rir,
                    double mixture_weight);

inline constexpr double kMinVolumeScale = 0.5;
inline constexpr double kMaxVolumeScale = 2.0;

// ApplyGain restricted to the [0.5, 2] perturbation range.
AudioClip PerturbVolume(const AudioClip& clip, double scale);

// Power ratio in dB between `clean` and `mixed - clean`.
double MeasureSnrDb(const AudioClip& clean, const AudioClip& mixed);

enum class AugmentOp { kSplice, kAddNoise, kAddReverb, kPerturbVolume };
std::string_view AugmentOpName(AugmentOp op);

// One realized augmentation, as recorded in the provenance sidecar.
struct AugmentSpec {
  AugmentOp op = AugmentOp::kPerturbVolume;
  std::optional<double> snr_db;
  std::optional<double> mixture_weight;
  std::optional<double> scale;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> partner_path;
  std::optional<std::filesystem::path> noise_path;
  std::optional<std::filesystem::path> rir_path;
  // Splice only: partner goes after the source instead of before.
  bool append_partner = false;

  // Throws InvalidArgument unless exactly the op's fields are present.
  void Validate() const;
};

// A family of augmentations applied to `corpus_fraction` of the corpus.
struct PresetEntry {
  AugmentOp op = AugmentOp::kPerturbVolume;
  double corpus_fraction = 1.0;
  // SNR: drawn from snr_choices when non-empty, else uniform in the range.
  std::vector<double> snr_choices;
  double snr_min_db = 5.0;
  double snr_max_db = 25.0;
  double mixture_weight = 0.5;
  double scale_min = kMinVolumeScale;
  double scale_max = kMaxVolumeScale;
  // Subdirectory of the noise / RIR directory to draw sources from; falls
  // back to the directory itself when absent.
  std::string source_subdir;
  std::string tag;  // short label used in emitted utterance ids
};

struct AugmentPreset {
  std::string name;
  std::vector<PresetEntry> entries;

  // Originals count once.
  double TotalMultiplier() const;
  bool NeedsNoise() const;
  bool NeedsRir() const;
};

// Test-set expansion: splice, noise at 5-25 dB SNR, reverb at weight 0.5 and
// volume in [0.5, 2], each applied to every test utterance.
AugmentPreset TestsetExpansionPreset();
// Speaker-model training corpus: small/medium-room reverb, noise at
// {15,10,5} dB, music at {20,15,10} dB, each on half the corpus.
AugmentPreset SvTrainingPreset();
AugmentPreset VolumeOnlyPreset();
// "testset", "sv_training" or "volume".
AugmentPreset PresetByName(const std::string& name);

// Items selected for each entry: round(fraction * n) indices from a seeded
// permutation (all items when fraction >= 1), sorted ascending.
std::vector<std::vector<std::size_t>> PlanAugmentation(
    std::size_t num_items, const AugmentPreset& preset, std::uint64_t seed);

struct ExpansionSummary {
  std::size_t originals = 0;
  std::size_t emitted = 0;
};

// Copies the task at `in_root` to `out_root` and adds augmented copies of
// every test utterance per the preset, preserving labels. Positives keep the
// keyword at the end: splice partners are always prefixed to them. A
// provenance.txt at `out_root` records one line per emitted file.
ExpansionSummary ExpandTestset(const std::filesystem::path& in_root,
                               const std::filesystem::path& out_root,
                               const std::optional<std::filesystem::path>& noise_dir,
                               const std::optional<std::filesystem::path>& rir_dir,
                               const AugmentPreset& preset, std::uint64_t seed);

}  // namespace autokws

#endif  // AUTOKWS_AUGMENT_H_
