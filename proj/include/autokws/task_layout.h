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

#ifndef AUTOKWS_TASK_LAYOUT_H_
#define AUTOKWS_TASK_LAYOUT_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace autokws {

// <root>/<speaker_id>/enroll/*.wav, <root>/<speaker_id>/test/*.wav,
// <root>/<speaker_id>/labels.txt
struct SpeakerTask {
  std::string speaker_id;
  std::filesystem::path enroll_dir;
  std::filesystem::path test_dir;
  std::filesystem::path labels_path;
};

struct TaskManifest {
  std::filesystem::path root;
  std::vector<SpeakerTask> speakers;  // sorted by speaker id
};

// Validates the layout; every test WAV must be labeled exactly once and
// every label must name an existing test WAV. Throws LayoutError.
TaskManifest LoadTaskManifest(const std::filesystem::path& root);

// One "<utt_id> <0|1>" line, as used by labels and predictions.
struct LabeledUtt {
  std::string utt_id;
  int label = 0;

  friend bool operator==(const LabeledUtt&, const LabeledUtt&) = default;
};

struct PredictionRecord {
  std::string utt_id;
  int predicted = 0;
  // An utterance the system never produced a prediction for; scored as 0.
  bool missing = false;

  friend bool operator==(const PredictionRecord&,
                         const PredictionRecord&) = default;
};

// Strict grammar: utt_id (no whitespace), one ASCII space, 0 or 1, LF.
// Duplicate ids are rejected. With allow_partial_tail, a final line lacking
// its LF is ignored instead of parsed (output of a killed process).
std::vector<LabeledUtt> ParseUttLines(std::string_view text,
                                      const std::string& context,
                                      bool allow_partial_tail = false);
std::string FormatUttLines(const std::vector<LabeledUtt>& lines);

std::vector<LabeledUtt> ReadLabels(const std::filesystem::path& path);
void WriteLabels(const std::vector<LabeledUtt>& labels,
                 const std::filesystem::path& path);

std::vector<PredictionRecord> ReadPredictions(
    const std::filesystem::path& path, bool allow_partial_tail = false);
void WritePredictions(const std::vector<PredictionRecord>& preds,
                      const std::filesystem::path& path);

}  // namespace autokws

#endif  // AUTOKWS_TASK_LAYOUT_H_
