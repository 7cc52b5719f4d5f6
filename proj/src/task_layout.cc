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

#include "autokws/task_layout.h"

#include <algorithm>
#include <set>

#include "autokws/audio_io.h"
#include "autokws/error.h"
#include "autokws/file_util.h"

namespace autokws {

namespace fs = std::filesystem;

TaskManifest LoadTaskManifest(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::kLayout, "task root is not a directory: " +
                                        root.string());
  }
  TaskManifest manifest;
  manifest.root = root;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    SpeakerTask task;
    task.speaker_id = entry.path().filename().string();
    task.enroll_dir = entry.path() / "enroll";
    task.test_dir = entry.path() / "test";
    task.labels_path = entry.path() / "labels.txt";
    const std::string where = "speaker '" + task.speaker_id + "'";
    if (!fs::is_directory(task.enroll_dir, ec) ||
        ListWavFiles(task.enroll_dir).empty()) {
      throw Error(ErrorCode::kLayout, where + ": enroll/ missing or has no WAV");
    }
    if (!fs::is_directory(task.test_dir, ec)) {
      throw Error(ErrorCode::kLayout, where + ": test/ missing");
    }
    if (!fs::is_regular_file(task.labels_path, ec)) {
      throw Error(ErrorCode::kLayout, where + ": labels.txt missing");
    }
    std::vector<LabeledUtt> labels;
    try {
      labels = ReadLabels(task.labels_path);
    } catch (const Error& e) {
      throw Error(ErrorCode::kLayout, where + ": " + e.what());
    }
    std::set<std::string> labeled;
    for (const auto& l : labels) labeled.insert(l.utt_id);
    std::set<std::string> present;
    for (const auto& wav : ListWavFiles(task.test_dir)) {
      present.insert(wav.stem().string());
    }
    for (const auto& id : present) {
      if (!labeled.count(id)) {
        throw Error(ErrorCode::kLayout, where + ": test utterance '" + id +
                                            "' has no label");
      }
    }
    for (const auto& id : labeled) {
      if (!present.count(id)) {
        throw Error(ErrorCode::kLayout, where + ": label for '" + id +
                                            "' has no test WAV");
      }
    }
    manifest.speakers.push_back(std::move(task));
  }
  if (manifest.speakers.empty()) {
    throw Error(ErrorCode::kLayout, "no speaker directories under " +
                                        root.string());
  }
  std::sort(manifest.speakers.begin(), manifest.speakers.end(),
            [](const SpeakerTask& a, const SpeakerTask& b) {
              return a.speaker_id < b.speaker_id;
            });
  return manifest;
}

std::vector<LabeledUtt> ParseUttLines(std::string_view text,
                                      const std::string& context,
                                      bool allow_partial_tail) {
  std::vector<LabeledUtt> out;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos && allow_partial_tail) break;
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;

    auto fail = [&](const std::string& why) {
      return Error(ErrorCode::kParse,
                   context + ":" + std::to_string(line_no) + ": " + why);
    };
    const std::size_t sp = line.find(' ');
    if (sp == std::string_view::npos || sp == 0) {
      throw fail("expected '<utt_id> <0|1>'");
    }
    const std::string_view id = line.substr(0, sp);
    const std::string_view value = line.substr(sp + 1);
    if (id.find_first_of("\t\r\v\f") != std::string_view::npos) {
      throw fail("whitespace inside utt_id");
    }
    if (value != "0" && value != "1") {
      throw fail("label must be 0 or 1, got '" + std::string(value) + "'");
    }
    if (!seen.insert(std::string(id)).second) {
      throw Error(ErrorCode::kDuplicateUtt, context + ":" +
                                                std::to_string(line_no) +
                                                ": duplicate utt_id '" +
                                                std::string(id) + "'");
    }
    out.push_back({std::string(id), value == "1" ? 1 : 0});
  }
  return out;
}

std::string FormatUttLines(const std::vector<LabeledUtt>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l.utt_id;
    out += l.label ? " 1\n" : " 0\n";
  }
  return out;
}

std::vector<LabeledUtt> ReadLabels(const fs::path& path) {
  return ParseUttLines(ReadFileBytes(path), path.string());
}

void WriteLabels(const std::vector<LabeledUtt>& labels, const fs::path& path) {
  WriteFileAtomic(path, FormatUttLines(labels));
}

std::vector<PredictionRecord> ReadPredictions(const fs::path& path,
                                              bool allow_partial_tail) {
  std::vector<PredictionRecord> out;
  for (auto& l :
       ParseUttLines(ReadFileBytes(path), path.string(), allow_partial_tail)) {
    out.push_back({std::move(l.utt_id), l.label, false});
  }
  return out;
}

void WritePredictions(const std::vector<PredictionRecord>& preds,
                      const fs::path& path) {
  std::vector<LabeledUtt> lines;
  lines.reserve(preds.size());
  for (const auto& p : preds) {
    lines.push_back({p.utt_id, p.missing ? 0 : p.predicted});
  }
  WriteFileAtomic(path, FormatUttLines(lines));
}

}  // namespace autokws
