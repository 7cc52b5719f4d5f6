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

#ifndef AUTOKWS_HARNESS_H_
#define AUTOKWS_HARNESS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "autokws/detector_config.h"
#include "autokws/enrollment.h"
#include "autokws/task_layout.h"

namespace autokws {

inline constexpr double kDefaultAlpha = 9.0;

struct Budget {
  double init_seconds = 1800.0;
  double enroll_seconds_per_speaker = 300.0;
  // Predict budget = predict_rtf_limit * total test audio duration.
  double predict_rtf_limit = 1.0;
  // Cap on the working directory size, checked after every phase.
  std::optional<std::uint64_t> space_bytes;

  void Validate() const;
};

struct SpeakerScore {
  std::string speaker_id;
  double miss_rate = 0.0;
  double far = 0.0;
  double score = 0.0;  // miss_rate + alpha * far
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t n_missing = 0;
};

// Labeled utterances without a record count as missing (predicted 0). A
// class with no members contributes a zero rate and a logged warning.
// Throws UnknownUttId for records of unlabeled utterances.
SpeakerScore ScoreSpeaker(const std::string& speaker_id,
                          const std::vector<PredictionRecord>& preds,
                          const std::vector<LabeledUtt>& labels,
                          double alpha = kDefaultAlpha);

// Total inference time over total test audio duration.
double ComputeRtf(double t_process_seconds, double t_data_seconds);

enum class PhaseStatus { kOk, kFailed, kTimedOut, kSpaceExceeded };
std::string_view PhaseStatusName(PhaseStatus status);

struct PhaseOutcome {
  PhaseStatus status = PhaseStatus::kOk;
  double seconds = 0.0;
  std::string message;
};

// The system under evaluation, called in the fixed order initialize once,
// then enroll and predict per speaker. Implementations must return once the
// timeout has elapsed.
class System {
 public:
  virtual ~System() = default;
  virtual PhaseOutcome Initialize(const std::filesystem::path& workdir,
                                  double timeout_seconds) = 0;
  virtual PhaseOutcome Enroll(const std::filesystem::path& workdir,
                              const std::string& speaker_id,
                              const std::filesystem::path& enroll_dir,
                              double timeout_seconds) = 0;
  // `test_list` holds one WAV path per line; predictions go to `output` in
  // the "<utt_id> <0|1>" grammar, utt_id being the file stem.
  virtual PhaseOutcome Predict(const std::filesystem::path& workdir,
                               const std::string& speaker_id,
                               const std::filesystem::path& test_list,
                               const std::filesystem::path& output,
                               double timeout_seconds) = 0;
};

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  double seconds = 0.0;
};

// Runs argv in its own process group and kills the whole group with SIGKILL
// once `timeout_seconds` have elapsed.
ProcessResult RunProcess(const std::vector<std::string>& argv,
                         double timeout_seconds);

// Three external executables mirroring the platform scripts:
//   <initialize...> <workdir>
//   <enroll...> <workdir> <speaker_id> <enroll_dir>
//   <predict...> <workdir> <speaker_id> <test_list_file> <output_file>
class ExternalSystem : public System {
 public:
  ExternalSystem(std::vector<std::string> initialize_cmd,
                 std::vector<std::string> enroll_cmd,
                 std::vector<std::string> predict_cmd);

  // A directory holding initialize.sh, enrollment.sh and predict.sh.
  static std::unique_ptr<ExternalSystem> FromScriptDir(
      const std::filesystem::path& dir);
  // One executable taking the phase name as first argument:
  // <exec> initialize|enroll|predict ...
  static std::unique_ptr<ExternalSystem> FromExecutable(
      const std::string& executable);

  PhaseOutcome Initialize(const std::filesystem::path& workdir,
                          double timeout_seconds) override;
  PhaseOutcome Enroll(const std::filesystem::path& workdir,
                      const std::string& speaker_id,
                      const std::filesystem::path& enroll_dir,
                      double timeout_seconds) override;
  PhaseOutcome Predict(const std::filesystem::path& workdir,
                       const std::string& speaker_id,
                       const std::filesystem::path& test_list,
                       const std::filesystem::path& output,
                       double timeout_seconds) override;

 private:
  PhaseOutcome Run(std::vector<std::string> argv, double timeout_seconds);

  std::vector<std::string> initialize_cmd_;
  std::vector<std::string> enroll_cmd_;
  std::vector<std::string> predict_cmd_;
};

// The in-process detector. Budgets are enforced cooperatively: enrollment
// that overruns is discarded, and prediction stops at the first item that
// would start past the deadline.
class BuiltinSystem : public System {
 public:
  explicit BuiltinSystem(DetectorConfig config, int jobs = 1);

  PhaseOutcome Initialize(const std::filesystem::path& workdir,
                          double timeout_seconds) override;
  PhaseOutcome Enroll(const std::filesystem::path& workdir,
                      const std::string& speaker_id,
                      const std::filesystem::path& enroll_dir,
                      double timeout_seconds) override;
  PhaseOutcome Predict(const std::filesystem::path& workdir,
                       const std::string& speaker_id,
                       const std::filesystem::path& test_list,
                       const std::filesystem::path& output,
                       double timeout_seconds) override;

 private:
  DetectorConfig config_;
  int jobs_;
  std::mutex mu_;
  std::map<std::string, EnrollmentProfile> profiles_;
};

struct SpeakerRun {
  SpeakerScore score;
  PhaseOutcome enroll;
  std::optional<PhaseOutcome> predict;  // absent when enrollment failed
  double test_audio_seconds = 0.0;
  std::vector<PredictionRecord> predictions;  // one per labeled utterance
};

struct ScoreReport {
  std::vector<SpeakerRun> speakers;
  double alpha = kDefaultAlpha;
  double average_score = 0.0;
  double average_mr = 0.0;
  double average_far = 0.0;
  double rtf = 0.0;
  double init_seconds = 0.0;
  double enroll_seconds = 0.0;
  double predict_seconds = 0.0;
  double predicted_audio_seconds = 0.0;
};

// Fills the averages from the per-speaker entries (plain mean over
// speakers).
void Aggregate(ScoreReport& report);

struct RunOptions {
  std::filesystem::path workdir;
  int jobs = 1;  // speakers evaluated in parallel
  double alpha = kDefaultAlpha;
};

// Ingestion + scoring. Throws LayoutError and SystemCrashed (initialize
// failed); per-speaker failures are scored, never thrown.
ScoreReport RunTask(const TaskManifest& manifest, System& system,
                    const Budget& budget, const RunOptions& options);

std::string FormatReportTable(const ScoreReport& report);
// One "speaker=..." line per speaker, then one "aggregate=1 ..." line.
std::string FormatReportKeyValues(const ScoreReport& report);
void WriteReport(const ScoreReport& report, const std::filesystem::path& path);

}  // namespace autokws

#endif  // AUTOKWS_HARNESS_H_
