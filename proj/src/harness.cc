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

#include "autokws/harness.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "autokws/audio_io.h"
#include "autokws/detector.h"
#include "autokws/error.h"
#include "autokws/file_util.h"

namespace autokws {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double SecondsSince(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void Budget::Validate() const {
  if (!(init_seconds > 0) || !(enroll_seconds_per_speaker > 0) ||
      !(predict_rtf_limit > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "budgets must be positive");
  }
  if (space_bytes && *space_bytes == 0) {
    throw Error(ErrorCode::kInvalidArgument, "space budget must be positive");
  }
}

SpeakerScore ScoreSpeaker(const std::string& speaker_id,
                          const std::vector<PredictionRecord>& preds,
                          const std::vector<LabeledUtt>& labels,
                          double alpha) {
  std::map<std::string, int, std::less<>> predicted;
  std::set<std::string, std::less<>> labeled;
  for (const auto& l : labels) labeled.insert(l.utt_id);
  for (const auto& p : preds) {
    if (!labeled.count(p.utt_id)) {
      throw Error(ErrorCode::kUnknownUttId,
                  "speaker '" + speaker_id + "': prediction for unlabeled '" +
                      p.utt_id + "'");
    }
    predicted[p.utt_id] = p.missing ? -1 : p.predicted;
  }

  SpeakerScore s;
  s.speaker_id = speaker_id;
  std::size_t misses = 0, false_alarms = 0;
  for (const auto& l : labels) {
    const auto it = predicted.find(l.utt_id);
    int y = 0;
    if (it == predicted.end() || it->second < 0) {
      ++s.n_missing;
    } else {
      y = it->second;
    }
    if (l.label == 1) {
      ++s.n_pos;
      if (y == 0) ++misses;
    } else {
      ++s.n_neg;
      if (y == 1) ++false_alarms;
    }
  }
  if (s.n_pos == 0) {
    spdlog::warn("speaker '{}' has no positive test utterances; MR := 0",
                 speaker_id);
  } else {
    s.miss_rate = static_cast<double>(misses) / static_cast<double>(s.n_pos);
  }
  if (s.n_neg == 0) {
    spdlog::warn("speaker '{}' has no negative test utterances; FAR := 0",
                 speaker_id);
  } else {
    s.far = static_cast<double>(false_alarms) / static_cast<double>(s.n_neg);
  }
  s.score = s.miss_rate + alpha * s.far;
  return s;
}

double ComputeRtf(double t_process_seconds, double t_data_seconds) {
  if (!(t_data_seconds > 0.0)) {
    throw Error(ErrorCode::kZeroDuration, "test audio duration must be > 0");
  }
  return t_process_seconds / t_data_seconds;
}

std::string_view PhaseStatusName(PhaseStatus status) {
  switch (status) {
    case PhaseStatus::kOk: return "ok";
    case PhaseStatus::kFailed: return "failed";
    case PhaseStatus::kTimedOut: return "timed_out";
    case PhaseStatus::kSpaceExceeded: return "space_exceeded";
  }
  return "unknown";
}

ProcessResult RunProcess(const std::vector<std::string>& argv,
                         double timeout_seconds) {
  if (argv.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty command line");
  }
  std::vector<char*> cargv;
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  ProcessResult result;
  const auto t0 = Clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::kIo, "fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    ::execvp(cargv[0], cargv.data());
    ::_exit(127);
  }
  ::setpgid(pid, pid);  // also from the parent, whichever runs first

  int status = 0;
  while (true) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) break;
    if (SecondsSince(t0) >= timeout_seconds) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      result.timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  result.seconds = SecondsSince(t0);
  if (!result.timed_out) {
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status)
                                         : 128 + WTERMSIG(status);
  }
  return result;
}

ExternalSystem::ExternalSystem(std::vector<std::string> initialize_cmd,
                               std::vector<std::string> enroll_cmd,
                               std::vector<std::string> predict_cmd)
    : initialize_cmd_(std::move(initialize_cmd)),
      enroll_cmd_(std::move(enroll_cmd)),
      predict_cmd_(std::move(predict_cmd)) {}

std::unique_ptr<ExternalSystem> ExternalSystem::FromScriptDir(
    const fs::path& dir) {
  const fs::path abs = fs::absolute(dir);
  for (const char* name : {"initialize.sh", "enrollment.sh", "predict.sh"}) {
    if (!fs::is_regular_file(abs / name)) {
      throw Error(ErrorCode::kLayout,
                  "system directory lacks " + std::string(name));
    }
  }
  return std::make_unique<ExternalSystem>(
      std::vector<std::string>{"/bin/sh", (abs / "initialize.sh").string()},
      std::vector<std::string>{"/bin/sh", (abs / "enrollment.sh").string()},
      std::vector<std::string>{"/bin/sh", (abs / "predict.sh").string()});
}

std::unique_ptr<ExternalSystem> ExternalSystem::FromExecutable(
    const std::string& executable) {
  return std::make_unique<ExternalSystem>(
      std::vector<std::string>{executable, "initialize"},
      std::vector<std::string>{executable, "enroll"},
      std::vector<std::string>{executable, "predict"});
}

PhaseOutcome ExternalSystem::Run(std::vector<std::string> argv,
                                 double timeout_seconds) {
  const ProcessResult r = RunProcess(argv, timeout_seconds);
  PhaseOutcome out;
  out.seconds = r.seconds;
  if (r.timed_out) {
    out.status = PhaseStatus::kTimedOut;
    out.message = fmt::format("killed after {:.3f}s budget", timeout_seconds);
  } else if (r.exit_code != 0) {
    out.status = PhaseStatus::kFailed;
    out.message = fmt::format("exit code {}", r.exit_code);
  }
  return out;
}

PhaseOutcome ExternalSystem::Initialize(const fs::path& workdir,
                                        double timeout_seconds) {
  auto argv = initialize_cmd_;
  argv.push_back(workdir.string());
  return Run(std::move(argv), timeout_seconds);
}

PhaseOutcome ExternalSystem::Enroll(const fs::path& workdir,
                                    const std::string& speaker_id,
                                    const fs::path& enroll_dir,
                                    double timeout_seconds) {
  auto argv = enroll_cmd_;
  argv.insert(argv.end(),
              {workdir.string(), speaker_id, fs::absolute(enroll_dir).string()});
  return Run(std::move(argv), timeout_seconds);
}

PhaseOutcome ExternalSystem::Predict(const fs::path& workdir,
                                     const std::string& speaker_id,
                                     const fs::path& test_list,
                                     const fs::path& output,
                                     double timeout_seconds) {
  auto argv = predict_cmd_;
  argv.insert(argv.end(), {workdir.string(), speaker_id, test_list.string(),
                           output.string()});
  return Run(std::move(argv), timeout_seconds);
}

BuiltinSystem::BuiltinSystem(DetectorConfig config, int jobs)
    : config_(std::move(config)), jobs_(jobs) {
  config_.Validate();
}

PhaseOutcome BuiltinSystem::Initialize(const fs::path&, double) {
  return {};
}

PhaseOutcome BuiltinSystem::Enroll(const fs::path& workdir,
                                   const std::string& speaker_id,
                                   const fs::path& enroll_dir,
                                   double timeout_seconds) {
  const auto t0 = Clock::now();
  PhaseOutcome out;
  try {
    EnrollmentInput in = LoadEnrollmentDir(enroll_dir);
    ProfileOptions opts{speaker_id, in.latest_mtime};
    EnrollmentProfile profile =
        in.clips.empty() ? BuildProfileFromFeatures(in.features, config_, opts)
                         : BuildProfile(in.clips, config_, opts);
    out.seconds = SecondsSince(t0);
    if (out.seconds > timeout_seconds) {
      out.status = PhaseStatus::kTimedOut;
      out.message = "enrollment overran its budget";
      return out;
    }
    SaveProfile(profile, workdir / (speaker_id + ".kwsp"));
    std::lock_guard<std::mutex> lock(mu_);
    profiles_[speaker_id] = std::move(profile);
  } catch (const std::exception& e) {
    out.status = PhaseStatus::kFailed;
    out.message = e.what();
  }
  out.seconds = SecondsSince(t0);
  return out;
}

PhaseOutcome BuiltinSystem::Predict(const fs::path&,
                                    const std::string& speaker_id,
                                    const fs::path& test_list,
                                    const fs::path& output,
                                    double timeout_seconds) {
  const auto t0 = Clock::now();
  PhaseOutcome out;
  EnrollmentProfile profile;
  {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = profiles_.find(speaker_id);
    if (it == profiles_.end()) {
      out.status = PhaseStatus::kFailed;
      out.message = "no profile for speaker '" + speaker_id + "'";
      return out;
    }
    profile = it->second;
  }
  std::ifstream list(test_list);
  std::ofstream pred(output, std::ios::trunc);
  if (!list || !pred) {
    out.status = PhaseStatus::kFailed;
    out.message = "cannot open test list or output";
    return out;
  }
  std::string line;
  while (std::getline(list, line)) {
    if (line.empty()) continue;
    if (SecondsSince(t0) >= timeout_seconds) {
      out.status = PhaseStatus::kTimedOut;
      out.message = "predict budget exhausted";
      break;
    }
    const fs::path path(line);
    TestItem item;
    item.utt_id = path.stem().string();
    int wake = 0;
    try {
      if (path.extension() == ".wav") {
        item.input = LoadWav(path);
      } else {
        item.input = ReadFeatures(path);
      }
      wake = Decide(profile, item, config_).wake ? 1 : 0;
    } catch (const std::exception& e) {
      spdlog::warn("speaker '{}' item '{}': {}", speaker_id, item.utt_id,
                   e.what());
    }
    pred << item.utt_id << ' ' << wake << '\n';
    pred.flush();
  }
  out.seconds = SecondsSince(t0);
  return out;
}

namespace {

std::uint64_t DirectorySize(const fs::path& dir) {
  std::uint64_t total = 0;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(dir, ec);
       it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) break;
    if (it->is_regular_file(ec)) total += it->file_size(ec);
  }
  return total;
}

void CheckSpace(const Budget& budget, const fs::path& workdir,
                PhaseOutcome& outcome) {
  if (!budget.space_bytes || outcome.status != PhaseStatus::kOk) return;
  const std::uint64_t used = DirectorySize(workdir);
  if (used > *budget.space_bytes) {
    outcome.status = PhaseStatus::kSpaceExceeded;
    outcome.message = fmt::format("workdir holds {} bytes, budget {}", used,
                                  *budget.space_bytes);
  }
}

SpeakerRun EvaluateSpeaker(const SpeakerTask& task, System& system,
                           const Budget& budget, const fs::path& workdir,
                           double alpha) {
  SpeakerRun run;
  const std::vector<LabeledUtt> labels = ReadLabels(task.labels_path);
  std::vector<fs::path> wavs = ListWavFiles(task.test_dir);
  for (const auto& w : wavs) {
    try {
      run.test_audio_seconds += LoadWav(w).duration_seconds();
    } catch (const Error& e) {
      throw Error(ErrorCode::kLayout, e.what());
    }
  }

  run.enroll = system.Enroll(workdir, task.speaker_id, task.enroll_dir,
                             budget.enroll_seconds_per_speaker);
  CheckSpace(budget, workdir, run.enroll);
  std::vector<PredictionRecord> produced;
  if (run.enroll.status != PhaseStatus::kOk) {
    spdlog::warn("speaker '{}': enrollment {} ({}); all predictions missing",
                 task.speaker_id, PhaseStatusName(run.enroll.status),
                 run.enroll.message);
  } else {
    const fs::path list = workdir / (task.speaker_id + ".test_list");
    const fs::path output = workdir / (task.speaker_id + ".predictions");
    std::string list_text;
    for (const auto& w : wavs) list_text += fs::absolute(w).string() + "\n";
    WriteFileAtomic(list, list_text);
    std::error_code ec;
    fs::remove(output, ec);

    const double timeout = budget.predict_rtf_limit * run.test_audio_seconds;
    const auto t0 = Clock::now();
    PhaseOutcome outcome =
        system.Predict(workdir, task.speaker_id, list, output, timeout);
    outcome.seconds = SecondsSince(t0);
    CheckSpace(budget, workdir, outcome);
    if (outcome.status != PhaseStatus::kOk) {
      spdlog::warn("speaker '{}': predict {} ({})", task.speaker_id,
                   PhaseStatusName(outcome.status), outcome.message);
    }
    if (outcome.status != PhaseStatus::kSpaceExceeded &&
        fs::exists(output, ec)) {
      try {
        produced = ReadPredictions(output, /*allow_partial_tail=*/true);
      } catch (const Error& e) {
        spdlog::warn("speaker '{}': unreadable predictions: {}",
                     task.speaker_id, e.what());
        produced.clear();
      }
    }
    run.predict = outcome;
  }

  std::map<std::string, int> by_id;
  for (const auto& p : produced) by_id[p.utt_id] = p.predicted;
  for (const auto& l : labels) {
    const auto it = by_id.find(l.utt_id);
    if (it == by_id.end()) {
      run.predictions.push_back({l.utt_id, 0, true});
    } else {
      run.predictions.push_back({l.utt_id, it->second, false});
      by_id.erase(it);
    }
  }
  for (const auto& [id, _] : by_id) {
    spdlog::warn("speaker '{}': dropping prediction for unlabeled '{}'",
                 task.speaker_id, id);
  }
  run.score = ScoreSpeaker(task.speaker_id, run.predictions, labels, alpha);
  return run;
}

fs::path MakeTempWorkdir() {
  std::string tmpl = (fs::temp_directory_path() / "autokws-run-XXXXXX").string();
  if (::mkdtemp(tmpl.data()) == nullptr) {
    throw Error(ErrorCode::kIo, "cannot create a temporary workdir");
  }
  return tmpl;
}

}  // namespace

void Aggregate(ScoreReport& report) {
  report.average_score = report.average_mr = report.average_far = 0.0;
  if (report.speakers.empty()) return;
  for (const auto& s : report.speakers) {
    report.average_score += s.score.score;
    report.average_mr += s.score.miss_rate;
    report.average_far += s.score.far;
  }
  const auto n = static_cast<double>(report.speakers.size());
  report.average_score /= n;
  report.average_mr /= n;
  report.average_far /= n;
}

ScoreReport RunTask(const TaskManifest& manifest, System& system,
                    const Budget& budget, const RunOptions& options) {
  budget.Validate();
  const fs::path workdir =
      options.workdir.empty() ? MakeTempWorkdir() : options.workdir;
  fs::create_directories(workdir);

  ScoreReport report;
  report.alpha = options.alpha;
  PhaseOutcome init = system.Initialize(workdir, budget.init_seconds);
  CheckSpace(budget, workdir, init);
  report.init_seconds = init.seconds;
  if (init.status != PhaseStatus::kOk) {
    throw Error(ErrorCode::kSystemCrashed,
                "initialize " + std::string(PhaseStatusName(init.status)) +
                    ": " + init.message);
  }

  const std::size_t n = manifest.speakers.size();
  report.speakers.resize(n);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t i) {
    try {
      report.speakers[i] = EvaluateSpeaker(manifest.speakers[i], system,
                                           budget, workdir, options.alpha);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.jobs, 1)),
                              1, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) work(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (const auto& s : report.speakers) {
    report.enroll_seconds += s.enroll.seconds;
    if (s.predict) {
      report.predict_seconds += s.predict->seconds;
      report.predicted_audio_seconds += s.test_audio_seconds;
    }
  }
  if (report.predicted_audio_seconds > 0.0) {
    report.rtf =
        ComputeRtf(report.predict_seconds, report.predicted_audio_seconds);
  }
  Aggregate(report);
  return report;
}

std::string FormatReportTable(const ScoreReport& report) {
  std::string out = fmt::format("{:<16} {:>6} {:>6} {:>8} {:>8} {:>8} {:>8}  {}\n",
                                "speaker", "n_pos", "n_neg", "MR", "FAR",
                                "S_i", "missing", "status");
  for (const auto& s : report.speakers) {
    std::string status = "enroll=" + std::string(PhaseStatusName(s.enroll.status));
    if (s.predict) {
      status += " predict=" + std::string(PhaseStatusName(s.predict->status));
    }
    out += fmt::format("{:<16} {:>6} {:>6} {:>8.4f} {:>8.4f} {:>8.4f} {:>8}  {}\n",
                       s.score.speaker_id, s.score.n_pos, s.score.n_neg,
                       s.score.miss_rate, s.score.far, s.score.score,
                       s.score.n_missing, status);
  }
  out += fmt::format(
      "average score {:.4f}  (MR {:.4f}, FAR {:.4f}, alpha {})\n"
      "RTF {:.4f}  (predict {:.3f}s over {:.3f}s audio; init {:.3f}s, "
      "enroll {:.3f}s)\n",
      report.average_score, report.average_mr, report.average_far,
      report.alpha, report.rtf, report.predict_seconds,
      report.predicted_audio_seconds, report.init_seconds,
      report.enroll_seconds);
  return out;
}

std::string FormatReportKeyValues(const ScoreReport& report) {
  std::string out;
  for (const auto& s : report.speakers) {
    out += fmt::format(
        "speaker={} n_pos={} n_neg={} n_missing={} miss_rate={} far={} "
        "score={} enroll_status={} enroll_seconds={} predict_status={} "
        "predict_seconds={} test_audio_seconds={}\n",
        s.score.speaker_id, s.score.n_pos, s.score.n_neg, s.score.n_missing,
        s.score.miss_rate, s.score.far, s.score.score,
        PhaseStatusName(s.enroll.status), s.enroll.seconds,
        s.predict ? PhaseStatusName(s.predict->status) : "skipped",
        s.predict ? s.predict->seconds : 0.0, s.test_audio_seconds);
  }
  out += fmt::format(
      "aggregate=1 speakers={} alpha={} average_score={} average_mr={} "
      "average_far={} rtf={} init_seconds={} enroll_seconds={} "
      "predict_seconds={} predicted_audio_seconds={}\n",
      report.speakers.size(), report.alpha, report.average_score,
      report.average_mr, report.average_far, report.rtf, report.init_seconds,
      report.enroll_seconds, report.predict_seconds,
      report.predicted_audio_seconds);
  return out;
}

void WriteReport(const ScoreReport& report, const fs::path& path) {
  WriteFileAtomic(path, FormatReportKeyValues(report));
}

}  // namespace autokws
