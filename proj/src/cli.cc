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

#include "autokws/cli.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "autokws/audio_io.h"
#include "autokws/augment.h"
#include "autokws/detector.h"
#include "autokws/enrollment.h"
#include "autokws/error.h"
#include "autokws/features.h"
#include "autokws/file_util.h"
#include "autokws/harness.h"
#include "autokws/task_layout.h"

namespace autokws {

namespace fs = std::filesystem;

namespace {

std::string Trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FeatureFlags {
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  int num_mel = 40;
  int num_ceps = 40;
  double preemph = 0.97;
  bool no_cmvn = false;

  void Register(CLI::App* app) {
    app->add_option("--frame-length-ms", frame_length_ms, "Frame length (ms)")
        ->capture_default_str();
    app->add_option("--frame-shift-ms", frame_shift_ms, "Frame shift (ms)")
        ->capture_default_str();
    app->add_option("--num-mel", num_mel, "Mel filters")->capture_default_str();
    app->add_option("--num-ceps", num_ceps, "Cepstral coefficients")
        ->capture_default_str();
    app->add_option("--preemph", preemph, "Pre-emphasis coefficient")
        ->capture_default_str();
    app->add_flag("--no-cmvn", no_cmvn, "Disable per-utterance CMVN");
  }

  FeatureConfig Build() const {
    FeatureConfig c;
    c.frame_length_seconds = frame_length_ms / 1000.0;
    c.frame_shift_seconds = frame_shift_ms / 1000.0;
    c.num_mel_filters = num_mel;
    c.num_cepstra = num_ceps;
    c.pre_emphasis = preemph;
    c.apply_cmvn = !no_cmvn;
    return c;
  }
};

struct DetectorFlags {
  double gamma1 = 0.80;
  double gamma2 = 0.83;
  bool no_sv = false;
  bool no_calibrate = false;
  std::string match_mode = "sln";
  std::string distance = "cosine";
  int band = 0;
  double margin = 0.9;
  FeatureFlags feature;

  void Register(CLI::App* app) {
    app->add_option("--gamma1", gamma1, "Stage-1 (QbE) similarity threshold")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app->add_option("--gamma2", gamma2,
                    "Stage-2 (speaker) cosine threshold for external "
                    "embeddings")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app->add_flag("--no-sv", no_sv, "Skip the speaker-verification stage");
    app->add_flag("--no-calibrate", no_calibrate,
                  "Use --gamma1 instead of the enrollment-calibrated threshold");
    app->add_option("--match-mode", match_mode, "sln or scan")
        ->check(CLI::IsMember({"sln", "scan"}))
        ->capture_default_str();
    app->add_option("--distance", distance, "Frame distance")
        ->check(CLI::IsMember({"cosine", "euclidean"}))
        ->capture_default_str();
    app->add_option("--band", band, "Sakoe-Chiba radius (0 = unbanded)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app->add_option("--margin", margin, "Calibration margin factor")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    feature.Register(app);
  }

  DetectorConfig Build() const {
    DetectorConfig c;
    c.qbe_threshold_gamma1 = gamma1;
    c.sv_threshold_gamma2 = gamma2;
    c.use_sv_stage = !no_sv;
    c.calibrate_qbe_threshold = !no_calibrate;
    c.match_mode = match_mode == "scan" ? MatchMode::kSegmentScan
                                        : MatchMode::kSlnDtw;
    c.dtw.distance = distance == "euclidean" ? FrameDistance::kEuclidean
                                             : FrameDistance::kCosine;
    if (band > 0) c.dtw.band_radius = band;
    c.calibration_margin = margin;
    c.feature = feature.Build();
    c.Validate();
    return c;
  }
};

bool IsFeatureFile(const fs::path& p) {
  return p.extension() == ".kwsf" || p.extension() == ".csv";
}

std::vector<fs::path> ReadPathList(const fs::path& list) {
  std::ifstream in(list);
  if (!in) throw Error(ErrorCode::kIo, "cannot open list " + list.string());
  std::vector<fs::path> out;
  std::string line;
  while (std::getline(in, line)) {
    line = Trim(line);
    if (!line.empty()) out.emplace_back(line);
  }
  return out;
}

void RequireExists(const fs::path& p) {
  std::error_code ec;
  if (!fs::exists(p, ec)) {
    throw Error(ErrorCode::kIo, "input not found: " + p.string());
  }
}

}  // namespace

std::vector<std::string> MergeConfigFile(const std::vector<std::string>& args,
                                         const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw UsageError("cannot read config file " + config_path);
  std::vector<std::string> merged = args;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = Trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(fmt::format("{}:{}: expected key=value", config_path,
                                   line_no));
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (key.empty() || key == "config" ||
        key.find_first_not_of("abcdefghijklmnopqrstuvwxyz0123456789-") !=
            std::string::npos) {
      throw UsageError(fmt::format("{}:{}: invalid key '{}'", config_path,
                                   line_no, key));
    }
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(), [&](const auto& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!given) merged.push_back(flag + "=" + value);
  }
  return merged;
}

namespace {

int CmdFeatures(const std::optional<std::string>& wav,
                const std::optional<std::string>& dir, const std::string& out,
                const FeatureConfig& cfg, std::ostream& os) {
  std::vector<std::pair<fs::path, fs::path>> jobs;
  if (wav) {
    RequireExists(*wav);
    jobs.emplace_back(*wav, out);
  } else {
    RequireExists(*dir);
    const auto wavs = ListWavFiles(*dir);
    if (wavs.empty()) {
      throw Error(ErrorCode::kIo, "no WAV files in " + *dir);
    }
    fs::create_directories(out);
    for (const auto& w : wavs) {
      jobs.emplace_back(w, fs::path(out) / (w.stem().string() + ".kwsf"));
    }
  }
  for (const auto& [in, dst] : jobs) {
    const FeatureMatrix m = ExtractMfcc(LoadWav(in), cfg);
    WriteFeatures(m, dst);
    os << in.string() << " " << m.num_frames() << "x" << m.dim() << "\n";
  }
  return kExitOk;
}

std::int64_t ProfileTimestamp(std::int64_t latest_mtime) {
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    try {
      return std::stoll(env);
    } catch (const std::exception&) {
      throw UsageError("SOURCE_DATE_EPOCH is not an integer");
    }
  }
  return latest_mtime;
}

int CmdEnroll(const std::string& enroll_dir, const std::string& profile_out,
              std::string speaker_id, const DetectorConfig& cfg,
              std::ostream& os) {
  RequireExists(enroll_dir);
  EnrollmentInput in = LoadEnrollmentDir(enroll_dir);
  if (speaker_id.empty()) {
    speaker_id = fs::path(enroll_dir).lexically_normal().filename().string();
    if (speaker_id.empty() || speaker_id == "enroll") {
      speaker_id = fs::path(enroll_dir)
                       .lexically_normal()
                       .parent_path()
                       .filename()
                       .string();
    }
  }
  ProfileOptions opts{speaker_id, ProfileTimestamp(in.latest_mtime)};
  const EnrollmentProfile p = in.clips.empty()
                                  ? BuildProfileFromFeatures(in.features, cfg, opts)
                                  : BuildProfile(in.clips, cfg, opts);
  SaveProfile(p, profile_out);
  os << fmt::format(
      "speaker={} items={} template_frames={} dim={} qbe_threshold={:.6f} "
      "sv_threshold={:.6f}\n",
      p.speaker_id, in.clips.empty() ? in.features.size() : in.clips.size(),
      p.templ.num_frames(), p.templ.dim(), p.qbe_threshold, p.sv_threshold);
  return kExitOk;
}

int CmdPredict(const std::string& profile_path,
               const std::optional<std::string>& wav,
               const std::optional<std::string>& list, const std::string& out,
               bool verbose, const DetectorConfig& cfg, int jobs,
               std::ostream& os) {
  RequireExists(profile_path);
  const EnrollmentProfile profile = LoadProfile(profile_path);
  std::vector<fs::path> paths;
  if (wav) {
    RequireExists(*wav);
    paths.emplace_back(*wav);
  } else {
    RequireExists(*list);
    paths = ReadPathList(*list);
    if (paths.empty()) throw Error(ErrorCode::kEmptyInput, "empty list");
  }
  std::vector<TestItem> items;
  for (const auto& p : paths) {
    TestItem item;
    item.utt_id = p.stem().string();
    if (IsFeatureFile(p)) {
      item.input = ReadFeatures(p);
    } else {
      item.input = LoadWav(p);
    }
    items.push_back(std::move(item));
  }
  const BatchResult batch = PredictBatch(profile, items, cfg, jobs);
  std::vector<PredictionRecord> records;
  for (const auto& d : batch.decisions) {
    records.push_back({d.utt_id, d.wake ? 1 : 0, false});
    if (verbose) {
      os << fmt::format("{} wake={} qbe_similarity={:.6f} segment={}-{}",
                        d.utt_id, d.wake ? 1 : 0, d.qbe.similarity,
                        d.qbe.start_frame, d.qbe.end_frame);
      if (d.sv_similarity) {
        os << fmt::format(" sv_similarity={:.6f}", *d.sv_similarity);
      }
      if (d.error) os << " error=\"" << *d.error << "\"";
      os << "\n";
    }
  }
  WritePredictions(records, out);
  return kExitOk;
}

std::unique_ptr<System> MakeSystem(const std::string& spec,
                                   const DetectorConfig& cfg, int jobs) {
  if (spec == "builtin") return std::make_unique<BuiltinSystem>(cfg, jobs);
  std::error_code ec;
  if (fs::is_directory(spec, ec)) return ExternalSystem::FromScriptDir(spec);
  return ExternalSystem::FromExecutable(spec);
}

int CmdScore(const std::string& labels_path, const std::string& preds_path,
             double alpha, std::ostream& os) {
  RequireExists(labels_path);
  RequireExists(preds_path);
  const auto labels = ReadLabels(labels_path);
  const auto preds = ReadPredictions(preds_path);
  const SpeakerScore s = ScoreSpeaker(
      fs::path(labels_path).parent_path().filename().string(), preds, labels,
      alpha);
  os << fmt::format(
      "n_pos={} n_neg={} n_missing={} miss_rate={:.6f} far={:.6f} alpha={} "
      "score={:.4f}\n",
      s.n_pos, s.n_neg, s.n_missing, s.miss_rate, s.far, alpha, s.score);
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& raw_args, std::ostream& out,
           std::ostream& err) {
  // Keep stdout for results.
  static std::once_flag log_once;
  std::call_once(log_once, [] {
    spdlog::set_default_logger(spdlog::stderr_color_mt("autokws"));
  });
  std::vector<std::string> args = raw_args;
  try {
    for (std::size_t i = 0; i < raw_args.size(); ++i) {
      std::optional<std::string> path;
      if (raw_args[i] == "--config" && i + 1 < raw_args.size()) {
        path = raw_args[i + 1];
      } else if (raw_args[i].rfind("--config=", 0) == 0) {
        path = raw_args[i].substr(9);
      }
      if (path) {
        args = MergeConfigFile(raw_args, *path);
        break;
      }
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App app{
      "Query-by-example keyword spotting and an evaluation harness",
      "autokws"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_file;
  std::uint64_t seed = 0;
  int jobs = 1;
  app.add_option("--config", config_file,
                 "key=value file; command-line flags take precedence");
  app.add_option("--seed", seed, "Seed for all randomness")
      ->capture_default_str();
  app.add_option("--jobs", jobs, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // features
  auto* features = app.add_subcommand("features", "Extract MFCC features");
  std::optional<std::string> f_wav, f_dir;
  std::string f_out;
  FeatureFlags f_flags;
  auto* f_wav_opt = features->add_option("--wav", f_wav, "Input WAV file");
  auto* f_dir_opt = features->add_option("--dir", f_dir, "Directory of WAVs");
  f_wav_opt->excludes(f_dir_opt);
  features->add_option("--out", f_out, "Output file (--wav) or directory")
      ->required();
  f_flags.Register(features);

  // enroll
  auto* enroll = app.add_subcommand("enroll", "Build an enrollment profile");
  std::string e_dir, e_out, e_speaker;
  DetectorFlags e_flags;
  enroll->add_option("--enroll-dir", e_dir, "WAV or KWSF enrollment directory")
      ->required();
  enroll->add_option("--profile-out", e_out, "Profile file to write")
      ->required();
  enroll->add_option("--speaker-id", e_speaker, "Defaults to the directory name");
  e_flags.Register(enroll);

  // predict
  auto* predict = app.add_subcommand("predict", "Score test audio");
  std::string p_profile, p_out;
  std::optional<std::string> p_wav, p_list;
  bool p_verbose = false;
  DetectorFlags p_flags;
  predict->add_option("--profile", p_profile, "Enrollment profile")->required();
  auto* p_wav_opt = predict->add_option("--wav", p_wav, "Single test WAV");
  auto* p_list_opt =
      predict->add_option("--list", p_list, "File with one test path per line");
  p_wav_opt->excludes(p_list_opt);
  predict->add_option("--out", p_out, "Prediction file to write")->required();
  predict->add_flag("--verbose", p_verbose, "Print per-utterance scores");
  p_flags.Register(predict);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Run a task end to end");
  std::string v_task, v_system = "builtin", v_report, v_workdir;
  Budget budget;
  std::optional<std::uint64_t> v_space;
  double v_alpha = kDefaultAlpha;
  DetectorFlags v_flags;
  evaluate->add_option("--task-dir", v_task, "Task root")->required();
  evaluate->add_option("--system", v_system,
                       "builtin, a directory with initialize.sh/enrollment.sh/"
                       "predict.sh, or an executable taking the phase name")
      ->capture_default_str();
  evaluate->add_option("--init-budget", budget.init_seconds, "Seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  evaluate->add_option("--enroll-budget", budget.enroll_seconds_per_speaker,
                       "Seconds per speaker")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  evaluate->add_option("--predict-rtf", budget.predict_rtf_limit,
                       "Predict budget as a multiple of test audio duration")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  evaluate->add_option("--space-budget", v_space, "Workdir byte cap");
  evaluate->add_option("--alpha", v_alpha, "False-alarm penalty")
      ->capture_default_str();
  evaluate->add_option("--report", v_report, "key=value report file");
  evaluate->add_option("--workdir", v_workdir,
                       "Working directory (default: fresh temp dir)");
  v_flags.Register(evaluate);

  // augment
  auto* augment = app.add_subcommand("augment", "Expand a task's test set");
  std::string a_task, a_out, a_preset = "testset";
  std::optional<std::string> a_noise, a_rir;
  augment->add_option("--task-dir", a_task, "Input task root")->required();
  augment->add_option("--out-dir", a_out, "Output task root")->required();
  augment->add_option("--noise-dir", a_noise, "Noise WAV directory");
  augment->add_option("--rir-dir", a_rir, "RIR WAV directory");
  augment->add_option("--preset", a_preset, "testset, sv_training or volume")
      ->check(CLI::IsMember({"testset", "sv_training", "volume"}))
      ->capture_default_str();

  // score
  auto* score = app.add_subcommand("score", "Score a prediction file");
  std::string s_labels, s_preds;
  double s_alpha = kDefaultAlpha;
  score->add_option("--labels", s_labels, "labels.txt")->required();
  score->add_option("--predictions", s_preds, "Prediction file")->required();
  score->add_option("--alpha", s_alpha, "False-alarm penalty")
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (features->parsed() && !f_wav && !f_dir) {
      throw CLI::RequiredError("--wav or --dir");
    }
    if (predict->parsed() && !p_wav && !p_list) {
      throw CLI::RequiredError("--wav or --list");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (features->parsed()) {
      return CmdFeatures(f_wav, f_dir, f_out, f_flags.Build(), out);
    }
    if (enroll->parsed()) {
      return CmdEnroll(e_dir, e_out, e_speaker, e_flags.Build(), out);
    }
    if (predict->parsed()) {
      return CmdPredict(p_profile, p_wav, p_list, p_out, p_verbose,
                        p_flags.Build(), jobs, out);
    }
    if (evaluate->parsed()) {
      budget.space_bytes = v_space;
      const TaskManifest manifest = LoadTaskManifest(v_task);
      auto system = MakeSystem(v_system, v_flags.Build(), 1);
      RunOptions opts;
      opts.workdir = v_workdir;
      opts.jobs = jobs;
      opts.alpha = v_alpha;
      const ScoreReport report = RunTask(manifest, *system, budget, opts);
      out << FormatReportTable(report);
      if (!v_report.empty()) WriteReport(report, v_report);
      return kExitOk;
    }
    if (augment->parsed()) {
      std::optional<fs::path> noise, rir;
      if (a_noise) noise = *a_noise;
      if (a_rir) rir = *a_rir;
      const ExpansionSummary s = ExpandTestset(
          a_task, a_out, noise, rir, PresetByName(a_preset), seed);
      out << fmt::format("originals={} emitted={} out={}\n", s.originals,
                         s.emitted, a_out);
      return kExitOk;
    }
    if (score->parsed()) return CmdScore(s_labels, s_preds, s_alpha, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace autokws
