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

#include <chrono>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>

#include "autokws/file_util.h"
#include "test_util.h"

namespace autokws {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

std::vector<PredictionRecord> Preds(std::initializer_list<std::pair<const char*, int>> v) {
  std::vector<PredictionRecord> out;
  for (const auto& [id, y] : v) out.push_back({id, y, false});
  return out;
}

TEST(ScoreSpeaker, CountingExample) {
  // 4 positives with one miss, 6 negatives without false alarms.
  std::vector<LabeledUtt> labels;
  std::vector<PredictionRecord> preds;
  for (int i = 0; i < 4; ++i) {
    labels.push_back({"p" + std::to_string(i), 1});
    preds.push_back({"p" + std::to_string(i), i == 0 ? 0 : 1, false});
  }
  for (int i = 0; i < 6; ++i) {
    labels.push_back({"n" + std::to_string(i), 0});
    preds.push_back({"n" + std::to_string(i), 0, false});
  }
  const SpeakerScore s = ScoreSpeaker("s", preds, labels);
  EXPECT_DOUBLE_EQ(s.miss_rate, 0.25);
  EXPECT_DOUBLE_EQ(s.far, 0.0);
  EXPECT_DOUBLE_EQ(s.score, 0.25);
  EXPECT_EQ(s.n_pos, 4u);
  EXPECT_EQ(s.n_neg, 6u);
}

TEST(ScoreSpeaker, PerfectIsZeroAndFarIsWeighted) {
  const std::vector<LabeledUtt> labels = {{"a", 1}, {"b", 0}, {"c", 0}, {"d", 0}, {"e", 0}};
  EXPECT_EQ(ScoreSpeaker("s", Preds({{"a", 1}, {"b", 0}, {"c", 0}, {"d", 0}, {"e", 0}}),
                         labels).score,
            0.0);
  const SpeakerScore fa =
      ScoreSpeaker("s", Preds({{"a", 1}, {"b", 1}, {"c", 0}, {"d", 0}, {"e", 0}}), labels);
  EXPECT_DOUBLE_EQ(fa.far, 0.25);
  EXPECT_DOUBLE_EQ(fa.score, 9.0 * 0.25);
  EXPECT_DOUBLE_EQ(
      ScoreSpeaker("s", Preds({{"b", 1}}), labels, 1.0).score, 1.0 + 0.25);
}

TEST(ScoreSpeaker, MissingCountsAsZero) {
  const std::vector<LabeledUtt> labels = {{"a", 1}, {"b", 0}};
  const SpeakerScore s = ScoreSpeaker("s", {{"a", 0, true}}, labels);
  EXPECT_EQ(s.n_missing, 2u);
  EXPECT_DOUBLE_EQ(s.miss_rate, 1.0);
  EXPECT_DOUBLE_EQ(s.far, 0.0);
}

TEST(ScoreSpeaker, DegenerateClassesAndUnknownIds) {
  const SpeakerScore only_neg = ScoreSpeaker("s", Preds({{"b", 1}}), {{"b", 0}});
  EXPECT_DOUBLE_EQ(only_neg.miss_rate, 0.0);
  EXPECT_DOUBLE_EQ(only_neg.far, 1.0);
  const SpeakerScore only_pos = ScoreSpeaker("s", Preds({{"a", 0}}), {{"a", 1}});
  EXPECT_DOUBLE_EQ(only_pos.far, 0.0);
  EXPECT_KWS_ERROR(ScoreSpeaker("s", Preds({{"zz", 1}}), {{"a", 1}}),
                   ErrorCode::kUnknownUttId);
}

TEST(ScoreSpeaker, PublishedArithmetic) {
  EXPECT_NEAR(0.481 + 9 * 0.135, 1.695, 0.01);
  EXPECT_NEAR(0.691 + 9 * 0.044, 1.086, 0.01);
}

TEST(ComputeRtf, Quotient) {
  EXPECT_DOUBLE_EQ(ComputeRtf(30.0, 300.0), 0.1);
  EXPECT_DOUBLE_EQ(ComputeRtf(12.5, 12.5), 1.0);
  EXPECT_KWS_ERROR(ComputeRtf(1.0, 0.0), ErrorCode::kZeroDuration);
}

TEST(Budget, Validate) {
  Budget b;
  EXPECT_NO_THROW(b.Validate());
  b.predict_rtf_limit = 0.0;
  EXPECT_KWS_ERROR(b.Validate(), ErrorCode::kInvalidArgument);
}

TEST(RunProcess, ExitCodesAndTimeout) {
  EXPECT_EQ(RunProcess({"/bin/sh", "-c", "exit 3"}, 5.0).exit_code, 3);
  const auto t0 = std::chrono::steady_clock::now();
  // The grandchild sleep must die with the process group.
  const ProcessResult r = RunProcess({"/bin/sh", "-c", "sleep 5 & sleep 5; wait"}, 0.3);
  const double s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_TRUE(r.timed_out);
  EXPECT_LT(s, 3.0);
  EXPECT_NE(RunProcess({"/nonexistent/binary"}, 5.0).exit_code, 0);
}

// Scripted fake honoring the phase contract.
class FakeSystem : public System {
 public:
  double enroll_sleep = 0.0;
  double predict_busy_per_item = 0.0;
  bool fail_init = false;
  std::string fail_enroll_for;
  std::size_t write_bytes_in_enroll = 0;

  PhaseOutcome Initialize(const fs::path&, double) override {
    PhaseOutcome o;
    if (fail_init) o.status = PhaseStatus::kFailed;
    return o;
  }
  PhaseOutcome Enroll(const fs::path& workdir, const std::string& spk,
                      const fs::path&, double) override {
    std::this_thread::sleep_for(std::chrono::duration<double>(enroll_sleep));
    PhaseOutcome o;
    o.seconds = enroll_sleep;
    if (spk == fail_enroll_for) o.status = PhaseStatus::kFailed;
    if (write_bytes_in_enroll) {
      testing::WriteText(workdir / (spk + ".blob"),
                         std::string(write_bytes_in_enroll, 'x'));
    }
    return o;
  }
  PhaseOutcome Predict(const fs::path&, const std::string&, const fs::path& list,
                       const fs::path& output, double) override {
    std::ifstream in(list);
    std::ofstream out(output);
    std::string line;
    while (std::getline(in, line)) {
      const auto end = std::chrono::steady_clock::now() +
                       std::chrono::duration<double>(predict_busy_per_item);
      while (std::chrono::steady_clock::now() < end) {
      }
      const std::string id = fs::path(line).stem().string();
      out << id << ' ' << (id.rfind("pos", 0) == 0 ? 1 : 0) << '\n';
    }
    return {};
  }
};

class HarnessFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    std::vector<testing::MiniSpeaker> spks(3);
    for (int s = 0; s < 3; ++s) {
      spks[s].id = "spk" + std::to_string(s);
      spks[s].enroll = {testing::Silence(0.1)};
      spks[s].tests = {{"pos_a", testing::Silence(0.5), 1},
                       {"neg_a", testing::Silence(0.5), 0},
                       {"neg_b", testing::Silence(1.0), 0}};
    }
    testing::WriteTask(dir_ / "task", spks);
    manifest_ = LoadTaskManifest(dir_ / "task");
  }

  RunOptions Options() const {
    RunOptions o;
    o.workdir = dir_ / "work";
    return o;
  }

  TempDir dir_;
  TaskManifest manifest_;
};

TEST_F(HarnessFixture, PerfectFakeScoresZero) {
  FakeSystem sys;
  const ScoreReport r = RunTask(manifest_, sys, Budget{}, Options());
  ASSERT_EQ(r.speakers.size(), 3u);
  EXPECT_EQ(r.average_score, 0.0);
  for (const auto& s : r.speakers) {
    EXPECT_EQ(s.predictions.size(), 3u);
    EXPECT_EQ(s.score.n_missing, 0u);
    EXPECT_DOUBLE_EQ(s.test_audio_seconds, 2.0);
  }
  EXPECT_DOUBLE_EQ(r.predicted_audio_seconds, 6.0);
}

TEST_F(HarnessFixture, EnrollFailureMakesSpeakerMissing) {
  FakeSystem sys;
  sys.fail_enroll_for = "spk1";
  const ScoreReport r = RunTask(manifest_, sys, Budget{}, Options());
  EXPECT_FALSE(r.speakers[1].predict);
  EXPECT_EQ(r.speakers[1].score.n_missing, 3u);
  EXPECT_DOUBLE_EQ(r.speakers[1].score.miss_rate, 1.0);
  EXPECT_DOUBLE_EQ(r.speakers[0].score.score, 0.0);
  EXPECT_NEAR(r.average_score, 1.0 / 3.0, 1e-12);
}

TEST_F(HarnessFixture, InitFailureAborts) {
  FakeSystem sys;
  sys.fail_init = true;
  EXPECT_KWS_ERROR(RunTask(manifest_, sys, Budget{}, Options()),
                   ErrorCode::kSystemCrashed);
}

TEST_F(HarnessFixture, RtfExcludesEnrollment) {
  FakeSystem sys;
  sys.enroll_sleep = 0.2;
  const ScoreReport r = RunTask(manifest_, sys, Budget{}, Options());
  EXPECT_LT(r.rtf, 0.02);
  EXPECT_GE(r.enroll_seconds, 0.6);
}

TEST_F(HarnessFixture, SpaceBudgetExceeded) {
  FakeSystem sys;
  sys.write_bytes_in_enroll = 4096;
  Budget b;
  b.space_bytes = 1000;
  const ScoreReport r = RunTask(manifest_, sys, b, Options());
  for (const auto& s : r.speakers) {
    EXPECT_EQ(s.enroll.status, PhaseStatus::kSpaceExceeded);
    EXPECT_EQ(s.score.n_missing, 3u);
  }
}

TEST_F(HarnessFixture, ParallelSpeakersMatchSerial) {
  FakeSystem sys;
  sys.fail_enroll_for = "spk2";
  RunOptions o = Options();
  const ScoreReport serial = RunTask(manifest_, sys, Budget{}, o);
  o.jobs = 3;
  o.workdir = dir_ / "work2";
  const ScoreReport parallel = RunTask(manifest_, sys, Budget{}, o);
  ASSERT_EQ(serial.speakers.size(), parallel.speakers.size());
  for (std::size_t i = 0; i < serial.speakers.size(); ++i) {
    EXPECT_EQ(serial.speakers[i].score.speaker_id,
              parallel.speakers[i].score.speaker_id);
    EXPECT_EQ(serial.speakers[i].predictions, parallel.speakers[i].predictions);
  }
  EXPECT_EQ(serial.average_score, parallel.average_score);
}

TEST_F(HarnessFixture, ExternalScriptDirProtocol) {
  const fs::path sys = dir_ / "sys";
  fs::create_directories(sys);
  testing::WriteText(sys / "initialize.sh", "echo ok > \"$1/init.done\"\n");
  testing::WriteText(sys / "enrollment.sh",
                     "ls \"$3\" > \"$1/$2.enrolled\"\n");
  testing::WriteText(
      sys / "predict.sh",
      "while read p; do u=$(basename \"$p\" .wav); case $u in pos*) echo \"$u 1\";; "
      "*) echo \"$u 0\";; esac; done < \"$3\" > \"$4\"\n");
  auto ext = ExternalSystem::FromScriptDir(sys);
  const ScoreReport r = RunTask(manifest_, *ext, Budget{}, Options());
  EXPECT_EQ(r.average_score, 0.0);
  EXPECT_TRUE(fs::exists(dir_ / "work" / "init.done"));
  EXPECT_TRUE(fs::exists(dir_ / "work" / "spk0.enrolled"));
  EXPECT_KWS_ERROR(ExternalSystem::FromScriptDir(dir_ / "nothing"),
                   ErrorCode::kLayout);
}

TEST_F(HarnessFixture, ExternalPredictCrashKeepsFinishedLines) {
  const fs::path exe = dir_ / "fake.sh";
  testing::WriteText(exe,
                     "#!/bin/sh\n"
                     "case $1 in\n"
                     "predict) printf 'neg_a 0\\npos_a 1\\nneg_b' > \"$5\"; exit 1;;\n"
                     "esac\n");
  fs::permissions(exe, fs::perms::owner_all);
  auto ext = ExternalSystem::FromExecutable(exe.string());
  const ScoreReport r = RunTask(manifest_, *ext, Budget{}, Options());
  for (const auto& s : r.speakers) {
    ASSERT_TRUE(s.predict);
    EXPECT_EQ(s.predict->status, PhaseStatus::kFailed);
    EXPECT_EQ(s.score.n_missing, 1u);
    EXPECT_DOUBLE_EQ(s.score.score, 0.0);
  }
}

TEST_F(HarnessFixture, ReportFormats) {
  FakeSystem sys;
  sys.fail_enroll_for = "spk0";
  const ScoreReport r = RunTask(manifest_, sys, Budget{}, Options());
  double sum = 0.0;
  for (const auto& s : r.speakers) sum += s.score.score;
  EXPECT_NEAR(r.average_score, sum / 3.0, 1e-12);
  WriteReport(r, dir_ / "report.txt");
  const std::string kv = testing::ReadText(dir_ / "report.txt");
  EXPECT_EQ(std::count(kv.begin(), kv.end(), '\n'), 4);
  EXPECT_NE(kv.find("speaker=spk0 "), std::string::npos);
  EXPECT_NE(kv.find("aggregate=1 speakers=3 "), std::string::npos);
  EXPECT_NE(kv.find("predict_status=skipped"), std::string::npos);
  const std::string table = FormatReportTable(r);
  EXPECT_NE(table.find("average score 0.3333"), std::string::npos) << table;
}

TEST_F(HarnessFixture, BuiltinCooperativeDeadline) {
  BuiltinSystem sys{DetectorConfig{}};
  Budget b;
  b.enroll_seconds_per_speaker = 1e-9;
  const ScoreReport r = RunTask(manifest_, sys, b, Options());
  for (const auto& s : r.speakers) {
    EXPECT_EQ(s.enroll.status, PhaseStatus::kTimedOut);
    EXPECT_EQ(s.score.n_missing, 3u);
  }
}

}  // namespace
}  // namespace autokws
