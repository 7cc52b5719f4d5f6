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

#include <random>

#include <gtest/gtest.h>

#include "autokws/file_util.h"
#include "test_util.h"

namespace autokws {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

TEST(ParseUttLines, TwoRecords) {
  const auto v = ParseUttLines("utt1 1\nutt2 0\n", "t");
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0], (LabeledUtt{"utt1", 1}));
  EXPECT_EQ(v[1], (LabeledUtt{"utt2", 0}));
  EXPECT_TRUE(ParseUttLines("", "t").empty());
}

TEST(ParseUttLines, StrictGrammar) {
  EXPECT_KWS_ERROR(ParseUttLines("utt1 2\n", "t"), ErrorCode::kParse);
  EXPECT_KWS_ERROR(ParseUttLines("utt1 2", "t"), ErrorCode::kParse);
  EXPECT_KWS_ERROR(ParseUttLines("utt1  1\n", "t"), ErrorCode::kParse);
  EXPECT_KWS_ERROR(ParseUttLines("utt1\t1\n", "t"), ErrorCode::kParse);
  EXPECT_KWS_ERROR(ParseUttLines("utt1 1\r\n", "t"), ErrorCode::kParse);
  EXPECT_KWS_ERROR(ParseUttLines("utt1\n", "t"), ErrorCode::kParse);
  EXPECT_KWS_ERROR(ParseUttLines("\n", "t"), ErrorCode::kParse);
  EXPECT_KWS_ERROR(ParseUttLines("a 1\nb 0\na 0\n", "t"),
                   ErrorCode::kDuplicateUtt);
}

TEST(ParseUttLines, ErrorNamesLine) {
  try {
    ParseUttLines("a 1\nb 7\n", "labels.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("labels.txt:2"), std::string::npos)
        << e.what();
  }
}

TEST(ParseUttLines, PartialTail) {
  const auto v = ParseUttLines("a 1\nb 0\nc", "t", true);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[1].utt_id, "b");
  EXPECT_KWS_ERROR(ParseUttLines("a 1\nc", "t"), ErrorCode::kParse);
  // The last line without LF is dropped even if it looks complete.
  EXPECT_EQ(ParseUttLines("a 1\nb 1", "t", true).size(), 1u);
}

TEST(UttFiles, RandomRoundTrip) {
  TempDir dir;
  std::mt19937_64 rng(71);
  std::vector<LabeledUtt> labels;
  std::vector<PredictionRecord> preds;
  for (int i = 0; i < 1000; ++i) {
    const std::string id = "u" + std::to_string(rng() % 1000000) + "_" +
                           std::to_string(i);
    labels.push_back({id, static_cast<int>(rng() % 2)});
    preds.push_back({id, static_cast<int>(rng() % 2), false});
  }
  WriteLabels(labels, dir / "labels.txt");
  WritePredictions(preds, dir / "preds.txt");
  EXPECT_EQ(ReadLabels(dir / "labels.txt"), labels);
  EXPECT_EQ(ReadPredictions(dir / "preds.txt"), preds);
  EXPECT_EQ(ReadFileBytes(dir / "labels.txt"), FormatUttLines(labels));
}

TEST(UttFiles, MissingPredictionsWrittenAsZero) {
  TempDir dir;
  WritePredictions({{"a", 0, true}, {"b", 1, false}}, dir / "p.txt");
  EXPECT_EQ(testing::ReadText(dir / "p.txt"), "a 0\nb 1\n");
}

class LayoutFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    std::vector<testing::MiniSpeaker> spks(2);
    for (int s = 0; s < 2; ++s) {
      spks[s].id = s == 0 ? "zeta" : "alpha";
      spks[s].enroll = {testing::Silence(0.05), testing::Silence(0.05)};
      spks[s].tests = {{"t1", testing::Silence(0.05), 1},
                       {"t2", testing::Silence(0.05), 0}};
    }
    testing::WriteTask(dir_.path(), spks);
  }
  TempDir dir_;
};

TEST_F(LayoutFixture, LoadsSortedSpeakers) {
  testing::WriteText(dir_ / "README", "stray file at root");
  const TaskManifest m = LoadTaskManifest(dir_.path());
  ASSERT_EQ(m.speakers.size(), 2u);
  EXPECT_EQ(m.speakers[0].speaker_id, "alpha");
  EXPECT_EQ(m.speakers[1].speaker_id, "zeta");
  EXPECT_EQ(m.speakers[0].labels_path, dir_.path() / "alpha" / "labels.txt");
}

TEST_F(LayoutFixture, UnlabeledWavIsLayoutError) {
  WriteWav(testing::Silence(0.05), dir_.path() / "alpha" / "test" / "t3.wav");
  EXPECT_KWS_ERROR(LoadTaskManifest(dir_.path()), ErrorCode::kLayout);
}

TEST_F(LayoutFixture, LabelWithoutWavIsLayoutError) {
  testing::WriteText(dir_.path() / "zeta" / "labels.txt", "t1 1\nt2 0\nt9 1\n");
  EXPECT_KWS_ERROR(LoadTaskManifest(dir_.path()), ErrorCode::kLayout);
}

TEST_F(LayoutFixture, MissingPiecesAreLayoutErrors) {
  fs::remove(dir_.path() / "zeta" / "labels.txt");
  EXPECT_KWS_ERROR(LoadTaskManifest(dir_.path()), ErrorCode::kLayout);
  TempDir empty;
  EXPECT_KWS_ERROR(LoadTaskManifest(empty.path()), ErrorCode::kLayout);
  EXPECT_KWS_ERROR(LoadTaskManifest(empty / "absent"), ErrorCode::kLayout);
}

TEST_F(LayoutFixture, BadLabelGrammarIsLayoutError) {
  testing::WriteText(dir_.path() / "zeta" / "labels.txt", "t1 1\nt2 x\n");
  EXPECT_KWS_ERROR(LoadTaskManifest(dir_.path()), ErrorCode::kLayout);
}

}  // namespace
}  // namespace autokws
