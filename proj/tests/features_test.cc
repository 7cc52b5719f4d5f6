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

#include "autokws/features.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "autokws/file_util.h"
#include "test_util.h"

namespace autokws {
namespace {

using testing::TempDir;

TEST(NumFrames, FrameCountFormula) {
  EXPECT_EQ(NumFrames(16000, 400, 160), 98u);
  EXPECT_EQ(NumFrames(400, 400, 160), 1u);
  EXPECT_EQ(NumFrames(399, 400, 160), 0u);
  EXPECT_EQ(NumFrames(560, 400, 160), 2u);
}

TEST(ExtractMfcc, OneSecondGives98By40) {
  std::mt19937_64 rng(1);
  const FeatureMatrix m =
      ExtractMfcc(testing::WhiteNoise(rng, 1.0, 0.1), FeatureConfig{});
  EXPECT_EQ(m.num_frames(), 98u);
  EXPECT_EQ(m.dim(), 40u);
  for (float v : m.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(ExtractMfcc, CmvnZeroMeanPerDim) {
  std::mt19937_64 rng(2);
  const AudioClip clip = Splice(testing::Sine(440, 0.4, 0.3),
                                         testing::WhiteNoise(rng, 0.4, 0.05));
  const FeatureMatrix m = ExtractMfcc(clip, FeatureConfig{});
  for (std::size_t d = 0; d < m.dim(); ++d) {
    double mean = 0.0;
    for (std::size_t t = 0; t < m.num_frames(); ++t) mean += m(t, d);
    EXPECT_LT(std::abs(mean / m.num_frames()), 1e-6) << "dim " << d;
  }
}

TEST(ExtractMfcc, SilenceIsFinite) {
  const FeatureMatrix m = ExtractMfcc(testing::Silence(0.3), FeatureConfig{});
  for (float v : m.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(ExtractMfcc, StationarySineGivesStableMeanFrames) {
  FeatureConfig cfg;
  cfg.apply_cmvn = false;
  const AudioClip two = testing::Sine(1000.0, 2.0, 0.5);
  const auto s = two.samples();
  const AudioClip first({s.begin(), s.begin() + 16000}, kSampleRate);
  const AudioClip second({s.begin() + 16000, s.end()}, kSampleRate);
  auto mean_frame = [&](const AudioClip& c) {
    const FeatureMatrix m = ExtractMfcc(c, cfg);
    std::vector<double> mean(m.dim(), 0.0);
    for (std::size_t t = 0; t < m.num_frames(); ++t) {
      for (std::size_t d = 0; d < m.dim(); ++d) mean[d] += m(t, d);
    }
    return mean;
  };
  EXPECT_GT(CosineSimilarity(mean_frame(first), mean_frame(second)), 0.99);
}

TEST(ExtractMfcc, TooShortAndBadConfig) {
  EXPECT_KWS_ERROR(ExtractMfcc(testing::Silence(0.02), FeatureConfig{}),
                   ErrorCode::kTooShort);
  FeatureConfig bad;
  bad.num_cepstra = 41;
  EXPECT_KWS_ERROR(ExtractMfcc(testing::Silence(1.0), bad),
                   ErrorCode::kInvalidArgument);
  bad = FeatureConfig{};
  bad.frame_shift_seconds = 0.05;
  EXPECT_KWS_ERROR(bad.Validate(), ErrorCode::kInvalidArgument);
  bad = FeatureConfig{};
  bad.pre_emphasis = 1.0;
  EXPECT_KWS_ERROR(bad.Validate(), ErrorCode::kInvalidArgument);
}

TEST(ExtractMfcc, Deterministic) {
  std::mt19937_64 rng(3);
  const AudioClip c = testing::WhiteNoise(rng, 0.5, 0.1);
  EXPECT_EQ(ExtractMfcc(c, FeatureConfig{}), ExtractMfcc(c, FeatureConfig{}));
}

TEST(ApplyCmvn, ConstantDimensionOnlyCentered) {
  const FeatureMatrix m = FeatureMatrix::FromRows({{1, 2}, {1, 4}, {1, 6}});
  const FeatureMatrix n = ApplyCmvn(m);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(n(t, 0), 0.0f);
  EXPECT_NEAR(n(0, 1), -std::sqrt(1.5), 1e-6);
  EXPECT_NEAR(n(2, 1), std::sqrt(1.5), 1e-6);
}

TEST(FeatureMatrix, SliceAndConcat) {
  const FeatureMatrix m = FeatureMatrix::FromRows({{1}, {2}, {3}});
  const FeatureMatrix s = m.Slice(1, 3);
  EXPECT_EQ(s, FeatureMatrix::FromRows({{2}, {3}}));
  const std::vector<FeatureMatrix> parts = {m.Slice(0, 1), s};
  EXPECT_EQ(ConcatFrames(parts), m);
  const std::vector<FeatureMatrix> ragged = {m, FeatureMatrix(1, 2)};
  EXPECT_KWS_ERROR(ConcatFrames(ragged), ErrorCode::kDimMismatch);
  EXPECT_KWS_ERROR(FeatureMatrix::FromRows({{1, 2}, {3}}),
                   ErrorCode::kDimMismatch);
}

TEST(FeatureFile, SmallRoundTrip) {
  TempDir dir;
  const FeatureMatrix m =
      FeatureMatrix::FromRows({{1.5, -2.0}, {0.25, 3.0}, {7.0, -0.125}});
  WriteFeatures(m, dir / "m.kwsf");
  EXPECT_EQ(ReadFeatures(dir / "m.kwsf"), m);
}

TEST(FeatureFile, MfccRoundTripIsBitExact) {
  TempDir dir;
  std::mt19937_64 rng(4);
  const FeatureMatrix m =
      ExtractMfcc(testing::WhiteNoise(rng, 1.0, 0.1), FeatureConfig{});
  ASSERT_EQ(m.num_frames(), 98u);
  WriteFeatures(m, dir / "m.kwsf");
  const std::string bytes = ReadFileBytes(dir / "m.kwsf");
  EXPECT_EQ(bytes.size(), 13u + 98u * 40u * 4u);
  EXPECT_EQ(bytes, EncodeFeatures(m));
  const FeatureMatrix back = ReadFeatures(dir / "m.kwsf");
  EXPECT_EQ(back, m);
  EXPECT_EQ(EncodeFeatures(back), bytes);
}

TEST(FeatureFile, RejectsMalformed) {
  TempDir dir;
  std::string bytes = EncodeFeatures(FeatureMatrix::FromRows({{1, 2}}));
  WriteFileAtomic(dir / "nomagic.kwsf", "XXXX" + bytes.substr(4));
  EXPECT_KWS_ERROR(ReadFeatures(dir / "nomagic.kwsf"), ErrorCode::kFormat);
  WriteFileAtomic(dir / "trunc.kwsf", bytes.substr(0, bytes.size() - 1));
  EXPECT_KWS_ERROR(ReadFeatures(dir / "trunc.kwsf"), ErrorCode::kFormat);
  WriteFileAtomic(dir / "extra.kwsf", bytes + "x");
  EXPECT_KWS_ERROR(ReadFeatures(dir / "extra.kwsf"), ErrorCode::kFormat);
  std::string badver = bytes;
  badver[4] = 2;
  WriteFileAtomic(dir / "ver.kwsf", badver);
  EXPECT_KWS_ERROR(ReadFeatures(dir / "ver.kwsf"), ErrorCode::kFormat);
}

TEST(FeatureFile, ReadsCsv) {
  TempDir dir;
  testing::WriteText(dir / "m.csv", "1,2\n3.5,-4\n");
  EXPECT_EQ(ReadFeatures(dir / "m.csv"),
            FeatureMatrix::FromRows({{1, 2}, {3.5, -4}}));
  testing::WriteText(dir / "bad.csv", "1,2\n3\n");
  EXPECT_KWS_ERROR(ReadFeatures(dir / "bad.csv"), ErrorCode::kFormat);
}

TEST(SpeakerStatsEmbedding, IdenticalFramesHaveZeroStdPart) {
  const FeatureMatrix m = FeatureMatrix::FromRows({{3, 4}, {3, 4}, {3, 4}});
  const SpeakerEmbedding e = SpeakerStatsEmbedding(m);
  ASSERT_EQ(e.vector.size(), 4u);
  EXPECT_NEAR(e.vector[0], 0.6, 1e-12);
  EXPECT_NEAR(e.vector[1], 0.8, 1e-12);
  EXPECT_EQ(e.vector[2], 0.0);
  EXPECT_EQ(e.vector[3], 0.0);
  EXPECT_KWS_ERROR(SpeakerStatsEmbedding(FeatureMatrix::FromRows({{1}})),
                   ErrorCode::kTooShort);
}

TEST(SpeakerStatsEmbedding, UnitNorm) {
  std::mt19937_64 rng(5);
  const SpeakerEmbedding e =
      SpeakerStatsEmbedding(testing::RandomMatrix(rng, 20, 8));
  double sq = 0.0;
  for (double x : e.vector) sq += x * x;
  EXPECT_NEAR(sq, 1.0, 1e-12);
  EXPECT_NEAR(CosineSimilarity(e.vector, e.vector), 1.0, 1e-12);
}

TEST(CosineSimilarity, Basics) {
  EXPECT_NEAR(CosineSimilarity(std::vector<double>{1, 0},
                               std::vector<double>{0, 1}),
              0.0, 1e-15);
  EXPECT_NEAR(CosineSimilarity(std::vector<double>{1, 1},
                               std::vector<double>{-2, -2}),
              -1.0, 1e-15);
  EXPECT_KWS_ERROR(CosineSimilarity(std::vector<double>{1},
                                    std::vector<double>{1, 2}),
                   ErrorCode::kDimMismatch);
}

}  // namespace
}  // namespace autokws
