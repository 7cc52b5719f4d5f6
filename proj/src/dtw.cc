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

#include "autokws/dtw.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "autokws/error.h"

namespace autokws {

void DtwConfig::Validate() const {
  if (band_radius && *band_radius < 1) {
    throw Error(ErrorCode::kInvalidArgument, "band_radius must be >= 1");
  }
}

double SimilarityFromDistance(double normalized_distance) {
  return 1.0 - std::clamp(normalized_distance, 0.0, 1.0);
}

double FrameDistanceValue(std::span<const float> u, std::span<const float> v,
                          FrameDistance kind) {
  if (kind == FrameDistance::kEuclidean) {
    double acc = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      const double diff = static_cast<double>(u[k]) - v[k];
      acc += diff * diff;
    }
    return std::sqrt(acc);
  }
  if (std::equal(u.begin(), u.end(), v.begin(), v.end())) {
    double sq = 0.0;
    for (float x : u) sq += static_cast<double>(x) * x;
    return std::sqrt(sq) < 1e-12 ? 1.0 : 0.0;
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    dot += static_cast<double>(u[k]) * v[k];
    nu += static_cast<double>(u[k]) * u[k];
    nv += static_cast<double>(v[k]) * v[k];
  }
  nu = std::sqrt(nu);
  nv = std::sqrt(nv);
  if (nu < 1e-12 || nv < 1e-12) return 1.0;
  return std::clamp(1.0 - dot / (nu * nv), 0.0, 2.0);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void CheckInputs(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::kEmptySequence, "DTW input has no frames");
  }
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimMismatch, "feature dims " +
                                             std::to_string(a.dim()) + " vs " +
                                             std::to_string(b.dim()));
  }
}

std::vector<double> DistanceTable(const FeatureMatrix& a,
                                  const FeatureMatrix& b, FrameDistance kind) {
  std::vector<double> table(a.num_frames() * b.num_frames());
  for (std::size_t i = 0; i < a.num_frames(); ++i) {
    for (std::size_t j = 0; j < b.num_frames(); ++j) {
      table[i * b.num_frames() + j] = FrameDistanceValue(a.row(i), b.row(j), kind);
    }
  }
  return table;
}

enum Step : std::uint8_t { kStart = 0, kDiag = 1, kUp = 2, kLeft = 3, kNone = 4 };

struct Candidate {
  double value = kInf;
  std::size_t start = 0;
  Step step = kNone;

  bool BetterThan(const Candidate& o) const {
    return value < o.value || (value == o.value && start < o.start);
  }
};

// Minimizes sum(d - offset) over admissible paths; offset = 0 is plain DTW,
// offset = r turns the ratio problem into a shortest path (Dinkelbach).
class PathSearch {
 public:
  PathSearch(std::vector<double> dist, std::size_t rows, std::size_t cols,
             bool subsequence, std::optional<std::size_t> band)
      : dist_(std::move(dist)),
        rows_(rows),
        cols_(cols),
        subsequence_(subsequence),
        band_(band),
        steps_(rows * cols, kNone) {}

  Alignment Run(double offset) {
    std::vector<Candidate> prev(cols_), cur(cols_);
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < cols_; ++j) {
        Candidate best;
        if (Allowed(i, j)) {
          const double local = d(i, j) - offset;
          auto consider = [&](const Candidate& from, Step step) {
            if (from.step == kNone) return;
            Candidate c{from.value + local, from.start, step};
            if (c.BetterThan(best)) best = c;
          };
          if (i > 0 && j > 0) consider(prev[j - 1], kDiag);
          if (i > 0) consider(prev[j], kUp);
          if (j > 0) consider(cur[j - 1], kLeft);
          if (i == 0 && (j == 0 || subsequence_)) {
            Candidate fresh{local, j, kStart};
            if (fresh.BetterThan(best)) best = fresh;
          }
        }
        cur[j] = best;
        steps_[i * cols_ + j] = best.step;
      }
      std::swap(prev, cur);
    }

    std::size_t end_col = cols_ - 1;
    if (subsequence_) {
      Candidate best;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (prev[j].step != kNone && prev[j].BetterThan(best)) {
          best = prev[j];
          end_col = j;
        }
      }
    }
    return Backtrack(end_col);
  }

 private:
  double d(std::size_t i, std::size_t j) const { return dist_[i * cols_ + j]; }

  bool Allowed(std::size_t i, std::size_t j) const {
    if (!band_) return true;
    const std::size_t diff = i > j ? i - j : j - i;
    return diff <= *band_;
  }

  Alignment Backtrack(std::size_t end_col) const {
    Alignment out;
    std::size_t i = rows_ - 1, j = end_col;
    if (steps_[i * cols_ + j] == kNone) {
      throw Error(ErrorCode::kInvalidArgument, "no admissible warping path");
    }
    while (true) {
      out.path.emplace_back(i, j);
      const Step s = steps_[i * cols_ + j];
      if (s == kStart) break;
      if (s == kDiag) {
        --i;
        --j;
      } else if (s == kUp) {
        --i;
      } else {
        --j;
      }
    }
    std::reverse(out.path.begin(), out.path.end());
    for (const auto& [pi, pj] : out.path) out.cost += d(pi, pj);
    out.length = out.path.size();
    return out;
  }

  std::vector<double> dist_;
  std::size_t rows_, cols_;
  bool subsequence_;
  std::optional<std::size_t> band_;
  std::vector<Step> steps_;
};

bool SegmentBefore(const Alignment& a, const Alignment& b) {
  const auto key = [](const Alignment& x) {
    return std::make_pair(x.path.front().second, x.path.back().second);
  };
  return key(a) < key(b);
}

// Parametric iteration for min cost/length: each round solves the shortest
// path for sum(d - r) with r the best ratio so far; the ratio strictly
// decreases until no path beats it.
Alignment MinimizeAverage(PathSearch& search) {
  Alignment best = search.Run(0.0);
  double ratio = best.normalized();
  for (int iter = 0; iter < 100; ++iter) {
    Alignment cand = search.Run(ratio);
    const double r = cand.normalized();
    if (r < ratio) {
      best = std::move(cand);
      ratio = r;
    } else {
      if (r == ratio && SegmentBefore(cand, best)) best = std::move(cand);
      break;
    }
  }
  return best;
}

}  // namespace

Alignment DtwAlign(const FeatureMatrix& a, const FeatureMatrix& b,
                   const DtwConfig& config) {
  config.Validate();
  CheckInputs(a, b);
  std::optional<std::size_t> band;
  if (config.band_radius) {
    const std::size_t ta = a.num_frames(), tb = b.num_frames();
    band = std::max<std::size_t>(static_cast<std::size_t>(*config.band_radius),
                                 ta > tb ? ta - tb : tb - ta);
  }
  PathSearch search(DistanceTable(a, b, config.distance), a.num_frames(),
                    b.num_frames(), /*subsequence=*/false, band);
  return config.normalize_by_path_length ? MinimizeAverage(search)
                                         : search.Run(0.0);
}

double DtwFull(const FeatureMatrix& a, const FeatureMatrix& b,
               const DtwConfig& config) {
  const Alignment al = DtwAlign(a, b, config);
  return config.normalize_by_path_length ? al.normalized() : al.cost;
}

MatchResult SlnDtw(const FeatureMatrix& templ, const FeatureMatrix& test,
                   const DtwConfig& config) {
  config.Validate();
  CheckInputs(templ, test);
  if (templ.num_frames() < 2) {
    throw Error(ErrorCode::kEmptySequence,
                "SLN-DTW template needs >= 2 frames");
  }
  PathSearch search(DistanceTable(templ, test, config.distance),
                    templ.num_frames(), test.num_frames(),
                    /*subsequence=*/true, std::nullopt);
  const Alignment al = MinimizeAverage(search);
  MatchResult r;
  r.normalized_distance = al.normalized();
  r.similarity = SimilarityFromDistance(r.normalized_distance);
  r.start_frame = al.path.front().second;
  r.end_frame = al.path.back().second;
  return r;
}

MatchResult ScanSegments(const FeatureMatrix& templ, const FeatureMatrix& test,
                         const DtwConfig& config, std::size_t window_frames,
                         std::size_t hop_frames) {
  CheckInputs(templ, test);
  if (window_frames == 0 || 2 * window_frames < templ.num_frames()) {
    throw Error(ErrorCode::kWindowTooSmall,
                "window of " + std::to_string(window_frames) +
                    " frames is under half the template length " +
                    std::to_string(templ.num_frames()));
  }
  if (hop_frames == 0) {
    throw Error(ErrorCode::kInvalidArgument, "hop_frames must be >= 1");
  }
  DtwConfig cfg = config;
  cfg.normalize_by_path_length = true;

  const std::size_t T = test.num_frames();
  std::vector<std::size_t> starts;
  if (T <= window_frames) {
    starts.push_back(0);
    window_frames = T;
  } else {
    for (std::size_t s = 0; s + window_frames <= T; s += hop_frames) {
      starts.push_back(s);
    }
    if (starts.back() + window_frames < T) starts.push_back(T - window_frames);
  }

  MatchResult best;
  best.normalized_distance = kInf;
  for (std::size_t s : starts) {
    const double dist =
        DtwFull(templ, test.Slice(s, s + window_frames), cfg);
    if (dist < best.normalized_distance) {
      best.normalized_distance = dist;
      best.start_frame = s;
      best.end_frame = s + window_frames - 1;
    }
  }
  best.similarity = SimilarityFromDistance(best.normalized_distance);
  return best;
}

namespace {

struct OracleSearch {
  const FeatureMatrix& a;
  const FeatureMatrix& b;
  FrameDistance kind;
  bool subsequence;
  bool normalize;
  double best = kInf;

  void Visit(std::size_t i, std::size_t j, double cost, std::size_t len) {
    cost += FrameDistanceValue(a.row(i), b.row(j), kind);
    ++len;
    const std::size_t last_i = a.num_frames() - 1;
    const std::size_t last_j = b.num_frames() - 1;
    if (i == last_i && (subsequence || j == last_j)) {
      const double value = normalize ? cost / static_cast<double>(len) : cost;
      best = std::min(best, value);
    }
    if (i < last_i && j < last_j) Visit(i + 1, j + 1, cost, len);
    if (i < last_i) Visit(i + 1, j, cost, len);
    if (j < last_j) Visit(i, j + 1, cost, len);
  }
};

}  // namespace

double DtwOracle(const FeatureMatrix& a, const FeatureMatrix& b,
                 bool subsequence, const DtwConfig& config) {
  CheckInputs(a, b);
  if (a.num_frames() * b.num_frames() > kDtwOracleMaxCells) {
    throw Error(ErrorCode::kTooLarge,
                "oracle limited to " + std::to_string(kDtwOracleMaxCells) +
                    " cells, got " +
                    std::to_string(a.num_frames() * b.num_frames()));
  }
  OracleSearch search{a, b, config.distance, subsequence,
                      subsequence || config.normalize_by_path_length};
  if (subsequence) {
    for (std::size_t s = 0; s < b.num_frames(); ++s) search.Visit(0, s, 0.0, 0);
  } else {
    search.Visit(0, 0, 0.0, 0);
  }
  return search.best;
}

}  // namespace autokws
