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

#include "fft.h"

#include <algorithm>
#include <cstring>
#include <mutex>

#include <fftw3.h>

namespace autokws::internal {

namespace {

std::mutex& PlannerMutex() {
  static std::mutex m;
  return m;
}

// Below this many multiply-adds the direct sum is used.
constexpr std::size_t kDirectConvolutionLimit = 1u << 22;

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  real_buf_ = fftw_alloc_real(n_);
  auto* cbuf = fftw_alloc_complex(n_ / 2 + 1);
  complex_buf_ = cbuf;
  std::lock_guard<std::mutex> lock(PlannerMutex());
  forward_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), real_buf_, cbuf,
                                       FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_), cbuf, real_buf_,
                                       FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  }
  fftw_free(real_buf_);
  fftw_free(complex_buf_);
}

std::vector<std::complex<double>> RealFft::Forward(
    std::span<const double> in) {
  const std::size_t copy = std::min(in.size(), n_);
  std::copy_n(in.begin(), copy, real_buf_);
  std::fill(real_buf_ + copy, real_buf_ + n_, 0.0);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  auto* cbuf = static_cast<fftw_complex*>(complex_buf_);
  std::vector<std::complex<double>> out(n_ / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = {cbuf[k][0], cbuf[k][1]};
  }
  return out;
}

std::vector<double> RealFft::Inverse(
    std::span<const std::complex<double>> bins) {
  auto* cbuf = static_cast<fftw_complex*>(complex_buf_);
  for (std::size_t k = 0; k < n_ / 2 + 1; ++k) {
    const auto v = k < bins.size() ? bins[k] : std::complex<double>{};
    cbuf[k][0] = v.real();
    cbuf[k][1] = v.imag();
  }
  // c2r destroys its input; the buffer is refilled on every call.
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  return std::vector<double>(real_buf_, real_buf_ + n_);
}

std::size_t NextPowerOfTwo(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> Convolve(std::span<const double> a,
                             std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  std::vector<double> out(out_len, 0.0);
  if (a.size() * b.size() <= kDirectConvolutionLimit) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double w = b[j];
      if (w == 0.0) continue;
      for (std::size_t i = 0; i < a.size(); ++i) out[i + j] += a[i] * w;
    }
    return out;
  }
  RealFft fft(NextPowerOfTwo(out_len));
  auto fa = fft.Forward(a);
  const auto fb = fft.Forward(b);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  const auto full = fft.Inverse(fa);
  const double inv = 1.0 / static_cast<double>(fft.size());
  for (std::size_t i = 0; i < out_len; ++i) out[i] = full[i] * inv;
  return out;
}

}  // namespace autokws::internal
