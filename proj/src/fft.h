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

#ifndef AUTOKWS_SRC_FFT_H_
#define AUTOKWS_SRC_FFT_H_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace autokws::internal {

// Real-input FFT of a fixed size backed by FFTW. Plans are created under a
// global lock (the FFTW planner is not thread-safe); Forward/Inverse may be
// called concurrently on distinct objects.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }

  // `in` is zero-padded or truncated to size(); returns n/2 + 1 bins.
  std::vector<std::complex<double>> Forward(std::span<const double> in);
  // Unnormalized inverse: Inverse(Forward(x)) == n * x.
  std::vector<double> Inverse(std::span<const std::complex<double>> bins);

 private:
  std::size_t n_;
  double* real_buf_;
  void* complex_buf_;
  void* forward_plan_;
  void* inverse_plan_;
};

std::size_t NextPowerOfTwo(std::size_t n);

// Full linear convolution, length a.size() + b.size() - 1.
std::vector<double> Convolve(std::span<const double> a,
                             std::span<const double> b);

}  // namespace autokws::internal

#endif  // AUTOKWS_SRC_FFT_H_
