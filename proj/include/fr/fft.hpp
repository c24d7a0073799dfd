// Copyright 2026 The FlowRestore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FR_FFT_HPP
#define FR_FFT_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace fr {

using cdouble = std::complex<double>;

// In-place iterative radix-2 FFT. data.size() must be a power of two.
void fft(std::vector<cdouble>& data, bool inverse);

// Forward FFT of a real signal padded/truncated to n (power of two);
// returns the n/2+1 non-redundant bins.
std::vector<cdouble> rfft(const std::vector<double>& x, std::size_t n);

// Inverse of rfft: n/2+1 bins -> real signal of length n.
std::vector<double> irfft(const std::vector<cdouble>& bins, std::size_t n);

std::size_t next_pow2(std::size_t n);

// Full linear convolution via FFT, output length a.size() + b.size() - 1.
std::vector<double> fft_convolve(const std::vector<double>& a,
                                 const std::vector<double>& b);

}  // namespace fr

#endif  // FR_FFT_HPP
