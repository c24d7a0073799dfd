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

#ifndef FR_MEL_HPP
#define FR_MEL_HPP

#include <cstdint>
#include <vector>

#include "fr/common.hpp"

namespace fr {

struct MelConfig {
  int sample_rate_hz = 16000;
  int n_fft = 1024;  // window size, samples; must be a power of two
  int hop = 256;
  int n_mels = 80;
  double f_min_hz = 0.0;
  double f_max_hz = 8000.0;
  double log_floor = 1e-5;  // clamp before taking the natural log

  void validate() const;
};

// Log-mel energies, natural log, floored at ln(log_floor). Rows = frames.
struct MelSpectrogram {
  Mat frames;  // T x n_mels
  MelConfig config;

  Eigen::Index num_frames() const { return frames.rows(); }
};

// HTK mel scale helpers.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filterbank, n_mels x (n_fft/2 + 1).
Mat mel_filterbank(const MelConfig& cfg);

// Center frequency (Hz) of each mel filter; used by tests as an oracle.
std::vector<double> mel_center_frequencies(const MelConfig& cfg);

// T = 1 + floor((len - n_fft) / hop); Hann window, power spectrum,
// mel projection, floor, natural log.
MelSpectrogram mel_spectrogram(const Waveform& wave, const MelConfig& cfg);

// Filterbank pseudo-inverse to linear magnitudes, then Griffin-Lim phase
// recovery with a seeded random initial phase. Output length is
// (T-1)*hop + n_fft.
Waveform invert_mel(const MelSpectrogram& mel, int iterations, uint64_t seed);

}  // namespace fr

#endif  // FR_MEL_HPP
