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

#ifndef FR_EVALKIT_HPP
#define FR_EVALKIT_HPP

#include <string>
#include <vector>

#include "fr/common.hpp"
#include "fr/mel.hpp"

namespace fr {

// RMS of elementwise log-mel differences.
double log_spectral_distance(const MelSpectrogram& a, const MelSpectrogram& b);
double log_spectral_distance(const Mat& a, const Mat& b);

// 10 log10(|ref|^2 / |ref - est|^2), capped at 99 dB for exact matches.
double waveform_snr(const Waveform& reference, const Waveform& estimate);

// Short-time objective intelligibility: 10 kHz front end, silent-frame
// removal, 15 one-third-octave bands from 150 Hz, 384 ms segments with
// normalization and clipping, per-segment band correlations averaged.
double stoi(const Waveform& clean, const Waveform& processed);

struct EvalItem {
  std::string name;
  Waveform clean;
  Waveform degraded;
  Waveform restored;
};

struct ItemReport {
  std::string name;
  double lsd_degraded, lsd_restored, lsd_delta;
  double snr_degraded, snr_restored, snr_delta;
  double stoi_degraded, stoi_restored, stoi_delta;
};

struct EvalReport {
  std::vector<ItemReport> items;
  ItemReport mean;  // name = "mean"

  // Deterministic JSON with stable field ordering.
  std::string serialize() const;
};

EvalReport evaluate_set(const std::vector<EvalItem>& items,
                        const MelConfig& mel_cfg);

}  // namespace fr

#endif  // FR_EVALKIT_HPP
