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

#ifndef FR_DEGRADE_HPP
#define FR_DEGRADE_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fr/common.hpp"
#include "fr/mel.hpp"

namespace fr {

enum class DegKind {
  kReverb,
  kBandlimit,
  kBitcrush,
  kCompress,
  kDistort,
  kGain,
  kNoise,
};

enum class NoiseKind {
  kCity,
  kCrowd,
  kBabble,
  kNature,
  kOffice,
  kRestaurant,
  kWhite,
  kPink,
};

std::string to_string(DegKind k);
std::string to_string(NoiseKind k);
DegKind deg_kind_from_string(const std::string& s);
NoiseKind noise_kind_from_string(const std::string& s);

// One corruption step. Only the fields for `kind` are meaningful.
struct DegradationSpec {
  DegKind kind = DegKind::kGain;
  // kNoise
  NoiseKind noise_kind = NoiseKind::kWhite;
  double snr_db = 10.0;
  uint64_t noise_seed = 0;
  // kReverb
  double rt60_s = 0.3;
  uint64_t rir_seed = 0;
  // kBandlimit
  double cutoff_hz = 4000.0;
  // kBitcrush
  int bits = 8;
  // kCompress
  double threshold_db = -20.0;
  double ratio = 4.0;
  // kDistort
  double drive = 2.0;
  // kGain
  double gain_db = 0.0;
};

struct DegradationChain {
  std::vector<DegradationSpec> specs;
  uint64_t seed = 0;

  // One JSON record per chain; round-trips exactly for replay.
  std::string serialize() const;
  static DegradationChain deserialize(const std::string& text);
};

struct RandomDegradationPolicy {
  double p_reverb = 0.5;
  double p_bandlimit = 0.5;
  double p_bitcrush = 0.5;
  double p_compress = 0.5;
  double p_distort = 0.5;
  double p_gain = 0.5;
  double p_noise = 0.5;
  std::pair<double, double> snr_db_range{0.0, 25.0};
  std::pair<double, double> rt60_range{0.1, 1.2};
  std::pair<double, double> cutoff_hz_range{2000.0, 7000.0};
  std::pair<int, int> bits_range{4, 12};
  std::pair<double, double> threshold_db_range{-30.0, -10.0};
  std::pair<double, double> ratio_range{2.0, 8.0};
  std::pair<double, double> drive_range{1.0, 8.0};
  std::pair<double, double> gain_db_range{-12.0, 6.0};
  int max_chain_length = 7;

  void validate() const;
};

// Spectrogram-space masking parameters; applied during batch assembly,
// not in the waveform chain.
struct TfMaskConfig {
  int num_time_masks = 2;
  int num_freq_masks = 2;
  double max_time_frac = 0.1;
  double max_freq_frac = 0.1;
};

// Parametric noise generators, RMS-normalized to 0.1.
Waveform synth_noise(NoiseKind kind, int num_samples, int sample_rate_hz,
                     uint64_t seed);

// speech + g*noise with g chosen so the mixture hits snr_db exactly.
// Output is not clipped.
Waveform add_noise_at_snr(const Waveform& speech, const Waveform& noise,
                          double snr_db);

// Exponentially decaying Gaussian noise with unit direct path;
// length = rt60_s * sample_rate samples.
Waveform synth_rir(double rt60_s, int sample_rate_hz, uint64_t seed);

// Full convolution truncated to the input length, peak-normalized so
// max|out| == max|in|.
Waveform apply_reverb(const Waveform& speech, const Waveform& rir);

// Decimate to 2*cutoff then interpolate back; output length == input length.
Waveform bandlimit(const Waveform& speech, double cutoff_hz);

// Uniform mid-rise quantization to 2^bits levels over [-1, 1].
Waveform bitcrush(const Waveform& speech, int bits);

// Static dB-domain waveshaper: levels above threshold compressed by 1/ratio.
Waveform compress_dynamics(const Waveform& speech, double threshold_db,
                           double ratio);

// tanh(drive*x)/tanh(drive)
Waveform distort(const Waveform& speech, double drive);

Waveform gain(const Waveform& speech, double gain_db);

MelSpectrogram tf_mask(const MelSpectrogram& mel, int num_time_masks,
                       int num_freq_masks, double max_time_frac,
                       double max_freq_frac, uint64_t seed);

// Independent per-kind inclusion coin flips, then parameter draws; specs
// come out in the fixed canonical order reverb -> bandlimit -> bitcrush ->
// compress -> distort -> gain -> noise.
DegradationChain sample_chain(const RandomDegradationPolicy& policy,
                              uint64_t seed);

Waveform apply_chain(const Waveform& speech, const DegradationChain& chain);

}  // namespace fr

#endif  // FR_DEGRADE_HPP
