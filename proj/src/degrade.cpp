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

#include "fr/degrade.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "fr/fft.hpp"
#include "fr/rng.hpp"
#include "fr/wav.hpp"

namespace fr {

std::string to_string(DegKind k) {
  switch (k) {
    case DegKind::kReverb: return "reverb";
    case DegKind::kBandlimit: return "bandlimit";
    case DegKind::kBitcrush: return "bitcrush";
    case DegKind::kCompress: return "compress";
    case DegKind::kDistort: return "distort";
    case DegKind::kGain: return "gain";
    case DegKind::kNoise: return "noise";
  }
  throw InvalidArgument("bad DegKind");
}

std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::kCity: return "city";
    case NoiseKind::kCrowd: return "crowd";
    case NoiseKind::kBabble: return "babble";
    case NoiseKind::kNature: return "nature";
    case NoiseKind::kOffice: return "office";
    case NoiseKind::kRestaurant: return "restaurant";
    case NoiseKind::kWhite: return "white";
    case NoiseKind::kPink: return "pink";
  }
  throw InvalidArgument("bad NoiseKind");
}

DegKind deg_kind_from_string(const std::string& s) {
  for (DegKind k : {DegKind::kReverb, DegKind::kBandlimit, DegKind::kBitcrush,
                    DegKind::kCompress, DegKind::kDistort, DegKind::kGain,
                    DegKind::kNoise}) {
    if (to_string(k) == s) return k;
  }
  throw FormatError("unknown degradation kind: " + s);
}

NoiseKind noise_kind_from_string(const std::string& s) {
  for (NoiseKind k :
       {NoiseKind::kCity, NoiseKind::kCrowd, NoiseKind::kBabble,
        NoiseKind::kNature, NoiseKind::kOffice, NoiseKind::kRestaurant,
        NoiseKind::kWhite, NoiseKind::kPink}) {
    if (to_string(k) == s) return k;
  }
  throw FormatError("unknown noise kind: " + s);
}

void RandomDegradationPolicy::validate() const {
  for (double p : {p_reverb, p_bandlimit, p_bitcrush, p_compress, p_distort,
                   p_gain, p_noise}) {
    if (p < 0.0 || p > 1.0) {
      throw InvalidArgument("policy: probability outside [0,1]");
    }
  }
  if (snr_db_range.first > snr_db_range.second ||
      rt60_range.first > rt60_range.second ||
      cutoff_hz_range.first > cutoff_hz_range.second ||
      bits_range.first > bits_range.second ||
      drive_range.first > drive_range.second ||
      gain_db_range.first > gain_db_range.second ||
      ratio_range.first > ratio_range.second ||
      threshold_db_range.first > threshold_db_range.second) {
    throw InvalidArgument("policy: empty parameter range");
  }
  if (max_chain_length < 1) throw InvalidArgument("policy: max_chain_length < 1");
}

// ---------------------------------------------------------------------------
// noise synthesis

namespace {

void normalize_rms(std::vector<double>& x, double target) {
  double r = rms(x);
  if (r < 1e-12) return;
  const double g = target / r;
  for (double& s : x) s *= g;
}

std::vector<double> white_noise(int n, Rng& rng) {
  std::vector<double> x(n);
  for (double& s : x) s = rng.normal();
  return x;
}

// Paul Kellet's economy pink filter; close enough to 1/f over the audio band.
std::vector<double> pink_noise(int n, Rng& rng) {
  std::vector<double> x(n);
  double b0 = 0, b1 = 0, b2 = 0;
  for (int i = 0; i < n; ++i) {
    const double w = rng.normal();
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    x[static_cast<std::size_t>(i)] = b0 + b1 + b2 + w * 0.1848;
  }
  return x;
}

void one_pole_lowpass(std::vector<double>& x, double cutoff_hz, int sr) {
  const double a = 1.0 - std::exp(-2.0 * M_PI * cutoff_hz / sr);
  double y = 0.0;
  for (double& s : x) {
    y += a * (s - y);
    s = y;
  }
}

// Sum of amplitude-modulated narrowband streams in the speech band.
std::vector<double> babble_noise(int n, int sr, int streams, Rng& rng) {
  std::vector<double> mix(n, 0.0);
  for (int s = 0; s < streams; ++s) {
    const double carrier = rng.uniform(300.0, 3400.0);
    auto band = white_noise(n, rng);
    one_pole_lowpass(band, 120.0, sr);  // ~240 Hz bandwidth after modulation
    auto env = white_noise(n, rng);
    one_pole_lowpass(env, 3.0, sr);  // syllabic-rate envelope
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (int i = 0; i < n; ++i) {
      const double c = std::cos(2.0 * M_PI * carrier * i / sr + phase);
      mix[static_cast<std::size_t>(i)] +=
          std::abs(env[static_cast<std::size_t>(i)]) *
          band[static_cast<std::size_t>(i)] * c;
    }
  }
  return mix;
}

std::vector<double> city_noise(int n, int sr, Rng& rng) {
  auto x = pink_noise(n, rng);
  normalize_rms(x, 1.0);
  // sparse transient bursts, ~2 per second
  const int bursts = std::max(1, static_cast<int>(2.0 * n / sr));
  for (int b = 0; b < bursts; ++b) {
    const int start = static_cast<int>(rng.next_below(static_cast<uint64_t>(n)));
    const int len = std::min(n - start, sr / 20);  // 50 ms
    const double amp = rng.uniform(2.0, 6.0);
    for (int i = 0; i < len; ++i) {
      const double decay = std::exp(-8.0 * i / len);
      x[static_cast<std::size_t>(start + i)] += amp * decay * rng.normal();
    }
  }
  return x;
}

std::vector<double> nature_noise(int n, int sr, Rng& rng) {
  auto x = pink_noise(n, rng);
  one_pole_lowpass(x, 800.0, sr);
  const double mod_hz = rng.uniform(0.1, 0.5);
  const double phase = rng.uniform(0.0, 2.0 * M_PI);
  for (int i = 0; i < n; ++i) {
    const double env = 0.6 + 0.4 * std::sin(2.0 * M_PI * mod_hz * i / sr + phase);
    x[static_cast<std::size_t>(i)] *= env;
  }
  return x;
}

}  // namespace

Waveform synth_noise(NoiseKind kind, int num_samples, int sample_rate_hz,
                     uint64_t seed) {
  if (num_samples <= 0) throw InvalidArgument("synth_noise: num_samples <= 0");
  if (sample_rate_hz <= 0) throw InvalidArgument("synth_noise: bad sample rate");
  Rng rng(Rng::mix(seed, static_cast<uint64_t>(kind) + 0x6e6f6973ULL));
  std::vector<double> x;
  switch (kind) {
    case NoiseKind::kWhite:
      x = white_noise(num_samples, rng);
      break;
    case NoiseKind::kPink:
      x = pink_noise(num_samples, rng);
      break;
    case NoiseKind::kBabble:
      x = babble_noise(num_samples, sample_rate_hz, 8, rng);
      break;
    case NoiseKind::kCrowd:
      x = babble_noise(num_samples, sample_rate_hz, 16, rng);
      break;
    case NoiseKind::kCity:
      x = city_noise(num_samples, sample_rate_hz, rng);
      break;
    case NoiseKind::kNature:
      x = nature_noise(num_samples, sample_rate_hz, rng);
      break;
    case NoiseKind::kOffice: {
      x = pink_noise(num_samples, rng);
      normalize_rms(x, 1.0);
      auto b = babble_noise(num_samples, sample_rate_hz, 8, rng);
      normalize_rms(b, 0.5);
      for (int i = 0; i < num_samples; ++i) {
        x[static_cast<std::size_t>(i)] += b[static_cast<std::size_t>(i)];
      }
      break;
    }
    case NoiseKind::kRestaurant: {
      x = pink_noise(num_samples, rng);
      normalize_rms(x, 1.0);
      auto b = babble_noise(num_samples, sample_rate_hz, 12, rng);
      normalize_rms(b, 1.5);
      for (int i = 0; i < num_samples; ++i) {
        x[static_cast<std::size_t>(i)] += b[static_cast<std::size_t>(i)];
      }
      break;
    }
  }
  normalize_rms(x, 0.1);
  return Waveform{std::move(x), sample_rate_hz};
}

Waveform add_noise_at_snr(const Waveform& speech, const Waveform& noise,
                          double snr_db) {
  if (speech.sample_rate_hz != noise.sample_rate_hz) {
    throw InvalidArgument("add_noise_at_snr: sample rate mismatch");
  }
  if (noise.samples.size() < speech.samples.size()) {
    throw InvalidArgument("add_noise_at_snr: noise shorter than speech");
  }
  const double rs = rms(speech.samples);
  double rn_acc = 0.0;
  for (std::size_t i = 0; i < speech.samples.size(); ++i) {
    rn_acc += noise.samples[i] * noise.samples[i];
  }
  const double rn = std::sqrt(rn_acc / static_cast<double>(speech.samples.size()));
  if (rs <= 0.0) throw InvalidArgument("add_noise_at_snr: zero-energy speech");
  if (rn <= 0.0) throw InvalidArgument("add_noise_at_snr: zero-energy noise");

  const double g = (rs / rn) * std::pow(10.0, -snr_db / 20.0);
  Waveform out;
  out.sample_rate_hz = speech.sample_rate_hz;
  out.samples.resize(speech.samples.size());
  for (std::size_t i = 0; i < speech.samples.size(); ++i) {
    out.samples[i] = speech.samples[i] + g * noise.samples[i];
  }
  return out;
}

Waveform synth_rir(double rt60_s, int sample_rate_hz, uint64_t seed) {
  if (rt60_s < 0.05 || rt60_s > 3.0) {
    throw InvalidArgument("synth_rir: rt60 outside [0.05, 3.0]");
  }
  const int len = static_cast<int>(rt60_s * sample_rate_hz);
  Rng rng(Rng::mix(seed, 0x726972ULL));
  Waveform h;
  h.sample_rate_hz = sample_rate_hz;
  h.samples.resize(static_cast<std::size_t>(len));
  const double decay = 6.908 / (rt60_s * sample_rate_hz);  // ln(10^3)
  h.samples[0] = 1.0;  // unit direct path
  for (int n = 1; n < len; ++n) {
    h.samples[static_cast<std::size_t>(n)] =
        std::exp(-decay * n) * rng.normal() * 0.25;
  }
  return h;
}

Waveform apply_reverb(const Waveform& speech, const Waveform& rir) {
  if (speech.sample_rate_hz != rir.sample_rate_hz) {
    throw InvalidArgument("apply_reverb: sample rate mismatch");
  }
  if (rir.samples.empty()) throw InvalidArgument("apply_reverb: empty rir");
  std::vector<double> conv;
  if (rir.samples.size() <= 64) {
    // direct form keeps short impulse responses (identity, pure delay) exact
    conv.assign(speech.samples.size() + rir.samples.size() - 1, 0.0);
    for (std::size_t i = 0; i < speech.samples.size(); ++i) {
      for (std::size_t j = 0; j < rir.samples.size(); ++j) {
        conv[i + j] += speech.samples[i] * rir.samples[j];
      }
    }
  } else {
    conv = fft_convolve(speech.samples, rir.samples);
  }
  conv.resize(speech.samples.size());
  double peak_in = 0.0, peak_out = 0.0;
  for (double s : speech.samples) peak_in = std::max(peak_in, std::abs(s));
  for (double s : conv) peak_out = std::max(peak_out, std::abs(s));
  if (peak_out > 1e-12) {
    const double g = peak_in / peak_out;
    for (double& s : conv) s *= g;
  }
  return Waveform{std::move(conv), speech.sample_rate_hz};
}

Waveform bandlimit(const Waveform& speech, double cutoff_hz) {
  if (cutoff_hz <= 0.0 || cutoff_hz >= speech.sample_rate_hz / 2.0) {
    throw InvalidArgument("bandlimit: cutoff outside (0, nyquist)");
  }
  const int low_rate = static_cast<int>(2.0 * cutoff_hz);
  Waveform down = resample(speech, low_rate);
  Waveform up = resample(down, speech.sample_rate_hz);
  up.samples.resize(speech.samples.size(), 0.0);
  return up;
}

Waveform bitcrush(const Waveform& speech, int bits) {
  if (bits < 2 || bits > 16) throw InvalidArgument("bitcrush: bits outside [2,16]");
  const double step = 2.0 / (1 << bits);  // 2^bits levels over [-1, 1]
  Waveform out = speech;
  for (double& s : out.samples) {
    // mid-rise: cell centers at (k + 0.5) * step
    double q = (std::floor(s / step) + 0.5) * step;
    s = std::clamp(q, -1.0 + step / 2.0, 1.0 - step / 2.0);
  }
  return out;
}

Waveform compress_dynamics(const Waveform& speech, double threshold_db,
                           double ratio) {
  if (ratio < 1.0) throw InvalidArgument("compress_dynamics: ratio < 1");
  if (threshold_db > 0.0) {
    throw InvalidArgument("compress_dynamics: threshold_db > 0");
  }
  Waveform out = speech;
  if (ratio == 1.0) return out;
  for (double& s : out.samples) {
    const double mag = std::abs(s);
    if (mag <= 0.0) continue;
    const double level_db = 20.0 * std::log10(mag);
    if (level_db <= threshold_db) continue;
    const double out_db = threshold_db + (level_db - threshold_db) / ratio;
    s = std::copysign(std::pow(10.0, out_db / 20.0), s);
  }
  return out;
}

Waveform distort(const Waveform& speech, double drive) {
  if (drive <= 0.0) throw InvalidArgument("distort: drive <= 0");
  const double norm = std::tanh(drive);
  Waveform out = speech;
  for (double& s : out.samples) s = std::tanh(drive * s) / norm;
  return out;
}

Waveform gain(const Waveform& speech, double gain_db) {
  const double g = std::pow(10.0, gain_db / 20.0);
  Waveform out = speech;
  for (double& s : out.samples) s *= g;
  return out;
}

MelSpectrogram tf_mask(const MelSpectrogram& mel, int num_time_masks,
                       int num_freq_masks, double max_time_frac,
                       double max_freq_frac, uint64_t seed) {
  if (num_time_masks < 0 || num_freq_masks < 0) {
    throw InvalidArgument("tf_mask: negative mask count");
  }
  if (max_time_frac <= 0.0 || max_time_frac > 1.0 || max_freq_frac <= 0.0 ||
      max_freq_frac > 1.0) {
    throw InvalidArgument("tf_mask: fractions must be in (0, 1]");
  }
  MelSpectrogram out = mel;
  const int t_frames = static_cast<int>(mel.frames.rows());
  const int n_bins = static_cast<int>(mel.frames.cols());
  const double floor_val = std::log(mel.config.log_floor);
  Rng rng(Rng::mix(seed, 0x74666d61736bULL));
  for (int m = 0; m < num_time_masks; ++m) {
    const int max_len = static_cast<int>(max_time_frac * t_frames);
    if (max_len < 1) continue;
    const int len = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(max_len)));
    const int start = static_cast<int>(
        rng.next_below(static_cast<uint64_t>(t_frames - len + 1)));
    out.frames.block(start, 0, len, n_bins).setConstant(floor_val);
  }
  for (int m = 0; m < num_freq_masks; ++m) {
    const int max_len = static_cast<int>(max_freq_frac * n_bins);
    if (max_len < 1) continue;
    const int len = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(max_len)));
    const int start = static_cast<int>(
        rng.next_below(static_cast<uint64_t>(n_bins - len + 1)));
    out.frames.block(0, start, t_frames, len).setConstant(floor_val);
  }
  return out;
}

// ---------------------------------------------------------------------------
// chain sampling / application

DegradationChain sample_chain(const RandomDegradationPolicy& policy,
                              uint64_t seed) {
  policy.validate();
  Rng rng(Rng::mix(seed, 0x636861696eULL));
  DegradationChain chain;
  chain.seed = seed;

  auto maybe = [&](double p, DegKind kind) -> DegradationSpec* {
    // Coin flip consumed unconditionally so each kind owns a fixed slot of
    // the stream regardless of earlier outcomes.
    const bool on = rng.bernoulli(p);
    if (!on) return nullptr;
    chain.specs.push_back(DegradationSpec{});
    chain.specs.back().kind = kind;
    return &chain.specs.back();
  };

  if (auto* s = maybe(policy.p_reverb, DegKind::kReverb)) {
    s->rt60_s = rng.uniform(policy.rt60_range.first, policy.rt60_range.second);
    s->rir_seed = rng.next_u64();
  }
  if (auto* s = maybe(policy.p_bandlimit, DegKind::kBandlimit)) {
    s->cutoff_hz =
        rng.uniform(policy.cutoff_hz_range.first, policy.cutoff_hz_range.second);
  }
  if (auto* s = maybe(policy.p_bitcrush, DegKind::kBitcrush)) {
    s->bits = policy.bits_range.first +
              static_cast<int>(rng.next_below(static_cast<uint64_t>(
                  policy.bits_range.second - policy.bits_range.first + 1)));
  }
  if (auto* s = maybe(policy.p_compress, DegKind::kCompress)) {
    s->threshold_db = rng.uniform(policy.threshold_db_range.first,
                                  policy.threshold_db_range.second);
    s->ratio = rng.uniform(policy.ratio_range.first, policy.ratio_range.second);
  }
  if (auto* s = maybe(policy.p_distort, DegKind::kDistort)) {
    s->drive = rng.uniform(policy.drive_range.first, policy.drive_range.second);
  }
  if (auto* s = maybe(policy.p_gain, DegKind::kGain)) {
    s->gain_db =
        rng.uniform(policy.gain_db_range.first, policy.gain_db_range.second);
  }
  if (auto* s = maybe(policy.p_noise, DegKind::kNoise)) {
    s->noise_kind = static_cast<NoiseKind>(rng.next_below(8));
    s->snr_db = rng.uniform(policy.snr_db_range.first, policy.snr_db_range.second);
    s->noise_seed = rng.next_u64();
  }

  if (static_cast<int>(chain.specs.size()) > policy.max_chain_length) {
    chain.specs.resize(static_cast<std::size_t>(policy.max_chain_length));
  }
  return chain;
}

Waveform apply_chain(const Waveform& speech, const DegradationChain& chain) {
  Waveform out = speech;
  for (const auto& spec : chain.specs) {
    switch (spec.kind) {
      case DegKind::kReverb: {
        Waveform rir = synth_rir(spec.rt60_s, out.sample_rate_hz, spec.rir_seed);
        out = apply_reverb(out, rir);
        break;
      }
      case DegKind::kBandlimit:
        out = bandlimit(out, spec.cutoff_hz);
        break;
      case DegKind::kBitcrush:
        out = bitcrush(out, spec.bits);
        break;
      case DegKind::kCompress:
        out = compress_dynamics(out, spec.threshold_db, spec.ratio);
        break;
      case DegKind::kDistort:
        out = distort(out, spec.drive);
        break;
      case DegKind::kGain:
        out = gain(out, spec.gain_db);
        break;
      case DegKind::kNoise: {
        Waveform noise =
            synth_noise(spec.noise_kind, static_cast<int>(out.samples.size()),
                        out.sample_rate_hz, spec.noise_seed);
        out = add_noise_at_snr(out, noise, spec.snr_db);
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// serialization

std::string DegradationChain::serialize() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["specs"] = nlohmann::ordered_json::array();
  for (const auto& s : specs) {
    nlohmann::ordered_json js;
    js["kind"] = to_string(s.kind);
    switch (s.kind) {
      case DegKind::kReverb:
        js["rt60_s"] = s.rt60_s;
        js["rir_seed"] = s.rir_seed;
        break;
      case DegKind::kBandlimit:
        js["cutoff_hz"] = s.cutoff_hz;
        break;
      case DegKind::kBitcrush:
        js["bits"] = s.bits;
        break;
      case DegKind::kCompress:
        js["threshold_db"] = s.threshold_db;
        js["ratio"] = s.ratio;
        break;
      case DegKind::kDistort:
        js["drive"] = s.drive;
        break;
      case DegKind::kGain:
        js["gain_db"] = s.gain_db;
        break;
      case DegKind::kNoise:
        js["noise_kind"] = to_string(s.noise_kind);
        js["snr_db"] = s.snr_db;
        js["noise_seed"] = s.noise_seed;
        break;
    }
    j["specs"].push_back(js);
  }
  return j.dump();
}

DegradationChain DegradationChain::deserialize(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("chain parse error: ") + e.what());
  }
  DegradationChain chain;
  try {
    chain.seed = j.at("seed").get<uint64_t>();
    for (const auto& js : j.at("specs")) {
      DegradationSpec s;
      s.kind = deg_kind_from_string(js.at("kind").get<std::string>());
      switch (s.kind) {
        case DegKind::kReverb:
          s.rt60_s = js.at("rt60_s").get<double>();
          s.rir_seed = js.at("rir_seed").get<uint64_t>();
          break;
        case DegKind::kBandlimit:
          s.cutoff_hz = js.at("cutoff_hz").get<double>();
          break;
        case DegKind::kBitcrush:
          s.bits = js.at("bits").get<int>();
          break;
        case DegKind::kCompress:
          s.threshold_db = js.at("threshold_db").get<double>();
          s.ratio = js.at("ratio").get<double>();
          break;
        case DegKind::kDistort:
          s.drive = js.at("drive").get<double>();
          break;
        case DegKind::kGain:
          s.gain_db = js.at("gain_db").get<double>();
          break;
        case DegKind::kNoise:
          s.noise_kind =
              noise_kind_from_string(js.at("noise_kind").get<std::string>());
          s.snr_db = js.at("snr_db").get<double>();
          s.noise_seed = js.at("noise_seed").get<uint64_t>();
          break;
      }
      chain.specs.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("chain field error: ") + e.what());
  }
  return chain;
}

}  // namespace fr
