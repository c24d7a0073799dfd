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

#include "fr/evalkit.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "fr/fft.hpp"
#include "fr/wav.hpp"

namespace fr {

double log_spectral_distance(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument("log_spectral_distance: shape mismatch");
  }
  return std::sqrt((a - b).array().square().mean());
}

double log_spectral_distance(const MelSpectrogram& a, const MelSpectrogram& b) {
  return log_spectral_distance(a.frames, b.frames);
}

double waveform_snr(const Waveform& reference, const Waveform& estimate) {
  if (reference.sample_rate_hz != estimate.sample_rate_hz) {
    throw InvalidArgument("waveform_snr: sample rate mismatch");
  }
  if (reference.samples.size() != estimate.samples.size()) {
    throw InvalidArgument("waveform_snr: length mismatch");
  }
  double ref_e = 0.0, err_e = 0.0;
  for (std::size_t i = 0; i < reference.samples.size(); ++i) {
    ref_e += reference.samples[i] * reference.samples[i];
    const double d = reference.samples[i] - estimate.samples[i];
    err_e += d * d;
  }
  if (ref_e <= 0.0) throw InvalidArgument("waveform_snr: zero-energy reference");
  if (err_e <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(ref_e / err_e));
}

// ---------------------------------------------------------------------------
// STOI (Taal et al. 2011 reference pipeline)

namespace {

constexpr int kStoiRate = 10000;
constexpr int kFrameLen = 256;
constexpr int kHop = 128;
constexpr int kFftLen = 512;
constexpr int kBands = 15;
constexpr double kBandStart = 150.0;
constexpr int kSegFrames = 30;  // 30 frames * 12.8 ms = 384 ms
constexpr double kBetaDb = -15.0;
constexpr double kDynRangeDb = 40.0;

std::vector<double> stoi_window() {
  std::vector<double> w(kFrameLen);
  for (int i = 0; i < kFrameLen; ++i) {
    w[static_cast<std::size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * M_PI * (i + 1) / (kFrameLen + 1));
  }
  return w;
}

// Drops frames of the clean signal more than 40 dB below the loudest one
// and rebuilds both signals by overlap-add of the kept frames.
void remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const auto w = stoi_window();
  const int n_frames =
      1 + static_cast<int>((x.size() - kFrameLen) / static_cast<std::size_t>(kHop));
  std::vector<double> energy_db(static_cast<std::size_t>(n_frames));
  double max_db = -1e30;
  for (int m = 0; m < n_frames; ++m) {
    double e = 0.0;
    for (int i = 0; i < kFrameLen; ++i) {
      const double v = x[static_cast<std::size_t>(m * kHop + i)] *
                       w[static_cast<std::size_t>(i)];
      e += v * v;
    }
    energy_db[static_cast<std::size_t>(m)] =
        20.0 * std::log10(std::sqrt(e) + 1e-30);
    max_db = std::max(max_db, energy_db[static_cast<std::size_t>(m)]);
  }
  std::vector<int> keep;
  for (int m = 0; m < n_frames; ++m) {
    if (energy_db[static_cast<std::size_t>(m)] > max_db - kDynRangeDb) {
      keep.push_back(m);
    }
  }
  const std::size_t out_len =
      static_cast<std::size_t>(keep.size() - 1) * kHop + kFrameLen;
  std::vector<double> xs(out_len, 0.0), ys(out_len, 0.0);
  for (std::size_t j = 0; j < keep.size(); ++j) {
    for (int i = 0; i < kFrameLen; ++i) {
      const std::size_t src = static_cast<std::size_t>(keep[j] * kHop + i);
      const std::size_t dst = j * kHop + static_cast<std::size_t>(i);
      xs[dst] += x[src] * w[static_cast<std::size_t>(i)];
      ys[dst] += y[src] * w[static_cast<std::size_t>(i)];
    }
  }
  x = std::move(xs);
  y = std::move(ys);
}

// One-third-octave band energies: kBands x M.
Mat band_decompose(const std::vector<double>& x) {
  const auto w = stoi_window();
  const int n_frames =
      1 + static_cast<int>((x.size() - kFrameLen) / static_cast<std::size_t>(kHop));
  // band edge -> fft bin mapping
  const int n_bins = kFftLen / 2 + 1;
  std::vector<std::pair<int, int>> band_bins;
  for (int j = 0; j < kBands; ++j) {
    const double cf = kBandStart * std::pow(2.0, j / 3.0);
    const double lo = cf / std::pow(2.0, 1.0 / 6.0);
    const double hi = cf * std::pow(2.0, 1.0 / 6.0);
    int k_lo = n_bins, k_hi = 0;
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * kStoiRate / kFftLen;
      if (f >= lo && f < hi) {
        k_lo = std::min(k_lo, k);
        k_hi = std::max(k_hi, k + 1);
      }
    }
    band_bins.emplace_back(k_lo, k_hi);
  }

  Mat bands(kBands, n_frames);
  std::vector<double> frame(kFrameLen);
  for (int m = 0; m < n_frames; ++m) {
    for (int i = 0; i < kFrameLen; ++i) {
      frame[static_cast<std::size_t>(i)] =
          x[static_cast<std::size_t>(m * kHop + i)] * w[static_cast<std::size_t>(i)];
    }
    auto spec = rfft(frame, kFftLen);
    for (int j = 0; j < kBands; ++j) {
      double e = 0.0;
      for (int k = band_bins[static_cast<std::size_t>(j)].first;
           k < band_bins[static_cast<std::size_t>(j)].second; ++k) {
        e += std::norm(spec[static_cast<std::size_t>(k)]);
      }
      bands(j, m) = std::sqrt(e);
    }
  }
  return bands;
}

}  // namespace

double stoi(const Waveform& clean, const Waveform& processed) {
  if (clean.sample_rate_hz != processed.sample_rate_hz) {
    throw InvalidArgument("stoi: sample rate mismatch");
  }
  if (clean.samples.size() != processed.samples.size()) {
    throw InvalidArgument("stoi: length mismatch");
  }
  Waveform c10 = resample(clean, kStoiRate);
  Waveform p10 = resample(processed, kStoiRate);

  std::vector<double> x = c10.samples, y = p10.samples;
  if (x.size() < static_cast<std::size_t>(kFrameLen)) {
    throw InvalidArgument("stoi: signal shorter than one frame");
  }
  remove_silent_frames(x, y);

  Mat xb = band_decompose(x);
  Mat yb = band_decompose(y);
  const int m_frames = static_cast<int>(xb.cols());
  if (m_frames < kSegFrames) {
    throw InvalidArgument("stoi: too short for one 384 ms segment");
  }

  const double clip = std::pow(10.0, -kBetaDb / 20.0);
  double acc = 0.0;
  long count = 0;
  for (int m = kSegFrames; m <= m_frames; ++m) {
    for (int j = 0; j < kBands; ++j) {
      Eigen::RowVectorXd xs = xb.row(j).segment(m - kSegFrames, kSegFrames);
      Eigen::RowVectorXd ys = yb.row(j).segment(m - kSegFrames, kSegFrames);
      const double alpha = xs.norm() / (ys.norm() + 1e-12);
      Eigen::RowVectorXd yn = alpha * ys;
      for (int n = 0; n < kSegFrames; ++n) {
        yn[n] = std::min(yn[n], xs[n] * (1.0 + clip));
      }
      xs.array() -= xs.mean();
      yn.array() -= yn.mean();
      const double denom = xs.norm() * yn.norm();
      acc += (denom > 1e-12) ? xs.dot(yn) / denom : 0.0;
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

// ---------------------------------------------------------------------------

namespace {

ItemReport eval_one(const EvalItem& item, const MelConfig& mel_cfg) {
  const Waveform& c = item.clean;
  if (c.sample_rate_hz != item.degraded.sample_rate_hz ||
      c.sample_rate_hz != item.restored.sample_rate_hz) {
    throw InvalidArgument("evaluate_set: sample rate mismatch in " + item.name);
  }
  std::size_t n = std::min({c.samples.size(), item.degraded.samples.size(),
                            item.restored.samples.size()});
  const std::size_t n_max =
      std::max({c.samples.size(), item.degraded.samples.size(),
                item.restored.samples.size()});
  if (n_max - n > static_cast<std::size_t>(mel_cfg.n_fft)) {
    throw InvalidArgument("evaluate_set: length mismatch beyond one window in " +
                          item.name);
  }
  auto cut = [&](const Waveform& w) {
    Waveform out;
    out.sample_rate_hz = w.sample_rate_hz;
    out.samples.assign(w.samples.begin(),
                       w.samples.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
  };
  Waveform clean = cut(c), degraded = cut(item.degraded),
           restored = cut(item.restored);

  MelSpectrogram mc = mel_spectrogram(clean, mel_cfg);
  MelSpectrogram md = mel_spectrogram(degraded, mel_cfg);
  MelSpectrogram mr = mel_spectrogram(restored, mel_cfg);

  ItemReport r;
  r.name = item.name;
  r.lsd_degraded = log_spectral_distance(mc, md);
  r.lsd_restored = log_spectral_distance(mc, mr);
  r.lsd_delta = r.lsd_degraded - r.lsd_restored;
  r.snr_degraded = waveform_snr(clean, degraded);
  r.snr_restored = waveform_snr(clean, restored);
  r.snr_delta = r.snr_restored - r.snr_degraded;
  r.stoi_degraded = stoi(clean, degraded);
  r.stoi_restored = stoi(clean, restored);
  r.stoi_delta = r.stoi_restored - r.stoi_degraded;
  return r;
}

nlohmann::ordered_json item_to_json(const ItemReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["lsd_degraded"] = r.lsd_degraded;
  j["lsd_restored"] = r.lsd_restored;
  j["lsd_delta"] = r.lsd_delta;
  j["snr_degraded"] = r.snr_degraded;
  j["snr_restored"] = r.snr_restored;
  j["snr_delta"] = r.snr_delta;
  j["stoi_degraded"] = r.stoi_degraded;
  j["stoi_restored"] = r.stoi_restored;
  j["stoi_delta"] = r.stoi_delta;
  return j;
}

}  // namespace

std::string EvalReport::serialize() const {
  nlohmann::ordered_json j;
  j["items"] = nlohmann::ordered_json::array();
  for (const auto& it : items) j["items"].push_back(item_to_json(it));
  j["mean"] = item_to_json(mean);
  return j.dump(2);
}

EvalReport evaluate_set(const std::vector<EvalItem>& items,
                        const MelConfig& mel_cfg) {
  if (items.empty()) throw InvalidArgument("evaluate_set: empty item list");
  EvalReport report;
  for (const auto& it : items) report.items.push_back(eval_one(it, mel_cfg));

  ItemReport& m = report.mean;
  m = ItemReport{};
  m.name = "mean";
  for (const auto& r : report.items) {
    m.lsd_degraded += r.lsd_degraded;
    m.lsd_restored += r.lsd_restored;
    m.lsd_delta += r.lsd_delta;
    m.snr_degraded += r.snr_degraded;
    m.snr_restored += r.snr_restored;
    m.snr_delta += r.snr_delta;
    m.stoi_degraded += r.stoi_degraded;
    m.stoi_restored += r.stoi_restored;
    m.stoi_delta += r.stoi_delta;
  }
  const double n = static_cast<double>(report.items.size());
  m.lsd_degraded /= n;
  m.lsd_restored /= n;
  m.lsd_delta /= n;
  m.snr_degraded /= n;
  m.snr_restored /= n;
  m.snr_delta /= n;
  m.stoi_degraded /= n;
  m.stoi_restored /= n;
  m.stoi_delta /= n;
  return report;
}

}  // namespace fr
