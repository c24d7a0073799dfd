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

#include "fr/mel.hpp"

#include <algorithm>
#include <cmath>

#include "fr/fft.hpp"
#include "fr/rng.hpp"

namespace fr {

void MelConfig::validate() const {
  if (sample_rate_hz <= 0) throw InvalidArgument("MelConfig: sample_rate_hz <= 0");
  if (hop <= 0 || hop > n_fft) throw InvalidArgument("MelConfig: need 0 < hop <= n_fft");
  if ((n_fft & (n_fft - 1)) != 0) throw InvalidArgument("MelConfig: n_fft must be a power of two");
  if (f_min_hz < 0 || f_min_hz >= f_max_hz || f_max_hz > sample_rate_hz / 2.0) {
    throw InvalidArgument("MelConfig: need 0 <= f_min < f_max <= nyquist");
  }
  if (n_mels < 1) throw InvalidArgument("MelConfig: n_mels < 1");
  if (log_floor <= 0) throw InvalidArgument("MelConfig: log_floor <= 0");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

Mat mel_filterbank(const MelConfig& cfg) {
  cfg.validate();
  const int n_bins = cfg.n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.f_min_hz);
  const double mel_hi = hz_to_mel(cfg.f_max_hz);

  std::vector<double> edges(cfg.n_mels + 2);
  for (int m = 0; m < cfg.n_mels + 2; ++m) {
    edges[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (cfg.n_mels + 1));
  }

  Mat fb = Mat::Zero(cfg.n_mels, n_bins);
  const double bin_hz = static_cast<double>(cfg.sample_rate_hz) / cfg.n_fft;
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[m], cf = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      if (f <= lo || f >= hi) continue;
      fb(m, k) = (f < cf) ? (f - lo) / (cf - lo) : (hi - f) / (hi - cf);
    }
  }
  return fb;
}

std::vector<double> mel_center_frequencies(const MelConfig& cfg) {
  const double mel_lo = hz_to_mel(cfg.f_min_hz);
  const double mel_hi = hz_to_mel(cfg.f_max_hz);
  std::vector<double> cf(cfg.n_mels);
  for (int m = 0; m < cfg.n_mels; ++m) {
    cf[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * (m + 1) / (cfg.n_mels + 1));
  }
  return cf;
}

namespace {

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);  // periodic Hann
  }
  return w;
}

// T x (n_fft/2+1) complex STFT.
std::vector<std::vector<cdouble>> stft(const std::vector<double>& x,
                                       const MelConfig& cfg) {
  const int n_fft = cfg.n_fft, hop = cfg.hop;
  const int t_frames =
      1 + static_cast<int>((x.size() - static_cast<std::size_t>(n_fft)) / hop);
  const auto win = hann_window(n_fft);
  std::vector<std::vector<cdouble>> out(t_frames);
  std::vector<double> frame(n_fft);
  for (int t = 0; t < t_frames; ++t) {
    for (int i = 0; i < n_fft; ++i) {
      frame[i] = x[static_cast<std::size_t>(t) * hop + i] * win[i];
    }
    out[t] = rfft(frame, static_cast<std::size_t>(n_fft));
  }
  return out;
}

// Overlap-add inverse STFT with Hann synthesis window and squared-window
// normalization.
std::vector<double> istft(const std::vector<std::vector<cdouble>>& spec,
                          const MelConfig& cfg) {
  const int n_fft = cfg.n_fft, hop = cfg.hop;
  const int t_frames = static_cast<int>(spec.size());
  const std::size_t out_len =
      static_cast<std::size_t>(t_frames - 1) * hop + n_fft;
  const auto win = hann_window(n_fft);
  std::vector<double> out(out_len, 0.0), norm(out_len, 0.0);
  for (int t = 0; t < t_frames; ++t) {
    auto frame = irfft(spec[static_cast<std::size_t>(t)],
                       static_cast<std::size_t>(n_fft));
    for (int i = 0; i < n_fft; ++i) {
      const std::size_t idx = static_cast<std::size_t>(t) * hop + i;
      out[idx] += frame[i] * win[i];
      norm[idx] += win[i] * win[i];
    }
  }
  // The squared-window sum decays to zero at the signal edges; flooring it
  // fades the first/last few milliseconds instead of amplifying them.
  for (std::size_t i = 0; i < out_len; ++i) {
    out[i] /= std::max(norm[i], 1e-2);
  }
  return out;
}

// Lawson-Hanson non-negative least squares, minimizing |a*x - b| with x >= 0.
// A plain least-squares filterbank inverse goes negative between filter
// centers; clamping those values leaks power into neighboring mel bands.
Vec nnls(const Mat& a, const Vec& b, int max_outer) {
  const Eigen::Index n = a.cols();
  Vec x = Vec::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  std::vector<Eigen::Index> pset;
  Vec w = a.transpose() * b;
  const double tol = 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff());

  auto solve_passive = [&]() -> Vec {
    Mat ap(a.rows(), static_cast<Eigen::Index>(pset.size()));
    for (std::size_t j = 0; j < pset.size(); ++j) {
      ap.col(static_cast<Eigen::Index>(j)) = a.col(pset[j]);
    }
    return ap.colPivHouseholderQr().solve(b);
  };

  for (int outer = 0; outer < max_outer; ++outer) {
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
    pset.push_back(best);

    for (int inner = 0; inner < max_outer; ++inner) {
      Vec z = solve_passive();
      double alpha = 1.0;
      for (std::size_t j = 0; j < pset.size(); ++j) {
        const double zj = z[static_cast<Eigen::Index>(j)];
        if (zj <= 0.0) {
          const double xj = x[pset[j]];
          alpha = std::min(alpha, xj / (xj - zj));
        }
      }
      if (alpha >= 1.0) {
        for (std::size_t j = 0; j < pset.size(); ++j) {
          x[pset[j]] = z[static_cast<Eigen::Index>(j)];
        }
        break;
      }
      for (std::size_t j = 0; j < pset.size(); ++j) {
        x[pset[j]] += alpha * (z[static_cast<Eigen::Index>(j)] - x[pset[j]]);
      }
      std::vector<Eigen::Index> keep;
      for (std::size_t j = 0; j < pset.size(); ++j) {
        if (x[pset[j]] > 1e-14) {
          keep.push_back(pset[j]);
        } else {
          x[pset[j]] = 0.0;
          passive[static_cast<std::size_t>(pset[j])] = false;
        }
      }
      pset = std::move(keep);
      if (pset.empty()) break;
    }
    w = a.transpose() * (b - a * x);
  }
  return x;
}

}  // namespace

MelSpectrogram mel_spectrogram(const Waveform& wave, const MelConfig& cfg) {
  cfg.validate();
  if (wave.sample_rate_hz != cfg.sample_rate_hz) {
    throw InvalidArgument("mel_spectrogram: sample rate mismatch");
  }
  if (wave.samples.size() < static_cast<std::size_t>(cfg.n_fft)) {
    throw InvalidArgument("mel_spectrogram: audio shorter than one window");
  }
  const auto spec = stft(wave.samples, cfg);
  const Mat fb = mel_filterbank(cfg);
  const int t_frames = static_cast<int>(spec.size());
  const int n_bins = cfg.n_fft / 2 + 1;

  MelSpectrogram mel;
  mel.config = cfg;
  mel.frames.resize(t_frames, cfg.n_mels);
  Vec power(n_bins);
  const double lfloor = std::log(cfg.log_floor);
  for (int t = 0; t < t_frames; ++t) {
    for (int k = 0; k < n_bins; ++k) power[k] = std::norm(spec[t][k]);
    Vec e = fb * power;
    for (int m = 0; m < cfg.n_mels; ++m) {
      mel.frames(t, m) =
          (e[m] <= cfg.log_floor) ? lfloor : std::log(e[m]);
    }
  }
  return mel;
}

Waveform invert_mel(const MelSpectrogram& mel, int iterations, uint64_t seed) {
  const MelConfig& cfg = mel.config;
  cfg.validate();
  if (iterations < 0) throw InvalidArgument("invert_mel: iterations < 0");
  if (mel.frames.cols() != cfg.n_mels || mel.frames.rows() < 1) {
    throw InvalidArgument("invert_mel: shape inconsistent with config");
  }

  const int t_frames = static_cast<int>(mel.frames.rows());
  const int n_bins = cfg.n_fft / 2 + 1;
  const Mat fb = mel_filterbank(cfg);

  Mat mag(t_frames, n_bins);
  for (int t = 0; t < t_frames; ++t) {
    Vec e = mel.frames.row(t).array().exp().matrix();
    Vec p = nnls(fb, e, 4 * cfg.n_mels);
    for (int k = 0; k < n_bins; ++k) {
      mag(t, k) = std::sqrt(std::max(p[k], 0.0));
    }
  }

  // Griffin-Lim with seeded random initial phase.
  Rng rng(Rng::mix(seed, 0x6d656c696e76ULL));
  std::vector<std::vector<cdouble>> spec(t_frames,
                                         std::vector<cdouble>(n_bins));
  for (int t = 0; t < t_frames; ++t) {
    for (int k = 0; k < n_bins; ++k) {
      const double phi = rng.uniform(0.0, 2.0 * M_PI);
      spec[t][k] = std::polar(mag(t, k), phi);
    }
  }

  Waveform out;
  out.sample_rate_hz = cfg.sample_rate_hz;
  for (int it = 0; it < iterations; ++it) {
    auto x = istft(spec, cfg);
    MelConfig tmp = cfg;
    Waveform wx{std::move(x), cfg.sample_rate_hz};
    auto re = stft(wx.samples, tmp);
    for (int t = 0; t < t_frames && t < static_cast<int>(re.size()); ++t) {
      for (int k = 0; k < n_bins; ++k) {
        const double m = std::abs(re[t][k]);
        spec[t][k] = (m > 1e-12) ? re[t][k] * (mag(t, k) / m)
                                 : std::polar(mag(t, k), 0.0);
      }
    }
  }
  out.samples = istft(spec, cfg);
  return out;
}

}  // namespace fr
