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

#include <cmath>
#include <cstdio>
#include <fstream>

#include <doctest.h>

#include "fr/common.hpp"
#include "fr/fft.hpp"
#include "fr/mel.hpp"
#include "fr/rng.hpp"
#include "fr/wav.hpp"

using namespace fr;

namespace {

Waveform tone(double freq_hz, double seconds, int sr, double amp = 0.5) {
  Waveform w;
  w.sample_rate_hz = sr;
  const int n = static_cast<int>(seconds * sr);
  w.samples.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w.samples[static_cast<std::size_t>(i)] =
        amp * std::sin(2.0 * M_PI * freq_hz * i / sr);
  }
  return w;
}

std::string tmp_path(const char* name) {
  return std::string("/tmp/fr_test_") + name;
}

}  // namespace

TEST_CASE("fft round trip and parseval") {
  Rng rng(7);
  std::vector<double> x(256);
  for (auto& v : x) v = rng.normal();
  auto bins = rfft(x, 256);
  auto back = irfft(bins, 256);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-10));
  }
}

TEST_CASE("fft convolution matches direct") {
  std::vector<double> a = {1.0, 2.0, 3.0};
  std::vector<double> b = {0.5, -1.0};
  auto c = fft_convolve(a, b);
  REQUIRE(c.size() == 4);
  CHECK(c[0] == doctest::Approx(0.5));
  CHECK(c[1] == doctest::Approx(0.0));
  CHECK(c[2] == doctest::Approx(-0.5));
  CHECK(c[3] == doctest::Approx(-3.0));
}

TEST_CASE("wav save/load round trip within one quantization step") {
  Waveform w;
  w.sample_rate_hz = 16000;
  for (int i = 0; i < 16000; ++i) {
    w.samples.push_back(-1.0 + 2.0 * i / 15999.0);  // ramp [-1, 1]
  }
  const auto path = tmp_path("ramp.wav");
  save_wav(w, path);
  Waveform r = load_wav(path);
  REQUIRE(r.samples.size() == w.samples.size());
  CHECK(r.sample_rate_hz == 16000);
  double max_err = 0.0;
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    max_err = std::max(max_err, std::abs(r.samples[i] - w.samples[i]));
  }
  CHECK(max_err <= 1.0 / 32768.0);
  std::remove(path.c_str());
}

TEST_CASE("wav write clips out-of-range samples") {
  Waveform w;
  w.sample_rate_hz = 8000;
  w.samples = {1.5, -2.0, 0.0};
  const auto path = tmp_path("clip.wav");
  save_wav(w, path);
  Waveform r = load_wav(path);
  CHECK(r.samples[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.samples[1] == doctest::Approx(-1.0).epsilon(1e-3));
  std::remove(path.c_str());
}

TEST_CASE("wav error kinds") {
  CHECK_THROWS_AS(save_wav(Waveform{{}, 16000}, tmp_path("e.wav")),
                  InvalidArgument);
  CHECK_THROWS_AS(load_wav("/tmp/fr_definitely_missing.wav"), IoError);
  const auto path = tmp_path("fake.wav");
  std::ofstream(path) << "this is not audio, just text pretending";
  CHECK_THROWS_AS(load_wav(path), FormatError);
  std::remove(path.c_str());
}

TEST_CASE("stereo downmix averages channels") {
  // hand-built stereo 16-bit PCM file with per-frame channels (0.5, -0.5)
  const auto path = tmp_path("stereo.wav");
  {
    std::ofstream f(path, std::ios::binary);
    auto u32 = [&](uint32_t v) { f.write(reinterpret_cast<char*>(&v), 4); };
    auto u16 = [&](uint16_t v) { f.write(reinterpret_cast<char*>(&v), 2); };
    const int frames = 100;
    f.write("RIFF", 4);
    u32(36 + frames * 4);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    u32(16);
    u16(1);
    u16(2);
    u32(16000);
    u32(16000 * 4);
    u16(4);
    u16(16);
    f.write("data", 4);
    u32(frames * 4);
    for (int i = 0; i < frames; ++i) {
      u16(static_cast<uint16_t>(16384));   // +0.5
      u16(static_cast<uint16_t>(-16384));  // -0.5
    }
  }
  Waveform r = load_wav(path);
  REQUIRE(r.samples.size() == 100);
  for (double s : r.samples) CHECK(s == doctest::Approx(0.0).epsilon(1e-9));
  std::remove(path.c_str());
}

TEST_CASE("mel frame count formula") {
  MelConfig cfg;
  Waveform w = tone(440.0, 1.0, 16000);
  MelSpectrogram mel = mel_spectrogram(w, cfg);
  CHECK(mel.frames.rows() == 59);  // 1 + (16000 - 1024) / 256
  CHECK(mel.frames.cols() == 80);
}

TEST_CASE("mel frame count property over random sizes") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    MelConfig cfg;
    cfg.n_fft = 1 << (7 + static_cast<int>(rng.next_below(4)));  // 128..1024
    cfg.hop = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(cfg.n_fft)));
    cfg.f_max_hz = 8000.0;
    const int len = cfg.n_fft + static_cast<int>(rng.next_below(20000));
    Waveform w;
    w.sample_rate_hz = cfg.sample_rate_hz;
    w.samples.assign(static_cast<std::size_t>(len), 0.01);
    MelSpectrogram mel = mel_spectrogram(w, cfg);
    CHECK(mel.frames.rows() == 1 + (len - cfg.n_fft) / cfg.hop);
  }
}

TEST_CASE("mel of digital silence is all floor") {
  MelConfig cfg;
  Waveform w;
  w.sample_rate_hz = 16000;
  w.samples.assign(4096, 0.0);
  MelSpectrogram mel = mel_spectrogram(w, cfg);
  const double floor_val = std::log(cfg.log_floor);
  CHECK(mel.frames.minCoeff() == floor_val);
  CHECK(mel.frames.maxCoeff() == floor_val);
}

TEST_CASE("mel errors") {
  MelConfig cfg;
  Waveform w = tone(440.0, 1.0, 8000);
  CHECK_THROWS_AS(mel_spectrogram(w, cfg), InvalidArgument);  // rate mismatch
  Waveform shorty;
  shorty.sample_rate_hz = 16000;
  shorty.samples.assign(100, 0.1);
  CHECK_THROWS_AS(mel_spectrogram(shorty, cfg), InvalidArgument);
}

TEST_CASE("1 kHz tone peaks in the mel bin nearest 1 kHz") {
  MelConfig cfg;
  Waveform w = tone(1000.0, 1.0, 16000);
  MelSpectrogram mel = mel_spectrogram(w, cfg);

  // independent oracle: filter center frequencies
  auto centers = mel_center_frequencies(cfg);
  int expect = 0;
  for (int m = 1; m < cfg.n_mels; ++m) {
    if (std::abs(centers[static_cast<std::size_t>(m)] - 1000.0) <
        std::abs(centers[static_cast<std::size_t>(expect)] - 1000.0)) {
      expect = m;
    }
  }
  for (Eigen::Index t = 0; t < mel.frames.rows(); ++t) {
    Eigen::Index argmax;
    mel.frames.row(t).maxCoeff(&argmax);
    CHECK(argmax == expect);
  }
}

TEST_CASE("mel is scale-monotone above the floor") {
  MelConfig cfg;
  Rng rng(11);
  Waveform w = tone(700.0, 0.5, 16000, 0.1);
  for (auto& s : w.samples) s += 0.01 * rng.normal();
  MelSpectrogram a = mel_spectrogram(w, cfg);
  Waveform w2 = w;
  for (auto& s : w2.samples) s *= 3.0;
  MelSpectrogram b = mel_spectrogram(w2, cfg);
  const double floor_val = std::log(cfg.log_floor);
  for (Eigen::Index i = 0; i < a.frames.size(); ++i) {
    if (a.frames.data()[i] > floor_val) {
      CHECK(b.frames.data()[i] >= a.frames.data()[i]);
    }
  }
}

TEST_CASE("invert_mel analysis-synthesis loop stays close for a tone") {
  MelConfig cfg;
  Waveform w = tone(440.0, 1.0, 16000);
  MelSpectrogram mel = mel_spectrogram(w, cfg);
  Waveform rec = invert_mel(mel, 32, 123);
  CHECK(rec.samples.size() ==
        static_cast<std::size_t>((mel.frames.rows() - 1) * cfg.hop + cfg.n_fft));
  MelSpectrogram mel2 = mel_spectrogram(rec, cfg);
  const Eigen::Index t_common = std::min(mel.frames.rows(), mel2.frames.rows());
  const double lsd = std::sqrt((mel.frames.topRows(t_common) -
                                mel2.frames.topRows(t_common))
                                   .array()
                                   .square()
                                   .mean());
  CHECK(lsd <= 1.0);
}

TEST_CASE("invert_mel of all-floor spectrogram is near silence") {
  MelConfig cfg;
  MelSpectrogram mel;
  mel.config = cfg;
  mel.frames = Mat::Constant(40, cfg.n_mels, std::log(cfg.log_floor));
  Waveform rec = invert_mel(mel, 8, 5);
  CHECK(rms(rec.samples) < 1e-3);
}

TEST_CASE("invert_mel determinism for fixed seed") {
  MelConfig cfg;
  Waveform w = tone(600.0, 0.3, 16000);
  MelSpectrogram mel = mel_spectrogram(w, cfg);
  Waveform a = invert_mel(mel, 0, 99);
  Waveform b = invert_mel(mel, 0, 99);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i] == b.samples[i]);
  }
  Waveform c = invert_mel(mel, 0, 100);
  bool differs = false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    differs = differs || a.samples[i] != c.samples[i];
  }
  CHECK(differs);
}
