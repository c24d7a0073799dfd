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

#include "fr/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace fr {

namespace {

uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void write_u32(std::ofstream& f, uint32_t v) {
  uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                  static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

void write_u16(std::ofstream& f, uint16_t v) {
  uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
  f.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

Waveform load_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("load_wav: cannot open file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("load_wav: not a RIFF/WAVE file: " + path);
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  const uint8_t* data = nullptr;
  uint32_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    uint32_t sz = read_u32(bytes.data() + pos + 4);
    pos += 8;
    if (pos + sz > bytes.size()) {
      throw FormatError("load_wav: truncated chunk in " + path);
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (sz < 16) throw FormatError("load_wav: short fmt chunk in " + path);
      format = read_u16(bytes.data() + pos);
      channels = read_u16(bytes.data() + pos + 2);
      rate = read_u32(bytes.data() + pos + 4);
      bits = read_u16(bytes.data() + pos + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + pos;
      data_len = sz;
    }
    pos += sz + (sz & 1);  // chunks are word aligned
  }
  if (!have_fmt || data == nullptr) {
    throw FormatError("load_wav: missing fmt or data chunk in " + path);
  }
  if (channels < 1 || channels > 2 || rate == 0) {
    throw FormatError("load_wav: unsupported channel/rate layout in " + path);
  }

  const bool pcm16 = (format == 1 && bits == 16);
  const bool float32 = (format == 3 && bits == 32);
  if (!pcm16 && !float32) {
    throw FormatError("load_wav: unsupported codec (need 16-bit PCM or 32-bit float): " +
                      path);
  }

  const uint32_t bytes_per_sample = bits / 8;
  const uint32_t frame_bytes = bytes_per_sample * channels;
  const uint32_t frames = data_len / frame_bytes;

  Waveform w;
  w.sample_rate_hz = static_cast<int>(rate);
  w.samples.resize(frames);
  for (uint32_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (uint16_t c = 0; c < channels; ++c) {
      const uint8_t* p = data + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        int16_t s = static_cast<int16_t>(p[0] | (p[1] << 8));
        acc += static_cast<double>(s) / 32768.0;
      } else {
        float s;
        std::memcpy(&s, p, 4);
        acc += static_cast<double>(s);
      }
    }
    w.samples[i] = acc / channels;
  }
  return w;
}

void save_wav(const Waveform& wave, const std::string& path) {
  if (wave.samples.empty()) {
    throw InvalidArgument("save_wav: empty waveform");
  }
  if (wave.sample_rate_hz <= 0) {
    throw InvalidArgument("save_wav: non-positive sample rate");
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("save_wav: cannot open for write: " + path);

  const uint32_t n = static_cast<uint32_t>(wave.samples.size());
  const uint32_t data_bytes = n * 2;
  f.write("RIFF", 4);
  write_u32(f, 36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  write_u32(f, 16);
  write_u16(f, 1);  // PCM
  write_u16(f, 1);  // mono
  write_u32(f, static_cast<uint32_t>(wave.sample_rate_hz));
  write_u32(f, static_cast<uint32_t>(wave.sample_rate_hz) * 2);
  write_u16(f, 2);
  write_u16(f, 16);
  f.write("data", 4);
  write_u32(f, data_bytes);
  for (double s : wave.samples) {
    double c = std::clamp(s, -1.0, 1.0);
    int v = static_cast<int>(std::lround(c * 32768.0));
    v = std::clamp(v, -32768, 32767);
    write_u16(f, static_cast<uint16_t>(static_cast<int16_t>(v)));
  }
  if (!f) throw IoError("save_wav: write failed: " + path);
}

Waveform resample(const Waveform& wave, int target_rate_hz) {
  if (target_rate_hz <= 0) {
    throw InvalidArgument("resample: non-positive target rate");
  }
  if (wave.sample_rate_hz == target_rate_hz) return wave;

  const double ratio =
      static_cast<double>(target_rate_hz) / wave.sample_rate_hz;
  const std::size_t out_len = static_cast<std::size_t>(
      std::floor(static_cast<double>(wave.samples.size()) * ratio));
  // cutoff as a fraction of the input Nyquist
  const double fc = 0.95 * std::min(1.0, ratio);
  const int half_taps = 24;

  Waveform out;
  out.sample_rate_hz = target_rate_hz;
  out.samples.resize(out_len, 0.0);
  const int n_in = static_cast<int>(wave.samples.size());
  for (std::size_t i = 0; i < out_len; ++i) {
    const double center = static_cast<double>(i) / ratio;
    const int k0 = std::max(0, static_cast<int>(std::ceil(center)) - half_taps);
    const int k1 =
        std::min(n_in - 1, static_cast<int>(std::floor(center)) + half_taps);
    double acc = 0.0;
    for (int k = k0; k <= k1; ++k) {
      const double x = static_cast<double>(k) - center;
      double sinc = (std::abs(x) < 1e-12)
                        ? fc
                        : std::sin(M_PI * fc * x) / (M_PI * x);
      const double win = 0.5 + 0.5 * std::cos(M_PI * x / half_taps);  // Hann
      acc += wave.samples[static_cast<std::size_t>(k)] * sinc * win;
    }
    out.samples[i] = acc;
  }
  return out;
}

}  // namespace fr
