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

#include "fr/restore.hpp"

#include <algorithm>

#include "fr/backbone.hpp"

namespace fr {

ChunkPlan chunk_plan(int t_frames, int window, int overlap) {
  if (t_frames < 1) throw InvalidArgument("chunk_plan: T < 1");
  if (window < 1) throw InvalidArgument("chunk_plan: window < 1");
  if (overlap < 0 || overlap >= window) {
    throw InvalidArgument("chunk_plan: need 0 <= overlap < window");
  }
  ChunkPlan plan;
  plan.window = window;
  plan.overlap = overlap;
  if (t_frames <= window) {
    plan.segments.emplace_back(0, t_frames);
    return plan;
  }
  const int stride = window - overlap;
  int start = 0;
  while (true) {
    if (start + window >= t_frames) {
      plan.segments.emplace_back(t_frames - window, t_frames);
      break;
    }
    plan.segments.emplace_back(start, start + window);
    start += stride;
  }
  return plan;
}

Mat crossfade_merge(const std::vector<Mat>& chunks, const ChunkPlan& plan) {
  if (chunks.size() != plan.segments.size()) {
    throw InvalidArgument("crossfade_merge: chunk count != plan segments");
  }
  if (chunks.empty()) throw InvalidArgument("crossfade_merge: no chunks");
  const Eigen::Index f = chunks.front().cols();
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const auto& [s, e] = plan.segments[i];
    if (chunks[i].rows() != e - s || chunks[i].cols() != f) {
      throw InvalidArgument("crossfade_merge: chunk shape mismatch");
    }
  }

  const int t_frames = plan.segments.back().second;
  Mat out = Mat::Zero(t_frames, f);
  int covered = 0;  // frames [0, covered) already written
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const auto& [s, e] = plan.segments[i];
    const Mat& c = chunks[i];
    if (i == 0) {
      out.block(s, 0, e - s, f) = c;
      covered = e;
      continue;
    }
    const int ov = covered - s;  // overlap with what is already written
    if (ov < 0) throw InvalidArgument("crossfade_merge: plan leaves a gap");
    for (int k = 0; k < ov; ++k) {
      // ramp from the previous chunk's value to this chunk's value
      const double w = (ov > 1)
                           ? static_cast<double>(k) / static_cast<double>(ov)
                           : 0.5;
      // a + w*(b-a) form so agreeing chunks merge bit-exactly
      out.row(s + k) += w * (c.row(k) - out.row(s + k));
    }
    if (e > covered) {
      out.block(covered, 0, e - covered, f) = c.bottomRows(e - covered);
      covered = e;
    }
  }
  return out;
}

Mat restore_mel(const Mat& y_mel, const Checkpoint& ckpt,
                const RestoreOptions& opts) {
  const ModelConfig& mc = ckpt.model_config;
  if (opts.window > mc.max_frames) {
    throw InvalidArgument("restore_mel: window > model max_frames");
  }
  const int t_frames = static_cast<int>(y_mel.rows());

  FieldFn field = [&](const Mat& x_t, double t, const Mat* cond) -> Mat {
    std::vector<bool> mask(static_cast<std::size_t>(x_t.rows()), true);
    return forward(ckpt.params, mc, x_t, cond, t, mask);
  };

  ChunkPlan plan = chunk_plan(t_frames, opts.window, opts.overlap);
  std::vector<Mat> restored;
  restored.reserve(plan.segments.size());
  for (const auto& [s, e] : plan.segments) {
    Mat y_chunk = y_mel.block(s, 0, e - s, y_mel.cols());
    restored.push_back(sample_ode(field, y_chunk, opts.sampler));
  }
  return crossfade_merge(restored, plan);
}

Waveform restore_waveform(const Waveform& wave, const Checkpoint& ckpt,
                          const MelConfig& mel_cfg, const RestoreOptions& opts,
                          RestoreStats* stats) {
  if (wave.sample_rate_hz != mel_cfg.sample_rate_hz) {
    throw InvalidArgument("restore_waveform: sample rate mismatch");
  }
  if (mel_cfg.n_mels != ckpt.model_config.n_mels) {
    throw InvalidArgument("restore_waveform: mel bins != model n_mels");
  }
  MelSpectrogram y = mel_spectrogram(wave, mel_cfg);
  Mat x_hat = restore_mel(y.frames, ckpt, opts);
  if (stats) {
    stats->chunks = static_cast<int>(
        chunk_plan(static_cast<int>(y.frames.rows()), opts.window, opts.overlap)
            .segments.size());
    stats->frames = static_cast<int>(y.frames.rows());
  }
  MelSpectrogram restored;
  restored.frames = std::move(x_hat);
  restored.config = mel_cfg;
  // Griffin-Lim output keeps (T-1)*hop + n_fft samples, within one hop of
  // the analysis-covered input length.
  return invert_mel(restored, opts.gl_iterations, opts.gl_seed);
}

}  // namespace fr
