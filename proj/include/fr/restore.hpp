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

#ifndef FR_RESTORE_HPP
#define FR_RESTORE_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "fr/cfm.hpp"
#include "fr/common.hpp"
#include "fr/mel.hpp"
#include "fr/train.hpp"

namespace fr {

struct ChunkPlan {
  std::vector<std::pair<int, int>> segments;  // [start, end) frames
  int window = 0;
  int overlap = 0;
};

// Stride = window - overlap; the last segment is right-aligned to end at T.
ChunkPlan chunk_plan(int t_frames, int window, int overlap);

// Linear cross-fade in overlap regions; blend weights sum to one, frames
// outside any overlap are copied verbatim.
Mat crossfade_merge(const std::vector<Mat>& chunks, const ChunkPlan& plan);

struct RestoreOptions {
  SamplerConfig sampler;
  int window = 128;
  int overlap = 32;
  int gl_iterations = 32;
  uint64_t gl_seed = 0;
};

// Runs the CFG-guided sampler over the chunked log-mel of `y_mel` with the
// checkpointed model; returns the merged restored spectrogram.
Mat restore_mel(const Mat& y_mel, const Checkpoint& ckpt,
                const RestoreOptions& opts);

struct RestoreStats {
  int chunks = 0;
  int frames = 0;
};

// waveform -> mel -> chunked sampling -> cross-fade merge -> Griffin-Lim.
Waveform restore_waveform(const Waveform& wave, const Checkpoint& ckpt,
                          const MelConfig& mel_cfg, const RestoreOptions& opts,
                          RestoreStats* stats = nullptr);

}  // namespace fr

#endif  // FR_RESTORE_HPP
