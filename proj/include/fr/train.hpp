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

#ifndef FR_TRAIN_HPP
#define FR_TRAIN_HPP

#include <functional>
#include <string>
#include <vector>

#include "fr/backbone.hpp"
#include "fr/cfm.hpp"
#include "fr/common.hpp"
#include "fr/degrade.hpp"
#include "fr/mel.hpp"

namespace fr {

struct TrainingConfig {
  double learning_rate = 3e-4;
  int warmup_steps = 1000;
  int grad_accum = 1;          // micro-batches per optimizer update
  int max_frames = 256;
  int batch_size = 8;          // items per micro-batch
  long total_steps = 2000;
  double cond_dropout_p = 0.15;
  double weight_decay = 0.0;
  std::string schedule = "linear";
  RandomDegradationPolicy policy;
  TfMaskConfig tf_mask;
  uint64_t seed = 0;

  void validate() const;
};

struct TrainingPair {
  Mat x;  // clean log-mel
  Mat y;  // degraded (+ masked) log-mel, same shape
  double pad_value = 0.0;
  std::string chain_log;
};

struct Batch {
  std::vector<Mat> x;   // padded to a common T
  std::vector<Mat> y;
  std::vector<double> t;
  std::vector<std::vector<bool>> mask;  // true-prefix = item length
  std::vector<bool> cond_null;
  std::vector<std::string> chain_log;

  std::size_t size() const { return x.size(); }
};

// Degrade clean audio with a seeded chain, mel both sides, apply seeded
// time-frequency masks to the degraded side, truncate both to max_frames
// from the same seeded offset.
TrainingPair make_training_pair(const Waveform& clean,
                                const RandomDegradationPolicy& policy,
                                const MelConfig& mel_cfg,
                                const TfMaskConfig& tf_cfg, int max_frames,
                                uint64_t seed);

// Pads with each item's floor value, draws t ~ U[0,1] per item and nulls
// the condition independently with probability cond_dropout_p; all
// randomness keyed to (seed, item index).
Batch collate(const std::vector<TrainingPair>& pairs, uint64_t seed,
              double cond_dropout_p);

struct AdamState {
  long updates = 0;
  Parameters m, v;

  static AdamState init(const ModelConfig& cfg);
};

// Cast every tensor through float32 so checkpoint round-trips are lossless
// and resumed runs match uninterrupted ones bit-exactly.
void round_to_storage(Parameters& p);

// One optimizer update over grad_accum micro-batches: gradients accumulated
// and averaged over all items, linear-warmup AdamW step with decoupled
// weight decay. Returns the mean loss.
double train_step(Parameters& params, AdamState& opt,
                  const std::vector<Batch>& micro_batches,
                  const ModelConfig& model_cfg, const TrainingConfig& cfg);

struct Checkpoint {
  int format_version = 1;
  ModelConfig model_config;
  TrainingConfig training_config;
  long step = 0;
  Parameters params;
  AdamState opt;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

struct StepLog {
  long step;
  double loss;
  double lr;
};

// Runs `steps_to_run` steps starting at state.step; every piece of
// randomness is keyed to (config.seed, step) so resuming from a checkpoint
// reproduces the uninterrupted trajectory.
void train_loop(Checkpoint& state, const MelConfig& mel_cfg,
                const std::vector<Waveform>& corpus, long steps_to_run,
                const std::function<void(const StepLog&)>& on_step);

// Synthetic voiced test signal: harmonic series with drifting f0,
// formant-like band emphasis and a syllabic amplitude envelope.
Waveform synth_speech(double seconds, int sample_rate_hz, uint64_t seed);

}  // namespace fr

#endif  // FR_TRAIN_HPP
