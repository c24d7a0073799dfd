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
//
// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// the exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fr/degrade.hpp"
#include "fr/evalkit.hpp"
#include "fr/restore.hpp"
#include "fr/rng.hpp"
#include "fr/train.hpp"

using namespace fr;

namespace {

int failures = 0;

void report(int criterion, const char* title, bool pass,
            const std::string& detail, double seconds) {
  std::ostringstream line;
  line << (pass ? "PASS" : "FAIL") << " criterion " << criterion << ": "
       << title << " (" << detail << ", " << std::fixed << seconds << " s)";
  std::cout << line.str() << std::endl;
  if (!pass) ++failures;
}

template <typename F>
void run(int criterion, const char* title, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    pass = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  report(criterion, title, pass, detail, seconds);
}

Mat random_mat(Eigen::Index rows, Eigen::Index cols, uint64_t seed) {
  Rng rng(seed);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

ModelConfig tiny_model() {
  ModelConfig cfg;
  cfg.dim = 64;
  cfg.depth = 2;
  cfg.heads = 4;
  cfg.head_dim = 16;
  cfg.n_mels = 80;
  cfg.max_frames = 64;
  cfg.cond_dropout_p = 0.0;
  return cfg;
}

double max_param_diff(Parameters& a, Parameters& b) {
  auto ra = tensor_refs(a), rb = tensor_refs(b);
  double worst = 0.0;
  for (std::size_t k = 0; k < ra.size(); ++k) {
    for (Eigen::Index i = 0; i < ra[k].size(); ++i) {
      worst = std::max(worst, std::abs(ra[k].data[i] - rb[k].data[i]));
    }
  }
  return worst;
}

}  // namespace

int main() {
  // 1. flow identities at the path endpoints
  run(1, "flow endpoint identities", [](std::string& detail) {
    FlowSchedule lin = FlowSchedule::linear();
    double worst = 0.0;
    for (uint64_t i = 0; i < 100; ++i) {
      Mat x = random_mat(8, 6, 2 * i);
      Mat y = random_mat(8, 6, 2 * i + 1);
      worst = std::max(worst,
                       (interpolate(x, y, 0.0, lin) - y).cwiseAbs().maxCoeff());
      worst = std::max(worst,
                       (interpolate(x, y, 1.0, lin) - x).cwiseAbs().maxCoeff());
    }
    detail = "max endpoint error " + std::to_string(worst);
    return worst == 0.0;
  });

  // 2. oracle-field recovery through the sampler
  run(2, "oracle-field recovery", [](std::string& detail) {
    FlowSchedule lin = FlowSchedule::linear();
    Mat x = random_mat(12, 7, 11);
    Mat y = random_mat(12, 7, 12);
    FieldFn oracle = [&](const Mat&, double t, const Mat*) {
      return target_field(x, y, t, lin);
    };
    double worst = 0.0;
    for (int steps : {1, 4, 16}) {
      SamplerConfig cfg;
      cfg.steps = steps;
      cfg.cfg_strength = 0.0;
      worst = std::max(worst,
                       (sample_ode(oracle, y, cfg) - x).cwiseAbs().maxCoeff());
    }
    detail = "max |out - x| " + std::to_string(worst);
    return worst <= 1e-5;
  });

  // 3. loss floor and zero-model first loss
  run(3, "loss floor", [](std::string& detail) {
    FlowSchedule lin = FlowSchedule::linear();
    Mat x = random_mat(10, 80, 21);
    Mat y = random_mat(10, 80, 22);
    const double t = 0.6;
    std::vector<bool> mask(10, true);
    Mat oracle = target_field(x, y, t, lin);
    const double floor_loss = cfm_loss(oracle, x, y, t, mask, lin);

    ModelConfig mc = tiny_model();
    TrainingConfig tc;
    tc.learning_rate = 0.0;
    Parameters params = init_model(mc, 5);
    AdamState opt = AdamState::init(mc);
    TrainingPair pair;
    pair.x = x;
    pair.y = y;
    pair.pad_value = std::log(1e-5);
    Batch b = collate({pair}, 3, 0.0);
    const double loss = train_step(params, opt, {b}, mc, tc);
    Mat u = target_field(b.x[0], b.y[0], b.t[0], lin);
    const double expect = u.array().square().mean();

    detail = "oracle loss " + std::to_string(floor_loss) + ", first-loss gap " +
             std::to_string(std::abs(loss - expect));
    return floor_loss <= 1e-10 && std::abs(loss - expect) <= 1e-6;
  });

  // 4. gradient check against central differences
  run(4, "gradient check", [](std::string& detail) {
    ModelConfig cfg;
    cfg.dim = 8;
    cfg.depth = 2;
    cfg.heads = 2;
    cfg.head_dim = 4;
    cfg.n_mels = 6;
    cfg.max_frames = 16;
    cfg.cond_dropout_p = 0.0;
    Parameters p = init_model(cfg, 29);
    Rng wout_rng(17);
    for (Eigen::Index i = 0; i < p.w_out.size(); ++i) {
      p.w_out.data()[i] = 0.1 * wout_rng.normal();
    }
    const int t_frames = 5;
    Mat x = random_mat(t_frames, cfg.n_mels, 60);
    Mat y = random_mat(t_frames, cfg.n_mels, 61);
    const double t = 0.42;
    std::vector<bool> mask(t_frames, true);
    FlowSchedule lin = FlowSchedule::linear();
    Mat x_t = interpolate(x, y, t, lin);
    Mat u = target_field(x, y, t, lin);

    auto loss_of = [&](const Parameters& q) {
      Mat v = forward(q, cfg, x_t, &y, t, mask);
      return cfm_loss(v, x, y, t, mask, lin);
    };
    ForwardCache cache;
    Mat v = forward(p, cfg, x_t, &y, t, mask, &cache);
    Mat d_out = 2.0 * (v - u) / (static_cast<double>(t_frames) * cfg.n_mels);
    Parameters grads = Parameters::zeros(cfg);
    backward(p, cfg, cache, d_out, grads);

    auto prefs = tensor_refs(p);
    auto grefs = tensor_refs(grads);
    const double h = 1e-5;
    Rng rng(99);
    double worst = 0.0;
    int probes_done = 0;
    for (std::size_t g = 0; g < prefs.size(); ++g) {
      const Eigen::Index n = prefs[g].size();
      const int probes = static_cast<int>(std::min<Eigen::Index>(5, n));
      for (int probe = 0; probe < probes; ++probe) {
        const Eigen::Index idx =
            static_cast<Eigen::Index>(rng.next_below(static_cast<uint64_t>(n)));
        const double saved = prefs[g].data[idx];
        prefs[g].data[idx] = saved + h;
        const double lp = loss_of(p);
        prefs[g].data[idx] = saved - h;
        const double lm = loss_of(p);
        prefs[g].data[idx] = saved;
        const double numeric = (lp - lm) / (2.0 * h);
        const double analytic = grefs[g].data[idx];
        const double denom =
            std::max({std::abs(numeric), std::abs(analytic), 1e-4});
        worst = std::max(worst, std::abs(numeric - analytic) / denom);
        ++probes_done;
      }
    }
    detail = std::to_string(probes_done) + " probes, worst relative error " +
             std::to_string(worst);
    return worst <= 1e-4;
  });

  // 5. overfit dynamics on one fixed pair
  run(5, "overfit dynamics", [](std::string& detail) {
    ModelConfig mc = tiny_model();
    TrainingConfig tc;
    tc.learning_rate = 3e-4;
    tc.warmup_steps = 50;
    MelConfig mel_cfg;
    RandomDegradationPolicy policy;
    TfMaskConfig no_masks;
    no_masks.num_time_masks = 0;
    no_masks.num_freq_masks = 0;
    Waveform clean = synth_speech(1.0, 16000, 77);
    TrainingPair pair = make_training_pair(clean, policy, mel_cfg, no_masks,
                                           mc.max_frames, 7);
    Batch b = collate({pair}, 11, 0.0);
    Parameters params = init_model(mc, 23);
    AdamState opt = AdamState::init(mc);
    double first = 0.0, last = 0.0;
    for (int step = 0; step < 500; ++step) {
      const double loss = train_step(params, opt, {b}, mc, tc);
      if (step == 0) first = loss;
      last = loss;
    }
    detail = "loss " + std::to_string(first) + " -> " + std::to_string(last);
    return first > 0.0 && last < 0.05 * first;
  });

  // 6. end-to-end improvement after desk-scale training
  run(6, "end-to-end improvement", [](std::string& detail) {
    MelConfig mel_cfg;
    ModelConfig mc = tiny_model();
    mc.cond_dropout_p = 0.15;
    TrainingConfig tc;
    tc.learning_rate = 3e-4;
    tc.warmup_steps = 100;
    tc.batch_size = 4;
    tc.max_frames = 64;
    tc.total_steps = 2000;
    tc.cond_dropout_p = 0.15;
    tc.seed = 2024;

    std::vector<Waveform> corpus;
    for (uint64_t i = 0; i < 16; ++i) {
      corpus.push_back(synth_speech(1.0, 16000, 300 + i));
    }
    Checkpoint state;
    state.model_config = mc;
    state.training_config = tc;
    state.params = init_model(mc, 41);
    round_to_storage(state.params);
    state.opt = AdamState::init(mc);
    train_loop(state, mel_cfg, corpus, 2000, nullptr);

    RestoreOptions opts;
    opts.window = 64;
    opts.overlap = 16;
    TfMaskConfig no_masks;
    no_masks.num_time_masks = 0;
    no_masks.num_freq_masks = 0;
    int wins = 0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
      Waveform clean = synth_speech(1.0, 16000, 9000 + seed);  // held out
      TrainingPair pair = make_training_pair(clean, tc.policy, mel_cfg,
                                             no_masks, 10000, 7000 + seed);
      Mat restored = restore_mel(pair.y, state, opts);
      const double lsd_degraded = log_spectral_distance(pair.x, pair.y);
      const double lsd_restored = log_spectral_distance(pair.x, restored);
      if (lsd_restored < lsd_degraded) ++wins;
    }
    detail = "restored beats degraded on " + std::to_string(wins) +
             "/10 held-out seeds";
    return wins >= 8;
  });

  // 7. degradation exactness
  run(7, "degradation exactness", [](std::string& detail) {
    Waveform s = synth_speech(0.8, 16000, 51);
    Rng rng(8);
    double worst_snr = 0.0;
    for (int trial = 0; trial < 15; ++trial) {
      const double snr = rng.uniform(-10.0, 30.0);
      Waveform n = synth_noise(NoiseKind::kPink, 16000, 16000,
                               static_cast<uint64_t>(trial));
      Waveform mix = add_noise_at_snr(s, n, snr);
      double es = 0.0, en = 0.0;
      for (std::size_t i = 0; i < s.samples.size(); ++i) {
        es += s.samples[i] * s.samples[i];
        const double d = mix.samples[i] - s.samples[i];
        en += d * d;
      }
      worst_snr = std::max(worst_snr,
                           std::abs(10.0 * std::log10(es / en) - snr));
    }

    Waveform imp;
    imp.sample_rate_hz = 16000;
    imp.samples = {1.0};
    Waveform rev = apply_reverb(s, imp);
    bool identity = rev.samples == s.samples;

    bool crush_ok = true;
    for (int bits : {2, 4, 8, 12}) {
      Waveform q = bitcrush(s, bits);
      const double bound = std::pow(2.0, -bits) + 1e-12;
      for (std::size_t i = 0; i < s.samples.size(); ++i) {
        crush_ok = crush_ok && std::abs(q.samples[i] - s.samples[i]) <= bound;
      }
    }

    MelConfig mel_cfg;
    MelSpectrogram mel = mel_spectrogram(s, mel_cfg);
    MelSpectrogram masked = tf_mask(mel, 1, 1, 0.1, 0.1, 3);
    const double floor_val = std::log(mel_cfg.log_floor);
    long changed = 0;
    bool mask_vals_ok = true;
    for (Eigen::Index i = 0; i < mel.frames.size(); ++i) {
      if (masked.frames.data()[i] != mel.frames.data()[i]) {
        ++changed;
        mask_vals_ok = mask_vals_ok && masked.frames.data()[i] == floor_val;
      }
    }
    // one time mask (<=10% frames) plus one freq mask (<=10% bins)
    const long t_frames = mel.frames.rows(), f = mel.frames.cols();
    const long bound = (t_frames / 10 + 1) * f + (f / 10 + 1) * t_frames;
    const bool mask_ok = mask_vals_ok && changed <= bound;

    detail = "snr error " + std::to_string(worst_snr) + " dB, reverb identity " +
             (identity ? "yes" : "no") + ", bitcrush bound " +
             (crush_ok ? "held" : "violated") + ", tf_mask changed " +
             std::to_string(changed) + "/" + std::to_string(bound) + " allowed";
    return worst_snr <= 1e-6 && identity && crush_ok && mask_ok;
  });

  // 8. STOI sanity
  run(8, "stoi sanity", [](std::string& detail) {
    Waveform clean = synth_speech(3.0, 16000, 61);
    const double self = stoi(clean, clean);
    auto at_snr = [&](double snr, uint64_t seed) {
      Waveform n = synth_noise(NoiseKind::kWhite,
                               static_cast<int>(clean.samples.size()), 16000,
                               seed);
      return stoi(clean, add_noise_at_snr(clean, n, snr));
    };
    const double s20 = at_snr(20.0, 1), s10 = at_snr(10.0, 2),
                 s0 = at_snr(0.0, 3), sm10 = at_snr(-10.0, 4);
    detail = "self " + std::to_string(self) + ", sweep " + std::to_string(s20) +
             " > " + std::to_string(s10) + " > " + std::to_string(s0) + " > " +
             std::to_string(sm10);
    return self >= 0.99 && s20 - s10 > 0.02 && s10 - s0 > 0.02 &&
           s0 - sm10 > 0.02;
  });

  // 9. chunking
  run(9, "chunking", [](std::string& detail) {
    Rng rng(505);
    bool plans_ok = true;
    for (int trial = 0; trial < 1000; ++trial) {
      const int window = 2 + static_cast<int>(rng.next_below(200));
      const int overlap =
          static_cast<int>(rng.next_below(static_cast<uint64_t>(window)));
      const int t_frames = 1 + static_cast<int>(rng.next_below(2000));
      ChunkPlan plan = chunk_plan(t_frames, window, overlap);
      plans_ok = plans_ok && plan.segments.front().first == 0 &&
                 plan.segments.back().second == t_frames;
      int covered = plan.segments.front().second;
      for (std::size_t i = 1; i < plan.segments.size(); ++i) {
        plans_ok = plans_ok && plan.segments[i].first <= covered &&
                   plan.segments[i].second > covered;
        covered = plan.segments[i].second;
      }
      plans_ok = plans_ok && covered == t_frames;
    }

    Mat src = random_mat(250, 8, 71);
    ChunkPlan plan = chunk_plan(250, 100, 50);
    std::vector<Mat> chunks;
    for (const auto& [s, e] : plan.segments) {
      chunks.push_back(src.block(s, 0, e - s, src.cols()));
    }
    const double merge_err = (crossfade_merge(chunks, plan) - src)
                                 .cwiseAbs()
                                 .maxCoeff();

    Checkpoint ckpt;
    ckpt.model_config = tiny_model();
    ckpt.model_config.max_frames = 256;
    ckpt.params = init_model(ckpt.model_config, 3);
    Rng wr(9);
    for (Eigen::Index i = 0; i < ckpt.params.w_out.size(); ++i) {
      ckpt.params.w_out.data()[i] = 0.05 * wr.normal();
    }
    ckpt.opt = AdamState::init(ckpt.model_config);
    RestoreOptions opts;
    Mat y = random_mat(50, 80, 81);
    Mat chunked = restore_mel(y, ckpt, opts);
    FieldFn field = [&](const Mat& x_t, double t, const Mat* cond) -> Mat {
      std::vector<bool> mask(static_cast<std::size_t>(x_t.rows()), true);
      return forward(ckpt.params, ckpt.model_config, x_t, cond, t, mask);
    };
    const double subwindow_err =
        (chunked - sample_ode(field, y, opts.sampler)).cwiseAbs().maxCoeff();

    detail = std::string("1000 plans ") + (plans_ok ? "gap-free" : "broken") +
             ", merge error " + std::to_string(merge_err) +
             ", sub-window error " + std::to_string(subwindow_err);
    return plans_ok && merge_err == 0.0 && subwindow_err == 0.0;
  });

  // 10. reproducibility and persistence
  run(10, "reproducibility and persistence", [](std::string& detail) {
    MelConfig mel_cfg;
    ModelConfig mc = tiny_model();
    TrainingConfig tc;
    tc.batch_size = 2;
    tc.max_frames = 48;
    tc.seed = 999;
    tc.warmup_steps = 10;
    std::vector<Waveform> corpus = {synth_speech(0.8, 16000, 1),
                                    synth_speech(0.8, 16000, 2)};
    auto fresh = [&]() {
      Checkpoint c;
      c.model_config = mc;
      c.training_config = tc;
      c.params = init_model(mc, 71);
      round_to_storage(c.params);
      c.opt = AdamState::init(mc);
      return c;
    };
    std::vector<double> la, lb, lc;
    Checkpoint a = fresh();
    train_loop(a, mel_cfg, corpus, 4,
               [&](const StepLog& s) { la.push_back(s.loss); });
    Checkpoint b = fresh();
    train_loop(b, mel_cfg, corpus, 4,
               [&](const StepLog& s) { lb.push_back(s.loss); });
    bool curves_match = la == lb && max_param_diff(a.params, b.params) == 0.0;

    Checkpoint c = fresh();
    train_loop(c, mel_cfg, corpus, 2,
               [&](const StepLog& s) { lc.push_back(s.loss); });
    const std::string path = "/tmp/fr_acceptance_resume.ckpt";
    save_checkpoint(path, c);
    Checkpoint loaded = load_checkpoint(path);
    const bool roundtrip = max_param_diff(loaded.params, c.params) == 0.0 &&
                           max_param_diff(loaded.opt.m, c.opt.m) == 0.0 &&
                           max_param_diff(loaded.opt.v, c.opt.v) == 0.0;
    train_loop(loaded, mel_cfg, corpus, 2,
               [&](const StepLog& s) { lc.push_back(s.loss); });
    const bool resume_match =
        lc == la && max_param_diff(loaded.params, a.params) == 0.0;
    std::remove(path.c_str());

    RandomDegradationPolicy policy;
    DegradationChain chain = sample_chain(policy, 12);
    DegradationChain replay = DegradationChain::deserialize(chain.serialize());
    Waveform s = synth_speech(0.5, 16000, 3);
    const bool replay_match =
        apply_chain(s, chain).samples == apply_chain(s, replay).samples &&
        chain.serialize() == replay.serialize();

    detail = std::string("curves ") + (curves_match ? "match" : "diverge") +
             ", checkpoint " + (roundtrip ? "bit-exact" : "lossy") +
             ", resume " + (resume_match ? "matches" : "diverges") +
             ", replay " + (replay_match ? "byte-identical" : "differs");
    return curves_match && roundtrip && resume_match && replay_match;
  });

  // 11. sampler self-convergence
  run(11, "sampler convergence", [](std::string& detail) {
    FieldFn field = [](const Mat& xt, double t, const Mat*) {
      return (xt.array().sin() + t).matrix().eval();
    };
    Mat y = random_mat(4, 4, 91);
    auto at_steps = [&](int steps) {
      SamplerConfig cfg;
      cfg.steps = steps;
      cfg.cfg_strength = 0.0;
      return sample_ode(field, y, cfg);
    };
    Mat ref = at_steps(1024);
    const double e16 = (at_steps(16) - ref).cwiseAbs().maxCoeff();
    const double e32 = (at_steps(32) - ref).cwiseAbs().maxCoeff();
    const double ratio = e32 / e16;
    detail = "error ratio 32/16 steps = " + std::to_string(ratio);
    return ratio >= 0.4 && ratio <= 0.6;
  });

  std::cout << (failures == 0 ? "ALL CRITERIA PASSED"
                              : std::to_string(failures) + " CRITERIA FAILED")
            << std::endl;
  return failures;
}
