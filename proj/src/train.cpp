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

#include "fr/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "fr/rng.hpp"

namespace fr {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr char kMagic[] = "FRCKPT";

using njson = nlohmann::ordered_json;

njson policy_to_json(const RandomDegradationPolicy& p) {
  njson j;
  j["p_reverb"] = p.p_reverb;
  j["p_bandlimit"] = p.p_bandlimit;
  j["p_bitcrush"] = p.p_bitcrush;
  j["p_compress"] = p.p_compress;
  j["p_distort"] = p.p_distort;
  j["p_gain"] = p.p_gain;
  j["p_noise"] = p.p_noise;
  j["snr_db_range"] = {p.snr_db_range.first, p.snr_db_range.second};
  j["rt60_range"] = {p.rt60_range.first, p.rt60_range.second};
  j["cutoff_hz_range"] = {p.cutoff_hz_range.first, p.cutoff_hz_range.second};
  j["bits_range"] = {p.bits_range.first, p.bits_range.second};
  j["threshold_db_range"] = {p.threshold_db_range.first,
                             p.threshold_db_range.second};
  j["ratio_range"] = {p.ratio_range.first, p.ratio_range.second};
  j["drive_range"] = {p.drive_range.first, p.drive_range.second};
  j["gain_db_range"] = {p.gain_db_range.first, p.gain_db_range.second};
  j["max_chain_length"] = p.max_chain_length;
  return j;
}

RandomDegradationPolicy policy_from_json(const nlohmann::json& j) {
  RandomDegradationPolicy p;
  p.p_reverb = j.at("p_reverb");
  p.p_bandlimit = j.at("p_bandlimit");
  p.p_bitcrush = j.at("p_bitcrush");
  p.p_compress = j.at("p_compress");
  p.p_distort = j.at("p_distort");
  p.p_gain = j.at("p_gain");
  p.p_noise = j.at("p_noise");
  auto pair_d = [&](const char* key) {
    return std::make_pair(j.at(key)[0].get<double>(), j.at(key)[1].get<double>());
  };
  p.snr_db_range = pair_d("snr_db_range");
  p.rt60_range = pair_d("rt60_range");
  p.cutoff_hz_range = pair_d("cutoff_hz_range");
  p.bits_range = {j.at("bits_range")[0].get<int>(),
                  j.at("bits_range")[1].get<int>()};
  p.threshold_db_range = pair_d("threshold_db_range");
  p.ratio_range = pair_d("ratio_range");
  p.drive_range = pair_d("drive_range");
  p.gain_db_range = pair_d("gain_db_range");
  p.max_chain_length = j.at("max_chain_length");
  return p;
}

njson model_config_to_json(const ModelConfig& c) {
  njson j;
  j["dim"] = c.dim;
  j["depth"] = c.depth;
  j["heads"] = c.heads;
  j["head_dim"] = c.head_dim;
  j["n_mels"] = c.n_mels;
  j["max_frames"] = c.max_frames;
  j["cond_dropout_p"] = c.cond_dropout_p;
  j["long_skip"] = c.long_skip;
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.dim = j.at("dim");
  c.depth = j.at("depth");
  c.heads = j.at("heads");
  c.head_dim = j.at("head_dim");
  c.n_mels = j.at("n_mels");
  c.max_frames = j.at("max_frames");
  c.cond_dropout_p = j.at("cond_dropout_p");
  c.long_skip = j.at("long_skip");
  return c;
}

njson training_config_to_json(const TrainingConfig& c) {
  njson j;
  j["learning_rate"] = c.learning_rate;
  j["warmup_steps"] = c.warmup_steps;
  j["grad_accum"] = c.grad_accum;
  j["max_frames"] = c.max_frames;
  j["batch_size"] = c.batch_size;
  j["total_steps"] = c.total_steps;
  j["cond_dropout_p"] = c.cond_dropout_p;
  j["weight_decay"] = c.weight_decay;
  j["schedule"] = c.schedule;
  j["seed"] = c.seed;
  j["policy"] = policy_to_json(c.policy);
  j["tf_mask"] = {{"num_time_masks", c.tf_mask.num_time_masks},
                  {"num_freq_masks", c.tf_mask.num_freq_masks},
                  {"max_time_frac", c.tf_mask.max_time_frac},
                  {"max_freq_frac", c.tf_mask.max_freq_frac}};
  return j;
}

TrainingConfig training_config_from_json(const nlohmann::json& j) {
  TrainingConfig c;
  c.learning_rate = j.at("learning_rate");
  c.warmup_steps = j.at("warmup_steps");
  c.grad_accum = j.at("grad_accum");
  c.max_frames = j.at("max_frames");
  c.batch_size = j.at("batch_size");
  c.total_steps = j.at("total_steps");
  c.cond_dropout_p = j.at("cond_dropout_p");
  c.weight_decay = j.at("weight_decay");
  c.schedule = j.at("schedule").get<std::string>();
  c.seed = j.at("seed");
  c.policy = policy_from_json(j.at("policy"));
  const auto& tm = j.at("tf_mask");
  c.tf_mask.num_time_masks = tm.at("num_time_masks");
  c.tf_mask.num_freq_masks = tm.at("num_freq_masks");
  c.tf_mask.max_time_frac = tm.at("max_time_frac");
  c.tf_mask.max_freq_frac = tm.at("max_freq_frac");
  return c;
}

}  // namespace

void TrainingConfig::validate() const {
  if (learning_rate < 0) throw InvalidArgument("TrainingConfig: negative lr");
  if (warmup_steps < 1) throw InvalidArgument("TrainingConfig: warmup_steps < 1");
  if (grad_accum < 1) throw InvalidArgument("TrainingConfig: grad_accum < 1");
  if (max_frames < 1) throw InvalidArgument("TrainingConfig: max_frames < 1");
  if (batch_size < 1) throw InvalidArgument("TrainingConfig: batch_size < 1");
  if (total_steps < 0) throw InvalidArgument("TrainingConfig: total_steps < 0");
  if (cond_dropout_p < 0.0 || cond_dropout_p >= 1.0) {
    throw InvalidArgument("TrainingConfig: cond_dropout_p outside [0,1)");
  }
  if (weight_decay < 0) throw InvalidArgument("TrainingConfig: negative weight_decay");
  policy.validate();
}

TrainingPair make_training_pair(const Waveform& clean,
                                const RandomDegradationPolicy& policy,
                                const MelConfig& mel_cfg,
                                const TfMaskConfig& tf_cfg, int max_frames,
                                uint64_t seed) {
  if (clean.samples.size() < static_cast<std::size_t>(mel_cfg.n_fft)) {
    throw InvalidArgument("make_training_pair: clean audio too short");
  }
  DegradationChain chain = sample_chain(policy, Rng::mix(seed, 0xde6ULL));
  Waveform degraded = apply_chain(clean, chain);

  MelSpectrogram mx = mel_spectrogram(clean, mel_cfg);
  MelSpectrogram my = mel_spectrogram(degraded, mel_cfg);

  Rng rng(Rng::mix(seed, 0x7061697ULL));
  const int nt = tf_cfg.num_time_masks > 0
                     ? static_cast<int>(rng.next_below(
                           static_cast<uint64_t>(tf_cfg.num_time_masks) + 1))
                     : 0;
  const int nf = tf_cfg.num_freq_masks > 0
                     ? static_cast<int>(rng.next_below(
                           static_cast<uint64_t>(tf_cfg.num_freq_masks) + 1))
                     : 0;
  if (nt > 0 || nf > 0) {
    my = tf_mask(my, nt, nf, tf_cfg.max_time_frac, tf_cfg.max_freq_frac,
                 Rng::mix(seed, 0x6d61736bULL));
  }

  // both sides cut from the same aligned offset
  const int t_frames = static_cast<int>(mx.frames.rows());
  int start = 0, len = t_frames;
  if (t_frames > max_frames) {
    start = static_cast<int>(
        rng.next_below(static_cast<uint64_t>(t_frames - max_frames) + 1));
    len = max_frames;
  }

  TrainingPair pair;
  pair.x = mx.frames.block(start, 0, len, mel_cfg.n_mels);
  pair.y = my.frames.block(start, 0, len, mel_cfg.n_mels);
  pair.pad_value = std::log(mel_cfg.log_floor);
  pair.chain_log = chain.serialize();
  return pair;
}

Batch collate(const std::vector<TrainingPair>& pairs, uint64_t seed,
              double cond_dropout_p) {
  if (pairs.empty()) throw InvalidArgument("collate: empty pair list");
  Eigen::Index t_max = 0;
  const Eigen::Index f = pairs.front().x.cols();
  for (const auto& p : pairs) {
    if (p.x.cols() != f || p.y.cols() != f || p.x.rows() != p.y.rows()) {
      throw InvalidArgument("collate: inconsistent pair shapes");
    }
    t_max = std::max(t_max, p.x.rows());
  }
  Batch b;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    const Eigen::Index len = p.x.rows();
    Mat px = Mat::Constant(t_max, f, p.pad_value);
    Mat py = Mat::Constant(t_max, f, p.pad_value);
    px.topRows(len) = p.x;
    py.topRows(len) = p.y;
    b.x.push_back(std::move(px));
    b.y.push_back(std::move(py));
    std::vector<bool> mask(static_cast<std::size_t>(t_max), false);
    for (Eigen::Index r = 0; r < len; ++r) mask[static_cast<std::size_t>(r)] = true;
    b.mask.push_back(std::move(mask));
    Rng rng(Rng::mix(seed, static_cast<uint64_t>(i)));
    b.t.push_back(rng.uniform());
    b.cond_null.push_back(rng.bernoulli(cond_dropout_p));
    b.chain_log.push_back(p.chain_log);
  }
  return b;
}

AdamState AdamState::init(const ModelConfig& cfg) {
  AdamState s;
  s.m = Parameters::zeros(cfg);
  s.v = Parameters::zeros(cfg);
  return s;
}

void round_to_storage(Parameters& p) {
  for (auto& ref : tensor_refs(p)) {
    for (Eigen::Index i = 0; i < ref.size(); ++i) {
      ref.data[i] = static_cast<double>(static_cast<float>(ref.data[i]));
    }
  }
}

double train_step(Parameters& params, AdamState& opt,
                  const std::vector<Batch>& micro_batches,
                  const ModelConfig& model_cfg, const TrainingConfig& cfg) {
  cfg.validate();
  const FlowSchedule schedule = FlowSchedule::by_name(cfg.schedule);
  Parameters grads = Parameters::zeros(model_cfg);

  std::size_t n_items = 0;
  for (const auto& b : micro_batches) n_items += b.size();
  if (n_items == 0) throw InvalidArgument("train_step: no items");

  double loss_sum = 0.0;
  for (const auto& batch : micro_batches) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Mat& x = batch.x[i];
      const Mat& y = batch.y[i];
      const double t = batch.t[i];
      const auto& mask = batch.mask[i];
      const Mat* cond = batch.cond_null[i] ? nullptr : &y;

      Mat x_t = interpolate(x, y, t, schedule);
      ForwardCache cache;
      Mat v_pred = forward(params, model_cfg, x_t, cond, t, mask, &cache);
      const double loss = cfm_loss(v_pred, x, y, t, mask, schedule);
      if (!std::isfinite(loss)) {
        throw NumericError("train_step: non-finite loss; chain: " +
                           batch.chain_log[i]);
      }
      loss_sum += loss;

      Eigen::Index valid = 0;
      for (bool m : mask) valid += m ? 1 : 0;
      const Mat u = target_field(x, y, t, schedule);
      Mat d_out = Mat::Zero(x.rows(), x.cols());
      const double coeff =
          2.0 / (static_cast<double>(valid * x.cols()) *
                 static_cast<double>(n_items));
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        if (!mask[static_cast<std::size_t>(r)]) continue;
        d_out.row(r) = coeff * (v_pred.row(r) - u.row(r));
      }
      backward(params, model_cfg, cache, d_out, grads);
    }
  }

  // linear warmup then constant
  const long update = opt.updates + 1;
  const double lr =
      cfg.learning_rate *
      std::min(1.0, static_cast<double>(update) / cfg.warmup_steps);

  auto pr = tensor_refs(params);
  auto gr = tensor_refs(grads);
  auto mr = tensor_refs(opt.m);
  auto vr = tensor_refs(opt.v);
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(update));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(update));
  for (std::size_t k = 0; k < pr.size(); ++k) {
    for (Eigen::Index i = 0; i < pr[k].size(); ++i) {
      const double g = gr[k].data[i];
      double& m = mr[k].data[i];
      double& v = vr[k].data[i];
      m = kBeta1 * m + (1.0 - kBeta1) * g;
      v = kBeta2 * v + (1.0 - kBeta2) * g * g;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      double& w = pr[k].data[i];
      w -= lr * (mhat / (std::sqrt(vhat) + kAdamEps) + cfg.weight_decay * w);
    }
  }
  opt.updates = update;
  round_to_storage(params);
  round_to_storage(opt.m);
  round_to_storage(opt.v);

  return loss_sum / static_cast<double>(n_items);
}

// ---------------------------------------------------------------------------
// checkpoint container: magic line, one-line JSON header with configs and a
// tensor manifest, then raw little-endian float32 blobs in manifest order.

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("save_checkpoint: cannot open for write: " + path);

  Checkpoint& c = const_cast<Checkpoint&>(ckpt);
  auto groups = std::vector<std::pair<std::string, std::vector<TensorRef>>>{
      {"params", tensor_refs(c.params)},
      {"opt_m", tensor_refs(c.opt.m)},
      {"opt_v", tensor_refs(c.opt.v)},
  };

  njson manifest = njson::array();
  long total = 0;
  for (auto& [prefix, refs] : groups) {
    for (auto& r : refs) {
      manifest.push_back({{"name", prefix + "." + r.name},
                          {"rows", r.rows},
                          {"cols", r.cols}});
      total += r.size();
    }
  }
  njson header;
  header["format_version"] = ckpt.format_version;
  header["model_config"] = model_config_to_json(ckpt.model_config);
  header["training_config"] = training_config_to_json(ckpt.training_config);
  header["step"] = ckpt.step;
  header["adam_updates"] = ckpt.opt.updates;
  header["total_floats"] = total;
  header["manifest"] = manifest;

  f << kMagic << " " << ckpt.format_version << "\n";
  f << header.dump() << "\n";
  std::vector<float> buf;
  for (auto& [prefix, refs] : groups) {
    (void)prefix;
    for (auto& r : refs) {
      buf.resize(static_cast<std::size_t>(r.size()));
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        buf[static_cast<std::size_t>(i)] = static_cast<float>(r.data[i]);
      }
      f.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
  }
  if (!f) throw IoError("save_checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("load_checkpoint: cannot open: " + path);

  std::string magic_line, header_line;
  if (!std::getline(f, magic_line) || !std::getline(f, header_line)) {
    throw FormatError("load_checkpoint: truncated header: " + path);
  }
  if (magic_line.rfind(kMagic, 0) != 0) {
    throw FormatError("load_checkpoint: bad magic: " + path);
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("load_checkpoint: corrupt header: ") + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.format_version = header.at("format_version");
    if (ckpt.format_version != 1) {
      throw FormatError("load_checkpoint: unsupported format version " +
                        std::to_string(ckpt.format_version));
    }
    ckpt.model_config = model_config_from_json(header.at("model_config"));
    ckpt.training_config = training_config_from_json(header.at("training_config"));
    ckpt.step = header.at("step");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("load_checkpoint: header field error: ") +
                      e.what());
  }
  ckpt.params = Parameters::zeros(ckpt.model_config);
  ckpt.opt = AdamState::init(ckpt.model_config);
  ckpt.opt.updates = header.at("adam_updates");

  auto groups = std::vector<std::pair<std::string, std::vector<TensorRef>>>{
      {"params", tensor_refs(ckpt.params)},
      {"opt_m", tensor_refs(ckpt.opt.m)},
      {"opt_v", tensor_refs(ckpt.opt.v)},
  };
  const auto& manifest = header.at("manifest");
  std::size_t mi = 0;
  long total_expected = header.at("total_floats");
  long total = 0;
  for (auto& [prefix, refs] : groups) {
    for (auto& r : refs) {
      if (mi >= manifest.size()) {
        throw FormatError("load_checkpoint: manifest too short");
      }
      const auto& e = manifest[mi++];
      if (e.at("name") != prefix + "." + r.name ||
          e.at("rows") != r.rows || e.at("cols") != r.cols) {
        throw FormatError("load_checkpoint: manifest mismatch at " +
                          e.at("name").get<std::string>());
      }
      std::vector<float> buf(static_cast<std::size_t>(r.size()));
      f.read(reinterpret_cast<char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
      if (f.gcount() !=
          static_cast<std::streamsize>(buf.size() * sizeof(float))) {
        throw FormatError("load_checkpoint: truncated blob at " + r.name);
      }
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        r.data[i] = static_cast<double>(buf[static_cast<std::size_t>(i)]);
      }
      total += r.size();
    }
  }
  if (mi != manifest.size() || total != total_expected) {
    throw FormatError("load_checkpoint: manifest/blob length disagreement");
  }
  // must be at EOF
  char extra;
  f.read(&extra, 1);
  if (f.gcount() != 0) {
    throw FormatError("load_checkpoint: trailing bytes after blobs");
  }
  return ckpt;
}

void train_loop(Checkpoint& state, const MelConfig& mel_cfg,
                const std::vector<Waveform>& corpus, long steps_to_run,
                const std::function<void(const StepLog&)>& on_step) {
  if (corpus.empty()) throw InvalidArgument("train_loop: empty corpus");
  const TrainingConfig& cfg = state.training_config;
  cfg.validate();

  for (long n = 0; n < steps_to_run; ++n) {
    const long s = state.step;
    std::vector<Batch> micro_batches;
    for (int micro = 0; micro < cfg.grad_accum; ++micro) {
      std::vector<TrainingPair> pairs;
      for (int j = 0; j < cfg.batch_size; ++j) {
        const int slot = micro * cfg.batch_size + j;
        Rng pick(Rng::mix(cfg.seed, static_cast<uint64_t>(s),
                          0x9100ULL + static_cast<uint64_t>(slot)));
        const std::size_t idx =
            static_cast<std::size_t>(pick.next_below(corpus.size()));
        const uint64_t pair_seed =
            Rng::mix(cfg.seed, static_cast<uint64_t>(s),
                     0x5000ULL + static_cast<uint64_t>(slot));
        pairs.push_back(make_training_pair(corpus[idx], cfg.policy, mel_cfg,
                                           cfg.tf_mask, cfg.max_frames,
                                           pair_seed));
      }
      const uint64_t collate_seed =
          Rng::mix(cfg.seed, static_cast<uint64_t>(s),
                   0xC011ULL + static_cast<uint64_t>(micro));
      micro_batches.push_back(
          collate(pairs, collate_seed, cfg.cond_dropout_p));
    }
    const double loss = train_step(state.params, state.opt, micro_batches,
                                   state.model_config, cfg);
    const double lr =
        cfg.learning_rate *
        std::min(1.0, static_cast<double>(state.opt.updates) / cfg.warmup_steps);
    state.step = s + 1;
    if (on_step) on_step(StepLog{state.step, loss, lr});
  }
}

Waveform synth_speech(double seconds, int sample_rate_hz, uint64_t seed) {
  if (seconds <= 0 || sample_rate_hz <= 0) {
    throw InvalidArgument("synth_speech: non-positive duration or rate");
  }
  const int n = static_cast<int>(seconds * sample_rate_hz);
  Rng rng(Rng::mix(seed, 0x766f78ULL));

  const double f0_base = rng.uniform(110.0, 200.0);
  const double f0_mod_hz = rng.uniform(0.3, 1.2);
  const double f0_phase = rng.uniform(0.0, 2.0 * M_PI);
  const double syll_hz = rng.uniform(2.5, 4.5);
  const double syll_phase = rng.uniform(0.0, 2.0 * M_PI);
  // three formant-like resonances with per-utterance centers
  const double formants[3] = {rng.uniform(400.0, 700.0),
                              rng.uniform(1100.0, 1700.0),
                              rng.uniform(2300.0, 3000.0)};
  const double bw[3] = {150.0, 220.0, 300.0};

  Waveform w;
  w.sample_rate_hz = sample_rate_hz;
  w.samples.resize(static_cast<std::size_t>(n), 0.0);

  double phase = rng.uniform(0.0, 2.0 * M_PI);
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate_hz;
    const double f0 =
        f0_base * std::pow(2.0, 0.25 * std::sin(2.0 * M_PI * f0_mod_hz * t +
                                                f0_phase));
    phase += 2.0 * M_PI * f0 / sample_rate_hz;
    double s = 0.0;
    for (int k = 1; k * f0 < 4000.0 && k <= 40; ++k) {
      const double fk = k * f0;
      double emphasis = 0.15;
      for (int m = 0; m < 3; ++m) {
        const double d = (fk - formants[m]) / bw[m];
        emphasis += std::exp(-0.5 * d * d);
      }
      s += (emphasis / k) * std::sin(k * phase);
    }
    const double env =
        0.55 + 0.45 * std::sin(2.0 * M_PI * syll_hz * t + syll_phase);
    w.samples[static_cast<std::size_t>(i)] = env * s + 0.002 * rng.normal();
  }
  double peak = 0.0;
  for (double s : w.samples) peak = std::max(peak, std::abs(s));
  if (peak > 1e-12) {
    for (double& s : w.samples) s *= 0.5 / peak;
  }
  return w;
}

}  // namespace fr
