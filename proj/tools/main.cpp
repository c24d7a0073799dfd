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

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fr/degrade.hpp"
#include "fr/evalkit.hpp"
#include "fr/mel.hpp"
#include "fr/restore.hpp"
#include "fr/rng.hpp"
#include "fr/train.hpp"
#include "fr/wav.hpp"

namespace fs = std::filesystem;
using namespace fr;

namespace {

// exit codes: 0 ok, 1 usage, 2 I/O, 3 config, 4 numeric
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitConfig = 3;
constexpr int kExitNumeric = 4;

// ---------------------------------------------------------------------------
// flat sectioned key=value config files

using ConfigMap = std::map<std::string, std::map<std::string, std::string>>;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file: " + path);
  ConfigMap cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      cfg[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    }
    cfg[section][key] = value;
  }
  return cfg;
}

// typed reader that consumes keys so leftovers can be reported as unknown
class SectionReader {
 public:
  SectionReader(ConfigMap& cfg, std::string section)
      : section_(std::move(section)) {
    auto it = cfg.find(section_);
    if (it != cfg.end()) keys_ = &it->second;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!keys_) return;
    auto it = keys_->find(key);
    if (it == keys_->end()) return;
    std::istringstream ss(it->second);
    T value{};
    if constexpr (std::is_same_v<T, std::string>) {
      value = it->second;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (it->second == "true" || it->second == "1") {
        value = true;
      } else if (it->second == "false" || it->second == "0") {
        value = false;
      } else {
        throw ConfigError("[" + section_ + "] " + key +
                          ": expected true/false, got '" + it->second + "'");
      }
    } else {
      if (!(ss >> value) || !ss.eof()) {
        throw ConfigError("[" + section_ + "] " + key + ": bad value '" +
                          it->second + "'");
      }
    }
    out = value;
    keys_->erase(it);
  }

 private:
  std::string section_;
  std::map<std::string, std::string>* keys_ = nullptr;
};

void reject_leftovers(const ConfigMap& cfg, const std::string& path) {
  for (const auto& [section, keys] : cfg) {
    for (const auto& [key, value] : keys) {
      (void)value;
      throw ConfigError(path + ": unknown config key '" + key +
                        "' in section [" + section + "]");
    }
  }
}

MelConfig read_mel_section(ConfigMap& cfg) {
  MelConfig m;
  SectionReader r(cfg, "mel");
  r.get("sample_rate_hz", m.sample_rate_hz);
  r.get("n_fft", m.n_fft);
  r.get("hop", m.hop);
  r.get("n_mels", m.n_mels);
  r.get("f_min_hz", m.f_min_hz);
  r.get("f_max_hz", m.f_max_hz);
  r.get("log_floor", m.log_floor);
  return m;
}

ModelConfig read_model_section(ConfigMap& cfg) {
  ModelConfig m;
  SectionReader r(cfg, "model");
  r.get("dim", m.dim);
  r.get("depth", m.depth);
  r.get("heads", m.heads);
  r.get("head_dim", m.head_dim);
  r.get("n_mels", m.n_mels);
  r.get("max_frames", m.max_frames);
  r.get("cond_dropout_p", m.cond_dropout_p);
  r.get("long_skip", m.long_skip);
  return m;
}

RandomDegradationPolicy read_policy_section(ConfigMap& cfg) {
  RandomDegradationPolicy p;
  SectionReader r(cfg, "policy");
  r.get("p_reverb", p.p_reverb);
  r.get("p_bandlimit", p.p_bandlimit);
  r.get("p_bitcrush", p.p_bitcrush);
  r.get("p_compress", p.p_compress);
  r.get("p_distort", p.p_distort);
  r.get("p_gain", p.p_gain);
  r.get("p_noise", p.p_noise);
  r.get("snr_db_min", p.snr_db_range.first);
  r.get("snr_db_max", p.snr_db_range.second);
  r.get("rt60_min", p.rt60_range.first);
  r.get("rt60_max", p.rt60_range.second);
  r.get("cutoff_hz_min", p.cutoff_hz_range.first);
  r.get("cutoff_hz_max", p.cutoff_hz_range.second);
  r.get("bits_min", p.bits_range.first);
  r.get("bits_max", p.bits_range.second);
  r.get("threshold_db_min", p.threshold_db_range.first);
  r.get("threshold_db_max", p.threshold_db_range.second);
  r.get("ratio_min", p.ratio_range.first);
  r.get("ratio_max", p.ratio_range.second);
  r.get("drive_min", p.drive_range.first);
  r.get("drive_max", p.drive_range.second);
  r.get("gain_db_min", p.gain_db_range.first);
  r.get("gain_db_max", p.gain_db_range.second);
  r.get("max_chain_length", p.max_chain_length);
  return p;
}

TfMaskConfig read_tf_mask_section(ConfigMap& cfg) {
  TfMaskConfig t;
  SectionReader r(cfg, "tf_mask");
  r.get("num_time_masks", t.num_time_masks);
  r.get("num_freq_masks", t.num_freq_masks);
  r.get("max_time_frac", t.max_time_frac);
  r.get("max_freq_frac", t.max_freq_frac);
  return t;
}

struct TrainRunConfig {
  TrainingConfig train;
  ModelConfig model;
  MelConfig mel;
  std::string corpus_dir;
  int synth_items = 8;
  double synth_seconds = 2.0;
  long checkpoint_every = 100;
};

TrainRunConfig read_train_config(const std::string& path) {
  ConfigMap cfg = parse_config_file(path);
  TrainRunConfig out;
  out.mel = read_mel_section(cfg);
  out.model = read_model_section(cfg);
  out.model.n_mels = out.mel.n_mels;
  out.train.policy = read_policy_section(cfg);
  out.train.tf_mask = read_tf_mask_section(cfg);
  SectionReader r(cfg, "train");
  r.get("learning_rate", out.train.learning_rate);
  r.get("warmup_steps", out.train.warmup_steps);
  r.get("grad_accum", out.train.grad_accum);
  r.get("max_frames", out.train.max_frames);
  r.get("batch_size", out.train.batch_size);
  r.get("total_steps", out.train.total_steps);
  r.get("cond_dropout_p", out.train.cond_dropout_p);
  r.get("weight_decay", out.train.weight_decay);
  r.get("schedule", out.train.schedule);
  r.get("seed", out.train.seed);
  r.get("corpus_dir", out.corpus_dir);
  r.get("synth_items", out.synth_items);
  r.get("synth_seconds", out.synth_seconds);
  r.get("checkpoint_every", out.checkpoint_every);
  reject_leftovers(cfg, path);
  out.mel.validate();
  out.model.validate();
  out.train.validate();
  return out;
}

void print_default_config() {
  MelConfig mel;
  ModelConfig model;
  TrainingConfig train;
  RandomDegradationPolicy p;
  TfMaskConfig tm;
  std::cout << "[mel]\n"
            << "sample_rate_hz = " << mel.sample_rate_hz << "\n"
            << "n_fft = " << mel.n_fft << "\n"
            << "hop = " << mel.hop << "\n"
            << "n_mels = " << mel.n_mels << "\n"
            << "f_min_hz = " << mel.f_min_hz << "\n"
            << "f_max_hz = " << mel.f_max_hz << "\n"
            << "log_floor = " << mel.log_floor << "\n\n";
  std::cout << "[model]\n"
            << "dim = " << model.dim << "\n"
            << "depth = " << model.depth << "\n"
            << "heads = " << model.heads << "\n"
            << "head_dim = " << model.head_dim << "\n"
            << "max_frames = " << model.max_frames << "\n"
            << "cond_dropout_p = " << model.cond_dropout_p << "\n"
            << "long_skip = " << (model.long_skip ? "true" : "false") << "\n\n";
  std::cout << "[train]\n"
            << "learning_rate = " << train.learning_rate << "\n"
            << "warmup_steps = " << train.warmup_steps << "\n"
            << "grad_accum = " << train.grad_accum << "\n"
            << "max_frames = " << train.max_frames << "\n"
            << "batch_size = " << train.batch_size << "\n"
            << "total_steps = " << train.total_steps << "\n"
            << "cond_dropout_p = " << train.cond_dropout_p << "\n"
            << "weight_decay = " << train.weight_decay << "\n"
            << "schedule = " << train.schedule << "\n"
            << "seed = " << train.seed << "\n"
            << "corpus_dir =\n"
            << "synth_items = 8\n"
            << "synth_seconds = 2\n"
            << "checkpoint_every = 100\n\n";
  std::cout << "[policy]\n"
            << "p_reverb = " << p.p_reverb << "\n"
            << "p_bandlimit = " << p.p_bandlimit << "\n"
            << "p_bitcrush = " << p.p_bitcrush << "\n"
            << "p_compress = " << p.p_compress << "\n"
            << "p_distort = " << p.p_distort << "\n"
            << "p_gain = " << p.p_gain << "\n"
            << "p_noise = " << p.p_noise << "\n"
            << "snr_db_min = " << p.snr_db_range.first << "\n"
            << "snr_db_max = " << p.snr_db_range.second << "\n"
            << "rt60_min = " << p.rt60_range.first << "\n"
            << "rt60_max = " << p.rt60_range.second << "\n"
            << "cutoff_hz_min = " << p.cutoff_hz_range.first << "\n"
            << "cutoff_hz_max = " << p.cutoff_hz_range.second << "\n"
            << "bits_min = " << p.bits_range.first << "\n"
            << "bits_max = " << p.bits_range.second << "\n"
            << "threshold_db_min = " << p.threshold_db_range.first << "\n"
            << "threshold_db_max = " << p.threshold_db_range.second << "\n"
            << "ratio_min = " << p.ratio_range.first << "\n"
            << "ratio_max = " << p.ratio_range.second << "\n"
            << "drive_min = " << p.drive_range.first << "\n"
            << "drive_max = " << p.drive_range.second << "\n"
            << "gain_db_min = " << p.gain_db_range.first << "\n"
            << "gain_db_max = " << p.gain_db_range.second << "\n"
            << "max_chain_length = " << p.max_chain_length << "\n\n";
  std::cout << "[tf_mask]\n"
            << "num_time_masks = " << tm.num_time_masks << "\n"
            << "num_freq_masks = " << tm.num_freq_masks << "\n"
            << "max_time_frac = " << tm.max_time_frac << "\n"
            << "max_freq_frac = " << tm.max_freq_frac << "\n";
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_degrade(const std::string& in_path, const std::string& out_path,
                const std::string& policy_path, uint64_t seed,
                const std::string& chain_log_path,
                const std::string& replay_path) {
  Waveform in = load_wav(in_path);
  DegradationChain chain;
  if (!replay_path.empty()) {
    std::ifstream f(replay_path);
    if (!f) throw IoError("cannot open chain log: " + replay_path);
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    chain = DegradationChain::deserialize(text);
  } else {
    RandomDegradationPolicy policy;
    if (!policy_path.empty()) {
      ConfigMap cfg = parse_config_file(policy_path);
      policy = read_policy_section(cfg);
      reject_leftovers(cfg, policy_path);
    }
    policy.validate();
    chain = sample_chain(policy, seed);
  }
  Waveform out = apply_chain(in, chain);
  save_wav(out, out_path);
  if (!chain_log_path.empty()) {
    std::ofstream f(chain_log_path);
    if (!f) throw IoError("cannot write chain log: " + chain_log_path);
    f << chain.serialize() << "\n";
  }
  std::cout << "degraded " << in.samples.size() << " samples with "
            << chain.specs.size() << " chain steps\n";
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& resume_path,
              const std::string& out_dir) {
  TrainRunConfig run = read_train_config(config_path);

  Checkpoint state;
  if (!resume_path.empty()) {
    state = load_checkpoint(resume_path);
    state.training_config = run.train;
    if (state.model_config.n_mels != run.mel.n_mels) {
      throw ConfigError("resume checkpoint n_mels differs from [mel] n_mels");
    }
  } else {
    state.model_config = run.model;
    state.training_config = run.train;
    state.params = init_model(run.model, run.train.seed);
    round_to_storage(state.params);
    state.opt = AdamState::init(run.model);
  }

  std::vector<Waveform> corpus;
  if (!run.corpus_dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(run.corpus_dir)) {
      if (e.path().extension() == ".wav") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      Waveform w = load_wav(f.string());
      if (w.sample_rate_hz != run.mel.sample_rate_hz) {
        w = resample(w, run.mel.sample_rate_hz);
      }
      corpus.push_back(std::move(w));
    }
    if (corpus.empty()) {
      throw IoError("no .wav files found in corpus_dir: " + run.corpus_dir);
    }
  } else {
    for (int i = 0; i < run.synth_items; ++i) {
      corpus.push_back(synth_speech(run.synth_seconds, run.mel.sample_rate_hz,
                                    Rng::mix(run.train.seed,
                                             static_cast<uint64_t>(i))));
    }
  }

  fs::create_directories(out_dir);
  const std::string ckpt_path = (fs::path(out_dir) / "model.ckpt").string();
  const std::string log_path = (fs::path(out_dir) / "train_log.txt").string();
  std::ofstream log(log_path);
  if (!log) throw IoError("cannot write loss log: " + log_path);

  const long remaining = run.train.total_steps - state.step;
  long since_save = 0;
  train_loop(state, run.mel, corpus, std::max<long>(0, remaining),
             [&](const StepLog& s) {
               log << "step=" << s.step << " loss=" << s.loss
                   << " lr=" << s.lr << " seed=" << run.train.seed << "\n";
               std::cout << "step=" << s.step << " loss=" << s.loss
                         << " lr=" << s.lr << "\n";
               if (++since_save >= run.checkpoint_every) {
                 save_checkpoint(ckpt_path, state);
                 since_save = 0;
               }
             });
  save_checkpoint(ckpt_path, state);
  std::cout << "saved checkpoint to " << ckpt_path << " at step "
            << state.step << "\n";
  return kExitOk;
}

int cmd_restore(const std::string& in_path, const std::string& out_path,
                const std::string& ckpt_path, int steps, double cfg_strength,
                int window, int overlap, int gl_iterations) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  MelConfig mel_cfg;
  mel_cfg.n_mels = ckpt.model_config.n_mels;

  Waveform in = load_wav(in_path);
  if (in.sample_rate_hz != mel_cfg.sample_rate_hz) {
    in = resample(in, mel_cfg.sample_rate_hz);
  }

  RestoreOptions opts;
  opts.sampler.steps = steps;
  opts.sampler.cfg_strength = cfg_strength;
  opts.window = window;
  opts.overlap = overlap;
  opts.gl_iterations = gl_iterations;

  RestoreStats stats;
  const auto start = std::chrono::steady_clock::now();
  Waveform out = restore_waveform(in, ckpt, mel_cfg, opts, &stats);
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  save_wav(out, out_path);
  std::cout << "restored " << stats.frames << " frames in " << stats.chunks
            << " chunks, " << elapsed << " ms\n";
  return kExitOk;
}

int cmd_eval(const std::string& clean_dir, const std::string& degraded_dir,
             const std::string& restored_dir, const std::string& report_path) {
  std::vector<fs::path> clean_files;
  for (const auto& e : fs::directory_iterator(clean_dir)) {
    if (e.path().extension() == ".wav") clean_files.push_back(e.path());
  }
  std::sort(clean_files.begin(), clean_files.end());
  if (clean_files.empty()) {
    throw IoError("no .wav files found in clean dir: " + clean_dir);
  }

  std::vector<EvalItem> items;
  for (const auto& f : clean_files) {
    const std::string name = f.filename().string();
    const fs::path dpath = fs::path(degraded_dir) / name;
    const fs::path rpath = fs::path(restored_dir) / name;
    if (!fs::exists(dpath)) {
      throw IoError("no degraded counterpart for " + name + " in " +
                    degraded_dir);
    }
    if (!fs::exists(rpath)) {
      throw IoError("no restored counterpart for " + name + " in " +
                    restored_dir);
    }
    EvalItem item;
    item.name = name;
    item.clean = load_wav(f.string());
    item.degraded = load_wav(dpath.string());
    item.restored = load_wav(rpath.string());
    items.push_back(std::move(item));
  }

  MelConfig mel_cfg;
  EvalReport report = evaluate_set(items, mel_cfg);
  std::ofstream out(report_path);
  if (!out) throw IoError("cannot write report: " + report_path);
  out << report.serialize() << "\n";
  std::cout << "evaluated " << items.size() << " items; mean lsd delta "
            << report.mean.lsd_delta << ", mean stoi delta "
            << report.mean.stoi_delta << "\n";
  return kExitOk;
}

int cmd_spectrogram(const std::string& in_path, const std::string& out_path) {
  Waveform in = load_wav(in_path);
  MelConfig mel_cfg;
  if (in.sample_rate_hz != mel_cfg.sample_rate_hz) {
    in = resample(in, mel_cfg.sample_rate_hz);
  }
  MelSpectrogram mel = mel_spectrogram(in, mel_cfg);

  const int t_frames = static_cast<int>(mel.frames.rows());
  const double lo = std::log(mel_cfg.log_floor);
  const double hi = mel.frames.maxCoeff();
  const double range = hi - lo;

  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw IoError("cannot write image: " + out_path);
  f << "P5\n" << t_frames << " " << mel_cfg.n_mels << "\n255\n";
  // time runs horizontally; the highest band is the top row
  for (int m = mel_cfg.n_mels - 1; m >= 0; --m) {
    for (int t = 0; t < t_frames; ++t) {
      double v = (range > 1e-12) ? (mel.frames(t, m) - lo) / range : 0.0;
      v = std::clamp(v, 0.0, 1.0);
      const unsigned char byte = static_cast<unsigned char>(
          std::lround(v * 255.0));
      f.write(reinterpret_cast<const char*>(&byte), 1);
    }
  }
  if (!f) throw IoError("write failed: " + out_path);
  std::cout << "wrote " << t_frames << "x" << mel_cfg.n_mels << " graymap\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowrestore: speech restoration via flow matching"};
  app.require_subcommand(0, 1);
  bool show_config = false;
  app.add_flag("--show-config", show_config,
               "print all configuration defaults and exit");

  // degrade
  auto* deg = app.add_subcommand("degrade", "apply a random degradation chain");
  std::string deg_in, deg_out, deg_policy, deg_chain_log, deg_replay;
  uint64_t deg_seed = 0;
  deg->add_option("input", deg_in, "input wav");
  deg->add_option("output", deg_out, "output wav");
  deg->add_option("--policy", deg_policy, "policy config file");
  deg->add_option("--seed", deg_seed, "chain sampling seed");
  deg->add_option("--chain-log", deg_chain_log, "write the chain record here");
  deg->add_option("--replay", deg_replay, "replay a serialized chain record");
  deg->add_flag("--show-config", show_config,
                "print all configuration defaults and exit");

  // train
  auto* tr = app.add_subcommand("train", "run the training loop");
  std::string tr_config, tr_resume, tr_out = ".";
  tr->add_option("--config", tr_config, "training config file");
  tr->add_option("--resume", tr_resume, "checkpoint to resume from");
  tr->add_option("--out", tr_out, "output directory");
  tr->add_flag("--show-config", show_config,
               "print all configuration defaults and exit");

  // restore
  auto* rs = app.add_subcommand("restore", "restore a degraded recording");
  std::string rs_in, rs_out, rs_ckpt;
  int rs_steps = 16, rs_window = 128, rs_overlap = 32, rs_gl = 32;
  double rs_cfg = 0.5;
  rs->add_option("input", rs_in, "input wav");
  rs->add_option("output", rs_out, "output wav");
  rs->add_option("--ckpt", rs_ckpt, "model checkpoint");
  rs->add_option("--steps", rs_steps, "ODE steps")->check(CLI::PositiveNumber);
  rs->add_option("--cfg", rs_cfg, "guidance strength")
      ->check(CLI::NonNegativeNumber);
  rs->add_option("--window", rs_window, "chunk window in frames");
  rs->add_option("--overlap", rs_overlap, "chunk overlap in frames");
  rs->add_option("--gl-iterations", rs_gl, "phase recovery iterations");
  rs->add_flag("--show-config", show_config,
               "print all configuration defaults and exit");

  // eval
  auto* ev = app.add_subcommand("eval", "score degraded and restored sets");
  std::string ev_clean, ev_degraded, ev_restored, ev_report;
  ev->add_option("--clean", ev_clean, "directory of clean wavs");
  ev->add_option("--degraded", ev_degraded, "directory of degraded wavs");
  ev->add_option("--restored", ev_restored, "directory of restored wavs");
  ev->add_option("--report", ev_report, "report output path");
  ev->add_flag("--show-config", show_config,
               "print all configuration defaults and exit");

  // spectrogram
  auto* sp = app.add_subcommand("spectrogram", "export a log-mel graymap");
  std::string sp_in, sp_out;
  sp->add_option("input", sp_in, "input wav");
  sp->add_option("output", sp_out, "output pgm image");
  sp->add_flag("--show-config", show_config,
               "print all configuration defaults and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (show_config) {
      print_default_config();
      return kExitOk;
    }
    if (deg->parsed()) {
      if (deg_in.empty() || deg_out.empty()) {
        std::cerr << "degrade: input and output paths are required\n";
        return kExitUsage;
      }
      return cmd_degrade(deg_in, deg_out, deg_policy, deg_seed, deg_chain_log,
                         deg_replay);
    }
    if (tr->parsed()) {
      if (tr_config.empty()) {
        std::cerr << "train: --config is required\n";
        return kExitUsage;
      }
      return cmd_train(tr_config, tr_resume, tr_out);
    }
    if (rs->parsed()) {
      if (rs_in.empty() || rs_out.empty() || rs_ckpt.empty()) {
        std::cerr << "restore: input, output, and --ckpt are required\n";
        return kExitUsage;
      }
      return cmd_restore(rs_in, rs_out, rs_ckpt, rs_steps, rs_cfg, rs_window,
                         rs_overlap, rs_gl);
    }
    if (ev->parsed()) {
      if (ev_clean.empty() || ev_degraded.empty() || ev_restored.empty() ||
          ev_report.empty()) {
        std::cerr << "eval: --clean, --degraded, --restored, --report are "
                     "required\n";
        return kExitUsage;
      }
      return cmd_eval(ev_clean, ev_degraded, ev_restored, ev_report);
    }
    if (sp->parsed()) {
      if (sp_in.empty() || sp_out.empty()) {
        std::cerr << "spectrogram: input and output paths are required\n";
        return kExitUsage;
      }
      return cmd_spectrogram(sp_in, sp_out);
    }
    std::cerr << app.help();
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  }
}
