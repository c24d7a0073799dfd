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

#ifndef FR_BACKBONE_HPP
#define FR_BACKBONE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fr/common.hpp"

namespace fr {

struct ModelConfig {
  int dim = 64;
  int depth = 4;
  int heads = 4;
  int head_dim = 16;
  int n_mels = 80;
  int max_frames = 256;       // positional-encoding capacity
  double cond_dropout_p = 0.15;
  bool long_skip = true;      // first-block output added to last-block input

  int attn_width() const { return heads * head_dim; }
  int ff_width() const { return 4 * dim; }
  void validate() const;
};

struct LayerParams {
  Vec ln1_g, ln1_b;
  Mat wq, wk, wv;  // dim x attn_width
  Vec bq, bk, bv;
  Mat wo;          // attn_width x dim
  Vec bo;
  Vec ln2_g, ln2_b;
  Mat w1;          // dim x 4*dim
  Vec b1;
  Mat w2;          // 4*dim x dim
  Vec b2;
};

struct Parameters {
  Mat w_in;  // 2F x dim  (x_t and y concatenated along the feature axis)
  Vec b_in;
  Mat wt1;   // dim x dim time-embedding MLP
  Vec bt1;
  Mat wt2;
  Vec bt2;
  std::vector<LayerParams> layers;
  Vec lnf_g, lnf_b;
  Mat w_out;  // dim x F
  Vec b_out;

  static Parameters zeros(const ModelConfig& cfg);
};

// Flat view over every tensor, in a fixed order shared by the optimizer,
// checkpointing and the finite-difference tests.
struct TensorRef {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index size() const { return rows * cols; }
};

std::vector<TensorRef> tensor_refs(Parameters& p);

// Deterministic scaled-uniform init (gain 1/sqrt(fan_in)); the output
// projection starts at zero so the untrained field is the zero field.
Parameters init_model(const ModelConfig& cfg, uint64_t seed);

long count_params(const ModelConfig& cfg);

// Raw sinusoidal features of t (before the learned mapping); exposed for
// tests. dim must be even.
Vec time_features(double t, int dim);

Vec positional_encoding_row(int frame, int dim);

struct LayerCache {
  Mat x_in;                 // block input (after any skip add)
  Vec mu1, istd1;           // LN1 row stats
  Mat xhat1;
  Mat q, k, v;              // T x attn_width
  std::vector<Mat> probs;   // per-head T x T attention weights
  Mat att_concat;           // T x attn_width
  Mat h1;                   // after attention residual
  Vec mu2, istd2;
  Mat xhat2;
  Mat z1;                   // pre-GELU, T x 4*dim
  Mat a1;                   // GELU(z1)
};

struct ForwardCache {
  Mat concat_in;            // T x 2F
  Vec time_raw;             // sinusoidal features of t
  Vec time_hidden;          // wt1 output pre-GELU
  Vec time_act;             // GELU(time_hidden)
  std::vector<bool> mask;
  std::vector<LayerCache> layers;
  Mat skip;                 // first block output
  Mat h_final;              // last block output
  Vec muf, istdf;
  Mat xhatf;
  Mat lnf_out;
};

// v_theta(x_t, t, y). y == nullptr selects the unconditional branch
// (all-zeros condition slot). Output rows at masked frames are unspecified.
Mat forward(const Parameters& p, const ModelConfig& cfg, const Mat& x_t,
            const Mat* y, double t, const std::vector<bool>& mask,
            ForwardCache* cache = nullptr);

// Accumulates parameter gradients for the forward pass recorded in `cache`
// given d(loss)/d(output). Gradients are added into `grads`.
void backward(const Parameters& p, const ModelConfig& cfg,
              const ForwardCache& cache, const Mat& d_out, Parameters& grads);

}  // namespace fr

#endif  // FR_BACKBONE_HPP
