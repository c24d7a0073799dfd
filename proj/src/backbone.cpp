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

#include "fr/backbone.hpp"

#include <cmath>

#include "fr/rng.hpp"

namespace fr {

namespace {

constexpr double kLnEps = 1e-6;
constexpr double kMaskedLogit = -1e30;
constexpr double kTimeScale = 1000.0;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / M_SQRT2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / M_SQRT2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

// y = xhat .* g + b per row; stats cached for backward.
Mat layer_norm(const Mat& x, const Vec& g, const Vec& b, Vec& mu, Vec& istd,
               Mat& xhat) {
  const Eigen::Index t_frames = x.rows(), d = x.cols();
  mu.resize(t_frames);
  istd.resize(t_frames);
  xhat.resize(t_frames, d);
  Mat out(t_frames, d);
  for (Eigen::Index r = 0; r < t_frames; ++r) {
    const double m = x.row(r).mean();
    const double var = (x.row(r).array() - m).square().mean();
    const double is = 1.0 / std::sqrt(var + kLnEps);
    mu[r] = m;
    istd[r] = is;
    xhat.row(r) = (x.row(r).array() - m) * is;
    out.row(r) = xhat.row(r).array() * g.transpose().array() +
                 b.transpose().array();
  }
  return out;
}

// Returns dx; accumulates dg, db.
Mat layer_norm_backward(const Mat& dy, const Mat& xhat, const Vec& istd,
                        const Vec& g, Vec& dg, Vec& db) {
  const Eigen::Index t_frames = dy.rows(), d = dy.cols();
  Mat dx(t_frames, d);
  for (Eigen::Index r = 0; r < t_frames; ++r) {
    Eigen::RowVectorXd dxhat =
        dy.row(r).array() * g.transpose().array();
    const double m1 = dxhat.mean();
    const double m2 = (dxhat.array() * xhat.row(r).array()).mean();
    dx.row(r) =
        istd[r] * (dxhat.array() - m1 - xhat.row(r).array() * m2);
    dg.array() += (dy.row(r).array() * xhat.row(r).array()).transpose();
    db.array() += dy.row(r).transpose().array();
  }
  return dx;
}

}  // namespace

void ModelConfig::validate() const {
  if (dim < 2 || dim % 2 != 0) {
    throw InvalidArgument("ModelConfig: dim must be even and >= 2");
  }
  if (depth < 2) throw InvalidArgument("ModelConfig: depth < 2");
  if (heads < 1 || head_dim < 1) {
    throw InvalidArgument("ModelConfig: heads/head_dim < 1");
  }
  if (n_mels < 1) throw InvalidArgument("ModelConfig: n_mels < 1");
  if (max_frames < 1) throw InvalidArgument("ModelConfig: max_frames < 1");
  if (cond_dropout_p < 0.0 || cond_dropout_p >= 1.0) {
    throw InvalidArgument("ModelConfig: cond_dropout_p outside [0,1)");
  }
}

Parameters Parameters::zeros(const ModelConfig& cfg) {
  cfg.validate();
  const int d = cfg.dim, a = cfg.attn_width(), ff = cfg.ff_width(),
            f = cfg.n_mels;
  Parameters p;
  p.w_in = Mat::Zero(2 * f, d);
  p.b_in = Vec::Zero(d);
  p.wt1 = Mat::Zero(d, d);
  p.bt1 = Vec::Zero(d);
  p.wt2 = Mat::Zero(d, d);
  p.bt2 = Vec::Zero(d);
  p.layers.resize(static_cast<std::size_t>(cfg.depth));
  for (auto& l : p.layers) {
    l.ln1_g = Vec::Zero(d);
    l.ln1_b = Vec::Zero(d);
    l.wq = Mat::Zero(d, a);
    l.wk = Mat::Zero(d, a);
    l.wv = Mat::Zero(d, a);
    l.bq = Vec::Zero(a);
    l.bk = Vec::Zero(a);
    l.bv = Vec::Zero(a);
    l.wo = Mat::Zero(a, d);
    l.bo = Vec::Zero(d);
    l.ln2_g = Vec::Zero(d);
    l.ln2_b = Vec::Zero(d);
    l.w1 = Mat::Zero(d, ff);
    l.b1 = Vec::Zero(ff);
    l.w2 = Mat::Zero(ff, d);
    l.b2 = Vec::Zero(d);
  }
  p.lnf_g = Vec::Zero(d);
  p.lnf_b = Vec::Zero(d);
  p.w_out = Mat::Zero(d, f);
  p.b_out = Vec::Zero(f);
  return p;
}

std::vector<TensorRef> tensor_refs(Parameters& p) {
  std::vector<TensorRef> refs;
  auto add_m = [&](const std::string& name, Mat& m) {
    refs.push_back({name, m.data(), m.rows(), m.cols()});
  };
  auto add_v = [&](const std::string& name, Vec& v) {
    refs.push_back({name, v.data(), v.size(), 1});
  };
  add_m("w_in", p.w_in);
  add_v("b_in", p.b_in);
  add_m("wt1", p.wt1);
  add_v("bt1", p.bt1);
  add_m("wt2", p.wt2);
  add_v("bt2", p.bt2);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const std::string pre = "layers." + std::to_string(i) + ".";
    auto& l = p.layers[i];
    add_v(pre + "ln1_g", l.ln1_g);
    add_v(pre + "ln1_b", l.ln1_b);
    add_m(pre + "wq", l.wq);
    add_v(pre + "bq", l.bq);
    add_m(pre + "wk", l.wk);
    add_v(pre + "bk", l.bk);
    add_m(pre + "wv", l.wv);
    add_v(pre + "bv", l.bv);
    add_m(pre + "wo", l.wo);
    add_v(pre + "bo", l.bo);
    add_v(pre + "ln2_g", l.ln2_g);
    add_v(pre + "ln2_b", l.ln2_b);
    add_m(pre + "w1", l.w1);
    add_v(pre + "b1", l.b1);
    add_m(pre + "w2", l.w2);
    add_v(pre + "b2", l.b2);
  }
  add_v("lnf_g", p.lnf_g);
  add_v("lnf_b", p.lnf_b);
  add_m("w_out", p.w_out);
  add_v("b_out", p.b_out);
  return refs;
}

Parameters init_model(const ModelConfig& cfg, uint64_t seed) {
  Parameters p = Parameters::zeros(cfg);
  Rng rng(Rng::mix(seed, 0x696e6974ULL));
  auto fill = [&](Mat& w) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.rows()));
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w.data()[i] = rng.uniform(-bound, bound);
    }
  };
  fill(p.w_in);
  fill(p.wt1);
  fill(p.wt2);
  for (auto& l : p.layers) {
    l.ln1_g.setOnes();
    l.ln2_g.setOnes();
    fill(l.wq);
    fill(l.wk);
    fill(l.wv);
    fill(l.wo);
    fill(l.w1);
    fill(l.w2);
  }
  p.lnf_g.setOnes();
  // w_out and b_out stay zero: untrained model is the zero vector field.
  return p;
}

long count_params(const ModelConfig& cfg) {
  cfg.validate();
  const long d = cfg.dim, a = cfg.attn_width(), ff = cfg.ff_width(),
             f = cfg.n_mels;
  long per_layer = 2 * d                 // ln1
                   + 3 * (d * a + a)     // q, k, v
                   + a * d + d           // output projection
                   + 2 * d               // ln2
                   + d * ff + ff         // ff in
                   + ff * d + d;         // ff out
  return 2 * f * d + d                   // input projection
         + 2 * (d * d + d)               // time MLP
         + cfg.depth * per_layer
         + 2 * d                         // final norm
         + d * f + f;                    // output projection
}

Vec time_features(double t, int dim) {
  if (dim % 2 != 0) throw InvalidArgument("time_features: dim must be even");
  Vec s(dim);
  const double pos = t * kTimeScale;
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double omega =
        std::exp(-std::log(10000.0) * static_cast<double>(i) / half);
    s[2 * i] = std::sin(pos * omega);
    s[2 * i + 1] = std::cos(pos * omega);
  }
  return s;
}

Vec positional_encoding_row(int frame, int dim) {
  if (dim % 2 != 0) {
    throw InvalidArgument("positional_encoding_row: dim must be even");
  }
  Vec s(dim);
  const double pos = static_cast<double>(frame);
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double omega =
        std::exp(-std::log(10000.0) * static_cast<double>(i) / half);
    s[2 * i] = std::sin(pos * omega);
    s[2 * i + 1] = std::cos(pos * omega);
  }
  return s;
}

Mat forward(const Parameters& p, const ModelConfig& cfg, const Mat& x_t,
            const Mat* y, double t, const std::vector<bool>& mask,
            ForwardCache* cache) {
  cfg.validate();
  const Eigen::Index t_frames = x_t.rows();
  const int d = cfg.dim, a = cfg.attn_width(), dh = cfg.head_dim,
            heads = cfg.heads, f = cfg.n_mels;
  if (x_t.cols() != f) throw InvalidArgument("forward: x_t cols != n_mels");
  if (t_frames < 1) throw InvalidArgument("forward: empty input");
  if (t_frames > cfg.max_frames) throw InvalidArgument("forward: T > max_frames");
  if (y != nullptr && (y->rows() != t_frames || y->cols() != f)) {
    throw InvalidArgument("forward: condition shape mismatch");
  }
  if (t < 0.0 || t > 1.0) throw InvalidArgument("forward: t outside [0,1]");
  if (static_cast<Eigen::Index>(mask.size()) != t_frames) {
    throw InvalidArgument("forward: mask length != T");
  }
  bool any_valid = false;
  for (bool b : mask) any_valid = any_valid || b;
  if (!any_valid) throw InvalidArgument("forward: all frames masked");

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.mask = mask;
  c.layers.assign(static_cast<std::size_t>(cfg.depth), LayerCache{});

  // shared embedding of x_t and the condition (null -> zeros)
  c.concat_in.resize(t_frames, 2 * f);
  c.concat_in.leftCols(f) = x_t;
  if (y) {
    c.concat_in.rightCols(f) = *y;
  } else {
    c.concat_in.rightCols(f).setZero();
  }
  Mat h = c.concat_in * p.w_in;
  h.rowwise() += p.b_in.transpose();
  for (Eigen::Index r = 0; r < t_frames; ++r) {
    h.row(r) += positional_encoding_row(static_cast<int>(r), d).transpose();
  }

  c.time_raw = time_features(t, d);
  c.time_hidden = p.wt1.transpose() * c.time_raw + p.bt1;
  c.time_act = c.time_hidden.unaryExpr([](double v) { return gelu(v); });
  Vec temb = p.wt2.transpose() * c.time_act + p.bt2;
  h.rowwise() += temb.transpose();

  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int l = 0; l < cfg.depth; ++l) {
    LayerCache& lc = c.layers[static_cast<std::size_t>(l)];
    const LayerParams& lp = p.layers[static_cast<std::size_t>(l)];
    if (cfg.long_skip && l == cfg.depth - 1) h += c.skip;
    lc.x_in = h;

    Mat a_in = layer_norm(lc.x_in, lp.ln1_g, lp.ln1_b, lc.mu1, lc.istd1, lc.xhat1);
    lc.q = a_in * lp.wq;
    lc.q.rowwise() += lp.bq.transpose();
    lc.k = a_in * lp.wk;
    lc.k.rowwise() += lp.bk.transpose();
    lc.v = a_in * lp.wv;
    lc.v.rowwise() += lp.bv.transpose();

    lc.probs.assign(static_cast<std::size_t>(heads), Mat());
    lc.att_concat.resize(t_frames, a);
    for (int hd = 0; hd < heads; ++hd) {
      auto qh = lc.q.middleCols(hd * dh, dh);
      auto kh = lc.k.middleCols(hd * dh, dh);
      auto vh = lc.v.middleCols(hd * dh, dh);
      Mat logits = scale * (qh * kh.transpose());
      for (Eigen::Index col = 0; col < t_frames; ++col) {
        if (!mask[static_cast<std::size_t>(col)]) {
          logits.col(col).setConstant(kMaskedLogit);
        }
      }
      Mat& probs = lc.probs[static_cast<std::size_t>(hd)];
      probs.resize(t_frames, t_frames);
      for (Eigen::Index r = 0; r < t_frames; ++r) {
        const double mx = logits.row(r).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(r).array() - mx).exp();
        probs.row(r) = e / e.sum();
      }
      lc.att_concat.middleCols(hd * dh, dh) = probs * vh;
    }
    Mat att_out = lc.att_concat * lp.wo;
    att_out.rowwise() += lp.bo.transpose();
    lc.h1 = lc.x_in + att_out;

    Mat f_in = layer_norm(lc.h1, lp.ln2_g, lp.ln2_b, lc.mu2, lc.istd2, lc.xhat2);
    lc.z1 = f_in * lp.w1;
    lc.z1.rowwise() += lp.b1.transpose();
    lc.a1 = lc.z1.unaryExpr([](double v) { return gelu(v); });
    Mat ff_out = lc.a1 * lp.w2;
    ff_out.rowwise() += lp.b2.transpose();
    h = lc.h1 + ff_out;

    if (l == 0) c.skip = h;
  }

  c.h_final = h;
  c.lnf_out = layer_norm(c.h_final, p.lnf_g, p.lnf_b, c.muf, c.istdf, c.xhatf);
  Mat out = c.lnf_out * p.w_out;
  out.rowwise() += p.b_out.transpose();
  return out;
}

void backward(const Parameters& p, const ModelConfig& cfg,
              const ForwardCache& cache, const Mat& d_out, Parameters& grads) {
  const Eigen::Index t_frames = d_out.rows();
  const int dh = cfg.head_dim, heads = cfg.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // output projection
  grads.w_out += cache.lnf_out.transpose() * d_out;
  grads.b_out += d_out.colwise().sum().transpose();
  Mat d_lnf = d_out * p.w_out.transpose();
  Mat d = layer_norm_backward(d_lnf, cache.xhatf, cache.istdf, p.lnf_g,
                              grads.lnf_g, grads.lnf_b);

  Mat skip_grad;
  for (int l = cfg.depth - 1; l >= 0; --l) {
    const LayerCache& lc = cache.layers[static_cast<std::size_t>(l)];
    const LayerParams& lp = p.layers[static_cast<std::size_t>(l)];
    LayerParams& lg = grads.layers[static_cast<std::size_t>(l)];

    // feed-forward branch
    Mat dh1 = d;
    {
      const Mat& df = d;
      lg.w2 += lc.a1.transpose() * df;
      lg.b2 += df.colwise().sum().transpose();
      Mat da1 = df * lp.w2.transpose();
      Mat dz1 = da1.cwiseProduct(
          lc.z1.unaryExpr([](double v) { return gelu_grad(v); }));
      // recompute LN2 output (not cached to keep memory down)
      Mat f_in(t_frames, cfg.dim);
      for (Eigen::Index r = 0; r < t_frames; ++r) {
        f_in.row(r) = lc.xhat2.row(r).array() * lp.ln2_g.transpose().array() +
                      lp.ln2_b.transpose().array();
      }
      lg.w1 += f_in.transpose() * dz1;
      lg.b1 += dz1.colwise().sum().transpose();
      Mat df_in = dz1 * lp.w1.transpose();
      dh1 += layer_norm_backward(df_in, lc.xhat2, lc.istd2, lp.ln2_g, lg.ln2_g,
                                 lg.ln2_b);
    }

    // attention branch; dh1 is the gradient at h1 = x_in + att_out
    Mat dx = dh1;
    {
      const Mat& datt = dh1;
      lg.wo += lc.att_concat.transpose() * datt;
      lg.bo += datt.colwise().sum().transpose();
      Mat d_concat = datt * lp.wo.transpose();

      Mat dq = Mat::Zero(t_frames, cfg.attn_width());
      Mat dk = Mat::Zero(t_frames, cfg.attn_width());
      Mat dv = Mat::Zero(t_frames, cfg.attn_width());
      for (int hd = 0; hd < heads; ++hd) {
        auto qh = lc.q.middleCols(hd * dh, dh);
        auto kh = lc.k.middleCols(hd * dh, dh);
        auto vh = lc.v.middleCols(hd * dh, dh);
        const Mat& probs = lc.probs[static_cast<std::size_t>(hd)];
        auto d_headout = d_concat.middleCols(hd * dh, dh);

        Mat dprobs = d_headout * vh.transpose();
        dv.middleCols(hd * dh, dh) = probs.transpose() * d_headout;
        Mat dlogits(t_frames, t_frames);
        for (Eigen::Index r = 0; r < t_frames; ++r) {
          const double dot = dprobs.row(r).dot(probs.row(r));
          dlogits.row(r) =
              probs.row(r).array() * (dprobs.row(r).array() - dot);
        }
        dq.middleCols(hd * dh, dh) = scale * (dlogits * kh);
        dk.middleCols(hd * dh, dh) = scale * (dlogits.transpose() * qh);
      }
      // recompute LN1 output
      Mat a_in(t_frames, cfg.dim);
      for (Eigen::Index r = 0; r < t_frames; ++r) {
        a_in.row(r) = lc.xhat1.row(r).array() * lp.ln1_g.transpose().array() +
                      lp.ln1_b.transpose().array();
      }
      lg.wq += a_in.transpose() * dq;
      lg.bq += dq.colwise().sum().transpose();
      lg.wk += a_in.transpose() * dk;
      lg.bk += dk.colwise().sum().transpose();
      lg.wv += a_in.transpose() * dv;
      lg.bv += dv.colwise().sum().transpose();
      Mat da_in = dq * lp.wq.transpose() + dk * lp.wk.transpose() +
                  dv * lp.wv.transpose();
      dx += layer_norm_backward(da_in, lc.xhat1, lc.istd1, lp.ln1_g, lg.ln1_g,
                                lg.ln1_b);
    }

    if (cfg.long_skip && l == cfg.depth - 1) skip_grad = dx;
    if (cfg.long_skip && l == 1) dx += skip_grad;
    d = dx;
  }

  // embedding: h = concat * w_in + b_in + posenc + temb
  Vec d_temb = d.colwise().sum().transpose();
  grads.w_in += cache.concat_in.transpose() * d;
  grads.b_in += d_temb;

  // time-embedding MLP
  grads.wt2 += cache.time_act * d_temb.transpose();
  grads.bt2 += d_temb;
  Vec d_time_act = p.wt2 * d_temb;
  Vec d_time_hidden = d_time_act.cwiseProduct(
      cache.time_hidden.unaryExpr([](double v) { return gelu_grad(v); }));
  grads.wt1 += cache.time_raw * d_time_hidden.transpose();
  grads.bt1 += d_time_hidden;
}

}  // namespace fr
