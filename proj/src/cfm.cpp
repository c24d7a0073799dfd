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

#include "fr/cfm.hpp"

#include <cmath>

namespace fr {

FlowSchedule FlowSchedule::linear() {
  FlowSchedule s;
  s.alpha = [](double t) { return t; };
  s.alpha_dot = [](double) { return 1.0; };
  s.name = "linear";
  return s;
}

FlowSchedule FlowSchedule::cosine() {
  FlowSchedule s;
  s.alpha = [](double t) { return 0.5 * (1.0 - std::cos(M_PI * t)); };
  s.alpha_dot = [](double t) { return 0.5 * M_PI * std::sin(M_PI * t); };
  s.name = "cosine";
  return s;
}

FlowSchedule FlowSchedule::quadratic() {
  FlowSchedule s;
  s.alpha = [](double t) { return t * t; };
  s.alpha_dot = [](double t) { return 2.0 * t; };
  s.name = "quadratic";
  return s;
}

FlowSchedule FlowSchedule::by_name(const std::string& name) {
  if (name == "linear") return linear();
  if (name == "cosine") return cosine();
  if (name == "quadratic") return quadratic();
  throw InvalidArgument("unknown flow schedule: " + name);
}

namespace {

void check_same_shape(const Mat& a, const Mat& b, const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(std::string(who) + ": shape mismatch");
  }
}

void check_t(double t, const char* who) {
  if (t < 0.0 || t > 1.0) {
    throw InvalidArgument(std::string(who) + ": t outside [0,1]");
  }
}

}  // namespace

Mat interpolate(const Mat& x, const Mat& y, double t,
                const FlowSchedule& schedule) {
  check_same_shape(x, y, "interpolate");
  check_t(t, "interpolate");
  const double a = schedule.alpha(t);
  return (1.0 - a) * y + a * x;
}

Mat target_field(const Mat& x, const Mat& y, double t,
                 const FlowSchedule& schedule) {
  check_same_shape(x, y, "target_field");
  check_t(t, "target_field");
  return schedule.alpha_dot(t) * (x - y);
}

double cfm_loss(const Mat& v_pred, const Mat& x, const Mat& y, double t,
                const std::vector<bool>& mask, const FlowSchedule& schedule) {
  check_same_shape(v_pred, x, "cfm_loss");
  check_same_shape(x, y, "cfm_loss");
  if (static_cast<Eigen::Index>(mask.size()) != x.rows()) {
    throw InvalidArgument("cfm_loss: mask length != T");
  }
  const Mat u = target_field(x, y, t, schedule);
  double acc = 0.0;
  Eigen::Index valid = 0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    if (!mask[static_cast<std::size_t>(r)]) continue;
    ++valid;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double d = u(r, c) - v_pred(r, c);
      acc += d * d;
    }
  }
  if (valid == 0) throw InvalidArgument("cfm_loss: all frames masked out");
  return acc / static_cast<double>(valid * x.cols());
}

Mat cfg_combine(const Mat& v_cond, const Mat& v_uncond, double strength) {
  check_same_shape(v_cond, v_uncond, "cfg_combine");
  if (strength < 0.0) throw InvalidArgument("cfg_combine: strength < 0");
  return v_cond + strength * (v_cond - v_uncond);
}

Mat sample_ode(const FieldFn& field, const Mat& y, const SamplerConfig& config) {
  if (config.steps < 1) throw InvalidArgument("sample_ode: steps < 1");

  auto guided = [&](const Mat& x, double t) -> Mat {
    Mat v = field(x, t, &y);
    if (v.rows() != y.rows() || v.cols() != y.cols()) {
      throw InvalidArgument("sample_ode: field returned wrong shape");
    }
    if (config.cfg_strength != 0.0) {
      Mat vu = field(x, t, nullptr);
      if (vu.rows() != y.rows() || vu.cols() != y.cols()) {
        throw InvalidArgument("sample_ode: field returned wrong shape");
      }
      v = cfg_combine(v, vu, config.cfg_strength);
    }
    if (!v.allFinite()) throw NumericError("sample_ode: non-finite field output");
    return v;
  };

  Mat x = y;  // the flow starts at the degraded spectrogram at t=0
  const double dt = 1.0 / config.steps;
  for (int k = 0; k < config.steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (config.method == OdeMethod::kEuler) {
      x += dt * guided(x, t);
    } else {
      Mat k1 = guided(x, t);
      Mat k2 = guided(x + 0.5 * dt * k1, t + 0.5 * dt);
      x += dt * k2;
    }
  }
  return x;
}

}  // namespace fr
