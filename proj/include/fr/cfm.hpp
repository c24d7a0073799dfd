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

#ifndef FR_CFM_HPP
#define FR_CFM_HPP

#include <functional>
#include <string>
#include <vector>

#include "fr/common.hpp"

namespace fr {

// Interpolation schedule alpha(t) with alpha(0)=0, alpha(1)=1, monotone,
// and its derivative.
struct FlowSchedule {
  std::function<double(double)> alpha;
  std::function<double(double)> alpha_dot;
  std::string name = "linear";

  static FlowSchedule linear();
  static FlowSchedule cosine();
  static FlowSchedule quadratic();
  static FlowSchedule by_name(const std::string& name);
};

enum class OdeMethod { kEuler, kMidpoint };

struct SamplerConfig {
  int steps = 16;
  double cfg_strength = 0.5;
  FlowSchedule schedule = FlowSchedule::linear();
  OdeMethod method = OdeMethod::kEuler;
};

// x_t = (1 - alpha(t)) y + alpha(t) x
Mat interpolate(const Mat& x, const Mat& y, double t, const FlowSchedule& schedule);

// u_t = alpha_dot(t) (x - y)
Mat target_field(const Mat& x, const Mat& y, double t, const FlowSchedule& schedule);

// Mean squared error between v_pred and the target field over valid frames;
// masked frames contribute nothing to numerator or denominator.
double cfm_loss(const Mat& v_pred, const Mat& x, const Mat& y, double t,
                const std::vector<bool>& mask, const FlowSchedule& schedule);

// v_cond + strength * (v_cond - v_uncond)
Mat cfg_combine(const Mat& v_cond, const Mat& v_uncond, double strength);

// Field evaluator; cond == nullptr requests the unconditional branch.
using FieldFn = std::function<Mat(const Mat& x_t, double t, const Mat* cond)>;

// Integrates dx/dt = cfg_combine(field(x,t,y), field(x,t,null)) from
// x_0 = y at t=0 to t=1 on a uniform grid. Deterministic. With
// cfg_strength == 0 the unconditional branch is never evaluated.
Mat sample_ode(const FieldFn& field, const Mat& y, const SamplerConfig& config);

}  // namespace fr

#endif  // FR_CFM_HPP
