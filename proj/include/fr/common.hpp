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

#ifndef FR_COMMON_HPP
#define FR_COMMON_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace fr {

// T x F matrices (rows = time frames, cols = mel bins / features).
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File missing, unreadable, unwritable.
struct IoError : Error {
  using Error::Error;
};

// Malformed container, unsupported codec, corrupt checkpoint.
struct FormatError : Error {
  using Error::Error;
};

// Bad config file contents or unknown keys.
struct ConfigError : Error {
  using Error::Error;
};

// Precondition or argument violations.
struct InvalidArgument : Error {
  using Error::Error;
};

// NaN/Inf encountered where finite values are required.
struct NumericError : Error {
  using Error::Error;
};

struct Waveform {
  std::vector<double> samples;  // mono, nominally in [-1, 1]
  int sample_rate_hz = 0;
};

inline double rms(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double s : v) acc += s * s;
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace fr

#endif  // FR_COMMON_HPP
