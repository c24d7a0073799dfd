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

#ifndef FR_WAV_HPP
#define FR_WAV_HPP

#include <string>

#include "fr/common.hpp"

namespace fr {

// Reads RIFF/WAVE, 16-bit PCM or 32-bit float, mono or stereo.
// Stereo is downmixed to mono by averaging.
Waveform load_wav(const std::string& path);

// Writes mono 16-bit PCM little-endian. Samples outside [-1, 1] are clipped.
void save_wav(const Waveform& wave, const std::string& path);

// Windowed-sinc rate conversion (shared by bandlimit and the STOI 10 kHz
// front end). Identity when rates already match.
Waveform resample(const Waveform& wave, int target_rate_hz);

}  // namespace fr

#endif  // FR_WAV_HPP
