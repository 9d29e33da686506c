// Copyright 2026 The cootest Authors
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

#ifndef COOTEST__CLI_HPP_
#define COOTEST__CLI_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "cootest/synth.hpp"

namespace cootest::cli
{

inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitError = 2;

/// Suite description accepted by `cootest gen --config`.
struct GenConfig
{
  std::size_t scenes{1};
  std::string scene_prefix{"scene"};
  synth::SynthConfig synth;
};

GenConfig parse_gen_config(const nlohmann::json & j);

/// Scene i of a generated suite.
synth::SynthConfig scene_config(const GenConfig & cfg, std::size_t index);

/// Number of candidates kept for a keep fraction: floor(fraction * total).
std::size_t keep_count(double fraction, std::size_t total);

/// Seed id a transformed scene id was derived from ("<seed>__<KIND>...").
std::string seed_prefix(const std::string & scene_id);

/// Entry point; returns the process exit code. Errors are reported on stderr
/// as one line starting with "COOTEST-ERR:".
int run(int argc, const char * const * argv);

}  // namespace cootest::cli

#endif  // COOTEST__CLI_HPP_
