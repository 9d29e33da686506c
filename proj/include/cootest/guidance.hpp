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

#ifndef COOTEST__GUIDANCE_HPP_
#define COOTEST__GUIDANCE_HPP_

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cootest/perception.hpp"
#include "cootest/scene.hpp"
#include "cootest/transform_spec.hpp"

namespace cootest::guidance
{

/// Raw priority of a scene in which the ego pipeline detects nothing; ranks
/// below every other score.
inline constexpr double kSentinel = -std::numeric_limits<double>::infinity();

inline bool is_sentinel(double raw) { return raw == kSentinel; }

/// How the overlap of one ego box with the whole cooperative set is measured.
enum class OverlapMode
{
  kSum,    // sum of pairwise intersection volumes
  kUnion,  // volume of the box intersected with the union of cooperative boxes
};

/// -sum_i s_i / (n_E n_CP) * vol(b_i ∩ B_CP) / vol(b_i).
/// n_E = 0 gives kSentinel; n_E > 0 with n_CP = 0 gives 0.
double gui_raw(
  const std::vector<Box3D> & ego, const std::vector<Box3D> & cooperative,
  OverlapMode mode = OverlapMode::kSum);

/// Min-max normalization over the batch. Sentinels map to 0; a batch whose
/// non-sentinel scores are all equal maps them to 0.5.
std::vector<double> normalize_batch(const std::vector<double> & raw);

struct Candidate
{
  Scene transformed_scene;
  TransformSpec spec;
  std::string seed_id;
  std::optional<double> gui_raw;
  std::optional<double> gui_pri;
};

/// Candidate order: gui_raw descending, then scene_id, then spec hash.
bool ranks_before(const Candidate & a, const Candidate & b);

/// Seed of the parameters drawn for (seed scene, operator) under a master seed.
std::uint64_t candidate_seed(std::uint64_t master_seed, const std::string & seed_id, OperatorKind kind);

std::string candidate_id(const std::string & seed_id, OperatorKind kind);

struct GuidanceOptions
{
  OverlapMode overlap{OverlapMode::kSum};
  std::size_t jobs{1};
};

/// Guided generation: every (seed, operator) pair is transformed once, scored
/// by gui_raw on its predictions, and offered to a descending top-num_gen list
/// that replaces its tail when a better candidate arrives. Pairs whose
/// operator precondition fails are skipped with a warning.
std::vector<Candidate> vgt_generate(
  perception::Detector & detector, const std::vector<OperatorKind> & operators,
  const std::vector<Scene> & seeds, std::size_t num_gen, std::uint64_t master_seed,
  const GuidanceOptions & options = {});

/// Unscored baseline: draws (seed, operator, parameters) uniformly with
/// replacement until num_gen candidates exist.
std::vector<Candidate> random_generate(
  const std::vector<OperatorKind> & operators, const std::vector<Scene> & seeds,
  std::size_t num_gen, std::uint64_t rng_seed);

}  // namespace cootest::guidance

#endif  // COOTEST__GUIDANCE_HPP_
