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

#ifndef COOTEST__REPORT_HPP_
#define COOTEST__REPORT_HPP_

#include "json.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cootest/metrics.hpp"
#include "cootest/perception.hpp"
#include "cootest/scene.hpp"
#include "cootest/transform_spec.hpp"

namespace cootest::report
{

inline constexpr const char * kHarnessVersion = "0.1.0";

struct BucketRecord
{
  double ap{0.0};
  std::size_t num_gt{0};
  std::size_t num_predictions{0};
  std::size_t mce{0};
  std::optional<double> ap_before;  // seed scene AP, when the seed is known

  bool operator==(const BucketRecord &) const = default;
};

struct SceneRecord
{
  std::string scene_id;
  std::optional<std::string> seed_id;
  std::optional<TransformSpec> spec;  // last operator applied, if any
  double ap_overall{0.0};
  std::array<BucketRecord, 4> ap_by_range;  // indexed by metrics::RangeBucket
  std::size_t mce_count{0};
  std::optional<bool> mr_violated;  // unknown without the seed scene
  std::optional<double> gui_pri;

  bool operator==(const SceneRecord &) const = default;
};

struct SuiteReport
{
  std::vector<SceneRecord> per_scene;  // ordered by scene_id
  nlohmann::json config = nlohmann::json::object();

  bool operator==(const SuiteReport &) const = default;
};

/// "none" for untransformed scenes.
std::string kind_key(const SceneRecord & r);

struct Aggregate
{
  std::size_t scenes{0};
  double mean_ap{0.0};
  std::optional<double> mean_ap_before;  // over scenes that have one
  std::size_t total_mce{0};
  std::size_t violations{0};
};

/// Keyed by operator name ("none" for seeds), in lexicographic order.
std::vector<std::pair<std::string, Aggregate>> aggregate_by_kind(const SuiteReport & report);
/// One entry per range bucket including the overall [0, 100) m bucket.
std::array<Aggregate, 4> aggregate_by_bucket(const SuiteReport & report);

/// Evaluates one scene. With `seed`, the seed's cooperative predictions
/// provide the "before" APs and the metamorphic verdict.
SceneRecord evaluate_scene(
  perception::Detector & detector, const Scene & scene, const Scene * seed, double epsilon,
  std::optional<double> gui_pri = std::nullopt);

using SeedLookup = std::function<const Scene *(const Scene &)>;

/// Evaluates a whole suite on up to `jobs` threads; records are sorted by scene_id.
SuiteReport run_suite(
  perception::Detector & detector, const std::vector<Scene> & scenes, const SeedLookup & seeds,
  double epsilon, std::size_t jobs, const std::function<std::optional<double>(const Scene &)> & gui_pri = {});

nlohmann::json to_json(const SuiteReport & report);
SuiteReport from_json(const nlohmann::json & j);

std::string render_json(const SuiteReport & report);
std::string render_csv(const SuiteReport & report);
std::string render_md(const SuiteReport & report);

}  // namespace cootest::report

#endif  // COOTEST__REPORT_HPP_
