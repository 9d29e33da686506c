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

#ifndef COOTEST__SYNTH_HPP_
#define COOTEST__SYNTH_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "cootest/scene.hpp"

namespace cootest::synth
{

inline constexpr double kSensorHeight = 1.8;

struct SynthConfig
{
  std::string scene_id{"synth"};
  int n_vehicles{20};
  double area{50.0};  // half-extent of the square vehicles are placed in
  int n_cavs{2};
  int frames{1};
  std::int64_t frame_dt_ms{100};
  double points_per_m2{20.0};  // face density at 10 m, decays as 1/R^2 beyond
  bool occlusion{true};
  double max_speed{10.0};  // m/s, sequences only
  std::uint64_t master_seed{0};
};

void validate_config(const SynthConfig & cfg);

/// World-frame state at the evaluation timestamp. Earlier frames are obtained
/// by moving every entity back along its constant velocity.
struct VehicleLayout
{
  Box3D box;  // world frame, box.center.z() = h / 2
  Eigen::Vector2d velocity{Eigen::Vector2d::Zero()};
};

struct AgentLayout
{
  std::string agent_id;
  Role role{Role::kCav};
  Eigen::Vector2d position{Eigen::Vector2d::Zero()};
  double yaw{0.0};
  Eigen::Vector2d velocity{Eigen::Vector2d::Zero()};
};

struct SceneLayout
{
  std::vector<AgentLayout> agents;
  std::vector<VehicleLayout> vehicles;
};

/// Random placement: ego at the origin facing +x, cavs 10-40 m away, vehicles
/// non-overlapping in [-area, area]^2. Velocities are zero unless `moving`.
SceneLayout random_layout(const SynthConfig & cfg, bool moving);

/// Renders a layout into a scene with cfg.frames frames per agent.
Scene build_scene(const SceneLayout & layout, const SynthConfig & cfg);

/// Single static frame.
Scene generate_scene(const SynthConfig & cfg);

/// cfg.frames >= 2 frames of constant-velocity motion.
Scene generate_sequence(const SynthConfig & cfg);

/// Number of points of `cloud` (sensor frame at `pose`) inside the world-frame box.
std::size_t points_in_box(const PointCloud & cloud, const Pose & pose, const Box3D & box, double margin = 0.05);

}  // namespace cootest::synth

#endif  // COOTEST__SYNTH_HPP_
