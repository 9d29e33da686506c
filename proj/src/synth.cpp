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

#include "cootest/synth.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cootest/error.hpp"
#include "cootest/geometry.hpp"
#include "cootest/rng.hpp"

namespace cootest::synth
{
namespace
{

constexpr int kPlacementRetries = 1000;
constexpr double kVehicleGap = 0.5;
constexpr double kAgentClearance = 2.0;
constexpr double kReferenceRange = 10.0;

Eigen::Matrix3d yaw_rotation(double yaw)
{
  return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

// Segment p->q against an oriented box, closed on the parameter interval.
bool segment_hits_box(const Eigen::Vector3d & p, const Eigen::Vector3d & q, const Box3D & box)
{
  const Eigen::Matrix3d rt = yaw_rotation(box.yaw).transpose();
  const Eigen::Vector3d a = rt * (p - box.center);
  const Eigen::Vector3d d = rt * (q - box.center) - a;
  const Eigen::Vector3d half = 0.5 * box.dims;
  double t0 = 0.0;
  double t1 = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-12) {
      if (std::abs(a[k]) > half[k]) {
        return false;
      }
      continue;
    }
    double ta = (-half[k] - a[k]) / d[k];
    double tb = (half[k] - a[k]) / d[k];
    if (ta > tb) {
      std::swap(ta, tb);
    }
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) {
      return false;
    }
  }
  return true;
}

Box3D box_at(const VehicleLayout & v, double dt_back)
{
  Box3D b = v.box;
  b.center.x() -= v.velocity.x() * dt_back;
  b.center.y() -= v.velocity.y() * dt_back;
  return b;
}

Pose pose_at(const AgentLayout & a, double dt_back)
{
  return Pose::from_xyz_yaw(
    a.position.x() - a.velocity.x() * dt_back, a.position.y() - a.velocity.y() * dt_back,
    kSensorHeight, a.yaw);
}

PointCloud render(
  const Pose & pose, const std::vector<Box3D> & boxes, const SynthConfig & cfg, Rng & rng)
{
  const Eigen::Vector3d sensor = pose.translation();
  const Pose to_sensor = geometry::invert(pose);
  PointCloud cloud;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const Box3D & box = boxes[i];
    const Eigen::Matrix3d r = yaw_rotation(box.yaw);
    const Eigen::Vector3d half = 0.5 * box.dims;
    for (int axis = 0; axis < 3; ++axis) {
      const int ua = (axis + 1) % 3;
      const int va = (axis + 2) % 3;
      for (double sign : {-1.0, 1.0}) {
        const Eigen::Vector3d normal = r.col(axis) * sign;
        const Eigen::Vector3d face_center = box.center + normal * half[axis];
        const Eigen::Vector3d to_sensor_vec = sensor - face_center;
        if (normal.dot(to_sensor_vec) <= 0.0) {
          continue;
        }
        const double range = to_sensor_vec.norm();
        const double face_area = box.dims[ua] * box.dims[va];
        const double falloff = std::min(1.0, std::pow(kReferenceRange / range, 2));
        const double expected = cfg.points_per_m2 * face_area * falloff;
        auto count = static_cast<std::size_t>(std::floor(expected));
        if (rng.bernoulli(expected - std::floor(expected))) {
          ++count;
        }
        for (std::size_t n = 0; n < count; ++n) {
          const double u = rng.uniform(-half[ua], half[ua]);
          const double v = rng.uniform(-half[va], half[va]);
          const float intensity = static_cast<float>(rng.uniform(0.3, 0.9));
          const Eigen::Vector3d world =
            face_center + r.col(ua) * u + r.col(va) * v;
          if (cfg.occlusion) {
            bool blocked = false;
            for (std::size_t j = 0; j < boxes.size() && !blocked; ++j) {
              blocked = j != i && segment_hits_box(sensor, world, boxes[j]);
            }
            if (blocked) {
              continue;
            }
          }
          const Eigen::Vector3d local = geometry::transform_point(to_sensor, world);
          cloud.points.push_back(Point{
            static_cast<float>(local.x()), static_cast<float>(local.y()),
            static_cast<float>(local.z()), intensity});
        }
      }
    }
  }
  return cloud;
}

}  // namespace

void validate_config(const SynthConfig & cfg)
{
  if (cfg.scene_id.empty()) {
    throw InvalidArgument("synth: scene_id must not be empty");
  }
  if (cfg.n_vehicles < 0) {
    throw InvalidArgument("synth: n_vehicles must be >= 0");
  }
  if (cfg.n_cavs < 0) {
    throw InvalidArgument("synth: n_cavs must be >= 0");
  }
  if (cfg.frames < 1) {
    throw InvalidArgument("synth: frames must be >= 1");
  }
  if (!(cfg.area > 0.0)) {
    throw InvalidArgument("synth: area must be > 0");
  }
  if (cfg.frame_dt_ms <= 0) {
    throw InvalidArgument("synth: frame_dt must be > 0");
  }
  if (!(cfg.points_per_m2 > 0.0)) {
    throw InvalidArgument("synth: points_per_m2 must be > 0");
  }
  if (!(cfg.max_speed >= 0.0)) {
    throw InvalidArgument("synth: max_speed must be >= 0");
  }
}

SceneLayout random_layout(const SynthConfig & cfg, bool moving)
{
  validate_config(cfg);
  Rng rng(mix_seed(cfg.master_seed, fnv1a("layout")));
  const auto velocity = [&](double heading) -> Eigen::Vector2d {
    if (!moving) {
      return Eigen::Vector2d::Zero();
    }
    const double speed = rng.uniform(0.0, cfg.max_speed);
    return {speed * std::cos(heading), speed * std::sin(heading)};
  };

  SceneLayout layout;
  AgentLayout ego;
  ego.agent_id = "ego";
  ego.role = Role::kEgo;
  ego.velocity = velocity(0.0);
  layout.agents.push_back(ego);
  for (int c = 0; c < cfg.n_cavs; ++c) {
    AgentLayout cav;
    cav.agent_id = "cav" + std::to_string(c + 1);
    const double dist = rng.uniform(10.0, 40.0);
    const double bearing = rng.uniform(-std::numbers::pi, std::numbers::pi);
    cav.position = {dist * std::cos(bearing), dist * std::sin(bearing)};
    cav.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    cav.velocity = velocity(cav.yaw);
    layout.agents.push_back(cav);
  }

  for (int n = 0; n < cfg.n_vehicles; ++n) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
      Box3D box;
      box.dims = {rng.uniform(3.8, 5.2), rng.uniform(1.7, 2.1), rng.uniform(1.4, 1.8)};
      box.center = {rng.uniform(-cfg.area, cfg.area), rng.uniform(-cfg.area, cfg.area), 0.5 * box.dims.z()};
      box.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
      const double radius = 0.5 * std::hypot(box.dims.x(), box.dims.y());
      bool ok = true;
      for (const auto & a : layout.agents) {
        ok = ok && (box.center.head<2>() - a.position).norm() >= radius + kAgentClearance;
      }
      Box3D grown = box;
      grown.dims.head<2>() += Eigen::Vector2d::Constant(2.0 * kVehicleGap);
      for (const auto & v : layout.vehicles) {
        ok = ok && geometry::intersection_volume(grown, v.box) <= 0.0;
      }
      if (ok) {
        layout.vehicles.push_back({box, velocity(box.yaw)});
        placed = true;
      }
    }
    if (!placed) {
      throw PreconditionError(
        "synth: cannot place vehicle " + std::to_string(n) + " without overlap after " +
        std::to_string(kPlacementRetries) + " retries");
    }
  }
  return layout;
}

Scene build_scene(const SceneLayout & layout, const SynthConfig & cfg)
{
  validate_config(cfg);
  Scene scene;
  scene.scene_id = cfg.scene_id;
  scene.eval_timestamp = static_cast<std::int64_t>(cfg.frames - 1) * cfg.frame_dt_ms;

  for (const auto & agent : layout.agents) {
    AgentTrack track;
    track.agent_id = agent.agent_id;
    track.role = agent.role;
    for (int k = 0; k < cfg.frames; ++k) {
      const std::int64_t ts = static_cast<std::int64_t>(k) * cfg.frame_dt_ms;
      const double back = static_cast<double>(scene.eval_timestamp - ts) / 1000.0;
      std::vector<Box3D> boxes;
      boxes.reserve(layout.vehicles.size());
      for (const auto & v : layout.vehicles) {
        boxes.push_back(box_at(v, back));
      }
      // Same stream every frame so static geometry renders identically.
      Rng rng(stream_seed(cfg.master_seed, agent.agent_id, "points"));
      Frame frame;
      frame.timestamp = ts;
      frame.pose = pose_at(agent, back);
      frame.cloud = render(frame.pose, boxes, cfg, rng);
      track.frames.push_back(std::move(frame));
    }
    scene.agents.push_back(std::move(track));
  }

  for (const auto & agent : layout.agents) {
    if (agent.role != Role::kEgo) {
      continue;
    }
    const Pose world_to_ego = geometry::invert(pose_at(agent, 0.0));
    for (const auto & v : layout.vehicles) {
      Box3D gt = geometry::transform_box(v.box, world_to_ego);
      gt.confidence = 1.0;
      scene.ground_truth.push_back(gt);
    }
  }
  require_valid(scene);
  return scene;
}

Scene generate_scene(const SynthConfig & cfg)
{
  SynthConfig single = cfg;
  single.frames = 1;
  return build_scene(random_layout(single, false), single);
}

Scene generate_sequence(const SynthConfig & cfg)
{
  if (cfg.frames < 2) {
    throw InvalidArgument("synth: a sequence needs frames >= 2");
  }
  return build_scene(random_layout(cfg, true), cfg);
}

std::size_t points_in_box(const PointCloud & cloud, const Pose & pose, const Box3D & box, double margin)
{
  const Eigen::Matrix3d rt = yaw_rotation(box.yaw).transpose();
  const Eigen::Vector3d half = 0.5 * box.dims + Eigen::Vector3d::Constant(margin);
  std::size_t n = 0;
  for (const auto & p : cloud.points) {
    const Eigen::Vector3d world = geometry::transform_point(pose, Eigen::Vector3d(p.x, p.y, p.z));
    const Eigen::Vector3d local = rt * (world - box.center);
    if ((local.array().abs() <= half.array()).all()) {
      ++n;
    }
  }
  return n;
}

}  // namespace cootest::synth
