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

#ifndef COOTEST__SCENE_HPP_
#define COOTEST__SCENE_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cootest/transform_spec.hpp"

namespace cootest
{

/// One LiDAR return. Stored as float32 to match the on-disk layout exactly.
struct Point
{
  float x{0.0F};
  float y{0.0F};
  float z{0.0F};
  float intensity{0.0F};

  bool operator==(const Point &) const = default;
};

struct PointCloud
{
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool operator==(const PointCloud &) const = default;
};

/// Rigid 4x4 homogeneous transform.
struct Pose
{
  Eigen::Matrix4d matrix{Eigen::Matrix4d::Identity()};

  static Pose identity() { return Pose{}; }
  /// Rotation of `yaw` radians about +z followed by translation (x, y, z).
  static Pose from_xyz_yaw(double x, double y, double z, double yaw);

  Eigen::Matrix3d rotation() const { return matrix.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return matrix.topRightCorner<3, 1>(); }
  /// Heading of the rotation block projected onto the x-y plane.
  double yaw() const;

  bool operator==(const Pose & other) const { return matrix == other.matrix; }
};

enum class Role { kEgo, kCav };

struct Frame
{
  std::int64_t timestamp{0};  // ms
  Pose pose;                  // agent sensor in world frame
  PointCloud cloud;           // agent sensor frame

  bool operator==(const Frame &) const = default;
};

struct AgentTrack
{
  std::string agent_id;
  Role role{Role::kCav};
  std::vector<Frame> frames;

  bool operator==(const AgentTrack &) const = default;
};

/// Yaw-only oriented box. Ground truth carries confidence 1.
struct Box3D
{
  Eigen::Vector3d center{Eigen::Vector3d::Zero()};
  Eigen::Vector3d dims{Eigen::Vector3d::Ones()};  // l, w, h
  double yaw{0.0};
  double confidence{1.0};

  double volume() const { return dims.x() * dims.y() * dims.z(); }
  bool operator==(const Box3D & o) const
  {
    return center == o.center && dims == o.dims && yaw == o.yaw && confidence == o.confidence;
  }
};

struct Scene
{
  std::string scene_id;
  std::int64_t eval_timestamp{0};
  std::vector<AgentTrack> agents;
  std::vector<Box3D> ground_truth;
  std::vector<TransformSpec> provenance;

  bool operator==(const Scene &) const = default;
};

/// Maps an angle into (-pi, pi].
double normalize_yaw(double yaw);

/// Every invariant violation as "<field path>: <reason>"; empty iff valid.
std::vector<std::string> validate(const Scene & scene);

/// Throws InvalidArgument listing all violations.
void require_valid(const Scene & scene);

const AgentTrack & ego_track(const Scene & scene);

/// Latest frame with timestamp <= `timestamp`; throws PreconditionError if none.
const Frame & frame_at(const AgentTrack & track, std::int64_t timestamp);

/// Frame each agent contributes at `scene.eval_timestamp`.
inline const Frame & eval_frame(const Scene & scene, const AgentTrack & track)
{
  return frame_at(track, scene.eval_timestamp);
}

/// Copy of the scene with only the ego agent, the input of ego-only perception.
Scene ego_only(const Scene & scene);

// -- on-disk format ---------------------------------------------------------

PointCloud decode_cloud(std::string_view bytes, const std::string & origin);
std::string encode_cloud(const PointCloud & cloud);

Scene load_scene(const std::filesystem::path & dir);
void save_scene(const Scene & scene, const std::filesystem::path & dir);

/// Loads `dir` itself when it holds a scene.json, otherwise every immediate
/// subdirectory that does. Result is sorted by scene_id; ids must be unique.
std::vector<Scene> load_suite(const std::filesystem::path & dir);

}  // namespace cootest

#endif  // COOTEST__SCENE_HPP_
