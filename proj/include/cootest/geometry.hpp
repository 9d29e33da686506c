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

#ifndef COOTEST__GEOMETRY_HPP_
#define COOTEST__GEOMETRY_HPP_

#include <vector>

#include <Eigen/Core>

#include "cootest/scene.hpp"

namespace cootest::geometry
{

/// Convex polygon in the ground plane, counter-clockwise.
using BevPolygon = std::vector<Eigen::Vector2d>;

Pose compose(const Pose & a, const Pose & b);
/// Rigid inverse (R^T, -R^T t). Throws InvalidArgument on a non-rigid pose.
Pose invert(const Pose & a);
/// Orthonormal rotation with det 1 and last row (0,0,0,1), both within `tol`.
bool is_rigid(const Pose & pose, double tol = 1e-6);

Eigen::Vector3d transform_point(const Pose & pose, const Eigen::Vector3d & p);
PointCloud transform_points(const PointCloud & cloud, const Pose & pose);
/// Moves a yaw-only box by `pose`; only the z-rotation part of the pose affects yaw.
Box3D transform_box(const Box3D & box, const Pose & pose);

/// Corners of the box footprint, counter-clockwise.
BevPolygon footprint(const Box3D & box);
double polygon_area(const BevPolygon & poly);
/// Intersection of two convex CCW polygons; empty when they do not overlap
/// with positive area.
BevPolygon clip_convex(const BevPolygon & subject, const BevPolygon & clip);

double bev_iou(const Box3D & a, const Box3D & b);
double intersection_volume(const Box3D & a, const Box3D & b);

/// z-interval overlap length of two boxes, >= 0.
double z_overlap(const Box3D & a, const Box3D & b);

}  // namespace cootest::geometry

#endif  // COOTEST__GEOMETRY_HPP_
