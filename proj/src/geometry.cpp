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

#include "cootest/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <Eigen/Dense>

#include "cootest/error.hpp"

namespace cootest::geometry
{
namespace
{
constexpr double kMergeTol = 1e-9;

double cross(const Eigen::Vector2d & a, const Eigen::Vector2d & b)
{
  return a.x() * b.y() - a.y() * b.x();
}

// Signed distance-like value: > 0 when p lies left of the directed edge a->b.
double side(const Eigen::Vector2d & a, const Eigen::Vector2d & b, const Eigen::Vector2d & p)
{
  return cross(b - a, p - a);
}

// Fixed operand order so that pairwise results are exactly symmetric.
bool box_less(const Box3D & a, const Box3D & b)
{
  const auto key = [](const Box3D & x) {
    return std::tuple(
      x.center.x(), x.center.y(), x.center.z(), x.dims.x(), x.dims.y(), x.dims.z(), x.yaw);
  };
  return key(a) < key(b);
}

double footprint_overlap(const Box3D & a, const Box3D & b)
{
  const Box3D & first = box_less(b, a) ? b : a;
  const Box3D & second = box_less(b, a) ? a : b;
  return polygon_area(clip_convex(footprint(first), footprint(second)));
}

BevPolygon merge_close_vertices(const BevPolygon & poly)
{
  BevPolygon out;
  out.reserve(poly.size());
  for (const auto & v : poly) {
    if (out.empty() || (v - out.back()).norm() >= kMergeTol) {
      out.push_back(v);
    }
  }
  while (out.size() > 1 && (out.front() - out.back()).norm() < kMergeTol) {
    out.pop_back();
  }
  return out;
}
}  // namespace

Pose compose(const Pose & a, const Pose & b) { return Pose{a.matrix * b.matrix}; }

bool is_rigid(const Pose & pose, double tol)
{
  const Eigen::Matrix4d & m = pose.matrix;
  if (!m.allFinite()) {
    return false;
  }
  if (std::abs(m(3, 0)) > tol || std::abs(m(3, 1)) > tol || std::abs(m(3, 2)) > tol ||
      std::abs(m(3, 3) - 1.0) > tol) {
    return false;
  }
  const Eigen::Matrix3d r = pose.rotation();
  if ((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) {
    return false;
  }
  return std::abs(r.determinant() - 1.0) <= tol;
}

Pose invert(const Pose & a)
{
  if (!is_rigid(a)) {
    throw InvalidArgument("cannot invert non-rigid pose");
  }
  Pose out;
  const Eigen::Matrix3d rt = a.rotation().transpose();
  out.matrix.topLeftCorner<3, 3>() = rt;
  out.matrix.topRightCorner<3, 1>() = -rt * a.translation();
  return out;
}

Eigen::Vector3d transform_point(const Pose & pose, const Eigen::Vector3d & p)
{
  return pose.rotation() * p + pose.translation();
}

PointCloud transform_points(const PointCloud & cloud, const Pose & pose)
{
  PointCloud out;
  out.points.reserve(cloud.size());
  const Eigen::Matrix3d r = pose.rotation();
  const Eigen::Vector3d t = pose.translation();
  for (const auto & p : cloud.points) {
    const Eigen::Vector3d q = r * Eigen::Vector3d(p.x, p.y, p.z) + t;
    out.points.push_back(
      {static_cast<float>(q.x()), static_cast<float>(q.y()), static_cast<float>(q.z()),
       p.intensity});
  }
  return out;
}

Box3D transform_box(const Box3D & box, const Pose & pose)
{
  Box3D out = box;
  out.center = transform_point(pose, box.center);
  out.yaw = normalize_yaw(box.yaw + pose.yaw());
  return out;
}

BevPolygon footprint(const Box3D & box)
{
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.dims.x();
  const double hw = 0.5 * box.dims.y();
  const Eigen::Vector2d ctr(box.center.x(), box.center.y());
  const Eigen::Vector2d ax(c * hl, s * hl);
  const Eigen::Vector2d ay(-s * hw, c * hw);
  return {ctr - ax - ay, ctr + ax - ay, ctr + ax + ay, ctr - ax + ay};
}

double polygon_area(const BevPolygon & poly)
{
  if (poly.size() < 3) {
    return 0.0;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    acc += cross(poly[i], poly[(i + 1) % poly.size()]);
  }
  return 0.5 * acc;
}

BevPolygon clip_convex(const BevPolygon & subject, const BevPolygon & clip)
{
  BevPolygon output = subject;
  for (std::size_t e = 0; e < clip.size() && !output.empty(); ++e) {
    const Eigen::Vector2d & a = clip[e];
    const Eigen::Vector2d & b = clip[(e + 1) % clip.size()];
    BevPolygon input;
    input.swap(output);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Eigen::Vector2d & cur = input[i];
      const Eigen::Vector2d & prev = input[(i + input.size() - 1) % input.size()];
      const double s_cur = side(a, b, cur);
      const double s_prev = side(a, b, prev);
      // Boundaries are closed: points on the clip edge are kept.
      const bool in_cur = s_cur >= 0.0;
      const bool in_prev = s_prev >= 0.0;
      if (in_cur != in_prev) {
        const double t = s_prev / (s_prev - s_cur);
        output.push_back(prev + t * (cur - prev));
      }
      if (in_cur) {
        output.push_back(cur);
      }
    }
    output = merge_close_vertices(output);
  }
  if (output.size() < 3 || polygon_area(output) <= 0.0) {
    return {};
  }
  return output;
}

double bev_iou(const Box3D & a, const Box3D & b)
{
  const double area_a = a.dims.x() * a.dims.y();
  const double area_b = b.dims.x() * b.dims.y();
  const double inter = footprint_overlap(a, b);
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) {
    return 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

double z_overlap(const Box3D & a, const Box3D & b)
{
  const double lo = std::max(a.center.z() - 0.5 * a.dims.z(), b.center.z() - 0.5 * b.dims.z());
  const double hi = std::min(a.center.z() + 0.5 * a.dims.z(), b.center.z() + 0.5 * b.dims.z());
  return std::max(0.0, hi - lo);
}

double intersection_volume(const Box3D & a, const Box3D & b)
{
  const double dz = z_overlap(a, b);
  if (dz <= 0.0) {
    return 0.0;
  }
  const double area = footprint_overlap(a, b);
  return std::min(area * dz, std::min(a.volume(), b.volume()));
}

}  // namespace cootest::geometry
