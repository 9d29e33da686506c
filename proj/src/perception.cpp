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

#include "cootest/perception.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <tuple>
#include <unordered_map>

#include "cootest/error.hpp"
#include "cootest/external_detector.hpp"
#include "cootest/geometry.hpp"
#include "cootest/operators.hpp"

namespace cootest::perception
{
namespace
{
constexpr double kFullConfidencePoints = 50.0;
constexpr double kMinExtent = 0.1;

bool detection_before(const Box3D & a, const Box3D & b)
{
  if (a.confidence != b.confidence) {
    return a.confidence > b.confidence;
  }
  return std::tuple(a.center.x(), a.center.y(), a.yaw) <
         std::tuple(b.center.x(), b.center.y(), b.yaw);
}

class DisjointSet
{
public:
  explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x)
  {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b)
  {
    a = find(a);
    b = find(b);
    if (a != b) {
      parent_[std::max(a, b)] = std::min(a, b);
    }
  }

private:
  std::vector<std::size_t> parent_;
};

struct CellKey
{
  std::int64_t x, y, z;
  bool operator==(const CellKey &) const = default;
};

struct CellHash
{
  std::size_t operator()(const CellKey & k) const
  {
    return static_cast<std::size_t>(
      (static_cast<std::uint64_t>(k.x) * 73856093ULL) ^
      (static_cast<std::uint64_t>(k.y) * 19349663ULL) ^
      (static_cast<std::uint64_t>(k.z) * 83492791ULL));
  }
};

Box3D fit_box(const std::vector<const Point *> & pts)
{
  const double n = static_cast<double>(pts.size());
  double mx = 0.0;
  double my = 0.0;
  for (const Point * p : pts) {
    mx += p->x;
    my += p->y;
  }
  mx /= n;
  my /= n;
  double cxx = 0.0;
  double cyy = 0.0;
  double cxy = 0.0;
  double zmin = std::numeric_limits<double>::infinity();
  double zmax = -zmin;
  for (const Point * p : pts) {
    const double dx = p->x - mx;
    const double dy = p->y - my;
    cxx += dx * dx;
    cyy += dy * dy;
    cxy += dx * dy;
    zmin = std::min(zmin, static_cast<double>(p->z));
    zmax = std::max(zmax, static_cast<double>(p->z));
  }
  double theta = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
  const Eigen::Vector2d u(std::cos(theta), std::sin(theta));
  const Eigen::Vector2d v(-u.y(), u.x());
  double umin = std::numeric_limits<double>::infinity();
  double umax = -umin;
  double vmin = umin;
  double vmax = -umin;
  for (const Point * p : pts) {
    const Eigen::Vector2d q(p->x, p->y);
    umin = std::min(umin, u.dot(q));
    umax = std::max(umax, u.dot(q));
    vmin = std::min(vmin, v.dot(q));
    vmax = std::max(vmax, v.dot(q));
  }
  const Eigen::Vector2d c = u * (0.5 * (umin + umax)) + v * (0.5 * (vmin + vmax));
  double length = std::max(umax - umin, kMinExtent);
  double width = std::max(vmax - vmin, kMinExtent);
  if (width > length) {
    std::swap(length, width);
    theta += 0.5 * std::numbers::pi;
  }

  Box3D box;
  box.center = {c.x(), c.y(), 0.5 * (zmin + zmax)};
  box.dims = {length, width, std::max(zmax - zmin, kMinExtent)};
  box.yaw = normalize_yaw(theta);
  box.confidence = std::min(1.0, n / kFullConfidencePoints);
  return box;
}

PointCloud shared_cloud(const Scene & scene, const AgentTrack & agent)
{
  const PointCloud & raw = eval_frame(scene, agent).cloud;
  const auto lossy = operators::pending_lossy(scene);
  if (agent.role == Role::kEgo || lossy.empty()) {
    return raw;
  }
  auto payload = operators::cloud_payload(raw);
  for (const auto & spec : lossy) {
    payload = operators::apply_lossy(spec, std::move(payload), scene.scene_id, agent.agent_id);
  }
  return operators::payload_to_cloud(payload);
}

std::vector<Box3D> shared_detections(
  const Scene & scene, const AgentTrack & agent, std::vector<Box3D> boxes)
{
  const auto lossy = operators::pending_lossy(scene);
  if (agent.role == Role::kEgo || lossy.empty()) {
    return boxes;
  }
  auto payload = operators::detection_payload(boxes);
  for (const auto & spec : lossy) {
    payload = operators::apply_lossy(spec, std::move(payload), scene.scene_id, agent.agent_id);
  }
  return operators::payload_to_detections(payload);
}

std::vector<Box3D> filter_scores(std::vector<Box3D> boxes, double floor)
{
  std::erase_if(boxes, [&](const Box3D & b) { return b.confidence < floor; });
  return boxes;
}
}  // namespace

void validate_config(const DetectorConfig & cfg)
{
  if (!(cfg.cluster_radius > 0.0)) {
    throw InvalidArgument("cluster_radius must be positive");
  }
  if (cfg.min_points < 3) {
    throw InvalidArgument("min_points must be at least 3");
  }
  if (!(cfg.nms_iou > 0.0 && cfg.nms_iou < 1.0)) {
    throw InvalidArgument("nms_iou must lie in (0, 1)");
  }
  if (!(cfg.score_floor >= 0.0 && cfg.score_floor <= 1.0)) {
    throw InvalidArgument("score_floor must lie in [0, 1]");
  }
  if (cfg.fusion == Fusion::kExternal && (!cfg.external_cmd || cfg.external_cmd->empty())) {
    throw InvalidArgument("external fusion requires a detector command");
  }
}

void sort_by_confidence(std::vector<Box3D> & boxes)
{
  std::stable_sort(boxes.begin(), boxes.end(), detection_before);
}

std::vector<Box3D> nms(std::vector<Box3D> boxes, double iou_threshold)
{
  sort_by_confidence(boxes);
  std::vector<Box3D> kept;
  for (const auto & b : boxes) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Box3D & k) {
      return geometry::bev_iou(b, k) > iou_threshold;
    });
    if (!suppressed) {
      kept.push_back(b);
    }
  }
  return kept;
}

PointCloud remove_ground(const PointCloud & cloud, double ground_z)
{
  PointCloud out;
  out.points.reserve(cloud.size());
  std::copy_if(cloud.points.begin(), cloud.points.end(), std::back_inserter(out.points),
               [&](const Point & p) { return p.z >= ground_z; });
  return out;
}

std::vector<Box3D> cluster_and_fit(const PointCloud & cloud, const DetectorConfig & cfg)
{
  const auto & pts = cloud.points;
  const double r = cfg.cluster_radius;
  const double r2 = r * r;
  const auto cell_of = [&](const Point & p) {
    return CellKey{
      static_cast<std::int64_t>(std::floor(p.x / r)), static_cast<std::int64_t>(std::floor(p.y / r)),
      static_cast<std::int64_t>(std::floor(p.z / r))};
  };
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid;
  grid.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    grid[cell_of(pts[i])].push_back(i);
  }

  DisjointSet sets(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const CellKey c = cell_of(pts[i]);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = grid.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == grid.end()) {
            continue;
          }
          for (const std::size_t j : it->second) {
            if (j <= i) {
              continue;
            }
            const double ex = pts[i].x - pts[j].x;
            const double ey = pts[i].y - pts[j].y;
            const double ez = pts[i].z - pts[j].z;
            if (ex * ex + ey * ey + ez * ez <= r2) {
              sets.unite(i, j);
            }
          }
        }
      }
    }
  }

  // Roots are the smallest member index, so iterating points in order yields
  // clusters in a deterministic order.
  std::unordered_map<std::size_t, std::size_t> slot;
  std::vector<std::vector<const Point *>> clusters;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::size_t root = sets.find(i);
    auto [it, inserted] = slot.try_emplace(root, clusters.size());
    if (inserted) {
      clusters.emplace_back();
    }
    clusters[it->second].push_back(&pts[i]);
  }

  std::vector<Box3D> boxes;
  for (const auto & cluster : clusters) {
    if (cluster.size() >= cfg.min_points) {
      boxes.push_back(fit_box(cluster));
    }
  }
  sort_by_confidence(boxes);
  return boxes;
}

std::vector<Box3D> detect_single(const PointCloud & cloud, const DetectorConfig & cfg)
{
  return cluster_and_fit(remove_ground(cloud, cfg.ground_z), cfg);
}

Pose agent_to_ego(const Scene & scene, const AgentTrack & agent)
{
  const Pose & ego_pose = eval_frame(scene, ego_track(scene)).pose;
  const Pose & agent_pose = eval_frame(scene, agent).pose;
  return geometry::compose(geometry::invert(ego_pose), agent_pose);
}

DetectionResult fuse_early(const Scene & scene, const DetectorConfig & cfg)
{
  PointCloud merged;
  for (const auto & agent : scene.agents) {
    PointCloud local = remove_ground(shared_cloud(scene, agent), cfg.ground_z);
    if (agent.role != Role::kEgo) {
      local = geometry::transform_points(local, agent_to_ego(scene, agent));
    }
    merged.points.insert(merged.points.end(), local.points.begin(), local.points.end());
  }
  DetectionResult result;
  result.boxes = cluster_and_fit(merged, cfg);
  result.source = Source::kCooperative;
  result.detector_id = "reference-early";
  return result;
}

DetectionResult fuse_late(const Scene & scene, const DetectorConfig & cfg)
{
  std::vector<Box3D> all;
  for (const auto & agent : scene.agents) {
    auto boxes = shared_detections(scene, agent, detect_single(eval_frame(scene, agent).cloud, cfg));
    if (agent.role != Role::kEgo) {
      const Pose to_ego = agent_to_ego(scene, agent);
      for (auto & b : boxes) {
        b = geometry::transform_box(b, to_ego);
      }
    }
    all.insert(all.end(), boxes.begin(), boxes.end());
  }
  DetectionResult result;
  result.boxes = nms(std::move(all), cfg.nms_iou);
  result.source = Source::kCooperative;
  result.detector_id = "reference-late";
  return result;
}

ReferenceDetector::ReferenceDetector(DetectorConfig cfg) : cfg_(std::move(cfg))
{
  validate_config(cfg_);
  if (cfg_.fusion == Fusion::kExternal) {
    throw InvalidArgument("ReferenceDetector supports early or late fusion only");
  }
}

std::string ReferenceDetector::id() const
{
  return cfg_.fusion == Fusion::kEarly ? "reference-early" : "reference-late";
}

DetectionResult ReferenceDetector::detect_ego(const Scene & scene)
{
  DetectionResult result;
  result.boxes = detect_single(eval_frame(scene, ego_track(scene)).cloud, cfg_);
  result.source = Source::kEgoOnly;
  result.detector_id = id();
  return result;
}

DetectionResult ReferenceDetector::detect_cooperative(const Scene & scene)
{
  return cfg_.fusion == Fusion::kEarly ? fuse_early(scene, cfg_) : fuse_late(scene, cfg_);
}

std::unique_ptr<Detector> make_detector(const DetectorConfig & cfg)
{
  validate_config(cfg);
  if (cfg.fusion == Fusion::kExternal) {
    return std::make_unique<ExternalDetector>(*cfg.external_cmd, cfg.external_timeout_ms, cfg.score_floor);
  }
  return std::make_unique<ReferenceDetector>(cfg);
}

Predictions get_pred(Detector & detector, const Scene & scene)
{
  Predictions p;
  p.ego = detector.detect_ego(scene);
  p.cooperative = detector.detect_cooperative(scene);
  p.ego.boxes = filter_scores(std::move(p.ego.boxes), detector.score_floor());
  p.cooperative.boxes = filter_scores(std::move(p.cooperative.boxes), detector.score_floor());
  return p;
}

}  // namespace cootest::perception
