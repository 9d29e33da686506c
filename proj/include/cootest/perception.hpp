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

#ifndef COOTEST__PERCEPTION_HPP_
#define COOTEST__PERCEPTION_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cootest/scene.hpp"

namespace cootest::perception
{

enum class Fusion { kEarly, kLate, kExternal };
enum class Source { kEgoOnly, kCooperative };

struct DetectorConfig
{
  Fusion fusion{Fusion::kEarly};
  double cluster_radius{0.7};  // m
  std::size_t min_points{5};
  double nms_iou{0.15};
  double score_floor{0.2};
  double ground_z{-1.4};       // m, relative to the sensor origin
  std::optional<std::string> external_cmd;
  int external_timeout_ms{30000};
};

/// Throws InvalidArgument when a field is out of range.
void validate_config(const DetectorConfig & cfg);

struct DetectionResult
{
  std::vector<Box3D> boxes;  // ego frame at eval_timestamp
  Source source{Source::kEgoOnly};
  std::string detector_id;
};

/// Greedy NMS by descending confidence. A box is suppressed when its BEV IoU
/// with an already kept box exceeds `iou_threshold`. Equal confidences are
/// ordered by (center.x, center.y, yaw).
std::vector<Box3D> nms(std::vector<Box3D> boxes, double iou_threshold);

/// Sorts boxes by descending confidence with the NMS tie-break.
void sort_by_confidence(std::vector<Box3D> & boxes);

PointCloud remove_ground(const PointCloud & cloud, double ground_z);

/// Single-linkage Euclidean clustering; each cluster with at least
/// `min_points` points becomes a box fitted along its planar principal axis,
/// with confidence min(1, points / 50).
std::vector<Box3D> cluster_and_fit(const PointCloud & cloud, const DetectorConfig & cfg);

std::vector<Box3D> detect_single(const PointCloud & cloud, const DetectorConfig & cfg);

/// Transform taking agent-frame coordinates to the ego frame at evaluation.
Pose agent_to_ego(const Scene & scene, const AgentTrack & agent);

DetectionResult fuse_early(const Scene & scene, const DetectorConfig & cfg);
DetectionResult fuse_late(const Scene & scene, const DetectorConfig & cfg);

/// A perception system under test: ego-only and cooperative pipelines.
class Detector
{
public:
  virtual ~Detector() = default;
  virtual std::string id() const = 0;
  virtual DetectionResult detect_ego(const Scene & scene) = 0;
  virtual DetectionResult detect_cooperative(const Scene & scene) = 0;
  virtual double score_floor() const = 0;
  /// True when concurrent calls on one instance are safe.
  virtual bool parallel_safe() const { return false; }
};

class ReferenceDetector : public Detector
{
public:
  explicit ReferenceDetector(DetectorConfig cfg);

  std::string id() const override;
  DetectionResult detect_ego(const Scene & scene) override;
  DetectionResult detect_cooperative(const Scene & scene) override;
  double score_floor() const override { return cfg_.score_floor; }
  bool parallel_safe() const override { return true; }
  const DetectorConfig & config() const { return cfg_; }

private:
  DetectorConfig cfg_;
};

/// Builds a reference or external detector from the config.
std::unique_ptr<Detector> make_detector(const DetectorConfig & cfg);

struct Predictions
{
  DetectionResult ego;
  DetectionResult cooperative;
};

/// Ego-only and cooperative outputs on the same scene, both filtered at the
/// detector's score floor.
Predictions get_pred(Detector & detector, const Scene & scene);

}  // namespace cootest::perception

#endif  // COOTEST__PERCEPTION_HPP_
