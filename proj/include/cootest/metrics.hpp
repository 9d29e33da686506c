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

#ifndef COOTEST__METRICS_HPP_
#define COOTEST__METRICS_HPP_

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cootest/error.hpp"
#include "cootest/perception.hpp"
#include "cootest/scene.hpp"

namespace cootest::metrics
{

inline constexpr double kMatchIou = 0.5;

struct MatchPair
{
  std::size_t prediction;
  std::size_t gt;
  double iou;
};

struct Matching
{
  std::vector<MatchPair> pairs;  // in processing order (descending confidence)
  std::vector<std::size_t> unmatched_predictions;
  std::vector<std::size_t> unmatched_gt;
};

/// Greedy matching: predictions in descending confidence (ties by index)
/// each take the still-unmatched GT of maximal BEV IoU >= iou_thr, lowest
/// GT index on ties.
Matching match(
  const std::vector<Box3D> & predictions, const std::vector<Box3D> & gts, double iou_thr = kMatchIou);

/// A ranked detection and whether it is a true positive.
struct ScoredFlag
{
  double confidence;
  bool true_positive;
};

/// 11-point interpolated AP over recall levels {0, 0.1, ..., 1}. With no
/// ground truth the result is 1 when there are no detections either, else 0.
double ap_from_flags(std::vector<ScoredFlag> flags, std::size_t num_gt);

double average_precision(
  const std::vector<Box3D> & predictions, const std::vector<Box3D> & gts, double iou_thr = kMatchIou);

enum class RangeBucket { kShort = 0, kMiddle = 1, kLong = 2, kOverall = 3 };

inline constexpr std::array<RangeBucket, 4> kAllBuckets = {
  RangeBucket::kShort, RangeBucket::kMiddle, RangeBucket::kLong, RangeBucket::kOverall};

/// [lower, upper) in metres from the ego origin.
struct RangeBounds
{
  double lower;
  double upper;
};

inline constexpr std::array<RangeBounds, 4> kRangeBounds = {
  RangeBounds{0.0, 30.0}, RangeBounds{30.0, 50.0}, RangeBounds{50.0, 100.0}, RangeBounds{0.0, 100.0}};

std::string_view bucket_name(RangeBucket b);
inline const RangeBounds & bounds(RangeBucket b) { return kRangeBounds[static_cast<std::size_t>(b)]; }

/// Short/middle/long bucket of a planar distance, or nullopt beyond 100 m.
std::optional<RangeBucket> bucket_of(double distance);

struct BucketAp
{
  double ap{1.0};
  bool empty{true};  // no GT and no predictions: AP reported as 1
  std::size_t num_gt{0};
  std::size_t num_predictions{0};
  std::vector<ScoredFlag> flags;
};

struct RangeAp
{
  std::array<BucketAp, 4> buckets;

  const BucketAp & operator[](RangeBucket b) const { return buckets[static_cast<std::size_t>(b)]; }
  BucketAp & operator[](RangeBucket b) { return buckets[static_cast<std::size_t>(b)]; }
};

/// Per-bucket AP. GT go to the bucket of their own xy distance from
/// `ego_origin`; predictions follow their matched GT, unmatched ones their
/// own center. Anything at 100 m or beyond is excluded.
RangeAp ap_by_range(
  const std::vector<Box3D> & predictions, const std::vector<Box3D> & gts,
  const Eigen::Vector2d & ego_origin = Eigen::Vector2d::Zero(), double iou_thr = kMatchIou);

struct MceResult
{
  std::size_t count{0};
  std::vector<std::size_t> gt_indices;
};

/// Ground-truth boxes the ego-only output detects but the cooperative output
/// misses. Detection of one GT box means match() pairs it at iou_thr.
MceResult count_mce(
  const std::vector<Box3D> & ego, const std::vector<Box3D> & cooperative,
  const std::vector<Box3D> & gts, double iou_thr = kMatchIou, double score_floor = 0.0);

/// A transformed scene does not carry its seed's ground truth.
class OracleMismatch : public Error
{
public:
  using Error::Error;
};

struct MrVerdict
{
  double ap_original{0.0};
  double ap_transformed{0.0};
  double epsilon{0.1};
  bool violated{false};
  std::size_t mce_count{0};
  std::vector<std::size_t> mce_gt;
};

/// Verdict from already computed predictions; AP is the overall [0, 100) m AP.
MrVerdict mr_verdict(
  const std::vector<Box3D> & seed_cooperative, const perception::Predictions & transformed,
  const std::vector<Box3D> & gts, double epsilon, double score_floor = 0.0);

/// Runs the cooperative pipeline on both scenes against their shared ground
/// truth; violated iff AP drops by more than epsilon.
MrVerdict check_mr(
  perception::Detector & detector, const Scene & seed, const Scene & transformed,
  double epsilon = 0.1);

}  // namespace cootest::metrics

#endif  // COOTEST__METRICS_HPP_
