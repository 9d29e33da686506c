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

#include "cootest/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "cootest/geometry.hpp"

namespace cootest::metrics
{
namespace
{
std::vector<std::size_t> confidence_order(const std::vector<Box3D> & boxes)
{
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return boxes[a].confidence > boxes[b].confidence;
  });
  return order;
}

double planar_distance(const Box3D & b, const Eigen::Vector2d & origin)
{
  return (Eigen::Vector2d(b.center.x(), b.center.y()) - origin).norm();
}
}  // namespace

Matching match(const std::vector<Box3D> & predictions, const std::vector<Box3D> & gts, double iou_thr)
{
  Matching m;
  std::vector<bool> gt_taken(gts.size(), false);
  for (const std::size_t p : confidence_order(predictions)) {
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_taken[g]) {
        continue;
      }
      const double iou = geometry::bev_iou(predictions[p], gts[g]);
      if (iou >= iou_thr && iou > best_iou) {
        best = g;
        best_iou = iou;
      }
    }
    if (best) {
      gt_taken[*best] = true;
      m.pairs.push_back({p, *best, best_iou});
    } else {
      m.unmatched_predictions.push_back(p);
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!gt_taken[g]) {
      m.unmatched_gt.push_back(g);
    }
  }
  return m;
}

double ap_from_flags(std::vector<ScoredFlag> flags, std::size_t num_gt)
{
  if (num_gt == 0) {
    return flags.empty() ? 1.0 : 0.0;
  }
  std::stable_sort(flags.begin(), flags.end(), [](const ScoredFlag & a, const ScoredFlag & b) {
    return a.confidence > b.confidence;
  });
  std::vector<double> precision;
  std::vector<double> recall;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    tp += flags[i].true_positive ? 1 : 0;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(num_gt));
  }
  double sum = 0.0;
  for (int j = 0; j <= 10; ++j) {
    const double level = j / 10.0;
    double best = 0.0;
    for (std::size_t i = 0; i < precision.size(); ++i) {
      if (recall[i] >= level) {
        best = std::max(best, precision[i]);
      }
    }
    sum += best;
  }
  return sum / 11.0;
}

double average_precision(
  const std::vector<Box3D> & predictions, const std::vector<Box3D> & gts, double iou_thr)
{
  const Matching m = match(predictions, gts, iou_thr);
  std::vector<bool> tp(predictions.size(), false);
  for (const auto & pair : m.pairs) {
    tp[pair.prediction] = true;
  }
  // Flags follow the matching order so equal confidences keep their rank.
  std::vector<ScoredFlag> flags;
  for (const std::size_t p : confidence_order(predictions)) {
    flags.push_back({predictions[p].confidence, tp[p]});
  }
  return ap_from_flags(std::move(flags), gts.size());
}

std::string_view bucket_name(RangeBucket b)
{
  switch (b) {
    case RangeBucket::kShort: return "short";
    case RangeBucket::kMiddle: return "middle";
    case RangeBucket::kLong: return "long";
    case RangeBucket::kOverall: return "overall";
  }
  return "?";
}

std::optional<RangeBucket> bucket_of(double distance)
{
  for (const auto b : {RangeBucket::kShort, RangeBucket::kMiddle, RangeBucket::kLong}) {
    if (distance >= bounds(b).lower && distance < bounds(b).upper) {
      return b;
    }
  }
  return std::nullopt;
}

RangeAp ap_by_range(
  const std::vector<Box3D> & predictions, const std::vector<Box3D> & gts,
  const Eigen::Vector2d & ego_origin, double iou_thr)
{
  std::vector<Box3D> kept_gt;
  std::vector<RangeBucket> gt_bucket;
  for (const auto & g : gts) {
    if (const auto b = bucket_of(planar_distance(g, ego_origin))) {
      kept_gt.push_back(g);
      gt_bucket.push_back(*b);
    }
  }
  const Matching m = match(predictions, kept_gt, iou_thr);

  RangeAp out;
  const auto add_flag = [&](RangeBucket b, double conf, bool tp) {
    out[b].flags.push_back({conf, tp});
    out[RangeBucket::kOverall].flags.push_back({conf, tp});
  };
  std::vector<std::optional<std::size_t>> matched_gt(predictions.size());
  for (const auto & pair : m.pairs) {
    matched_gt[pair.prediction] = pair.gt;
  }
  for (const std::size_t p : confidence_order(predictions)) {
    if (matched_gt[p]) {
      add_flag(gt_bucket[*matched_gt[p]], predictions[p].confidence, true);
    } else if (const auto b = bucket_of(planar_distance(predictions[p], ego_origin))) {
      add_flag(*b, predictions[p].confidence, false);
    }
  }
  for (const auto b : gt_bucket) {
    ++out[b].num_gt;
  }
  out[RangeBucket::kOverall].num_gt = kept_gt.size();
  for (auto & bucket : out.buckets) {
    bucket.num_predictions = bucket.flags.size();
    bucket.empty = bucket.num_gt == 0 && bucket.flags.empty();
    bucket.ap = ap_from_flags(bucket.flags, bucket.num_gt);
  }
  return out;
}

MceResult count_mce(
  const std::vector<Box3D> & ego, const std::vector<Box3D> & cooperative,
  const std::vector<Box3D> & gts, double iou_thr, double score_floor)
{
  const auto above_floor = [&](const std::vector<Box3D> & boxes) {
    std::vector<Box3D> out;
    std::copy_if(boxes.begin(), boxes.end(), std::back_inserter(out),
                 [&](const Box3D & b) { return b.confidence >= score_floor; });
    return out;
  };
  const auto ego_kept = above_floor(ego);
  const auto cp_kept = above_floor(cooperative);
  MceResult r;
  for (std::size_t k = 0; k < gts.size(); ++k) {
    const std::vector<Box3D> single{gts[k]};
    const bool detected_by_ego = !match(ego_kept, single, iou_thr).pairs.empty();
    const bool detected_by_cp = !match(cp_kept, single, iou_thr).pairs.empty();
    if (detected_by_ego && !detected_by_cp) {
      ++r.count;
      r.gt_indices.push_back(k);
    }
  }
  return r;
}

MrVerdict mr_verdict(
  const std::vector<Box3D> & seed_cooperative, const perception::Predictions & transformed,
  const std::vector<Box3D> & gts, double epsilon, double score_floor)
{
  MrVerdict v;
  v.epsilon = epsilon;
  v.ap_original = ap_by_range(seed_cooperative, gts)[RangeBucket::kOverall].ap;
  v.ap_transformed = ap_by_range(transformed.cooperative.boxes, gts)[RangeBucket::kOverall].ap;
  v.violated = v.ap_original - v.ap_transformed > epsilon;
  const MceResult mce =
    count_mce(transformed.ego.boxes, transformed.cooperative.boxes, gts, kMatchIou, score_floor);
  v.mce_count = mce.count;
  v.mce_gt = mce.gt_indices;
  return v;
}

MrVerdict check_mr(
  perception::Detector & detector, const Scene & seed, const Scene & transformed, double epsilon)
{
  if (!(seed.ground_truth == transformed.ground_truth)) {
    throw OracleMismatch(
      "scene '" + transformed.scene_id + "' does not carry the ground truth of seed '" +
      seed.scene_id + "'");
  }
  const auto seed_pred = perception::get_pred(detector, seed);
  const auto trans_pred = perception::get_pred(detector, transformed);
  return mr_verdict(
    seed_pred.cooperative.boxes, trans_pred, seed.ground_truth, epsilon, detector.score_floor());
}

}  // namespace cootest::metrics
