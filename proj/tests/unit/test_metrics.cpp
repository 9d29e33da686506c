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

#include <gtest/gtest.h>

#include <random>

#include "cootest/metrics.hpp"
#include "cootest/operators.hpp"
#include "cootest/synth.hpp"
#include "support/oracles.hpp"

namespace cootest
{
namespace
{

using namespace metrics;
using testing::make_box;

std::vector<Box3D> random_boxes(std::mt19937_64 & gen, int n, double spread)
{
  std::uniform_real_distribution<double> pos(-spread, spread);
  std::uniform_real_distribution<double> yaw(-0.3, 0.3);
  std::uniform_real_distribution<double> conf(0.05, 1.0);
  std::vector<Box3D> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(make_box(pos(gen), pos(gen), yaw(gen), 4.0, 2.0, 1.5, conf(gen)));
  }
  return out;
}

std::vector<Box3D> jitter(std::mt19937_64 & gen, const std::vector<Box3D> & gts)
{
  std::normal_distribution<double> n(0.0, 0.4);
  std::uniform_real_distribution<double> conf(0.05, 1.0);
  std::vector<Box3D> out;
  for (const auto & g : gts) {
    Box3D b = g;
    b.center.x() += n(gen);
    b.center.y() += n(gen);
    b.confidence = conf(gen);
    out.push_back(b);
  }
  return out;
}

TEST(Match, AgreesWithOracle)
{
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 300; ++trial) {
    const auto gts = random_boxes(gen, 6, 8);
    auto preds = jitter(gen, gts);
    const auto extra = random_boxes(gen, 3, 8);
    preds.insert(preds.end(), extra.begin(), extra.end());
    const auto m = match(preds, gts);
    const auto o = testing::oracle_match(preds, gts);
    ASSERT_EQ(m.pairs.size(), o.size());
    for (std::size_t i = 0; i < o.size(); ++i) {
      EXPECT_EQ(m.pairs[i].prediction, o[i].prediction);
      EXPECT_EQ(m.pairs[i].gt, o[i].gt);
    }
    EXPECT_EQ(m.unmatched_gt.size() + m.pairs.size(), gts.size());
    EXPECT_EQ(m.unmatched_predictions.size() + m.pairs.size(), preds.size());
  }
}

TEST(Ap, OneTruePositiveOneFalsePositiveOfTwoGt)
{
  const std::vector<Box3D> gts = {make_box(0, 0), make_box(20, 0)};
  const std::vector<Box3D> preds = {make_box(0, 0, 0, 4, 2, 1.5, 0.9), make_box(-20, 0, 0, 4, 2, 1.5, 0.5)};
  EXPECT_EQ(average_precision(preds, gts), 6.0 / 11.0);
  EXPECT_EQ(testing::oracle_ap(preds, gts), 6.0 / 11.0);
}

TEST(Ap, PerfectAndEmpty)
{
  const std::vector<Box3D> gts = {make_box(0, 0), make_box(20, 0), make_box(0, 20)};
  EXPECT_EQ(average_precision(gts, gts), 1.0);
  EXPECT_EQ(average_precision({}, gts), 0.0);
  EXPECT_EQ(average_precision({}, {}), 1.0);
  EXPECT_EQ(average_precision(gts, {}), 0.0);
}

TEST(Ap, FalsePositiveRankedFirst)
{
  // FP at the top, then the TP: precision 0.5 at recall 1.
  const std::vector<Box3D> gts = {make_box(0, 0)};
  const std::vector<Box3D> preds = {make_box(30, 0, 0, 4, 2, 1.5, 0.9), make_box(0, 0, 0, 4, 2, 1.5, 0.3)};
  EXPECT_EQ(average_precision(preds, gts), 0.5);
}

TEST(Ap, AgreesWithOracleOnRandomSets)
{
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 300; ++trial) {
    const auto gts = random_boxes(gen, 1 + trial % 9, 15);
    auto preds = jitter(gen, gts);
    const auto extra = random_boxes(gen, trial % 4, 15);
    preds.insert(preds.end(), extra.begin(), extra.end());
    const double ap = average_precision(preds, gts);
    EXPECT_NEAR(ap, testing::oracle_ap(preds, gts), 1e-12);
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0);
  }
}

TEST(Ap, FromFlagsSortsByConfidence)
{
  std::vector<ScoredFlag> flags = {{0.2, false}, {0.9, true}};
  EXPECT_EQ(ap_from_flags(flags, 2), 6.0 / 11.0);
}

TEST(Range, ConstantsAndBucketOf)
{
  EXPECT_EQ(bounds(RangeBucket::kShort).lower, 0.0);
  EXPECT_EQ(bounds(RangeBucket::kShort).upper, 30.0);
  EXPECT_EQ(bounds(RangeBucket::kMiddle).lower, 30.0);
  EXPECT_EQ(bounds(RangeBucket::kMiddle).upper, 50.0);
  EXPECT_EQ(bounds(RangeBucket::kLong).lower, 50.0);
  EXPECT_EQ(bounds(RangeBucket::kLong).upper, 100.0);
  EXPECT_EQ(bucket_of(0.0), RangeBucket::kShort);
  EXPECT_EQ(bucket_of(29.999), RangeBucket::kShort);
  EXPECT_EQ(bucket_of(30.0), RangeBucket::kMiddle);
  EXPECT_EQ(bucket_of(50.0), RangeBucket::kLong);
  EXPECT_FALSE(bucket_of(100.0).has_value());
  EXPECT_EQ(bucket_name(RangeBucket::kOverall), "overall");
}

// Independent per-bucket computation: GT at 100 m or beyond never exists for
// matching; within the rest, a prediction counts in the bucket of its matched
// GT, or of its own center when unmatched.
double oracle_bucket_ap(const std::vector<Box3D> & preds, const std::vector<Box3D> & gts, double lo, double hi)
{
  const auto dist = [](const Box3D & b) { return b.center.head<2>().norm(); };
  std::vector<Box3D> usable;
  for (const auto & g : gts) {
    if (dist(g) < 100.0) {
      usable.push_back(g);
    }
  }
  const auto in = [&](const Box3D & b) { return dist(b) >= lo && dist(b) < hi; };
  std::vector<int> matched_to(preds.size(), -1);
  for (const auto & p : testing::oracle_match(preds, usable)) {
    matched_to[p.prediction] = static_cast<int>(p.gt);
  }
  std::size_t num_gt = 0;
  for (const auto & g : usable) {
    num_gt += in(g) ? 1 : 0;
  }
  std::vector<int> ranked;
  for (std::size_t i : testing::oracle_confidence_order(preds)) {
    if (matched_to[i] >= 0) {
      if (in(usable[static_cast<std::size_t>(matched_to[i])])) {
        ranked.push_back(1);
      }
    } else if (in(preds[i])) {
      ranked.push_back(0);
    }
  }
  return testing::oracle_ap_ranked(ranked, num_gt);
}

TEST(Range, PerBucketApMatchesIndependentFiltering)
{
  std::mt19937_64 gen(3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    synth::SynthConfig cfg;
    cfg.master_seed = seed;
    cfg.area = 80.0;
    cfg.n_vehicles = 30;
    const Scene s = synth::generate_scene(cfg);
    perception::ReferenceDetector det({});
    const auto preds = perception::get_pred(det, s).cooperative.boxes;
    const auto r = ap_by_range(preds, s.ground_truth);
    for (auto b : kAllBuckets) {
      EXPECT_EQ(r[b].ap, oracle_bucket_ap(preds, s.ground_truth, bounds(b).lower, bounds(b).upper))
        << bucket_name(b) << " seed " << seed;
    }
  }
}

TEST(Mce, CountZero)
{
  const std::vector<Box3D> gts = {make_box(0, 0), make_box(15, 0)};
  EXPECT_EQ(count_mce(gts, gts, gts).count, 0u);
  EXPECT_EQ(count_mce({}, {}, gts).count, 0u);
  EXPECT_EQ(count_mce({}, gts, gts).count, 0u);
}

TEST(Mce, CountOne)
{
  const std::vector<Box3D> gts = {make_box(0, 0), make_box(15, 0)};
  const std::vector<Box3D> ego = {make_box(0.1, 0.0)};
  const std::vector<Box3D> cp = {make_box(15, 0), make_box(3.0, 0.0)};
  const auto r = count_mce(ego, cp, gts);
  EXPECT_EQ(r.count, 1u);
  ASSERT_EQ(r.gt_indices.size(), 1u);
  EXPECT_EQ(r.gt_indices[0], 0u);
}

TEST(Mce, MixedSetMatchesDefinition)
{
  // GT 0 both, 1 ego only, 2 cooperative only, 3 neither, 4 ego only via a
  // low-confidence box that the floor removes.
  const std::vector<Box3D> gts = {make_box(0, 0), make_box(15, 0), make_box(30, 0), make_box(45, 0), make_box(0, 15)};
  const std::vector<Box3D> ego = {make_box(0, 0), make_box(15.2, 0), make_box(0, 15, 0, 4, 2, 1.5, 0.1)};
  const std::vector<Box3D> cp = {make_box(0, 0.1), make_box(30, 0), make_box(17.5, 0)};
  const auto oracle = testing::oracle_mce(ego, cp, gts);
  const auto r = count_mce(ego, cp, gts);
  EXPECT_EQ(r.count, oracle.size());
  EXPECT_EQ(r.gt_indices, oracle);
  EXPECT_EQ(r.count, 2u);
  EXPECT_EQ(count_mce(ego, cp, gts, kMatchIou, 0.2).count, 1u);
}

TEST(Mce, AgreesWithOracleOnRandomTriples)
{
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto gts = random_boxes(gen, 8, 20);
    const auto ego = jitter(gen, gts);
    const auto cp = jitter(gen, gts);
    const auto r = count_mce(ego, cp, gts);
    EXPECT_EQ(r.gt_indices, testing::oracle_mce(ego, cp, gts));
  }
}

Scene cav_dependent_scene()
{
  synth::SceneLayout layout;
  layout.agents.push_back({"ego", Role::kEgo, {0.0, 0.0}, 0.0, {0.0, 0.0}});
  layout.agents.push_back({"cav1", Role::kCav, {18.0, 14.0}, -M_PI / 2, {0.0, 0.0}});
  synth::VehicleLayout blocker;
  blocker.box = make_box(10.0, 0.0, M_PI / 2, 4.5, 1.9, 1.8, 1.0, 0.9);
  synth::VehicleLayout hidden;
  hidden.box = make_box(18.0, 0.0, 0.0, 4.0, 1.8, 1.5, 1.0, 0.75);
  layout.vehicles = {blocker, hidden};
  synth::SynthConfig cfg;
  cfg.scene_id = "cavdep";
  return synth::build_scene(layout, cfg);
}

TEST(Mr, ReflexiveSceneIsNotViolated)
{
  perception::ReferenceDetector det({});
  const Scene s = cav_dependent_scene();
  const auto v = check_mr(det, s, s, 0.1);
  EXPECT_FALSE(v.violated);
  EXPECT_EQ(v.ap_original, v.ap_transformed);
  EXPECT_EQ(v.epsilon, 0.1);
}

TEST(Mr, FullGlobalLossOnCavDependentSceneViolates)
{
  perception::ReferenceDetector det({});
  const Scene s = cav_dependent_scene();
  const Scene t = operators::apply({OperatorKind::kGL, {{"p_g", 1.0}}, 1}, s);
  const auto v = check_mr(det, s, t, 0.1);
  EXPECT_TRUE(v.violated);
  EXPECT_GT(v.ap_original - v.ap_transformed, 0.1);
}

TEST(Mr, GroundTruthMismatchIsAnOracleError)
{
  perception::ReferenceDetector det({});
  const Scene s = cav_dependent_scene();
  Scene t = s;
  t.ground_truth.pop_back();
  EXPECT_THROW(check_mr(det, s, t, 0.1), OracleMismatch);
}

TEST(Mr, VerdictFromPredictions)
{
  const std::vector<Box3D> gts = {make_box(0, 0), make_box(15, 0)};
  perception::Predictions p;
  p.ego.boxes = {make_box(0, 0)};
  p.cooperative.boxes = {};
  const auto v = mr_verdict(gts, p, gts, 0.1);
  EXPECT_EQ(v.ap_original, 1.0);
  EXPECT_EQ(v.ap_transformed, 0.0);
  EXPECT_TRUE(v.violated);
  EXPECT_EQ(v.mce_count, 1u);
  const auto tolerant = mr_verdict(gts, p, gts, 1.0);
  EXPECT_FALSE(tolerant.violated);
}

}  // namespace
}  // namespace cootest
