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

#include <algorithm>
#include <map>
#include <tuple>

#include "cootest/error.hpp"
#include "cootest/guidance.hpp"
#include "cootest/operators.hpp"
#include "cootest/synth.hpp"
#include "support/oracles.hpp"

namespace cootest
{
namespace
{

using namespace guidance;
using testing::make_box;

std::vector<Scene> seed_suite(std::size_t n, std::uint64_t base = 0)
{
  std::vector<Scene> seeds;
  for (std::size_t i = 0; i < n; ++i) {
    synth::SynthConfig cfg;
    cfg.scene_id = "seed" + std::to_string(100 + i);
    cfg.master_seed = base + i;
    cfg.frames = 4;
    cfg.n_vehicles = 12;
    seeds.push_back(synth::generate_sequence(cfg));
  }
  return seeds;
}

struct Scored
{
  std::string id;
  TransformSpec spec;
  double raw;
};

// Scores every (seed, operator) pair directly and sorts globally.
std::vector<Scored> brute_force(
  perception::Detector & det, const std::vector<OperatorKind> & ops, const std::vector<Scene> & seeds,
  std::uint64_t master)
{
  std::vector<Scored> all;
  for (const auto & s : seeds) {
    for (auto k : ops) {
      const auto spec = operators::sample_params(k, candidate_seed(master, s.scene_id, k));
      Scene t;
      try {
        t = operators::apply(spec, s);
      } catch (const PreconditionError &) {
        continue;
      }
      t.scene_id = candidate_id(s.scene_id, k);
      const auto p = perception::get_pred(det, t);
      all.push_back({t.scene_id, spec, gui_raw(p.ego.boxes, p.cooperative.boxes)});
    }
  }
  std::sort(all.begin(), all.end(), [](const Scored & a, const Scored & b) {
    return std::make_tuple(-a.raw, a.id, spec_hash(a.spec)) < std::make_tuple(-b.raw, b.id, spec_hash(b.spec));
  });
  return all;
}

TEST(GuiRaw, Fixtures)
{
  const Box3D cube = make_box(0, 0, 0, 2, 2, 2);
  EXPECT_EQ(gui_raw({cube}, {cube}), -1.0);
  EXPECT_EQ(gui_raw({cube}, {make_box(10, 0, 0, 2, 2, 2)}), 0.0);
  EXPECT_EQ(gui_raw({cube}, {make_box(1, 0, 0, 2, 2, 2), make_box(10, 0, 0, 2, 2, 2)}), -0.25);
  EXPECT_EQ(gui_raw({cube}, {}), 0.0);
  EXPECT_TRUE(is_sentinel(gui_raw({}, {cube})));
  EXPECT_TRUE(is_sentinel(gui_raw({}, {})));
}

TEST(GuiRaw, WeightsByConfidence)
{
  const Box3D a = make_box(0, 0, 0, 2, 2, 2, 0.5);
  EXPECT_EQ(gui_raw({a}, {make_box(0, 0, 0, 2, 2, 2)}), -0.5);
}

TEST(GuiRaw, SumAndUnionDifferOnlyForOverlappingCooperativeBoxes)
{
  const Box3D ego = make_box(0, 0, 0, 2, 2, 2);
  const std::vector<Box3D> disjoint = {make_box(1, 0, 0, 2, 2, 2), make_box(-1.5, 0, 0, 1, 2, 2)};
  EXPECT_EQ(gui_raw({ego}, disjoint, OverlapMode::kSum), gui_raw({ego}, disjoint, OverlapMode::kUnion));
  // Two identical cooperative boxes covering half the ego box: the sum counts
  // the half twice, the union once.
  const std::vector<Box3D> doubled = {make_box(1, 0, 0, 2, 2, 2), make_box(1, 0, 0, 2, 2, 2)};
  EXPECT_DOUBLE_EQ(gui_raw({ego}, doubled, OverlapMode::kSum), -0.5);
  EXPECT_DOUBLE_EQ(gui_raw({ego}, doubled, OverlapMode::kUnion), -0.25);
  // Three mutually overlapping boxes covering the whole cube.
  const std::vector<Box3D> cover = {
    make_box(-0.5, 0, 0, 1.5, 2, 2), make_box(0.5, 0, 0, 1.5, 2, 2), make_box(0, 0, 0, 0.5, 2, 2)};
  EXPECT_NEAR(gui_raw({ego}, cover, OverlapMode::kUnion), -1.0 / 3.0, 1e-12);
}

TEST(Normalize, MinMaxWithSentinelsAndConstants)
{
  EXPECT_EQ(normalize_batch({-1.0, 0.0, -0.25}), (std::vector<double>{0.0, 1.0, 0.75}));
  EXPECT_EQ(normalize_batch({kSentinel, -0.5, -0.5}), (std::vector<double>{0.0, 0.5, 0.5}));
  EXPECT_EQ(normalize_batch({kSentinel}), (std::vector<double>{0.0}));
  EXPECT_TRUE(normalize_batch({}).empty());
}

TEST(RanksBefore, HigherRawThenIdThenSpecHash)
{
  Candidate a;
  a.transformed_scene.scene_id = "a";
  a.gui_raw = -0.1;
  Candidate b = a;
  b.transformed_scene.scene_id = "b";
  EXPECT_TRUE(ranks_before(a, b));
  b.gui_raw = 0.0;
  EXPECT_TRUE(ranks_before(b, a));
  Candidate c = a;
  c.gui_raw = kSentinel;
  EXPECT_TRUE(ranks_before(a, c));
  EXPECT_FALSE(ranks_before(a, a));
}

TEST(Vgt, EqualsBruteForceTopK)
{
  const auto seeds = seed_suite(12);
  const std::vector<OperatorKind> ops(kAllOperators.begin(), kAllOperators.end());
  perception::ReferenceDetector det({});
  const auto oracle = brute_force(det, ops, seeds, 77);
  for (std::size_t k : {1u, 5u, 20u}) {
    const auto got = vgt_generate(det, ops, seeds, k, 77);
    ASSERT_EQ(got.size(), k);
    for (std::size_t i = 0; i < k; ++i) {
      EXPECT_EQ(got[i].transformed_scene.scene_id, oracle[i].id) << i;
      EXPECT_EQ(got[i].spec, oracle[i].spec);
      EXPECT_EQ(*got[i].gui_raw, oracle[i].raw);
    }
  }
}

TEST(Vgt, LargeNumGenKeepsEverythingSorted)
{
  const auto seeds = seed_suite(4);
  const std::vector<OperatorKind> ops(kAllOperators.begin(), kAllOperators.end());
  perception::ReferenceDetector det({});
  const auto got = vgt_generate(det, ops, seeds, 1000, 3);
  EXPECT_EQ(got.size(), 28u);
  for (std::size_t i = 1; i < got.size(); ++i) {
    EXPECT_FALSE(ranks_before(got[i], got[i - 1]));
  }
  for (const auto & c : got) {
    ASSERT_TRUE(c.gui_pri.has_value());
    EXPECT_GE(*c.gui_pri, 0.0);
    EXPECT_LE(*c.gui_pri, 1.0);
    EXPECT_EQ(c.transformed_scene.scene_id, candidate_id(c.seed_id, c.spec.kind));
    EXPECT_EQ(c.transformed_scene.provenance.back(), c.spec);
  }
}

TEST(Vgt, PriorityNormalizedOverWholeBatch)
{
  const auto seeds = seed_suite(4, 50);
  const std::vector<OperatorKind> ops(kAllOperators.begin(), kAllOperators.end());
  perception::ReferenceDetector det({});
  const auto all = vgt_generate(det, ops, seeds, 1000, 9);
  const auto top = vgt_generate(det, ops, seeds, 3, 9);
  for (std::size_t i = 0; i < top.size(); ++i) {
    EXPECT_EQ(top[i].gui_pri, all[i].gui_pri);
  }
}

TEST(Vgt, DeterministicAndParallelInvariant)
{
  const auto seeds = seed_suite(5, 20);
  const std::vector<OperatorKind> ops(kAllOperators.begin(), kAllOperators.end());
  perception::ReferenceDetector det({});
  GuidanceOptions parallel;
  parallel.jobs = 4;
  const auto a = vgt_generate(det, ops, seeds, 7, 1);
  const auto b = vgt_generate(det, ops, seeds, 7, 1, parallel);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].transformed_scene, b[i].transformed_scene);
    EXPECT_EQ(a[i].gui_raw, b[i].gui_raw);
    EXPECT_EQ(a[i].gui_pri, b[i].gui_pri);
  }
}

TEST(Vgt, Preconditions)
{
  const auto seeds = seed_suite(1);
  perception::ReferenceDetector det({});
  EXPECT_THROW(vgt_generate(det, {}, seeds, 1, 0), InvalidArgument);
  EXPECT_THROW(vgt_generate(det, {OperatorKind::kFG}, {}, 1, 0), InvalidArgument);
  EXPECT_THROW(vgt_generate(det, {OperatorKind::kFG}, seeds, 0, 0), InvalidArgument);
}

TEST(Vgt, SkipsOperatorsWhosePreconditionFails)
{
  synth::SynthConfig cfg;
  cfg.scene_id = "short";
  cfg.frames = 2;
  const std::vector<Scene> seeds = {synth::generate_sequence(cfg)};
  perception::ReferenceDetector det({});
  // With 100 ms of history most sampled delays cannot be served.
  const auto got = vgt_generate(det, {OperatorKind::kCT, OperatorKind::kSM}, seeds, 5, 0);
  for (const auto & c : got) {
    if (c.spec.kind == OperatorKind::kCT) {
      EXPECT_LE(c.spec.param("c_t"), 100.0);
    }
  }
  EXPECT_GE(got.size(), 1u);
}

TEST(Random, ProducesExactlyNumGenUnscored)
{
  const auto seeds = seed_suite(3);
  const std::vector<OperatorKind> ops(kAllOperators.begin(), kAllOperators.end());
  const auto got = random_generate(ops, seeds, 10, 4);
  ASSERT_EQ(got.size(), 10u);
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_FALSE(got[i].gui_raw.has_value());
    EXPECT_FALSE(got[i].gui_pri.has_value());
    EXPECT_EQ(
      got[i].transformed_scene.scene_id,
      candidate_id(got[i].seed_id, got[i].spec.kind) + "__r" + std::to_string(i));
  }
  const auto again = random_generate(ops, seeds, 10, 4);
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].transformed_scene, again[i].transformed_scene);
  }
  EXPECT_THROW(random_generate(ops, seeds, 0, 4), InvalidArgument);
}

TEST(Random, OperatorKindsUniform)
{
  synth::SynthConfig cfg;
  cfg.n_vehicles = 0;
  cfg.frames = 4;
  const std::vector<Scene> seeds = {synth::generate_sequence(cfg)};
  const std::vector<OperatorKind> ops(kAllOperators.begin(), kAllOperators.end());
  const std::size_t n = 3500;
  const auto got = random_generate(ops, seeds, n, 12);
  std::map<OperatorKind, double> counts;
  for (const auto & c : got) {
    counts[c.spec.kind] += 1.0;
  }
  double chi2 = 0.0;
  const double expected = static_cast<double>(n) / 7.0;
  for (auto k : ops) {
    chi2 += (counts[k] - expected) * (counts[k] - expected) / expected;
  }
  EXPECT_LT(chi2, 22.46);  // chi-square 6 dof, p = 0.001
}

}  // namespace
}  // namespace cootest
