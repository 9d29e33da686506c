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

#include <sstream>

#include "cootest/error.hpp"
#include "cootest/operators.hpp"
#include "cootest/report.hpp"
#include "cootest/synth.hpp"

namespace cootest
{
namespace
{

using namespace report;
using metrics::RangeBucket;

std::vector<Scene> seeds(std::size_t n)
{
  std::vector<Scene> out;
  for (std::size_t i = 0; i < n; ++i) {
    synth::SynthConfig cfg;
    cfg.scene_id = "s" + std::to_string(i);
    cfg.master_seed = 30 + i;
    cfg.frames = 4;
    out.push_back(synth::generate_sequence(cfg));
  }
  return out;
}

SuiteReport sample_report()
{
  const auto base = seeds(3);
  std::vector<Scene> suite;
  for (const auto & s : base) {
    for (auto k : {OperatorKind::kFG, OperatorKind::kSM, OperatorKind::kGL}) {
      Scene t = operators::apply(operators::sample_params(k, 1), s);
      t.scene_id = s.scene_id + "__" + std::string(to_string(k));
      suite.push_back(t);
    }
    suite.push_back(s);
  }
  perception::ReferenceDetector det({});
  const auto lookup = [&](const Scene & sc) -> const Scene * {
    if (sc.provenance.empty()) {
      return nullptr;
    }
    for (const auto & b : base) {
      if (sc.scene_id.rfind(b.scene_id + "__", 0) == 0) {
        return &b;
      }
    }
    return nullptr;
  };
  auto rep = run_suite(det, suite, lookup, 0.1, 2, [](const Scene & sc) {
    return sc.provenance.empty() ? std::nullopt : std::optional<double>(0.5);
  });
  rep.config = {{"detector", det.id()}, {"epsilon", 0.1}};
  return rep;
}

TEST(Report, OneRecordPerSceneSortedById)
{
  const auto rep = sample_report();
  ASSERT_EQ(rep.per_scene.size(), 12u);
  for (std::size_t i = 1; i < rep.per_scene.size(); ++i) {
    EXPECT_LT(rep.per_scene[i - 1].scene_id, rep.per_scene[i].scene_id);
  }
  for (const auto & r : rep.per_scene) {
    EXPECT_EQ(r.spec.has_value(), r.mr_violated.has_value());
    EXPECT_EQ(r.ap_overall, r.ap_by_range[3].ap);
    EXPECT_EQ(r.seed_id.has_value(), r.spec.has_value());
  }
}

TEST(Report, JsonRoundTripIsByteIdentical)
{
  const auto rep = sample_report();
  const std::string text = render_json(rep);
  const auto back = from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back, rep);
  EXPECT_EQ(render_json(back), text);
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(text.find('\r'), std::string::npos);
}

TEST(Report, AggregatesAreMeansOfRecords)
{
  const auto rep = sample_report();
  for (const auto & [kind, agg] : aggregate_by_kind(rep)) {
    double sum = 0.0;
    double before = 0.0;
    std::size_t n = 0;
    std::size_t mce = 0;
    for (const auto & r : rep.per_scene) {
      if (kind_key(r) == kind) {
        sum += r.ap_overall;
        before += r.ap_by_range[3].ap_before.value_or(0.0);
        mce += r.mce_count;
        ++n;
      }
    }
    EXPECT_EQ(agg.scenes, n);
    EXPECT_NEAR(agg.mean_ap, sum / static_cast<double>(n), 1e-9) << kind;
    EXPECT_EQ(agg.total_mce, mce);
    if (kind != "none") {
      EXPECT_NEAR(*agg.mean_ap_before, before / static_cast<double>(n), 1e-9);
    } else {
      EXPECT_FALSE(agg.mean_ap_before.has_value());
    }
  }
  const auto buckets = aggregate_by_bucket(rep);
  for (std::size_t b = 0; b < 4; ++b) {
    double sum = 0.0;
    std::size_t mce = 0;
    for (const auto & r : rep.per_scene) {
      sum += r.ap_by_range[b].ap;
      mce += r.ap_by_range[b].mce;
    }
    EXPECT_NEAR(buckets[b].mean_ap, sum / static_cast<double>(rep.per_scene.size()), 1e-9);
    EXPECT_EQ(buckets[b].total_mce, mce);
  }
  // Aggregates in the JSON document match the recomputation.
  const auto j = to_json(rep);
  EXPECT_EQ(j.at("aggregates").at("by_bucket").at("overall").at("mean_ap").get<double>(), buckets[3].mean_ap);
}

TEST(Report, CsvHasOneRowPerScene)
{
  auto rep = sample_report();
  rep.per_scene.resize(1);
  const auto csv = render_csv(rep);
  std::istringstream in(csv);
  std::string line;
  std::size_t rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("scene_id,", 0), 0u);
  while (std::getline(in, line)) {
    ++rows;
  }
  EXPECT_EQ(rows, 1u);
}

TEST(Report, RangeBucketsAppearInEveryFormat)
{
  const auto rep = sample_report();
  const auto j = to_json(rep);
  const auto & rb = j.at("range_buckets");
  ASSERT_EQ(rb.size(), 4u);
  EXPECT_EQ(rb[0].at("lower_m"), 0.0);
  EXPECT_EQ(rb[0].at("upper_m"), 30.0);
  EXPECT_EQ(rb[1].at("lower_m"), 30.0);
  EXPECT_EQ(rb[1].at("upper_m"), 50.0);
  EXPECT_EQ(rb[2].at("lower_m"), 50.0);
  EXPECT_EQ(rb[2].at("upper_m"), 100.0);
  const auto md = render_md(rep);
  for (const char * label : {"0-30 m", "30-50 m", "50-100 m", "Before AP", "After AP", "MCE"}) {
    EXPECT_NE(md.find(label), std::string::npos) << label;
  }
  EXPECT_NE(render_csv(rep).find("ap_0_30,ap_30_50,ap_50_100"), std::string::npos);
}

TEST(Report, EmptySuiteRejected)
{
  perception::ReferenceDetector det({});
  EXPECT_THROW(run_suite(det, {}, {}, 0.1, 1), InvalidArgument);
}

TEST(Report, SeedWithDifferentGroundTruthIsAnOracleError)
{
  const auto base = seeds(2);
  Scene t = operators::apply(operators::sample_params(OperatorKind::kSM, 1), base[0]);
  perception::ReferenceDetector det({});
  EXPECT_THROW(evaluate_scene(det, t, &base[1], 0.1), metrics::OracleMismatch);
}

TEST(Report, MalformedJsonIsAFormatError)
{
  EXPECT_THROW(from_json(nlohmann::json::parse(R"({"per_scene":[]})")), FormatError);
}

}  // namespace
}  // namespace cootest
