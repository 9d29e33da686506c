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

#include "cootest/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "cootest/error.hpp"
#include "cootest/parallel.hpp"

namespace cootest::report
{
namespace
{

using metrics::RangeBucket;
using nlohmann::json;

std::size_t idx(RangeBucket b) { return static_cast<std::size_t>(b); }

json opt(const std::optional<double> & v) { return v ? json(*v) : json(nullptr); }

std::string fixed(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fixed(const std::optional<double> & v) { return v ? fixed(*v) : "-"; }

std::string range_label(RangeBucket b)
{
  const auto & r = metrics::bounds(b);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%g-%g m", r.lower, r.upper);
  return buf;
}

std::vector<Box3D> cooperative_boxes(perception::Detector & detector, const Scene & scene)
{
  return perception::get_pred(detector, scene).cooperative.boxes;
}

void add(Aggregate & a, double ap, const std::optional<double> & before, std::size_t mce, bool violated)
{
  ++a.scenes;
  a.mean_ap += ap;
  if (before) {
    a.mean_ap_before = a.mean_ap_before.value_or(0.0) + *before;
  }
  a.total_mce += mce;
  a.violations += violated ? 1 : 0;
}

// Turns the sums accumulated by add() into means.
void finish(Aggregate & a, std::size_t with_before)
{
  if (a.scenes > 0) {
    a.mean_ap /= static_cast<double>(a.scenes);
  }
  if (a.mean_ap_before && with_before > 0) {
    *a.mean_ap_before /= static_cast<double>(with_before);
  }
}

json aggregate_json(const Aggregate & a)
{
  return json{
    {"scenes", a.scenes}, {"mean_ap", a.mean_ap}, {"mean_ap_before", opt(a.mean_ap_before)},
    {"total_mce", a.total_mce}, {"violations", a.violations}};
}

}  // namespace

std::string kind_key(const SceneRecord & r)
{
  return r.spec ? std::string(to_string(r.spec->kind)) : "none";
}

std::vector<std::pair<std::string, Aggregate>> aggregate_by_kind(const SuiteReport & report)
{
  std::map<std::string, Aggregate> acc;
  std::map<std::string, std::size_t> with_before;
  for (const auto & r : report.per_scene) {
    const auto key = kind_key(r);
    const auto & overall = r.ap_by_range[idx(RangeBucket::kOverall)];
    add(acc[key], r.ap_overall, overall.ap_before, r.mce_count, r.mr_violated.value_or(false));
    with_before[key] += overall.ap_before ? 1 : 0;
  }
  std::vector<std::pair<std::string, Aggregate>> out;
  for (auto & [key, a] : acc) {
    finish(a, with_before[key]);
    out.emplace_back(key, a);
  }
  return out;
}

std::array<Aggregate, 4> aggregate_by_bucket(const SuiteReport & report)
{
  std::array<Aggregate, 4> acc{};
  std::array<std::size_t, 4> with_before{};
  for (const auto & r : report.per_scene) {
    for (auto b : metrics::kAllBuckets) {
      const auto & rec = r.ap_by_range[idx(b)];
      add(acc[idx(b)], rec.ap, rec.ap_before, rec.mce, r.mr_violated.value_or(false));
      with_before[idx(b)] += rec.ap_before ? 1 : 0;
    }
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    finish(acc[i], with_before[i]);
  }
  return acc;
}

SceneRecord evaluate_scene(
  perception::Detector & detector, const Scene & scene, const Scene * seed, double epsilon,
  std::optional<double> gui_pri)
{
  const auto & gts = scene.ground_truth;
  const auto preds = perception::get_pred(detector, scene);
  const auto range = metrics::ap_by_range(preds.cooperative.boxes, gts);
  const auto mce = metrics::count_mce(
    preds.ego.boxes, preds.cooperative.boxes, gts, metrics::kMatchIou, detector.score_floor());

  SceneRecord rec;
  rec.scene_id = scene.scene_id;
  if (!scene.provenance.empty()) {
    rec.spec = scene.provenance.back();
  }
  rec.gui_pri = gui_pri;
  rec.ap_overall = range[RangeBucket::kOverall].ap;
  rec.mce_count = mce.count;
  for (auto b : metrics::kAllBuckets) {
    auto & out = rec.ap_by_range[idx(b)];
    out.ap = range[b].ap;
    out.num_gt = range[b].num_gt;
    out.num_predictions = range[b].num_predictions;
  }
  for (auto g : mce.gt_indices) {
    const auto bucket = metrics::bucket_of(gts[g].center.head<2>().norm());
    if (bucket) {
      ++rec.ap_by_range[idx(*bucket)].mce;
      ++rec.ap_by_range[idx(RangeBucket::kOverall)].mce;
    }
  }

  if (seed != nullptr) {
    if (seed->ground_truth != gts) {
      throw metrics::OracleMismatch(
        scene.scene_id + ": ground truth differs from seed " + seed->scene_id);
    }
    rec.seed_id = seed->scene_id;
    const auto seed_boxes = cooperative_boxes(detector, *seed);
    const auto before = metrics::ap_by_range(seed_boxes, gts);
    for (auto b : metrics::kAllBuckets) {
      rec.ap_by_range[idx(b)].ap_before = before[b].ap;
    }
    const auto verdict = metrics::mr_verdict(seed_boxes, preds, gts, epsilon, detector.score_floor());
    rec.mr_violated = verdict.violated;
  }
  return rec;
}

SuiteReport run_suite(
  perception::Detector & detector, const std::vector<Scene> & scenes, const SeedLookup & seeds,
  double epsilon, std::size_t jobs, const std::function<std::optional<double>(const Scene &)> & gui_pri)
{
  if (scenes.empty()) {
    throw InvalidArgument("suite is empty");
  }
  SuiteReport report;
  report.per_scene.resize(scenes.size());
  parallel_for(scenes.size(), detector.parallel_safe() ? jobs : 1, [&](std::size_t i) {
    const Scene * seed = seeds ? seeds(scenes[i]) : nullptr;
    report.per_scene[i] = evaluate_scene(
      detector, scenes[i], seed, epsilon, gui_pri ? gui_pri(scenes[i]) : std::nullopt);
  });
  std::sort(report.per_scene.begin(), report.per_scene.end(), [](const auto & a, const auto & b) {
    return a.scene_id < b.scene_id;
  });
  return report;
}

nlohmann::json to_json(const SuiteReport & report)
{
  json buckets = json::array();
  for (auto b : metrics::kAllBuckets) {
    buckets.push_back(
      {{"name", metrics::bucket_name(b)},
       {"lower_m", metrics::bounds(b).lower},
       {"upper_m", metrics::bounds(b).upper}});
  }

  json scenes = json::array();
  for (const auto & r : report.per_scene) {
    json range = json::object();
    for (auto b : metrics::kAllBuckets) {
      const auto & rec = r.ap_by_range[idx(b)];
      range[std::string(metrics::bucket_name(b))] = {
        {"ap", rec.ap},
        {"num_gt", rec.num_gt},
        {"num_predictions", rec.num_predictions},
        {"mce", rec.mce},
        {"ap_before", opt(rec.ap_before)}};
    }
    scenes.push_back(
      {{"scene_id", r.scene_id},
       {"seed_id", r.seed_id ? json(*r.seed_id) : json(nullptr)},
       {"spec", r.spec ? spec_to_json(*r.spec) : json(nullptr)},
       {"ap_overall", r.ap_overall},
       {"ap_by_range", range},
       {"mce_count", r.mce_count},
       {"mr_violated", r.mr_violated ? json(*r.mr_violated) : json(nullptr)},
       {"gui_pri", opt(r.gui_pri)}});
  }

  json by_kind = json::object();
  for (const auto & [key, a] : aggregate_by_kind(report)) {
    by_kind[key] = aggregate_json(a);
  }
  json by_bucket = json::object();
  const auto bucket_aggs = aggregate_by_bucket(report);
  for (auto b : metrics::kAllBuckets) {
    by_bucket[std::string(metrics::bucket_name(b))] = aggregate_json(bucket_aggs[idx(b)]);
  }

  return json{
    {"range_buckets", buckets},
    {"config", report.config},
    {"per_scene", scenes},
    {"aggregates", {{"by_kind", by_kind}, {"by_bucket", by_bucket}}}};
}

SuiteReport from_json(const nlohmann::json & j)
{
  try {
    SuiteReport report;
    report.config = j.at("config");
    const auto opt_double = [](const json & v) -> std::optional<double> {
      return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
    };
    for (const auto & s : j.at("per_scene")) {
      SceneRecord r;
      r.scene_id = s.at("scene_id").get<std::string>();
      if (!s.at("seed_id").is_null()) {
        r.seed_id = s.at("seed_id").get<std::string>();
      }
      if (!s.at("spec").is_null()) {
        r.spec = spec_from_json(s.at("spec"));
      }
      r.ap_overall = s.at("ap_overall").get<double>();
      for (auto b : metrics::kAllBuckets) {
        const auto & v = s.at("ap_by_range").at(std::string(metrics::bucket_name(b)));
        auto & rec = r.ap_by_range[idx(b)];
        rec.ap = v.at("ap").get<double>();
        rec.num_gt = v.at("num_gt").get<std::size_t>();
        rec.num_predictions = v.at("num_predictions").get<std::size_t>();
        rec.mce = v.at("mce").get<std::size_t>();
        rec.ap_before = opt_double(v.at("ap_before"));
      }
      r.mce_count = s.at("mce_count").get<std::size_t>();
      if (!s.at("mr_violated").is_null()) {
        r.mr_violated = s.at("mr_violated").get<bool>();
      }
      r.gui_pri = opt_double(s.at("gui_pri"));
      report.per_scene.push_back(std::move(r));
    }
    return report;
  } catch (const nlohmann::json::exception & e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

std::string render_json(const SuiteReport & report) { return to_json(report).dump(2) + "\n"; }

std::string render_csv(const SuiteReport & report)
{
  const auto num = [](double v) { return json(v).dump(); };
  std::ostringstream out;
  out << "scene_id,seed_id,kind,ap_overall,ap_0_30,ap_30_50,ap_50_100,ap_before_overall,mce_count,"
         "mr_violated,gui_pri\n";
  for (const auto & r : report.per_scene) {
    const auto & before = r.ap_by_range[idx(RangeBucket::kOverall)].ap_before;
    out << r.scene_id << ',' << r.seed_id.value_or("") << ',' << kind_key(r) << ','
        << num(r.ap_overall) << ',' << num(r.ap_by_range[idx(RangeBucket::kShort)].ap) << ','
        << num(r.ap_by_range[idx(RangeBucket::kMiddle)].ap) << ','
        << num(r.ap_by_range[idx(RangeBucket::kLong)].ap) << ','
        << (before ? num(*before) : "") << ',' << r.mce_count << ','
        << (r.mr_violated ? (*r.mr_violated ? "true" : "false") : "") << ','
        << (r.gui_pri ? num(*r.gui_pri) : "") << '\n';
  }
  return out.str();
}

std::string render_md(const SuiteReport & report)
{
  std::ostringstream out;
  out << "# cootest report\n\n";
  for (const auto & [key, value] : report.config.items()) {
    out << "- " << key << ": `" << value.dump() << "`\n";
  }
  out << "- scenes: " << report.per_scene.size() << "\n\n";

  out << "## AP by range\n\n";
  out << "| Range | Before AP | After AP | Drop | MCE |\n";
  out << "|---|---:|---:|---:|---:|\n";
  const auto buckets = aggregate_by_bucket(report);
  for (auto b : metrics::kAllBuckets) {
    const auto & a = buckets[idx(b)];
    const std::string label = b == RangeBucket::kOverall ? "Overall (" + range_label(b) + ")" : range_label(b);
    const std::optional<double> drop =
      a.mean_ap_before ? std::optional<double>(*a.mean_ap_before - a.mean_ap) : std::nullopt;
    out << "| " << label << " | " << fixed(a.mean_ap_before) << " | " << fixed(a.mean_ap) << " | "
        << fixed(drop) << " | " << a.total_mce << " |\n";
  }

  out << "\n## By operator\n\n";
  out << "| Operator | Scenes | Before AP | After AP | MCE | MR violations |\n";
  out << "|---|---:|---:|---:|---:|---:|\n";
  for (const auto & [key, a] : aggregate_by_kind(report)) {
    out << "| " << key << " | " << a.scenes << " | " << fixed(a.mean_ap_before) << " | "
        << fixed(a.mean_ap) << " | " << a.total_mce << " | " << a.violations << " |\n";
  }

  out << "\n## Scenes\n\n";
  out << "| Scene | Operator | Before AP | After AP | MCE | Violated |\n";
  out << "|---|---|---:|---:|---:|---|\n";
  for (const auto & r : report.per_scene) {
    const auto & before = r.ap_by_range[idx(RangeBucket::kOverall)].ap_before;
    out << "| " << r.scene_id << " | " << kind_key(r) << " | " << fixed(before) << " | "
        << fixed(r.ap_overall) << " | " << r.mce_count << " | "
        << (r.mr_violated ? (*r.mr_violated ? "yes" : "no") : "-") << " |\n";
  }
  return out.str();
}

}  // namespace cootest::report
