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

#include "cootest/cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>

#include "CLI11.hpp"
#include "cootest/error.hpp"
#include "cootest/external_detector.hpp"
#include "cootest/guidance.hpp"
#include "cootest/operators.hpp"
#include "cootest/parallel.hpp"
#include "cootest/perception.hpp"
#include "cootest/report.hpp"
#include "cootest/rng.hpp"

namespace cootest::cli
{
namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

std::string read_file(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot read " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path & path, const std::string & text)
{
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FormatError("cannot write " + path.string());
  }
  out << text;
}

json parse_json_file(const fs::path & path)
{
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error & e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// Last path component, so reports do not depend on where inputs live.
std::string dir_label(const std::string & path)
{
  fs::path p = fs::path(path).lexically_normal();
  if (p.filename().empty()) {
    p = p.parent_path();
  }
  return p.filename().string();
}

std::size_t jobs_from(std::size_t flag)
{
  if (const char * env = std::getenv("COOTEST_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) {
        return static_cast<std::size_t>(v);
      }
    } catch (const std::exception &) {
    }
    throw InvalidArgument(std::string("COOTEST_JOBS must be a positive integer, got '") + env + "'");
  }
  return std::max<std::size_t>(1, flag);
}

struct DetectorFlags
{
  std::string spec{"early"};
  double score_floor{0.2};
  int timeout_ms{30000};
};

void add_detector_flags(CLI::App * cmd, DetectorFlags & flags, bool required)
{
  auto * opt = cmd->add_option("--detector", flags.spec, "early | late | external:<command>");
  if (required) {
    opt->required();
  }
  cmd->add_option("--score-floor", flags.score_floor, "Detector score floor")->capture_default_str();
  cmd->add_option("--timeout-ms", flags.timeout_ms, "External detector timeout")->capture_default_str();
}

perception::DetectorConfig detector_config(const DetectorFlags & flags)
{
  perception::DetectorConfig cfg;
  cfg.score_floor = flags.score_floor;
  cfg.external_timeout_ms = flags.timeout_ms;
  const std::string prefix = "external:";
  if (flags.spec == "early") {
    cfg.fusion = perception::Fusion::kEarly;
  } else if (flags.spec == "late") {
    cfg.fusion = perception::Fusion::kLate;
  } else if (flags.spec.rfind(prefix, 0) == 0 && flags.spec.size() > prefix.size()) {
    cfg.fusion = perception::Fusion::kExternal;
    cfg.external_cmd = flags.spec.substr(prefix.size());
  } else {
    throw InvalidArgument("--detector must be early, late or external:<command>, got '" + flags.spec + "'");
  }
  perception::validate_config(cfg);
  return cfg;
}

json detector_echo(const perception::DetectorConfig & cfg, const std::string & id)
{
  json j{
    {"id", id},
    {"score_floor", cfg.score_floor},
  };
  if (cfg.fusion == perception::Fusion::kExternal) {
    j["command"] = *cfg.external_cmd;
    j["timeout_ms"] = cfg.external_timeout_ms;
  } else {
    j["cluster_radius"] = cfg.cluster_radius;
    j["min_points"] = cfg.min_points;
    j["nms_iou"] = cfg.nms_iou;
    j["ground_z"] = cfg.ground_z;
  }
  return j;
}

std::vector<OperatorKind> parse_ops(const std::string & text)
{
  if (text == "all") {
    return {kAllOperators.begin(), kAllOperators.end()};
  }
  std::vector<OperatorKind> ops;
  std::set<OperatorKind> seen;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto name = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto kind = parse_operator_kind(name);
    if (seen.insert(kind).second) {
      ops.push_back(kind);
    }
    if (comma == std::string::npos) {
      break;
    }
    start = comma + 1;
  }
  return ops;
}

// ---------------------------------------------------------------- gen

int cmd_gen(const std::string & config_path, const std::string & out_dir, std::size_t jobs)
{
  const auto cfg = parse_gen_config(parse_json_file(config_path));
  parallel_for(cfg.scenes, jobs, [&](std::size_t i) {
    const auto sc = scene_config(cfg, i);
    const Scene scene = sc.frames >= 2 ? synth::generate_sequence(sc) : synth::generate_scene(sc);
    save_scene(scene, fs::path(out_dir) / scene.scene_id);
  });
  std::cout << "generated " << cfg.scenes << " scene(s) in " << out_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- transform

int cmd_transform(
  const std::string & in_dir, const std::string & op_text, std::uint64_t seed,
  const std::vector<std::string> & param_overrides, const std::string & out_dir, std::size_t jobs)
{
  const auto ops = parse_ops(op_text);
  std::map<std::string, double> overrides;
  for (const auto & kv : param_overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw InvalidArgument("--param expects name=value, got '" + kv + "'");
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(kv.substr(eq + 1), &used);
      if (used != kv.size() - eq - 1) {
        throw std::invalid_argument(kv);
      }
      overrides[kv.substr(0, eq)] = v;
    } catch (const std::logic_error &) {
      throw InvalidArgument("--param value is not a number: '" + kv + "'");
    }
  }
  if (!overrides.empty() && ops.size() != 1) {
    throw InvalidArgument("--param requires a single --op");
  }

  const auto scenes = load_suite(in_dir);
  if (scenes.empty()) {
    throw FormatError("no scenes found in " + in_dir);
  }
  std::vector<std::size_t> written(scenes.size() * ops.size(), 0);
  parallel_for(written.size(), jobs, [&](std::size_t i) {
    const Scene & scene = scenes[i / ops.size()];
    const OperatorKind kind = ops[i % ops.size()];
    auto spec = operators::sample_params(kind, guidance::candidate_seed(seed, scene.scene_id, kind));
    for (const auto & [name, value] : overrides) {
      spec.params[name] = value;
    }
    validate_spec(spec);
    Scene t;
    try {
      t = operators::apply(spec, scene);
    } catch (const PreconditionError & e) {
      spdlog::warn("skipping {} on {}: {}", to_string(kind), scene.scene_id, e.what());
      return;
    }
    t.scene_id = guidance::candidate_id(scene.scene_id, kind);
    save_scene(t, fs::path(out_dir) / t.scene_id);
    written[i] = 1;
  });
  std::size_t n = 0;
  for (auto w : written) {
    n += w;
  }
  std::cout << "wrote " << n << " transformed scene(s) to " << out_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- run

struct SeedIndex
{
  std::map<std::string, const Scene *> by_id;

  const Scene * operator()(const Scene & scene) const
  {
    if (scene.provenance.empty()) {
      return nullptr;
    }
    const auto it = by_id.find(seed_prefix(scene.scene_id));
    return it == by_id.end() ? nullptr : it->second;
  }
};

std::map<std::string, double> read_manifest_priorities(const fs::path & dir)
{
  std::map<std::string, double> out;
  const auto path = dir / "manifest.json";
  if (!fs::exists(path)) {
    return out;
  }
  const auto j = parse_json_file(path);
  for (const auto & c : j.at("candidates")) {
    if (!c.at("gui_pri").is_null()) {
      out[c.at("scene_id").get<std::string>()] = c.at("gui_pri").get<double>();
    }
  }
  return out;
}

report::SuiteReport evaluate(
  perception::Detector & detector, const std::vector<Scene> & scenes, const std::vector<Scene> & seeds,
  double epsilon, std::size_t jobs, const std::map<std::string, double> & priorities)
{
  SeedIndex index;
  for (const auto & s : seeds) {
    index.by_id[s.scene_id] = &s;
  }
  for (const auto & s : scenes) {
    if (s.provenance.empty()) {
      index.by_id.emplace(s.scene_id, &s);
    }
  }
  return report::run_suite(detector, scenes, index, epsilon, jobs, [&](const Scene & s) {
    const auto it = priorities.find(s.scene_id);
    return it == priorities.end() ? std::nullopt : std::optional<double>(it->second);
  });
}

void write_reports(const report::SuiteReport & rep, const fs::path & out)
{
  write_file(out / "report.json", report::render_json(rep));
  write_file(out / "report.csv", report::render_csv(rep));
  write_file(out / "report.md", report::render_md(rep));
}

std::size_t count_violations(const report::SuiteReport & rep)
{
  std::size_t n = 0;
  for (const auto & r : rep.per_scene) {
    n += r.mr_violated.value_or(false) ? 1 : 0;
  }
  return n;
}

json base_echo(const std::string & command, double epsilon)
{
  json echo{
    {"command", command},
    {"epsilon", epsilon},
    {"harness_version", report::kHarnessVersion},
    {"iou_threshold", metrics::kMatchIou},
  };
  return echo;
}

int cmd_run(
  const std::string & suite_dir, const std::string & seeds_dir, const DetectorFlags & det_flags,
  double epsilon, const std::string & out_dir, bool fail_on_violation, std::size_t jobs)
{
  if (!(epsilon >= 0.0)) {
    throw InvalidArgument("--epsilon must be >= 0");
  }
  const auto scenes = load_suite(suite_dir);
  if (scenes.empty()) {
    throw InvalidArgument("suite is empty: " + suite_dir);
  }
  const auto seeds = seeds_dir.empty() ? std::vector<Scene>{} : load_suite(seeds_dir);
  const auto det_cfg = detector_config(det_flags);
  auto detector = perception::make_detector(det_cfg);

  auto rep = evaluate(*detector, scenes, seeds, epsilon, jobs, read_manifest_priorities(suite_dir));
  rep.config = base_echo("run", epsilon);
  rep.config["detector"] = detector_echo(det_cfg, detector->id());
  rep.config["suite"] = dir_label(suite_dir);
  rep.config["seeds"] = seeds_dir.empty() ? json(nullptr) : json(dir_label(seeds_dir));
  write_reports(rep, out_dir);

  const auto violations = count_violations(rep);
  std::cout << "evaluated " << rep.per_scene.size() << " scene(s), " << violations
            << " MR violation(s); reports in " << out_dir << "\n";
  return (fail_on_violation && violations > 0) ? kExitViolation : kExitOk;
}

// ---------------------------------------------------------------- guide

struct GuideFlags
{
  std::string seeds_dir;
  std::string strategy{"vgt"};
  std::optional<double> keep_fraction;
  std::optional<std::size_t> num_gen;
  std::string ops{"all"};
  std::string overlap{"sum"};
  std::uint64_t seed{0};
  double epsilon{0.1};
  std::string out_dir;
};

int cmd_guide(const GuideFlags & flags, const DetectorFlags & det_flags, std::size_t jobs)
{
  if (flags.strategy != "vgt" && flags.strategy != "random") {
    throw InvalidArgument("--strategy must be vgt or random, got '" + flags.strategy + "'");
  }
  if (flags.overlap != "sum" && flags.overlap != "union") {
    throw InvalidArgument("--overlap must be sum or union, got '" + flags.overlap + "'");
  }
  const auto ops = parse_ops(flags.ops);
  const auto seeds = load_suite(flags.seeds_dir);
  if (seeds.empty()) {
    throw InvalidArgument("no seed scenes in " + flags.seeds_dir);
  }
  std::size_t num_gen = 0;
  if (flags.keep_fraction) {
    if (!(*flags.keep_fraction > 0.0 && *flags.keep_fraction <= 1.0)) {
      throw InvalidArgument("--keep-fraction must be in (0, 1]");
    }
    num_gen = keep_count(*flags.keep_fraction, seeds.size() * ops.size());
  } else if (flags.num_gen) {
    num_gen = *flags.num_gen;
  } else {
    throw InvalidArgument("one of --keep-fraction or --num-gen is required");
  }
  if (num_gen == 0) {
    throw InvalidArgument("selection keeps 0 candidates; raise --keep-fraction or --num-gen");
  }

  const auto det_cfg = detector_config(det_flags);
  auto detector = perception::make_detector(det_cfg);

  std::vector<guidance::Candidate> candidates;
  if (flags.strategy == "vgt") {
    guidance::GuidanceOptions options;
    options.jobs = jobs;
    options.overlap = flags.overlap == "union" ? guidance::OverlapMode::kUnion : guidance::OverlapMode::kSum;
    candidates = guidance::vgt_generate(*detector, ops, seeds, num_gen, flags.seed, options);
  } else {
    candidates = guidance::random_generate(ops, seeds, num_gen, flags.seed);
  }

  const fs::path out(flags.out_dir);
  json manifest_candidates = json::array();
  std::vector<Scene> scenes;
  std::map<std::string, double> priorities;
  for (auto & c : candidates) {
    const auto rel = fs::path("scenes") / c.transformed_scene.scene_id;
    save_scene(c.transformed_scene, out / rel);
    const auto opt = [](const std::optional<double> & v) -> json {
      if (!v || guidance::is_sentinel(*v)) {
        return nullptr;
      }
      return *v;
    };
    manifest_candidates.push_back(
      {{"scene_id", c.transformed_scene.scene_id},
       {"seed_id", c.seed_id},
       {"spec", spec_to_json(c.spec)},
       {"gui_raw", opt(c.gui_raw)},
       {"gui_pri", c.gui_pri ? json(*c.gui_pri) : json(nullptr)},
       {"path", rel.generic_string()}});
    if (c.gui_pri) {
      priorities[c.transformed_scene.scene_id] = *c.gui_pri;
    }
    scenes.push_back(std::move(c.transformed_scene));
  }

  json echo = base_echo("guide", flags.epsilon);
  echo["detector"] = detector_echo(det_cfg, detector->id());
  echo["seeds"] = dir_label(flags.seeds_dir);
  echo["strategy"] = flags.strategy;
  echo["seed"] = flags.seed;
  echo["num_gen"] = num_gen;
  echo["keep_fraction"] = flags.keep_fraction ? json(*flags.keep_fraction) : json(nullptr);
  echo["overlap"] = flags.overlap;
  json op_names = json::array();
  for (auto k : ops) {
    op_names.push_back(to_string(k));
  }
  echo["operators"] = op_names;

  json manifest{{"config", echo}, {"candidates", manifest_candidates}};
  write_file(out / "scenes" / "manifest.json", manifest.dump(2) + "\n");

  auto rep = evaluate(*detector, scenes, seeds, flags.epsilon, jobs, priorities);
  rep.config = echo;
  write_reports(rep, out);
  std::cout << "kept " << candidates.size() << " candidate(s) with strategy " << flags.strategy
            << "; total MCE " << report::aggregate_by_bucket(rep)[3].total_mce << "; output in "
            << flags.out_dir << "\n";
  return kExitOk;
}

std::string one_line(std::string text)
{
  for (auto & ch : text) {
    if (ch == '\n' || ch == '\r') {
      ch = ' ';
    }
  }
  return text;
}

}  // namespace

GenConfig parse_gen_config(const nlohmann::json & j)
{
  if (!j.is_object()) {
    throw InvalidArgument("gen config must be a JSON object");
  }
  static const std::set<std::string> known = {
    "scenes", "scene_prefix", "master_seed", "n_vehicles", "area", "n_cavs", "frames",
    "frame_dt_ms", "points_per_m2", "occlusion", "max_speed"};
  for (const auto & [key, value] : j.items()) {
    if (known.count(key) == 0) {
      throw InvalidArgument("gen config: unknown key '" + key + "'");
    }
  }
  GenConfig cfg;
  try {
    cfg.scenes = j.value("scenes", cfg.scenes);
    cfg.scene_prefix = j.value("scene_prefix", cfg.scene_prefix);
    auto & s = cfg.synth;
    s.master_seed = j.value("master_seed", s.master_seed);
    s.n_vehicles = j.value("n_vehicles", s.n_vehicles);
    s.area = j.value("area", s.area);
    s.n_cavs = j.value("n_cavs", s.n_cavs);
    s.frames = j.value("frames", s.frames);
    s.frame_dt_ms = j.value("frame_dt_ms", s.frame_dt_ms);
    s.points_per_m2 = j.value("points_per_m2", s.points_per_m2);
    s.occlusion = j.value("occlusion", s.occlusion);
    s.max_speed = j.value("max_speed", s.max_speed);
  } catch (const json::exception & e) {
    throw InvalidArgument(std::string("gen config: ") + e.what());
  }
  if (cfg.scene_prefix.empty() || cfg.scene_prefix.find("__") != std::string::npos ||
      cfg.scene_prefix.find('/') != std::string::npos) {
    throw InvalidArgument("gen config: scene_prefix must be non-empty without '/' or '__'");
  }
  synth::validate_config(scene_config(cfg, 0));
  return cfg;
}

synth::SynthConfig scene_config(const GenConfig & cfg, std::size_t index)
{
  synth::SynthConfig s = cfg.synth;
  char suffix[24];
  std::snprintf(suffix, sizeof(suffix), "_%04zu", index);
  s.scene_id = cfg.scene_prefix + suffix;
  s.master_seed = mix_seed(cfg.synth.master_seed, index);
  return s;
}

std::size_t keep_count(double fraction, std::size_t total)
{
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(total) + 1e-9));
}

std::string seed_prefix(const std::string & scene_id)
{
  return scene_id.substr(0, scene_id.find("__"));
}

int run(int argc, const char * const * argv)
{
  spdlog::set_default_logger(std::make_shared<spdlog::logger>(
    "cootest", std::make_shared<spdlog::sinks::stderr_color_sink_st>()));
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Metamorphic testing harness for cooperative perception", "cootest"};
  app.require_subcommand(1);
  std::size_t jobs_flag = 1;
  bool verbose = false;
  app.add_option("--jobs", jobs_flag, "Worker threads (COOTEST_JOBS overrides)");
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  std::string gen_config;
  std::string gen_out;
  auto * gen = app.add_subcommand("gen", "Generate a synthetic scene suite");
  gen->add_option("--config", gen_config, "Suite JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "Output directory")->required();

  std::string tr_in;
  std::string tr_op;
  std::uint64_t tr_seed = 0;
  std::vector<std::string> tr_params;
  std::string tr_out;
  auto * tr = app.add_subcommand("transform", "Apply operators to every scene of a suite");
  tr->add_option("--in", tr_in, "Input suite")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--op", tr_op, "Operator kind, comma list or 'all'")->required();
  tr->add_option("--seed", tr_seed, "Parameter sampling seed")->required();
  tr->add_option("--param", tr_params, "Fix a parameter, name=value (single --op only)");
  tr->add_option("--out", tr_out, "Output directory")->required();

  std::string run_suite;
  std::string run_seeds;
  double run_eps = 0.1;
  std::string run_out;
  bool fail_on_violation = false;
  DetectorFlags run_det;
  auto * runc = app.add_subcommand("run", "Evaluate a suite and write reports");
  runc->add_option("--suite", run_suite, "Suite directory")->required()->check(CLI::ExistingDirectory);
  runc->add_option("--seeds", run_seeds, "Seed suite for metamorphic verdicts")->check(CLI::ExistingDirectory);
  add_detector_flags(runc, run_det, true);
  runc->add_option("--epsilon", run_eps, "Allowed AP drop")->capture_default_str();
  runc->add_option("--out", run_out, "Report directory")->required();
  runc->add_flag("--fail-on-violation", fail_on_violation, "Exit 1 when any MR is violated");

  GuideFlags gf;
  DetectorFlags guide_det;
  auto * guide = app.add_subcommand("guide", "Select transformed scenes from seeds");
  guide->add_option("--seeds", gf.seeds_dir, "Seed suite")->required()->check(CLI::ExistingDirectory);
  guide->add_option("--strategy", gf.strategy, "vgt | random")->capture_default_str();
  auto * kf = guide->add_option("--keep-fraction", gf.keep_fraction, "Fraction of seeds x operators kept");
  auto * ng = guide->add_option("--num-gen", gf.num_gen, "Number of candidates kept");
  kf->excludes(ng);
  guide->add_option("--ops", gf.ops, "Operator kinds, comma list or 'all'")->capture_default_str();
  guide->add_option("--overlap", gf.overlap, "sum | union")->capture_default_str();
  add_detector_flags(guide, guide_det, true);
  guide->add_option("--seed", gf.seed, "Master seed")->required();
  guide->add_option("--epsilon", gf.epsilon, "Allowed AP drop")->capture_default_str();
  guide->add_option("--out", gf.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp & e) {
    return app.exit(e);
  } catch (const CLI::Success & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    std::cerr << "COOTEST-ERR: " << one_line(e.what()) << "\n";
    return kExitError;
  }
  if (verbose) {
    spdlog::set_level(spdlog::level::info);
  }

  try {
    const std::size_t jobs = jobs_from(jobs_flag);
    if (gen->parsed()) {
      return cmd_gen(gen_config, gen_out, jobs);
    }
    if (tr->parsed()) {
      return cmd_transform(tr_in, tr_op, tr_seed, tr_params, tr_out, jobs);
    }
    if (runc->parsed()) {
      return cmd_run(run_suite, run_seeds, run_det, run_eps, run_out, fail_on_violation, jobs);
    }
    return cmd_guide(gf, guide_det, jobs);
  } catch (const std::exception & e) {
    std::cerr << "COOTEST-ERR: " << one_line(e.what()) << "\n";
    return kExitError;
  }
}

}  // namespace cootest::cli
