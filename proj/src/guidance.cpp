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

#include "cootest/guidance.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <tuple>

#include "cootest/error.hpp"
#include "cootest/geometry.hpp"
#include "cootest/operators.hpp"
#include "cootest/parallel.hpp"
#include "cootest/rng.hpp"

namespace cootest::guidance
{
namespace
{

// Volume of `box` intersected with the union of `others` by
// inclusion-exclusion over the subsets of boxes that actually touch `box`.
double union_overlap(const Box3D & box, const std::vector<Box3D> & others)
{
  std::vector<const Box3D *> touching;
  for (const auto & o : others) {
    if (geometry::intersection_volume(box, o) > 0.0) {
      touching.push_back(&o);
    }
  }
  if (touching.empty()) {
    return 0.0;
  }
  if (touching.size() > 20) {
    throw InvalidArgument("union overlap: too many overlapping cooperative boxes");
  }
  const auto base = geometry::footprint(box);
  const double base_lo = box.center.z() - 0.5 * box.dims.z();
  const double base_hi = box.center.z() + 0.5 * box.dims.z();
  const std::size_t n = touching.size();
  double total = 0.0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    auto poly = base;
    double lo = base_lo;
    double hi = base_hi;
    int bits = 0;
    for (std::size_t k = 0; k < n && !poly.empty() && hi > lo; ++k) {
      if ((mask >> k) & 1u) {
        ++bits;
        const Box3D & o = *touching[k];
        poly = geometry::clip_convex(poly, geometry::footprint(o));
        lo = std::max(lo, o.center.z() - 0.5 * o.dims.z());
        hi = std::min(hi, o.center.z() + 0.5 * o.dims.z());
      }
    }
    if (poly.empty() || hi <= lo) {
      continue;
    }
    const double v = geometry::polygon_area(poly) * (hi - lo);
    total += (bits % 2 == 1) ? v : -v;
  }
  return std::clamp(total, 0.0, box.volume());
}

auto rank_key(double raw, const std::string & id, const TransformSpec & spec)
{
  return std::make_tuple(-raw, std::cref(id), spec_hash(spec));
}

struct Scored
{
  std::size_t seed_index{0};
  TransformSpec spec;
  std::string id;
  double raw{kSentinel};
  bool ok{false};
};

bool scored_before(const Scored & a, const Scored & b)
{
  return rank_key(a.raw, a.id, a.spec) < rank_key(b.raw, b.id, b.spec);
}

void require_inputs(
  const std::vector<OperatorKind> & operators, const std::vector<Scene> & seeds, std::size_t num_gen)
{
  if (operators.empty()) {
    throw InvalidArgument("operator set is empty");
  }
  if (seeds.empty()) {
    throw InvalidArgument("seed set is empty");
  }
  if (num_gen == 0) {
    throw InvalidArgument("num_gen must be positive");
  }
}

}  // namespace

double gui_raw(
  const std::vector<Box3D> & ego, const std::vector<Box3D> & cooperative, OverlapMode mode)
{
  if (ego.empty()) {
    return kSentinel;
  }
  if (cooperative.empty()) {
    return 0.0;
  }
  const double denom = static_cast<double>(ego.size()) * static_cast<double>(cooperative.size());
  double sum = 0.0;
  for (const auto & b : ego) {
    double overlap = 0.0;
    if (mode == OverlapMode::kUnion) {
      overlap = union_overlap(b, cooperative);
    } else {
      for (const auto & c : cooperative) {
        overlap += geometry::intersection_volume(b, c);
      }
    }
    sum += b.confidence / denom * overlap / b.volume();
  }
  return sum == 0.0 ? 0.0 : -sum;
}

std::vector<double> normalize_batch(const std::vector<double> & raw)
{
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double r : raw) {
    if (!is_sentinel(r)) {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  std::vector<double> out(raw.size(), 0.0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (is_sentinel(raw[i])) {
      continue;
    }
    out[i] = hi > lo ? (raw[i] - lo) / (hi - lo) : 0.5;
  }
  return out;
}

bool ranks_before(const Candidate & a, const Candidate & b)
{
  return rank_key(a.gui_raw.value_or(kSentinel), a.transformed_scene.scene_id, a.spec) <
         rank_key(b.gui_raw.value_or(kSentinel), b.transformed_scene.scene_id, b.spec);
}

std::uint64_t candidate_seed(std::uint64_t master_seed, const std::string & seed_id, OperatorKind kind)
{
  return stream_seed(master_seed, seed_id, to_string(kind));
}

std::string candidate_id(const std::string & seed_id, OperatorKind kind)
{
  return seed_id + "__" + std::string(to_string(kind));
}

std::vector<Candidate> vgt_generate(
  perception::Detector & detector, const std::vector<OperatorKind> & operators,
  const std::vector<Scene> & seeds, std::size_t num_gen, std::uint64_t master_seed,
  const GuidanceOptions & options)
{
  require_inputs(operators, seeds, num_gen);

  std::vector<Scored> scored(seeds.size() * operators.size());
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    for (std::size_t k = 0; k < operators.size(); ++k) {
      auto & rec = scored[s * operators.size() + k];
      rec.seed_index = s;
      rec.spec = operators::sample_params(
        operators[k], candidate_seed(master_seed, seeds[s].scene_id, operators[k]));
      rec.id = candidate_id(seeds[s].scene_id, operators[k]);
    }
  }

  const std::size_t jobs = detector.parallel_safe() ? options.jobs : 1;
  parallel_for(scored.size(), jobs, [&](std::size_t i) {
    auto & rec = scored[i];
    Scene t;
    try {
      t = operators::apply(rec.spec, seeds[rec.seed_index]);
    } catch (const PreconditionError & e) {
      spdlog::warn("skipping {}: {}", rec.id, e.what());
      return;
    }
    t.scene_id = rec.id;
    const auto preds = perception::get_pred(detector, t);
    rec.raw = gui_raw(preds.ego.boxes, preds.cooperative.boxes, options.overlap);
    rec.ok = true;
  });

  // Bounded descending list: fill, then replace the tail on improvement.
  std::vector<const Scored *> kept;
  std::vector<double> batch;
  std::vector<std::size_t> batch_pos(scored.size(), 0);
  for (const auto & rec : scored) {
    if (!rec.ok) {
      continue;
    }
    batch_pos[static_cast<std::size_t>(&rec - scored.data())] = batch.size();
    batch.push_back(rec.raw);
    const auto before = [](const Scored * a, const Scored * b) { return scored_before(*a, *b); };
    if (kept.size() < num_gen) {
      kept.push_back(&rec);
      std::sort(kept.begin(), kept.end(), before);
    } else if (scored_before(rec, *kept.back())) {
      kept.back() = &rec;
      std::sort(kept.begin(), kept.end(), before);
    }
  }

  // Normalization range covers every scored candidate, not only the kept ones.
  const auto pri = normalize_batch(batch);

  std::vector<Candidate> out;
  out.reserve(kept.size());
  for (const Scored * rec : kept) {
    Candidate c;
    c.transformed_scene = operators::apply(rec->spec, seeds[rec->seed_index]);
    c.transformed_scene.scene_id = rec->id;
    c.spec = rec->spec;
    c.seed_id = seeds[rec->seed_index].scene_id;
    c.gui_raw = rec->raw;
    c.gui_pri = pri[batch_pos[static_cast<std::size_t>(rec - scored.data())]];
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Candidate> random_generate(
  const std::vector<OperatorKind> & operators, const std::vector<Scene> & seeds,
  std::size_t num_gen, std::uint64_t rng_seed)
{
  require_inputs(operators, seeds, num_gen);
  Rng rng(rng_seed);
  std::vector<Candidate> out;
  const std::size_t max_attempts = 100 * num_gen + 1000;
  for (std::size_t attempt = 0; out.size() < num_gen; ++attempt) {
    if (attempt >= max_attempts) {
      throw PreconditionError("random generation: operator preconditions failed too often");
    }
    const Scene & seed = seeds[rng.index(seeds.size())];
    const OperatorKind kind = operators[rng.index(operators.size())];
    const auto spec = operators::sample_params(kind, rng.next());
    Candidate c;
    try {
      c.transformed_scene = operators::apply(spec, seed);
    } catch (const PreconditionError & e) {
      spdlog::warn("random candidate from {} skipped: {}", seed.scene_id, e.what());
      continue;
    }
    c.transformed_scene.scene_id = candidate_id(seed.scene_id, kind) + "__r" + std::to_string(out.size());
    c.spec = spec;
    c.seed_id = seed.scene_id;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace cootest::guidance
