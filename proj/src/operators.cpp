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

#include "cootest/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cootest/error.hpp"
#include "cootest/geometry.hpp"

namespace cootest::operators
{
namespace
{
constexpr double kDegToRad = std::numbers::pi / 180.0;

void fill_uniform(std::vector<double> & values, double lo, double hi, Rng & rng)
{
  for (auto & v : values) {
    v = rng.uniform(lo, hi);
  }
}

std::pair<double, double> value_range(const std::vector<double> & values)
{
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi};
}
}  // namespace

SharedPayload cloud_payload(const PointCloud & cloud)
{
  SharedPayload p;
  p.names = {"x", "y", "z", "intensity"};
  p.channels.assign(4, std::vector<double>(cloud.size()));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point & pt = cloud.points[i];
    p.channels[0][i] = pt.x;
    p.channels[1][i] = pt.y;
    p.channels[2][i] = pt.z;
    p.channels[3][i] = pt.intensity;
  }
  return p;
}

PointCloud payload_to_cloud(const SharedPayload & payload)
{
  if (payload.num_channels() != 4) {
    throw InvalidArgument("point payload must have 4 channels");
  }
  PointCloud cloud;
  cloud.points.resize(payload.num_rows());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    cloud.points[i] = {
      static_cast<float>(payload.channels[0][i]), static_cast<float>(payload.channels[1][i]),
      static_cast<float>(payload.channels[2][i]),
      static_cast<float>(std::clamp(payload.channels[3][i], 0.0, 1.0))};
  }
  return cloud;
}

SharedPayload detection_payload(const std::vector<Box3D> & boxes)
{
  SharedPayload p;
  p.names = {"cx", "cy", "cz", "l", "w", "h", "yaw", "score"};
  p.channels.assign(8, std::vector<double>(boxes.size()));
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const Box3D & b = boxes[i];
    const double row[8] = {b.center.x(), b.center.y(), b.center.z(), b.dims.x(),
                           b.dims.y(),   b.dims.z(),   b.yaw,        b.confidence};
    for (std::size_t c = 0; c < 8; ++c) {
      p.channels[c][i] = row[c];
    }
  }
  return p;
}

std::vector<Box3D> payload_to_detections(const SharedPayload & payload)
{
  if (payload.num_channels() != 8) {
    throw InvalidArgument("detection payload must have 8 channels");
  }
  std::vector<Box3D> boxes(payload.num_rows());
  const auto & ch = payload.channels;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    Box3D & b = boxes[i];
    b.center = {ch[0][i], ch[1][i], ch[2][i]};
    b.dims = {std::max(ch[3][i], 0.01), std::max(ch[4][i], 0.01), std::max(ch[5][i], 0.01)};
    b.yaw = normalize_yaw(ch[6][i]);
    b.confidence = std::clamp(ch[7][i], 0.0, 1.0);
  }
  return boxes;
}

TransformSpec sample_params(OperatorKind kind, std::uint64_t seed)
{
  Rng rng(mix_seed(seed, fnv1a(to_string(kind))));
  TransformSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  switch (kind) {
    case OperatorKind::kCT: spec.params["c_t"] = rng.uniform_open(0.0, 300.0); break;
    case OperatorKind::kSM:
      spec.params["t_x"] = rng.uniform_open(-0.2, 0.2);
      spec.params["t_y"] = rng.uniform_open(-0.2, 0.2);
      spec.params["t_z"] = rng.uniform_open(-0.2, 0.2);
      spec.params["r_z"] = rng.uniform_open(-2.0, 2.0);
      break;
    case OperatorKind::kGL: spec.params["p_g"] = rng.uniform_open(0.0, 1.0); break;
    case OperatorKind::kCL: spec.params["p_c"] = rng.uniform_open(0.0, 1.0); break;
    case OperatorKind::kRN: spec.params["r_n"] = rng.uniform_open(0.1, 10.0); break;
    case OperatorKind::kSW: spec.params["s_w"] = rng.uniform_open(0.1, 2.4); break;
    case OperatorKind::kFG: spec.params["f_g"] = rng.uniform_open(200.0, 1000.0); break;
  }
  return spec;
}

Scene apply_ct(const Scene & scene, double c_t_ms)
{
  if (!(c_t_ms >= 0.0)) {
    throw InvalidArgument("CT delay must be non-negative");
  }
  const double cutoff = static_cast<double>(scene.eval_timestamp) - c_t_ms;
  Scene out = scene;
  for (auto & agent : out.agents) {
    if (agent.role != Role::kCav) {
      continue;
    }
    std::erase_if(agent.frames, [&](const Frame & f) {
      const auto ts = static_cast<double>(f.timestamp);
      return ts > cutoff && f.timestamp <= scene.eval_timestamp;
    });
    const bool has_history = std::any_of(agent.frames.begin(), agent.frames.end(), [&](const Frame & f) {
      return static_cast<double>(f.timestamp) <= cutoff;
    });
    if (!has_history) {
      throw PreconditionError(
        "CT: agent '" + agent.agent_id + "' has no frame at or before " + std::to_string(cutoff) +
        " ms (eval " + std::to_string(scene.eval_timestamp) + " ms, c_t " +
        std::to_string(c_t_ms) + " ms)");
    }
  }
  return out;
}

Scene apply_sm(const Scene & scene, double t_x, double t_y, double t_z, double r_z_deg)
{
  Scene out = scene;
  if (t_x == 0.0 && t_y == 0.0 && t_z == 0.0 && r_z_deg == 0.0) {
    return out;
  }
  const Pose error = Pose::from_xyz_yaw(t_x, t_y, t_z, r_z_deg * kDegToRad);
  for (auto & agent : out.agents) {
    if (agent.role != Role::kCav) {
      continue;
    }
    for (auto & frame : agent.frames) {
      frame.pose = geometry::compose(error, frame.pose);
    }
  }
  return out;
}

SharedPayload apply_lossy_global(SharedPayload payload, double p_g, Rng & rng)
{
  if (!(p_g >= 0.0 && p_g <= 1.0)) {
    throw InvalidArgument("p_g must lie in [0, 1]");
  }
  if (p_g == 0.0 || payload.num_rows() == 0) {
    return payload;
  }
  // The C x N payload is already the reshaped 2D matrix; the noise range is
  // the global one over all of its cells.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto & ch : payload.channels) {
    const auto [clo, chi] = value_range(ch);
    lo = std::min(lo, clo);
    hi = std::max(hi, chi);
  }
  for (auto & ch : payload.channels) {
    for (auto & v : ch) {
      if (rng.bernoulli(p_g)) {
        v = rng.uniform(lo, hi);
      }
    }
  }
  return payload;
}

SharedPayload apply_lossy_channel(SharedPayload payload, double p_c, Rng & rng)
{
  if (!(p_c >= 0.0 && p_c <= 1.0)) {
    throw InvalidArgument("p_c must lie in [0, 1]");
  }
  const std::size_t c = payload.num_channels();
  const auto k = static_cast<std::size_t>(std::floor(p_c * static_cast<double>(c)));
  if (k == 0 || payload.num_rows() == 0) {
    return payload;
  }
  std::vector<std::size_t> order(c);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(c - i));
    std::swap(order[i], order[j]);
  }
  for (std::size_t i = 0; i < k; ++i) {
    auto & ch = payload.channels[order[i]];
    const auto [lo, hi] = value_range(ch);
    fill_uniform(ch, lo, hi, rng);
  }
  return payload;
}

SharedPayload apply_lossy(
  const TransformSpec & spec, SharedPayload payload, std::string_view scene_id,
  std::string_view agent_id)
{
  const std::string tag = std::string(to_string(spec.kind)) + "/" + std::string(agent_id);
  Rng rng(stream_seed(spec.seed, scene_id, tag));
  switch (spec.kind) {
    case OperatorKind::kGL: return apply_lossy_global(std::move(payload), spec.param("p_g"), rng);
    case OperatorKind::kCL: return apply_lossy_channel(std::move(payload), spec.param("p_c"), rng);
    default: throw InvalidArgument("apply_lossy expects a GL or CL spec");
  }
}

std::vector<TransformSpec> pending_lossy(const Scene & scene)
{
  std::vector<TransformSpec> out;
  for (const auto & s : scene.provenance) {
    if (is_lossy(s.kind)) {
      out.push_back(s);
    }
  }
  return out;
}

double extinction(OperatorKind kind, double intensity)
{
  switch (kind) {
    case OperatorKind::kFG: return 3.912 / intensity;
    case OperatorKind::kRN: return 2e-4 * std::pow(intensity, 0.6);
    case OperatorKind::kSW: return 8e-4 * std::pow(intensity, 0.8);
    default: throw InvalidArgument("extinction defined only for RN, SW and FG");
  }
}

WeatherModel weather_model(OperatorKind kind, double intensity)
{
  WeatherModel m;
  m.alpha = extinction(kind, intensity);
  return m;
}

PointCloud apply_weather_to_cloud(const PointCloud & cloud, const WeatherModel & model, Rng & rng)
{
  if (model.alpha <= 0.0) {
    return cloud;
  }
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto & p : cloud.points) {
    // Two draws per point regardless of outcome keep streams aligned across
    // different alphas.
    const double u_scatter = rng.uniform();
    const double u_range = rng.uniform();
    const double range = std::sqrt(
      static_cast<double>(p.x) * p.x + static_cast<double>(p.y) * p.y +
      static_cast<double>(p.z) * p.z);
    const double attenuated = p.intensity * std::exp(-2.0 * model.alpha * range);
    if (attenuated < model.intensity_floor) {
      continue;
    }
    const double p_scatter = 1.0 - std::exp(-model.beta * model.alpha * range);
    if (range > model.min_range && u_scatter < p_scatter) {
      const double r = model.min_range + u_range * (range - model.min_range);
      const double s = r / range;
      out.points.push_back(
        {static_cast<float>(p.x * s), static_cast<float>(p.y * s), static_cast<float>(p.z * s),
         static_cast<float>(model.scatter_ratio * attenuated)});
    } else {
      out.points.push_back({p.x, p.y, p.z, static_cast<float>(attenuated)});
    }
  }
  return out;
}

Scene apply_weather_model(const Scene & scene, const WeatherModel & model, std::uint64_t seed)
{
  Scene out = scene;
  for (auto & agent : out.agents) {
    for (auto & frame : agent.frames) {
      Rng rng(mix_seed(
        mix_seed(seed, fnv1a(agent.agent_id)), static_cast<std::uint64_t>(frame.timestamp)));
      frame.cloud = apply_weather_to_cloud(frame.cloud, model, rng);
    }
  }
  return out;
}

Scene apply_weather(const Scene & scene, OperatorKind kind, double intensity, std::uint64_t seed)
{
  if (!is_weather(kind)) {
    throw InvalidArgument("apply_weather expects RN, SW or FG");
  }
  TransformSpec probe{kind, {}, seed};
  const char * name = kind == OperatorKind::kRN ? "r_n" : kind == OperatorKind::kSW ? "s_w" : "f_g";
  probe.params[name] = intensity;
  validate_spec(probe);
  return apply_weather_model(
    scene, weather_model(kind, intensity), stream_seed(seed, scene.scene_id, to_string(kind)));
}

Scene apply(const TransformSpec & spec, const Scene & scene)
{
  validate_spec(spec);
  Scene out;
  switch (spec.kind) {
    case OperatorKind::kCT: out = apply_ct(scene, spec.param("c_t")); break;
    case OperatorKind::kSM:
      out = apply_sm(
        scene, spec.param("t_x"), spec.param("t_y"), spec.param("t_z"), spec.param("r_z"));
      break;
    case OperatorKind::kGL:
    case OperatorKind::kCL:
      // Lossy operators act on transmitted payloads; the spec travels with the
      // scene and is realized by the detector's fusion step.
      out = scene;
      break;
    case OperatorKind::kRN: out = apply_weather(scene, spec.kind, spec.param("r_n"), spec.seed); break;
    case OperatorKind::kSW: out = apply_weather(scene, spec.kind, spec.param("s_w"), spec.seed); break;
    case OperatorKind::kFG: out = apply_weather(scene, spec.kind, spec.param("f_g"), spec.seed); break;
  }
  out.ground_truth = scene.ground_truth;
  out.provenance.push_back(spec);
  return out;
}

}  // namespace cootest::operators
