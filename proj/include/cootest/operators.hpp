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

#ifndef COOTEST__OPERATORS_HPP_
#define COOTEST__OPERATORS_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cootest/rng.hpp"
#include "cootest/scene.hpp"
#include "cootest/transform_spec.hpp"

namespace cootest::operators
{

/// Data one agent transmits, viewed as C named channels of N values each.
/// Raw clouds give C = 4 (x, y, z, intensity); detection lists give C = 8
/// (cx, cy, cz, l, w, h, yaw, score).
struct SharedPayload
{
  std::vector<std::string> names;
  std::vector<std::vector<double>> channels;

  std::size_t num_channels() const { return channels.size(); }
  std::size_t num_rows() const { return channels.empty() ? 0 : channels.front().size(); }
  bool operator==(const SharedPayload &) const = default;
};

SharedPayload cloud_payload(const PointCloud & cloud);
/// Inverse of cloud_payload; intensities are clamped back into [0, 1].
PointCloud payload_to_cloud(const SharedPayload & payload);
SharedPayload detection_payload(const std::vector<Box3D> & boxes);
/// Inverse of detection_payload; dims are floored at 1 cm, scores clamped to
/// [0, 1] and yaw normalized so the result stays a valid box list.
std::vector<Box3D> payload_to_detections(const SharedPayload & payload);

/// Draws every parameter uniformly from its open range:
/// c_t (0,300) ms, t_x/t_y/t_z (-0.2,0.2) m, r_z (-2,2) deg, p_g and p_c (0,1),
/// r_n (0.1,10) mm/h, s_w (0.1,2.4) mm/h, f_g (200,1000) m.
TransformSpec sample_params(OperatorKind kind, std::uint64_t seed);

/// Drops each cav's frames newer than eval_timestamp - c_t so the frame it
/// contributes at evaluation is the latest one at least c_t old.
Scene apply_ct(const Scene & scene, double c_t_ms);

/// Pre-multiplies every cav pose by the error transform
/// [Rz(r_z) | (t_x, t_y, t_z)].
Scene apply_sm(const Scene & scene, double t_x, double t_y, double t_z, double r_z_deg);

/// Each scalar is replaced with probability p_g by a uniform draw within the
/// global [min, max] of the payload.
SharedPayload apply_lossy_global(SharedPayload payload, double p_g, Rng & rng);

/// floor(p_c * C) distinct channels are replaced entirely by uniform noise
/// within their own [min, max].
SharedPayload apply_lossy_channel(SharedPayload payload, double p_c, Rng & rng);

/// Runs a GL/CL spec on one agent's payload with a stream derived from
/// (spec.seed, scene_id, kind, agent_id).
SharedPayload apply_lossy(
  const TransformSpec & spec, SharedPayload payload, std::string_view scene_id,
  std::string_view agent_id);

/// Lossy specs recorded in the scene's provenance, in order. Their effect is
/// realized where the payload exists: in the fusion step of a detector.
std::vector<TransformSpec> pending_lossy(const Scene & scene);

/// Per-point LiDAR weather degradation.
struct WeatherModel
{
  double alpha{0.0};            // extinction, 1/m
  double beta{20.0};            // backscatter gain
  double intensity_floor{0.01};
  double scatter_ratio{0.3};
  double min_range{1.5};        // m

  bool operator==(const WeatherModel &) const = default;
};

/// alpha_fog = 3.912 / f_g; alpha_rain = 2e-4 r_n^0.6; alpha_snow = 8e-4 s_w^0.8.
double extinction(OperatorKind kind, double intensity);
WeatherModel weather_model(OperatorKind kind, double intensity);

/// Attenuates, drops or back-scatters every point of every frame of every
/// agent with the same model.
Scene apply_weather_model(const Scene & scene, const WeatherModel & model, std::uint64_t seed);
PointCloud apply_weather_to_cloud(const PointCloud & cloud, const WeatherModel & model, Rng & rng);

/// Validates intensity against the operator's range, then applies its model.
Scene apply_weather(const Scene & scene, OperatorKind kind, double intensity, std::uint64_t seed);

/// Dispatch on spec.kind. Ground truth is carried over untouched and spec is
/// appended to the provenance chain.
Scene apply(const TransformSpec & spec, const Scene & scene);

}  // namespace cootest::operators

#endif  // COOTEST__OPERATORS_HPP_
