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

#include "cootest/scene.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "cootest/error.hpp"
#include "cootest/geometry.hpp"

namespace cootest
{
namespace fs = std::filesystem;
using nlohmann::json;

namespace
{
constexpr std::size_t kPointBytes = 16;

std::string read_file(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path & path, const std::string & bytes)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error("short write to " + path.string());
  }
}

bool safe_agent_id(const std::string & id)
{
  if (id.empty() || id == "." || id == "..") {
    return false;
  }
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

std::string role_name(Role r) { return r == Role::kEgo ? "ego" : "cav"; }

json vec3(const Eigen::Vector3d & v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d read_vec3(const json & j, const std::string & where)
{
  if (!j.is_array() || j.size() != 3) {
    throw FormatError(where + ": expected 3 numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

const json & field(const json & obj, const char * key, const std::string & where)
{
  if (!obj.is_object() || !obj.contains(key)) {
    throw FormatError(where + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

json box_to_json(const Box3D & b)
{
  return {
    {"center", vec3(b.center)}, {"dims", vec3(b.dims)}, {"yaw", b.yaw},
    {"confidence", b.confidence}};
}

Box3D box_from_json(const json & j, const std::string & where)
{
  Box3D b;
  b.center = read_vec3(field(j, "center", where), where + ".center");
  b.dims = read_vec3(field(j, "dims", where), where + ".dims");
  b.yaw = field(j, "yaw", where).get<double>();
  b.confidence = field(j, "confidence", where).get<double>();
  return b;
}

fs::path cloud_relpath(const AgentTrack & agent, const Frame & frame)
{
  return fs::path(agent.agent_id) / (std::to_string(frame.timestamp) + ".bin");
}
}  // namespace

Pose Pose::from_xyz_yaw(double x, double y, double z, double yaw)
{
  Pose p;
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  p.matrix(0, 0) = c;
  p.matrix(0, 1) = -s;
  p.matrix(1, 0) = s;
  p.matrix(1, 1) = c;
  p.matrix(0, 3) = x;
  p.matrix(1, 3) = y;
  p.matrix(2, 3) = z;
  return p;
}

double Pose::yaw() const { return std::atan2(matrix(1, 0), matrix(0, 0)); }

double normalize_yaw(double yaw)
{
  constexpr double kPi = std::numbers::pi;
  double y = std::fmod(yaw, 2.0 * kPi);
  if (y <= -kPi) {
    y += 2.0 * kPi;
  } else if (y > kPi) {
    y -= 2.0 * kPi;
  }
  return y;
}

std::vector<std::string> validate(const Scene & scene)
{
  std::vector<std::string> out;
  const auto idx = [](const char * name, std::size_t i) {
    return std::string(name) + "[" + std::to_string(i) + "]";
  };

  if (scene.scene_id.empty()) {
    out.emplace_back("Scene.scene_id: empty");
  }

  std::size_t n_ego = 0;
  std::set<std::string> ids;
  const AgentTrack * ego = nullptr;
  for (std::size_t a = 0; a < scene.agents.size(); ++a) {
    const AgentTrack & agent = scene.agents[a];
    const std::string where = idx("agents", a);
    if (agent.role == Role::kEgo) {
      ++n_ego;
      ego = &agent;
    }
    if (!safe_agent_id(agent.agent_id)) {
      out.push_back(where + ".agent_id: AgentTrack id must be a non-empty [A-Za-z0-9_.-] name");
    } else if (!ids.insert(agent.agent_id).second) {
      out.push_back(where + ".agent_id: duplicate agent id '" + agent.agent_id + "'");
    }
    if (agent.frames.empty()) {
      out.push_back(where + ".frames: AgentTrack needs at least one frame");
    }
    for (std::size_t f = 0; f < agent.frames.size(); ++f) {
      const Frame & frame = agent.frames[f];
      const std::string fw = where + "." + idx("frames", f);
      if (f > 0 && frame.timestamp <= agent.frames[f - 1].timestamp) {
        out.push_back(fw + ".timestamp: timestamps must be strictly increasing");
      }
      if (!geometry::is_rigid(frame.pose)) {
        out.push_back(fw + ".pose: Pose is not a rigid transform");
      }
      for (std::size_t p = 0; p < frame.cloud.points.size(); ++p) {
        const Point & pt = frame.cloud.points[p];
        if (!std::isfinite(pt.x) || !std::isfinite(pt.y) || !std::isfinite(pt.z)) {
          out.push_back(fw + ".cloud." + idx("points", p) + ": non-finite coordinate");
          break;
        }
        if (!(pt.intensity >= 0.0F && pt.intensity <= 1.0F)) {
          out.push_back(fw + ".cloud." + idx("points", p) + ": intensity outside [0,1]");
          break;
        }
      }
    }
  }
  if (n_ego == 0) {
    out.emplace_back("agents: missing ego agent");
  } else if (n_ego > 1) {
    out.emplace_back("agents: duplicate ego agent");
  }
  if (n_ego == 1) {
    const bool present = std::any_of(ego->frames.begin(), ego->frames.end(), [&](const Frame & f) {
      return f.timestamp == scene.eval_timestamp;
    });
    if (!present) {
      out.push_back(
        "Scene.eval_timestamp: no ego frame at " + std::to_string(scene.eval_timestamp));
    }
  }

  for (std::size_t k = 0; k < scene.ground_truth.size(); ++k) {
    const Box3D & b = scene.ground_truth[k];
    const std::string where = idx("ground_truth", k);
    if (!b.center.allFinite()) {
      out.push_back(where + ".center: Box3D center must be finite");
    }
    if (!b.dims.allFinite() || !(b.dims.array() > 0.0).all()) {
      out.push_back(where + ".dims: Box3D dims must be strictly positive");
    }
    if (!std::isfinite(b.yaw) || normalize_yaw(b.yaw) != b.yaw) {
      out.push_back(where + ".yaw: Box3D yaw must lie in (-pi, pi]");
    }
    if (b.confidence != 1.0) {
      out.push_back(where + ".confidence: ground truth confidence must be 1");
    }
  }

  for (std::size_t i = 0; i < scene.provenance.size(); ++i) {
    try {
      validate_spec(scene.provenance[i]);
    } catch (const Error & e) {
      out.push_back(idx("provenance", i) + ": " + e.what());
    }
  }
  return out;
}

void require_valid(const Scene & scene)
{
  const auto violations = validate(scene);
  if (violations.empty()) {
    return;
  }
  std::string msg = "invalid scene '" + scene.scene_id + "':";
  for (const auto & v : violations) {
    msg += " " + v + ";";
  }
  throw InvalidArgument(msg);
}

const AgentTrack & ego_track(const Scene & scene)
{
  for (const auto & a : scene.agents) {
    if (a.role == Role::kEgo) {
      return a;
    }
  }
  throw InvalidArgument("scene '" + scene.scene_id + "' has no ego agent");
}

const Frame & frame_at(const AgentTrack & track, std::int64_t timestamp)
{
  const Frame * best = nullptr;
  for (const auto & f : track.frames) {
    if (f.timestamp <= timestamp) {
      best = &f;
    }
  }
  if (best == nullptr) {
    throw PreconditionError(
      "agent '" + track.agent_id + "' has no frame at or before " + std::to_string(timestamp) +
      " ms");
  }
  return *best;
}

Scene ego_only(const Scene & scene)
{
  Scene out;
  out.scene_id = scene.scene_id;
  out.eval_timestamp = scene.eval_timestamp;
  out.agents.push_back(ego_track(scene));
  out.ground_truth = scene.ground_truth;
  return out;
}

PointCloud decode_cloud(std::string_view bytes, const std::string & origin)
{
  if (bytes.size() % kPointBytes != 0) {
    throw FormatError(
      origin + ": " + std::to_string(bytes.size()) + " bytes is not a multiple of " +
      std::to_string(kPointBytes) + "-byte point records");
  }
  PointCloud cloud;
  cloud.points.resize(bytes.size() / kPointBytes);
  const auto read_f32 = [&](std::size_t off) {
    std::uint32_t u = 0;
    for (int b = 3; b >= 0; --b) {
      u = (u << 8) | static_cast<unsigned char>(bytes[off + static_cast<std::size_t>(b)]);
    }
    return std::bit_cast<float>(u);
  };
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const std::size_t off = i * kPointBytes;
    cloud.points[i] = {read_f32(off), read_f32(off + 4), read_f32(off + 8), read_f32(off + 12)};
  }
  return cloud;
}

std::string encode_cloud(const PointCloud & cloud)
{
  std::string bytes;
  bytes.reserve(cloud.size() * kPointBytes);
  const auto put = [&](float f) {
    std::uint32_t u = std::bit_cast<std::uint32_t>(f);
    for (int b = 0; b < 4; ++b) {
      bytes.push_back(static_cast<char>(u & 0xFFU));
      u >>= 8;
    }
  };
  for (const auto & p : cloud.points) {
    put(p.x);
    put(p.y);
    put(p.z);
    put(p.intensity);
  }
  return bytes;
}

Scene load_scene(const fs::path & dir)
{
  const fs::path meta = dir / "scene.json";
  if (!fs::exists(meta)) {
    throw FormatError("metadata not found: " + meta.string());
  }
  json j;
  try {
    j = json::parse(read_file(meta));
  } catch (const json::parse_error & e) {
    throw FormatError(meta.string() + ": malformed JSON: " + e.what());
  }

  Scene scene;
  const std::string root = meta.string();
  try {
    scene.scene_id = field(j, "scene_id", root).get<std::string>();
    scene.eval_timestamp = field(j, "eval_timestamp", root).get<std::int64_t>();
    const json & agents = field(j, "agents", root);
    for (std::size_t a = 0; a < agents.size(); ++a) {
      const std::string aw = root + ": agents[" + std::to_string(a) + "]";
      AgentTrack track;
      track.agent_id = field(agents[a], "agent_id", aw).get<std::string>();
      const std::string role = field(agents[a], "role", aw).get<std::string>();
      if (role != "ego" && role != "cav") {
        throw FormatError(aw + ".role: expected 'ego' or 'cav', got '" + role + "'");
      }
      track.role = role == "ego" ? Role::kEgo : Role::kCav;
      const json & frames = field(agents[a], "frames", aw);
      for (std::size_t f = 0; f < frames.size(); ++f) {
        const std::string fw = aw + ".frames[" + std::to_string(f) + "]";
        Frame frame;
        frame.timestamp = field(frames[f], "timestamp", fw).get<std::int64_t>();
        const json & pose = field(frames[f], "pose", fw);
        if (!pose.is_array() || pose.size() != 16) {
          throw FormatError(fw + ".pose: expected 16 numbers");
        }
        for (int r = 0; r < 4; ++r) {
          for (int c = 0; c < 4; ++c) {
            frame.pose.matrix(r, c) = pose[static_cast<std::size_t>(r * 4 + c)].get<double>();
          }
        }
        const fs::path cloud_path = dir / field(frames[f], "cloud", fw).get<std::string>();
        if (!fs::exists(cloud_path)) {
          throw FormatError(fw + ".cloud: file not found: " + cloud_path.string());
        }
        frame.cloud = decode_cloud(read_file(cloud_path), cloud_path.string());
        track.frames.push_back(std::move(frame));
      }
      scene.agents.push_back(std::move(track));
    }
    const json & gt = field(j, "ground_truth", root);
    for (std::size_t k = 0; k < gt.size(); ++k) {
      scene.ground_truth.push_back(
        box_from_json(gt[k], root + ": ground_truth[" + std::to_string(k) + "]"));
    }
    if (j.contains("provenance") && !j.at("provenance").is_null()) {
      for (const auto & s : j.at("provenance")) {
        scene.provenance.push_back(spec_from_json(s));
      }
    }
  } catch (const json::exception & e) {
    throw FormatError(root + ": " + e.what());
  }

  const auto violations = validate(scene);
  if (!violations.empty()) {
    std::string msg = root + ": invalid scene:";
    for (const auto & v : violations) {
      msg += " " + v + ";";
    }
    throw FormatError(msg);
  }
  return scene;
}

void save_scene(const Scene & scene, const fs::path & dir)
{
  require_valid(scene);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error("cannot create " + dir.string() + ": " + ec.message());
  }

  json agents = json::array();
  for (const auto & agent : scene.agents) {
    fs::create_directories(dir / agent.agent_id, ec);
    if (ec) {
      throw Error("cannot create " + (dir / agent.agent_id).string() + ": " + ec.message());
    }
    json frames = json::array();
    for (const auto & frame : agent.frames) {
      const fs::path rel = cloud_relpath(agent, frame);
      write_file(dir / rel, encode_cloud(frame.cloud));
      json pose = json::array();
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
          pose.push_back(frame.pose.matrix(r, c));
        }
      }
      frames.push_back({{"timestamp", frame.timestamp}, {"pose", pose}, {"cloud", rel.generic_string()}});
    }
    agents.push_back({{"agent_id", agent.agent_id}, {"role", role_name(agent.role)}, {"frames", frames}});
  }
  json gt = json::array();
  for (const auto & b : scene.ground_truth) {
    gt.push_back(box_to_json(b));
  }
  json prov = json::array();
  for (const auto & s : scene.provenance) {
    prov.push_back(spec_to_json(s));
  }
  const json j = {
    {"scene_id", scene.scene_id}, {"eval_timestamp", scene.eval_timestamp}, {"agents", agents},
    {"ground_truth", gt}, {"provenance", prov}};
  write_file(dir / "scene.json", j.dump(2) + "\n");
}

std::vector<Scene> load_suite(const fs::path & dir)
{
  if (!fs::is_directory(dir)) {
    throw FormatError("suite directory not found: " + dir.string());
  }
  std::vector<Scene> scenes;
  if (fs::exists(dir / "scene.json")) {
    scenes.push_back(load_scene(dir));
    return scenes;
  }
  std::vector<fs::path> subdirs;
  for (const auto & entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "scene.json")) {
      subdirs.push_back(entry.path());
    }
  }
  std::sort(subdirs.begin(), subdirs.end());
  for (const auto & p : subdirs) {
    scenes.push_back(load_scene(p));
  }
  std::sort(scenes.begin(), scenes.end(), [](const Scene & a, const Scene & b) {
    return a.scene_id < b.scene_id;
  });
  for (std::size_t i = 1; i < scenes.size(); ++i) {
    if (scenes[i].scene_id == scenes[i - 1].scene_id) {
      throw FormatError("duplicate scene_id '" + scenes[i].scene_id + "' in " + dir.string());
    }
  }
  return scenes;
}

}  // namespace cootest
