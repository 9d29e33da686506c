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

#include "cootest/external_detector.hpp"

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "cootest/base64.hpp"
#include "json.hpp"

namespace cootest::perception
{
using nlohmann::json;

namespace
{
std::string describe_status(int status)
{
  if (WIFEXITED(status)) {
    return "exit status " + std::to_string(WEXITSTATUS(status));
  }
  if (WIFSIGNALED(status)) {
    return "signal " + std::to_string(WTERMSIG(status));
  }
  return "status " + std::to_string(status);
}

json pose_json(const Pose & pose)
{
  json a = json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      a.push_back(pose.matrix(r, c));
    }
  }
  return a;
}

std::optional<TransformSpec> last_lossy(const Scene & scene)
{
  std::optional<TransformSpec> out;
  for (const auto & s : scene.provenance) {
    if (is_lossy(s.kind)) {
      out = s;
    }
  }
  return out;
}
}  // namespace

std::string encode_scene_request(
  const Scene & scene, const std::optional<TransformSpec> & forwarded_spec)
{
  json agents = json::array();
  for (const auto & agent : scene.agents) {
    const Frame & f = eval_frame(scene, agent);
    json frame = {
      {"timestamp", f.timestamp}, {"pose", pose_json(f.pose)},
      {"cloud", base64_encode(encode_cloud(f.cloud))}};
    agents.push_back({
      {"agent_id", agent.agent_id}, {"role", agent.role == Role::kEgo ? "ego" : "cav"},
      {"frames", json::array({frame})}});
  }
  json request = {
    {"scene", {{"scene_id", scene.scene_id}, {"eval_timestamp", scene.eval_timestamp}, {"agents", agents}}},
    {"forwarded_spec", forwarded_spec ? spec_to_json(*forwarded_spec) : json(nullptr)}};
  return request.dump();
}

std::vector<Box3D> decode_boxes_response(const std::string & text, std::size_t line)
{
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error & e) {
    throw MalformedResponseError(line, std::string("invalid JSON: ") + e.what());
  }
  if (j.is_object() && j.contains("error")) {
    throw RemoteError("detector reported error: " + j.at("error").dump());
  }
  if (!j.is_object() || !j.contains("boxes") || !j.at("boxes").is_array()) {
    throw MalformedResponseError(line, "expected an object with a 'boxes' array");
  }
  std::vector<Box3D> boxes;
  try {
    for (const auto & jb : j.at("boxes")) {
      const auto & c = jb.at("center");
      const auto & d = jb.at("dims");
      if (c.size() != 3 || d.size() != 3) {
        throw MalformedResponseError(line, "center and dims need 3 numbers");
      }
      Box3D b;
      b.center = {c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
      b.dims = {d[0].get<double>(), d[1].get<double>(), d[2].get<double>()};
      b.yaw = normalize_yaw(jb.at("yaw").get<double>());
      b.confidence = jb.at("score").get<double>();
      if (!(b.dims.array() > 0.0).all() || !b.center.allFinite()) {
        throw MalformedResponseError(line, "box dims must be positive and center finite");
      }
      if (!(b.confidence >= 0.0 && b.confidence <= 1.0)) {
        throw MalformedResponseError(line, "score outside [0, 1]");
      }
      boxes.push_back(b);
    }
  } catch (const json::exception & e) {
    throw MalformedResponseError(line, std::string("bad box record: ") + e.what());
  }
  return boxes;
}

ExternalDetector::ExternalDetector(std::string cmd, int timeout_ms, double score_floor)
: cmd_(std::move(cmd)), timeout_ms_(timeout_ms), score_floor_(score_floor)
{
  start();
  try {
    handshake();
  } catch (const ExitError & e) {
    throw LaunchError(std::string("detector exited before the handshake: ") + e.what());
  } catch (...) {
    terminate();
    throw;
  }
}

ExternalDetector::~ExternalDetector() { terminate(); }

void ExternalDetector::start()
{
  int fds[2];
  if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw LaunchError(std::string("socketpair failed: ") + std::strerror(errno));
  }
  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    throw LaunchError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(fds[1], STDIN_FILENO);
    dup2(fds[1], STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", cmd_.c_str(), static_cast<char *>(nullptr));
    _exit(127);
  }
  close(fds[1]);
  setpgid(pid, pid);
  pid_ = pid;
  fd_ = fds[0];
}

void ExternalDetector::handshake()
{
  const std::string reply = exchange(json({{"cootest_protocol", kProtocolVersion}}).dump());
  json j;
  try {
    j = json::parse(reply);
  } catch (const json::parse_error & e) {
    throw MalformedResponseError(lines_read_, std::string("invalid handshake JSON: ") + e.what());
  }
  if (j.is_object() && j.contains("cootest_protocol") && j.at("cootest_protocol") != kProtocolVersion) {
    throw HandshakeError(
      "protocol version mismatch: harness speaks " + std::to_string(kProtocolVersion) +
      ", detector answered " + j.at("cootest_protocol").dump());
  }
  if (!j.is_object() || j.value("ok", false) != true) {
    throw HandshakeError("detector rejected handshake: " + reply);
  }
  detector_id_ = j.contains("detector_id") && j.at("detector_id").is_string()
                   ? j.at("detector_id").get<std::string>()
                   : "external";
}

void ExternalDetector::write_line(const std::string & line)
{
  const std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) {
        continue;
      }
      fail_on_eof();
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string ExternalDetector::read_line()
{
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms_);
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      ++lines_read_;
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
      deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      terminate(/*graceful=*/false);
      throw TimeoutError(
        "detector '" + cmd_ + "' did not answer within " + std::to_string(timeout_ms_) + " ms");
    }
    pollfd pfd{fd_, POLLIN, 0};
    const int rc = poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0 && errno != EINTR) {
      throw ProtocolError(std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc <= 0) {
      continue;
    }
    char chunk[65536];
    const ssize_t n = recv(fd_, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) {
      continue;
    }
    if (n <= 0) {
      fail_on_eof();
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void ExternalDetector::fail_on_eof()
{
  int status = 0;
  if (pid_ > 0) {
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }
  if (fd_ >= 0) {
    close(fd_);
    fd_ = -1;
  }
  throw ExitError(status, "detector '" + cmd_ + "' terminated (" + describe_status(status) + ")");
}

std::string ExternalDetector::exchange(const std::string & line)
{
  if (pid_ <= 0) {
    throw ProtocolError("detector process is not running");
  }
  write_line(line);
  return read_line();
}

DetectionResult ExternalDetector::run(
  const Scene & scene, const std::optional<TransformSpec> & forwarded_spec)
{
  const std::string reply = exchange(encode_scene_request(scene, forwarded_spec));
  DetectionResult result;
  result.boxes = decode_boxes_response(reply, lines_read_);
  sort_by_confidence(result.boxes);
  result.detector_id = detector_id_;
  return result;
}

DetectionResult ExternalDetector::detect_ego(const Scene & scene)
{
  auto r = run(ego_only(scene), std::nullopt);
  r.source = Source::kEgoOnly;
  return r;
}

DetectionResult ExternalDetector::detect_cooperative(const Scene & scene)
{
  auto r = run(scene, last_lossy(scene));
  r.source = Source::kCooperative;
  return r;
}

void ExternalDetector::terminate(bool graceful)
{
  if (fd_ >= 0) {
    shutdown(fd_, SHUT_WR);
  }
  if (pid_ > 0) {
    int status = 0;
    bool reaped = false;
    for (int i = 0; graceful && i < 50 && !reaped; ++i) {
      reaped = waitpid(pid_, &status, WNOHANG) == pid_;
      if (!reaped) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
    }
    if (!reaped) {
      kill(-pid_, SIGKILL);
      kill(pid_, SIGKILL);
      waitpid(pid_, &status, 0);
    }
    pid_ = -1;
  }
  if (fd_ >= 0) {
    close(fd_);
    fd_ = -1;
  }
}

}  // namespace cootest::perception
