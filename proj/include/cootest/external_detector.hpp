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

#ifndef COOTEST__EXTERNAL_DETECTOR_HPP_
#define COOTEST__EXTERNAL_DETECTOR_HPP_

#include <optional>
#include <string>

#include <sys/types.h>

#include "cootest/error.hpp"
#include "cootest/perception.hpp"

namespace cootest::perception
{

inline constexpr int kProtocolVersion = 1;

/// Base of all detector-protocol failures.
class ProtocolError : public Error
{
public:
  using Error::Error;
};

class LaunchError : public ProtocolError
{
public:
  using ProtocolError::ProtocolError;
};

class HandshakeError : public ProtocolError
{
public:
  using ProtocolError::ProtocolError;
};

/// A response line that is not valid JSON or does not follow the schema.
class MalformedResponseError : public ProtocolError
{
public:
  MalformedResponseError(std::size_t line, const std::string & what)
  : ProtocolError("detector response line " + std::to_string(line) + ": " + what), line_(line)
  {
  }
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// The detector answered with {"error": ...}.
class RemoteError : public ProtocolError
{
public:
  using ProtocolError::ProtocolError;
};

class TimeoutError : public ProtocolError
{
public:
  using ProtocolError::ProtocolError;
};

class ExitError : public ProtocolError
{
public:
  ExitError(int status, const std::string & what) : ProtocolError(what), status_(status) {}
  int status() const { return status_; }

private:
  int status_;
};

/// One scene request line (without the trailing newline). Only the frame each
/// agent contributes at evaluation is sent; ground truth never is.
std::string encode_scene_request(
  const Scene & scene, const std::optional<TransformSpec> & forwarded_spec);

/// Parses {"boxes":[...]}; `line` is used in error messages.
std::vector<Box3D> decode_boxes_response(const std::string & text, std::size_t line);

/// Detector hosted in a child process speaking line-delimited JSON over its
/// standard streams. One request is in flight at a time.
class ExternalDetector : public Detector
{
public:
  ExternalDetector(std::string cmd, int timeout_ms, double score_floor);
  ~ExternalDetector() override;

  ExternalDetector(const ExternalDetector &) = delete;
  ExternalDetector & operator=(const ExternalDetector &) = delete;

  std::string id() const override { return detector_id_; }
  DetectionResult detect_ego(const Scene & scene) override;
  DetectionResult detect_cooperative(const Scene & scene) override;
  double score_floor() const override { return score_floor_; }

  /// Sends one raw line and returns the raw response line.
  std::string exchange(const std::string & line);

  /// Full run_external contract: boxes for `scene` with an optional forwarded
  /// lossy spec.
  DetectionResult run(const Scene & scene, const std::optional<TransformSpec> & forwarded_spec);

  bool running() const { return pid_ > 0; }

private:
  void start();
  void handshake();
  void write_line(const std::string & line);
  std::string read_line();
  [[noreturn]] void fail_on_eof();
  void terminate(bool graceful = true);

  std::string cmd_;
  int timeout_ms_;
  double score_floor_;
  std::string detector_id_;
  pid_t pid_{-1};
  int fd_{-1};
  std::string buffer_;
  std::size_t lines_read_{0};
};

}  // namespace cootest::perception

#endif  // COOTEST__EXTERNAL_DETECTOR_HPP_
