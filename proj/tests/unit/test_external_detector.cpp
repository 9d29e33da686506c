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

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cootest/external_detector.hpp"
#include "cootest/operators.hpp"
#include "cootest/synth.hpp"
#include "support/oracles.hpp"

namespace cootest
{
namespace
{

using namespace perception;
using nlohmann::json;

const std::string kFake = COOTEST_FAKE_DETECTOR;
const std::string kBoxes =
  R"([{"center":[5,1,-1],"dims":[4,2,1.5],"yaw":0.25,"score":0.9},{"center":[20,-3,-1],"dims":[4.5,1.9,1.6],"yaw":-1,"score":0.1}])";

std::string cmd(const std::string & mode, const std::string & log = "")
{
  std::string c = "'" + kFake + "' " + mode + " '" + kBoxes + "'";
  if (!log.empty()) {
    c += " '" + log + "'";
  }
  return c;
}

Scene small_scene()
{
  synth::SynthConfig cfg;
  cfg.scene_id = "ext";
  cfg.frames = 2;
  cfg.n_vehicles = 4;
  return synth::generate_sequence(cfg);
}

TEST(Protocol, RequestCarriesEvalFramesOnly)
{
  const Scene s = small_scene();
  const auto req = json::parse(encode_scene_request(s, std::nullopt));
  EXPECT_TRUE(req.at("forwarded_spec").is_null());
  EXPECT_FALSE(req.dump().find("ground_truth") != std::string::npos);
  const auto & scene = req.at("scene");
  EXPECT_EQ(scene.at("scene_id"), "ext");
  EXPECT_EQ(scene.at("eval_timestamp"), s.eval_timestamp);
  ASSERT_EQ(scene.at("agents").size(), s.agents.size());
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto & a = scene.at("agents")[i];
    ASSERT_EQ(a.at("frames").size(), 1u);
    EXPECT_EQ(a.at("frames")[0].at("timestamp"), s.eval_timestamp);
    EXPECT_EQ(a.at("frames")[0].at("pose").size(), 16u);
    EXPECT_EQ(a.at("role"), i == 0 ? "ego" : "cav");
  }
  const TransformSpec gl{OperatorKind::kGL, {{"p_g", 0.5}}, 3};
  const auto with_spec = json::parse(encode_scene_request(s, gl));
  EXPECT_EQ(spec_from_json(with_spec.at("forwarded_spec")), gl);
}

TEST(Protocol, DecodesBoxesAndRejectsMalformedResponses)
{
  const auto boxes = decode_boxes_response(R"({"boxes":)" + kBoxes + "}", 1);
  ASSERT_EQ(boxes.size(), 2u);
  EXPECT_EQ(boxes[0].center, Eigen::Vector3d(5, 1, -1));
  EXPECT_EQ(boxes[0].confidence, 0.9);
  EXPECT_EQ(boxes[1].yaw, -1.0);
  EXPECT_TRUE(decode_boxes_response(R"({"boxes":[]})", 1).empty());

  for (const std::string bad :
       {"nope", "{}", R"({"boxes":3})", R"({"boxes":[{"center":[1,2],"dims":[1,1,1],"yaw":0,"score":1}]})",
        R"({"boxes":[{"center":[1,2,3],"dims":[0,1,1],"yaw":0,"score":1}]})",
        R"({"boxes":[{"center":[1,2,3],"dims":[1,1,1],"yaw":0,"score":2}]})",
        R"({"boxes":[{"center":[1,2,3],"dims":[1,1,1],"yaw":0}]})"}) {
    try {
      decode_boxes_response(bad, 7);
      FAIL() << bad;
    } catch (const MalformedResponseError & e) {
      EXPECT_EQ(e.line(), 7u);
      EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos);
    }
  }
  EXPECT_THROW(decode_boxes_response(R"({"error":"bad"})", 1), RemoteError);
}

TEST(External, EchoRoundTrip)
{
  ExternalDetector det(cmd("echo"), 5000, 0.2);
  EXPECT_EQ(det.id(), "fake-echo");
  EXPECT_TRUE(det.running());
  const Scene s = small_scene();
  const auto r = det.detect_cooperative(s);
  ASSERT_EQ(r.boxes.size(), 2u);
  EXPECT_EQ(r.source, Source::kCooperative);
  EXPECT_EQ(r.boxes[0].center, Eigen::Vector3d(5, 1, -1));
  EXPECT_EQ(det.detect_ego(s).source, Source::kEgoOnly);
  const auto p = get_pred(det, s);
  EXPECT_EQ(p.cooperative.boxes.size(), 1u);
}

TEST(External, ForwardsLastLossySpecAndEgoOnlyScene)
{
  const auto dir = testing::fresh_dir("ext_log");
  const auto log = (dir / "requests.jsonl").string();
  ExternalDetector det(cmd("echo", log), 5000, 0.2);
  const Scene s = small_scene();
  const TransformSpec cl{OperatorKind::kCL, {{"p_c", 0.5}}, 1};
  const TransformSpec gl{OperatorKind::kGL, {{"p_g", 0.3}}, 2};
  Scene t = operators::apply(cl, operators::apply(gl, s));
  det.detect_cooperative(t);
  det.detect_ego(t);
  std::ifstream in(log);
  std::string first;
  std::string second;
  std::getline(in, first);
  std::getline(in, second);
  const auto coop = json::parse(first);
  EXPECT_EQ(spec_from_json(coop.at("forwarded_spec")), cl);
  EXPECT_EQ(coop.at("scene").at("agents").size(), 3u);
  const auto ego = json::parse(second);
  EXPECT_EQ(ego.at("scene").at("agents").size(), 1u);
}

TEST(External, RemoteErrorThenRecovery)
{
  ExternalDetector det(cmd("error-once"), 5000, 0.2);
  const Scene s = small_scene();
  EXPECT_THROW(det.detect_cooperative(s), RemoteError);
  EXPECT_EQ(det.detect_cooperative(s).boxes.size(), 2u);
}

TEST(External, MalformedResponseNamesLine)
{
  ExternalDetector det(cmd("badjson"), 5000, 0.2);
  try {
    det.detect_cooperative(small_scene());
    FAIL();
  } catch (const MalformedResponseError & e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(External, HandshakeFailures)
{
  EXPECT_THROW(ExternalDetector(cmd("badversion"), 5000, 0.2), HandshakeError);
  EXPECT_THROW(ExternalDetector(cmd("reject"), 5000, 0.2), HandshakeError);
  EXPECT_THROW(ExternalDetector("echo not-json", 5000, 0.2), MalformedResponseError);
}

TEST(External, LaunchFailureIsReported)
{
  EXPECT_THROW(ExternalDetector("/nonexistent/detector-binary 2>/dev/null", 5000, 0.2), LaunchError);
}

TEST(External, TimeoutKillsProcess)
{
  const auto start = std::chrono::steady_clock::now();
  ExternalDetector det(cmd("sleep"), 300, 0.2);
  EXPECT_THROW(det.detect_cooperative(small_scene()), TimeoutError);
  EXPECT_FALSE(det.running());
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
  EXPECT_THROW(ExternalDetector(cmd("hang"), 300, 0.2), TimeoutError);
}

TEST(External, ExitIsReportedWithStatus)
{
  ExternalDetector det(cmd("exit3"), 5000, 0.2);
  try {
    det.detect_cooperative(small_scene());
    FAIL();
  } catch (const ExitError & e) {
    EXPECT_NE(std::string(e.what()).find("exit status 3"), std::string::npos);
  }
  EXPECT_THROW(det.detect_cooperative(small_scene()), ProtocolError);
}

TEST(External, MakeDetectorLaunchesCommand)
{
  DetectorConfig cfg;
  cfg.fusion = Fusion::kExternal;
  cfg.external_cmd = cmd("echo");
  auto det = make_detector(cfg);
  EXPECT_EQ(det->id(), "fake-echo");
  EXPECT_FALSE(det->parallel_safe());
}

}  // namespace
}  // namespace cootest
