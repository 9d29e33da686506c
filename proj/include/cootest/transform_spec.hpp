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

#ifndef COOTEST__TRANSFORM_SPEC_HPP_
#define COOTEST__TRANSFORM_SPEC_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"

namespace cootest
{

enum class OperatorKind { kCT, kSM, kGL, kCL, kRN, kSW, kFG };

inline constexpr std::array<OperatorKind, 7> kAllOperators = {
  OperatorKind::kCT, OperatorKind::kSM, OperatorKind::kGL, OperatorKind::kCL,
  OperatorKind::kRN, OperatorKind::kSW, OperatorKind::kFG};

std::string_view to_string(OperatorKind kind);
OperatorKind parse_operator_kind(std::string_view name);

inline bool is_lossy(OperatorKind k) { return k == OperatorKind::kGL || k == OperatorKind::kCL; }
inline bool is_weather(OperatorKind k)
{
  return k == OperatorKind::kRN || k == OperatorKind::kSW || k == OperatorKind::kFG;
}

/// One transformation: operator identity, its sampled parameters and the seed
/// that drives any randomness inside the operator.
struct TransformSpec
{
  OperatorKind kind{OperatorKind::kCT};
  std::map<std::string, double> params;
  std::uint64_t seed{0};

  /// Throws InvalidArgument if the parameter is absent.
  double param(const std::string & name) const;

  bool operator==(const TransformSpec &) const = default;
};

/// Validates parameter names and closed-interval ranges for the kind.
void validate_spec(const TransformSpec & spec);

nlohmann::json spec_to_json(const TransformSpec & spec);
TransformSpec spec_from_json(const nlohmann::json & j);

/// FNV-1a over the canonical JSON encoding; used for deterministic tie-breaks.
std::uint64_t spec_hash(const TransformSpec & spec);

}  // namespace cootest

#endif  // COOTEST__TRANSFORM_SPEC_HPP_
