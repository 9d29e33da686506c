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

#ifndef COOTEST__RNG_HPP_
#define COOTEST__RNG_HPP_

#include <cstdint>
#include <limits>
#include <string_view>

namespace cootest
{

/// splitmix64 generator. Every stochastic step in the harness draws from one of
/// these, so outputs are reproducible across runs of the same build.
class Rng
{
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }

  std::uint64_t next()
  {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform in the open interval (lo, hi).
  double uniform_open(double lo, double hi);

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t index(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t state() const { return state_; }

private:
  std::uint64_t state_;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// Mixes values into a new seed; used to derive independent streams such as
/// (master seed, scene id, operator kind).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view scene_id, std::string_view tag)
{
  return mix_seed(mix_seed(seed, fnv1a(scene_id)), fnv1a(tag));
}

}  // namespace cootest

#endif  // COOTEST__RNG_HPP_
