/*
 * Copyright 2026 The dpofl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef DPOFL_RANDOM_HPP_
#define DPOFL_RANDOM_HPP_

#include <cstdint>
#include <random>

namespace dpofl {

// Versioned Gaussian stream: "mt64-boxmuller-v1".
//
//   * engine: std::mt19937_64 seeded with the 64-bit seed (the engine's
//     output sequence is fixed by the C++ standard);
//   * uniforms: u = ((x >> 11) + 0.5) * 2^-53, strictly inside (0, 1);
//   * normals: basic Box-Muller, both outputs of each pair are consumed in
//     order (r cos t first, then r sin t).
//
// Any change to these three steps must bump the version string, since
// cached datasets and traces depend on it.
inline constexpr const char* kGaussianStreamVersion = "mt64-boxmuller-v1";

class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double Uniform();
  double StandardNormal();
  double Normal(double mean, double stddev) {
    return mean + stddev * StandardNormal();
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// splitmix64 finalizer; used to derive independent child seeds.
std::uint64_t Mix64(std::uint64_t x);

// child = Mix64(parent ^ Mix64(index + 1)). Distinct indices give distinct,
// well-separated seeds for trials, learners and substreams.
std::uint64_t DeriveSeed(std::uint64_t parent, std::uint64_t index);

}  // namespace dpofl

#endif  // DPOFL_RANDOM_HPP_
