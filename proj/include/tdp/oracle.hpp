// Copyright 2026 The TDP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TDP_ORACLE_HPP_
#define TDP_ORACLE_HPP_

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

#include "tdp/core.hpp"
#include "tdp/problem.hpp"

namespace tdp {

// xoshiro256** 1.0 (Blackman & Vigna), state expanded from a 64-bit seed by
// splitmix64. Normals come from the Box-Muller transform so that streams are
// identical on every platform (std::normal_distribution is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double normal();

  std::uint64_t seed() const { return seed_; }
  const std::array<std::uint64_t, 4>& state() const { return s_; }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

Rng seed_rng(std::uint64_t seed);

// Standard normal vector normalized to unit length (zero draws redrawn).
Vector sphere_uniform(Rng& rng, Eigen::Index dim);

struct SphereUniform {};

// Forward pass from x0 along the minimizers of the current lower envelopes.
struct OptimalTrajectory {
  Vector x0;
};

// Round-robin over user-supplied point sets: sets[t] holds the candidate
// points of stage t, iteration k uses sets[t][(k - 1) mod size].
struct FixedSets {
  std::vector<std::vector<Vector>> sets;
};

using OracleKind = std::variant<SphereUniform, OptimalTrajectory, FixedSets>;

struct TrialDraw {
  std::vector<Vector> points;  // x_0 .. x_T
  int iteration = 0;           // k: the draw feeds iteration k
  std::array<std::uint64_t, 4> seed_state{};
};

// Context the oracle may need. `envelopes` is only read by
// OptimalTrajectory; `problem` must then be set.
struct OracleContext {
  int T = 0;
  std::vector<Eigen::Index> dims;  // state dimension per stage, size T + 1
  const Problem* problem = nullptr;
  const std::vector<Envelope>* envelopes = nullptr;
};

// Draw for iteration k (k >= 1). For OptimalTrajectory at k = 1 the draw is
// x0 at every stage; later draws follow the nodal minimizers of the current
// envelopes. Throws StateError if those envelopes are empty.
TrialDraw draw(const OracleKind& oracle, const OracleContext& ctx, int k, Rng& rng);

// Forward pass x_{t+1} = f_t(x_t, u_t*, v_t*) with (u_t*, v_t*) the nodal
// minimizer against envelopes[t + 1].
std::vector<Vector> optimal_trajectory(const Problem& p,
                                       const std::vector<Envelope>& envelopes,
                                       const Vector& x0);

}  // namespace tdp

#endif  // TDP_ORACLE_HPP_
