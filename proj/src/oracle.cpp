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

#include "tdp/oracle.hpp"

#include <cmath>
#include <numbers>

#include "tdp/bellman.hpp"

namespace tdp {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& word : s_) word = splitmix64(x);
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Rng seed_rng(std::uint64_t seed) { return Rng(seed); }

Vector sphere_uniform(Rng& rng, Eigen::Index dim) {
  if (dim < 1) throw InputError("sphere_uniform: dimension must be positive");
  Vector v(dim);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = rng.normal();
    norm = v.norm();
  } while (norm < 1e-300);
  return v / norm;
}

std::vector<Vector> optimal_trajectory(const Problem& p,
                                       const std::vector<Envelope>& envelopes,
                                       const Vector& x0) {
  if (static_cast<int>(envelopes.size()) != p.T + 1) {
    throw InputError("optimal_trajectory: expected T + 1 envelopes");
  }
  if (x0.size() != p.n) throw InputError("optimal_trajectory: x0 has wrong size");
  const NodalControls controls = nodal_controls(p);
  std::vector<Vector> traj;
  traj.reserve(static_cast<std::size_t>(p.T) + 1);
  traj.push_back(x0);
  for (int t = 0; t < p.T; ++t) {
    const auto tt = static_cast<std::size_t>(t);
    const Envelope& next = envelopes[tt + 1];
    if (next.empty()) {
      throw StateError("optimal_trajectory: envelope at stage " +
                       std::to_string(t + 1) + " is empty");
    }
    const NodalSolution sol = solve_nodal(traj.back(), p.stages[tt], next, controls);
    traj.push_back(stage_dynamics(p.stages[tt], traj.back(), sol.control,
                                  sol.switch_value.value_or(0.0)));
  }
  return traj;
}

TrialDraw draw(const OracleKind& oracle, const OracleContext& ctx, int k, Rng& rng) {
  if (k < 1) throw InputError("draw: iteration index must be at least 1");
  if (static_cast<int>(ctx.dims.size()) != ctx.T + 1) {
    throw InputError("draw: expected T + 1 stage dimensions");
  }
  TrialDraw out;
  out.iteration = k;
  out.seed_state = rng.state();
  if (std::holds_alternative<SphereUniform>(oracle)) {
    for (Eigen::Index dim : ctx.dims) out.points.push_back(sphere_uniform(rng, dim));
  } else if (const auto* traj = std::get_if<OptimalTrajectory>(&oracle)) {
    if (ctx.problem == nullptr) {
      throw InputError("draw: the trajectory oracle needs the problem");
    }
    if (k == 1) {
      out.points.assign(static_cast<std::size_t>(ctx.T) + 1, traj->x0);
    } else {
      if (ctx.envelopes == nullptr) {
        throw StateError("draw: the trajectory oracle needs the envelopes");
      }
      out.points = optimal_trajectory(*ctx.problem, *ctx.envelopes, traj->x0);
    }
  } else {
    const auto& fixed = std::get<FixedSets>(oracle);
    if (static_cast<int>(fixed.sets.size()) != ctx.T + 1) {
      throw InputError("draw: fixed sets must cover every stage");
    }
    for (std::size_t t = 0; t < fixed.sets.size(); ++t) {
      const auto& set = fixed.sets[t];
      if (set.empty()) throw InputError("draw: empty fixed set");
      const Vector& point = set[static_cast<std::size_t>(k - 1) % set.size()];
      if (point.size() != ctx.dims[t]) {
        throw InputError("draw: fixed point has wrong dimension");
      }
      out.points.push_back(point);
    }
  }
  return out;
}

}  // namespace tdp
