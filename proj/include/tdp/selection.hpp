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

// Selection functions: given the envelope at t+1 and a trial point x, build
// a new atom for stage t that equals the Bellman image of the envelope at x
// (tight) and stays on the correct side of it everywhere (valid).

#ifndef TDP_SELECTION_HPP_
#define TDP_SELECTION_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "tdp/bellman.hpp"
#include "tdp/core.hpp"
#include "tdp/problem.hpp"

namespace tdp {

class Rng;

struct SelectionOutcome {
  BasicFunction atom;
  Vector trial_point;
  double bellman_value_at_point = 0.0;
  std::optional<double> switch_chosen;
  std::optional<std::size_t> source_atom_index;
  std::optional<std::size_t> switch_index;
  // u* at the trial point (nodal minimizer or Riccati feedback).
  Vector control;
};

// Cut x' -> <a, x' - x> + b from the nodal problem at x against F_next.
SelectionOutcome select_sddp(const Envelope& F_next, const Vector& x,
                             const StageModel& stage,
                             const NodalControls& controls);

// Riccati images of the atoms of F_next under every switch, cached by
// (atom index, switch index). Atoms are immutable and only appended, so a
// cached image stays valid for the whole run. Not thread-safe.
class RiccatiCache {
 public:
  RiccatiCache() = default;
  const PureQuadratic& image(const Envelope& F_next, std::size_t atom,
                             const SwitchedProblem& p, int t,
                             std::size_t switch_index);
  std::size_t computed() const { return computed_; }

 private:
  // images_[t][atom][switch]
  std::vector<std::vector<std::vector<std::optional<PureQuadratic>>>> images_;
  std::size_t computed_ = 0;
};

// argmin over (switch, atom) of x^T riccati_apply(q, v) x; the winning image
// is the new atom. Ties go to the lower switch index, then the lower atom
// index. `cache` may be null.
SelectionOutcome select_minplus(const Envelope& F_next, const Vector& x,
                                const SwitchedProblem& p, int t,
                                RiccatiCache* cache = nullptr);

// B_t(V_F)(x) on the quadratic side: min over (switch, atom) of the images.
double minplus_bellman_value(const Envelope& F_next, const Vector& x,
                             const SwitchedProblem& p, int t,
                             RiccatiCache* cache = nullptr);

// Stage T. Inf kind: the final-cost matrix minimal at x. Sup kind: the
// tangent cut of the active piece, x' -> <2 M x, x' - x> + x^T M x.
SelectionOutcome select_final(const std::vector<Matrix>& final_cost,
                              const Vector& x, Kind kind, int T);

struct VerificationReport {
  double tightness_residual = 0.0;  // |atom(x) - B(V_F)(x)|
  double max_validity_violation = 0.0;
  int samples = 0;
  int violations = 0;

  bool ok(double tight_tol = 1e-8, double valid_tol = 1e-8) const {
    return tightness_residual <= tight_tol && max_validity_violation <= valid_tol;
  }
};

// Checks an SDDP cut against the nodal value at x (tightness) and at
// `sample_count` points x + s xi, xi uniform on the sphere, s uniform in
// [0, radius] (validity: cut <= nodal value).
VerificationReport verify_tight_valid_sddp(const SelectionOutcome& outcome,
                                           const Envelope& F_next,
                                           const StageModel& stage,
                                           const NodalControls& controls,
                                           int sample_count, double radius,
                                           Rng& rng);

// Same for a min-plus quadratic (validity: quadratic >= B(V_F)); samples
// are uniform on the unit sphere.
VerificationReport verify_tight_valid_minplus(const SelectionOutcome& outcome,
                                              const Envelope& F_next,
                                              const SwitchedProblem& p, int t,
                                              int sample_count, Rng& rng,
                                              RiccatiCache* cache = nullptr);

}  // namespace tdp

#endif  // TDP_SELECTION_HPP_
