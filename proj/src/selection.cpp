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

#include "tdp/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tdp/oracle.hpp"

namespace tdp {

namespace {

struct MinPlusChoice {
  std::size_t switch_index = 0;
  std::size_t atom_index = 0;
  double value = 0.0;
};

MinPlusChoice minplus_argmin(const Envelope& F_next, const Vector& x,
                             const SwitchedProblem& p, int t,
                             RiccatiCache* cache) {
  if (F_next.empty()) throw StateError("select_minplus: empty envelope");
  if (F_next.kind() != Kind::Inf) {
    throw InputError("select_minplus: envelope must be of Inf kind");
  }
  if (t < 0 || t >= p.T) throw InputError("select_minplus: stage out of range");
  const auto& per_switch = p.stages[static_cast<std::size_t>(t)];
  MinPlusChoice best{0, 0, std::numeric_limits<double>::infinity()};
  for (std::size_t v = 0; v < per_switch.size(); ++v) {
    for (std::size_t j = 0; j < F_next.size(); ++j) {
      double value;
      if (cache != nullptr) {
        value = cache->image(F_next, j, p, t, v)(x);
      } else {
        value = riccati_apply(std::get<PureQuadratic>(F_next.atom(j)),
                              per_switch[v])(x);
      }
      if (value < best.value) best = {v, j, value};
    }
  }
  return best;
}

}  // namespace

SelectionOutcome select_sddp(const Envelope& F_next, const Vector& x,
                             const StageModel& stage,
                             const NodalControls& controls) {
  if (F_next.kind() != Kind::Sup) {
    throw InputError("select_sddp: envelope must be of Sup kind");
  }
  const NodalSolution sol = solve_nodal(x, stage, F_next, controls);
  SelectionOutcome out;
  // <a, x' - x> + b  ==  <a, x'> + (b - <a, x>)
  out.atom = AffineCut(sol.subgradient, sol.value - sol.subgradient.dot(x),
                       F_next.stage() - 1);
  out.trial_point = x;
  out.bellman_value_at_point = sol.value;
  out.switch_chosen = sol.switch_value;
  out.control = sol.control;
  return out;
}

const PureQuadratic& RiccatiCache::image(const Envelope& F_next, std::size_t atom,
                                         const SwitchedProblem& p, int t,
                                         std::size_t switch_index) {
  const auto tt = static_cast<std::size_t>(t);
  if (images_.size() <= tt) images_.resize(tt + 1);
  auto& per_atom = images_[tt];
  if (per_atom.size() <= atom) per_atom.resize(atom + 1);
  auto& per_switch = per_atom[atom];
  if (per_switch.size() < p.switches.size()) per_switch.resize(p.switches.size());
  auto& slot = per_switch.at(switch_index);
  if (!slot) {
    slot = riccati_apply(std::get<PureQuadratic>(F_next.atom(atom)),
                         p.stages[tt][switch_index]);
    ++computed_;
  }
  return *slot;
}

SelectionOutcome select_minplus(const Envelope& F_next, const Vector& x,
                                const SwitchedProblem& p, int t,
                                RiccatiCache* cache) {
  const MinPlusChoice best = minplus_argmin(F_next, x, p, t, cache);
  const auto& q = std::get<PureQuadratic>(F_next.atom(best.atom_index));
  const LinearStage& stage = p.stages[static_cast<std::size_t>(t)][best.switch_index];
  SelectionOutcome out;
  out.atom = cache != nullptr
                 ? cache->image(F_next, best.atom_index, p, t, best.switch_index)
                 : riccati_apply(q, stage);
  out.trial_point = x;
  out.bellman_value_at_point = best.value;
  out.switch_chosen = p.switches[best.switch_index];
  out.switch_index = best.switch_index;
  out.source_atom_index = best.atom_index;
  out.control = riccati_optimal_control(q.matrix(), stage, x);
  return out;
}

double minplus_bellman_value(const Envelope& F_next, const Vector& x,
                             const SwitchedProblem& p, int t,
                             RiccatiCache* cache) {
  return minplus_argmin(F_next, x, p, t, cache).value;
}

SelectionOutcome select_final(const std::vector<Matrix>& final_cost,
                              const Vector& x, Kind kind, int T) {
  if (final_cost.empty()) throw InputError("select_final: no final cost");
  std::size_t best = 0;
  double best_value = x.dot(final_cost[0] * x);
  for (std::size_t i = 1; i < final_cost.size(); ++i) {
    const double v = x.dot(final_cost[i] * x);
    if (v < best_value) {
      best = i;
      best_value = v;
    }
  }
  SelectionOutcome out;
  out.trial_point = x;
  out.bellman_value_at_point = best_value;
  out.source_atom_index = best;
  if (kind == Kind::Inf) {
    out.atom = PureQuadratic(final_cost[best], T);
  } else {
    const Vector slope = 2.0 * (final_cost[best] * x);
    out.atom = AffineCut(slope, best_value - slope.dot(x), T);
  }
  return out;
}

VerificationReport verify_tight_valid_sddp(const SelectionOutcome& outcome,
                                           const Envelope& F_next,
                                           const StageModel& stage,
                                           const NodalControls& controls,
                                           int sample_count, double radius,
                                           Rng& rng) {
  VerificationReport report;
  const Vector& x = outcome.trial_point;
  report.tightness_residual =
      std::abs(evaluate_atom(outcome.atom, x) -
               solve_nodal(x, stage, F_next, controls).value);
  for (int i = 0; i < sample_count; ++i) {
    const double s = radius * rng.uniform();
    const Vector y = x + s * sphere_uniform(rng, x.size());
    const double excess = evaluate_atom(outcome.atom, y) -
                          solve_nodal(y, stage, F_next, controls).value;
    report.max_validity_violation = std::max(report.max_validity_violation, excess);
    if (excess > 1e-8) ++report.violations;
    ++report.samples;
  }
  return report;
}

VerificationReport verify_tight_valid_minplus(const SelectionOutcome& outcome,
                                              const Envelope& F_next,
                                              const SwitchedProblem& p, int t,
                                              int sample_count, Rng& rng,
                                              RiccatiCache* cache) {
  VerificationReport report;
  const Vector& x = outcome.trial_point;
  report.tightness_residual =
      std::abs(evaluate_atom(outcome.atom, x) -
               minplus_bellman_value(F_next, x, p, t, cache));
  for (int i = 0; i < sample_count; ++i) {
    const Vector y = sphere_uniform(rng, x.size());
    const double deficit = minplus_bellman_value(F_next, y, p, t, cache) -
                           evaluate_atom(outcome.atom, y);
    report.max_validity_violation = std::max(report.max_validity_violation, deficit);
    if (deficit > 1e-8) ++report.violations;
    ++report.samples;
  }
  return report;
}

}  // namespace tdp
