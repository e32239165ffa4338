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

// Bellman operator evaluations for the two approximation families:
//  - the convex nodal problem against a set of affine cuts (lower side);
//  - the Riccati map on pure quadratic forms (upper side).

#ifndef TDP_BELLMAN_HPP_
#define TDP_BELLMAN_HPP_

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "tdp/core.hpp"
#include "tdp/problem.hpp"

namespace tdp {

// Smallest and largest eigenvalue of a symmetric matrix. Throws InputError
// if M is not square or not symmetric to 1e-12 (relative).
std::pair<double, double> eig_extrema(const Matrix& M);

// Control constraints seen by the nodal problem. When `interval` is set and
// `fixed_switch` is not, the scalar control v is a decision variable in the
// interval; a fixed switch pins v; with neither, v is absent.
struct NodalControls {
  std::optional<ControlBox> box;
  std::optional<ControlInterval> interval;
  std::optional<double> fixed_switch;
};

NodalControls nodal_controls(const Problem& p);

struct NodalSolution {
  double value = 0.0;
  Vector control;                    // u*
  std::optional<double> switch_value;  // v* (when v is present)
  Vector subgradient;                // a, with a cut x' -> <a, x' - x> + value
  std::map<int, double> active_multipliers;  // cut index -> mu_j >= 0
  // Multipliers of the control bounds, signed: positive when an upper bound
  // is active, negative for a lower bound. Ordered as (u, v).
  Vector bound_multipliers;
  int pivots = 0;
};

// Solves   min_{u, v, lambda}  c(x, u, v) + lambda
//          s.t. <a_j, f(x, u, v)> + b_j <= lambda  for every cut j,
//               control bounds,
// by a primal active-set method on the epigraph QP. Returns the optimal
// value, minimizer, cut multipliers (summing to one) and the subgradient
// 2 C x + A^T sum_j mu_j a_j of the optimal value in x.
//
// Throws StateError on an empty cut set and NumericError if the active-set
// iteration does not terminate.
NodalSolution solve_nodal(const Vector& x, const StageModel& stage,
                          const Envelope& cuts, const NodalControls& controls);

// Stage cost and dynamics of the constrained model (v ignored if absent).
double stage_cost(const StageModel& s, const Vector& x, const Vector& u,
                  double v);
Vector stage_dynamics(const StageModel& s, const Vector& x, const Vector& u,
                      double v);

enum class RiccatiForm {
  // A^T M (I + B D^-1 B^T M)^-1 A + C
  Reduced,
  // C + A^T M A - A^T M B (D + B^T M B)^-1 B^T M A
  Long,
};

// Image of x -> x^T M x by the Bellman operator of one switch. The result
// is symmetrized. Throws NumericError if the inner system is singular
// (which D > 0 and M >= 0 exclude).
Matrix riccati_apply(const Matrix& M, const LinearStage& stage,
                     RiccatiForm form = RiccatiForm::Reduced);
PureQuadratic riccati_apply(const PureQuadratic& q, const LinearStage& stage,
                            RiccatiForm form = RiccatiForm::Reduced);

// Max-abs difference between the reduced and long Riccati forms.
double riccati_cross_check(const Matrix& M, const LinearStage& stage);

// u = -(D + B^T M B)^-1 B^T M A x.
Vector riccati_optimal_control(const Matrix& M, const LinearStage& stage,
                               const Vector& x);

struct StabilityBounds {
  std::vector<double> alphas;  // alpha_0 .. alpha_T
  std::vector<double> betas;   // beta_0 .. beta_T
};

// alpha_t = max_v alpha_{t+1} lmax(A_v^T A_v) + lmax(C_v);
// beta_T = alpha_T, beta_t = max(alpha_t, beta_{t+1}).
// Every composition of Bellman maps sends [0, beta_T Id] into
// [0, beta_t Id].
StabilityBounds stability_bounds(const SwitchedProblem& p, double alpha_T);

}  // namespace tdp

#endif  // TDP_BELLMAN_HPP_
