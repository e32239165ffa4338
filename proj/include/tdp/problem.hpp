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

#ifndef TDP_PROBLEM_HPP_
#define TDP_PROBLEM_HPP_

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdp/core.hpp"

namespace tdp {

// Eigenvalue thresholds used when validating cost matrices.
inline constexpr double kPsdTolerance = 1e-9;
inline constexpr double kPdTolerance = 1e-9;

// One stage of the constrained linear-quadratic problem:
//   f(x, u, v) = A x + B u + v b
//   c(x, u, v) = x^T C x + u^T D u + v^2 d
struct StageModel {
  Matrix A;
  Matrix B;
  Vector b;
  Matrix C;
  Matrix D;
  double d = 0.0;
};

struct ControlInterval {
  double lo = 0.0;
  double hi = 0.0;
};

struct ControlBox {
  Vector lo;
  Vector hi;
};

// Deterministic multistage LQ problem with an optional scalar control v
// constrained to an interval. Without control_interval, b and d are unused.
struct Problem {
  int T = 0;
  int n = 0;
  int m = 0;
  std::vector<StageModel> stages;  // size T
  std::vector<Matrix> final_cost;  // psi(x) = min_i x^T M_i x
  std::optional<ControlInterval> control_interval;
  std::optional<ControlBox> control_box;
  double alpha_T = 0.0;
  std::optional<Vector> x0;
};

// Exact (bitwise on values) equality of every field.
bool operator==(const Problem& lhs, const Problem& rhs);

// Linear dynamics and pure quadratic cost for one fixed switch value:
//   f(x, u) = A x + B u,  c(x, u) = x^T C x + u^T D u.
struct LinearStage {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;
};

// Unconstrained switched LQ problem. stages[t][i] is the model at time t
// under switch value switches[i].
struct SwitchedProblem {
  int T = 0;
  int dim = 0;
  int m = 0;
  std::vector<double> switches;
  std::vector<std::vector<LinearStage>> stages;
  std::vector<Matrix> final_cost;
  double alpha_T = 0.0;
};

// Checks dimensions, cones (C >= 0, D > 0, M_i in [0, alpha_T Id]), and the
// interval/box. Throws InputError naming the offending stage.
void validate(const Problem& p);
void validate(const SwitchedProblem& p);

Problem problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const Problem& p);

Problem load_problem(const std::string& path);
void save_problem(const Problem& p, const std::string& path);

// v_i = lo + i (hi - lo) / (N - 1), i = 0..N-1.
std::vector<double> discretize_control(const ControlInterval& interval, int N);

// Appends a constant coordinate y so that, for each switch value v, the
// affine dynamics and cost become linear / pure quadratic in (x, y):
//   A~ = [[A, v b], [0, 1]],  B~ = [[B], [0]],  C~ = diag(C, v^2 d),
// with final cost diag(M, 0). The result has state dimension n + 1.
SwitchedProblem homogenize(const Problem& p, const std::vector<double>& switches);

// Single-switch view (v = 0) of a problem, dropping the constrained control.
SwitchedProblem as_switched(const Problem& p);

// Value of the homogenized model on the slice y = 1 is the value of the
// original model at x; this is the identity, named for call-site clarity.
inline ExtReal restrict_to_slice(ExtReal homogenized_value_at_x_1) {
  return homogenized_value_at_x_1;
}

// (x, 1).
Vector lift(const Vector& x);

// The toy instance: A = 0.9 Id, B = ones(n, m), b = ones, C = D = 0.1 Id,
// d = 0.1, M = 0.1 Id, x0 = 0.2 ones.
Problem toy_problem(int T, int n, int m, ControlInterval interval);

}  // namespace tdp

#endif  // TDP_PROBLEM_HPP_
