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

// The TDP main loop and the checks run against its output.
//
// Each iteration k draws trial points x_0..x_T, selects a new atom at T
// from the final cost, then for t = T-1 down to 0 selects a new atom at t
// against the (already updated) envelope at t+1, and appends it. Atoms are
// never removed, so after k iterations every stage holds exactly k atoms
// and the envelope after j < k iterations is the prefix of length j.

#ifndef TDP_ENGINE_HPP_
#define TDP_ENGINE_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "tdp/bellman.hpp"
#include "tdp/core.hpp"
#include "tdp/oracle.hpp"
#include "tdp/problem.hpp"
#include "tdp/selection.hpp"

namespace tdp {

enum class Selection { Sddp, MinPlus };

const char* to_string(Selection s);

struct StageRecord {
  Vector trial_point;
  double selection_value = 0.0;  // B_t(V_{t+1}^k)(x_t^{k-1}), psi at T
  double envelope_value = 0.0;   // V_t^k(x_t^{k-1}) after insertion
  std::optional<double> switch_chosen;
  double elapsed_ms = 0.0;
  // Filled when RunOptions::validity_samples > 0 (stages t < T).
  std::optional<VerificationReport> verification;
};

struct IterationRecord {
  int k = 0;
  std::vector<StageRecord> stages;  // indexed by t
  double elapsed_ms = 0.0;
};

struct RunOptions {
  // Validity samples per selection; 0 disables verification.
  int validity_samples = 0;
  // SDDP validity samples are drawn in a ball of this radius around the
  // trial point.
  double sddp_sample_radius = 1.0;
  std::uint64_t verification_seed = 0x5eed;
};

struct RunState {
  Kind kind = Kind::Sup;
  int iteration = 0;
  std::vector<Envelope> envelopes;  // F_0 .. F_T
  OracleKind oracle;
  Rng rng{0};
};

// One TDP run. The problem passed at construction must outlive the engine.
class TdpEngine {
 public:
  // Lower approximations by affine cuts (Sup kind) of the base problem.
  // Requires a single final-cost matrix.
  TdpEngine(const Problem& problem, OracleKind oracle, std::uint64_t seed,
            RunOptions options = {});
  // Upper approximations by pure quadratics (Inf kind).
  TdpEngine(const SwitchedProblem& problem, OracleKind oracle,
            std::uint64_t seed, RunOptions options = {});

  const IterationRecord& step();

  Selection selection() const { return selection_; }
  const RunState& state() const { return state_; }
  const std::vector<IterationRecord>& records() const { return records_; }
  int horizon() const { return T_; }
  Eigen::Index stage_dim() const;
  std::uint64_t seed() const { return seed_; }

  const Problem* problem() const { return problem_; }
  const SwitchedProblem* switched_problem() const { return switched_; }

  // B_t applied to the first k atoms of F_{t+1}, at x; psi(x) at t = T.
  double bellman_value(int t, const Vector& x, std::size_t k) const;

  // Trajectory from x0 following the minimizers of the current envelopes.
  // Lower side: nodal minimizers. Upper side: Riccati feedback of the
  // (switch, atom) pair selected at each point; when x0 has one coordinate
  // less than the stage dimension it is lifted to (x0, 1) and the returned
  // points are projected back.
  std::vector<Vector> greedy_trajectory(const Vector& x0) const;

  std::size_t riccati_images_computed() const { return cache_.computed(); }

  // Fault injection for the verification suites: shifts the newest atom of
  // stage t by `amount` (cut intercept up, or quadratic matrix down by
  // amount * Id), making it invalid.
  void inject_fault(int t, double amount);

 private:
  void init_envelopes(Kind kind, Eigen::Index dim);

  Selection selection_;
  const Problem* problem_ = nullptr;
  const SwitchedProblem* switched_ = nullptr;
  int T_ = 0;
  std::uint64_t seed_;
  RunOptions options_;
  RunState state_;
  std::vector<IterationRecord> records_;
  NodalControls controls_;
  mutable RiccatiCache cache_;
  Rng verify_rng_;
};

struct RunResult {
  RunState state;
  std::vector<IterationRecord> records;
};

// Runs K iterations. Throws InputError if K < 1 or the oracle does not fit
// the selection (the trajectory oracle needs the lower side).
RunResult tdp_run(const Problem& problem, OracleKind oracle, int iterations,
                  std::uint64_t seed, RunOptions options = {});
RunResult tdp_run(const SwitchedProblem& problem, OracleKind oracle,
                  int iterations, std::uint64_t seed, RunOptions options = {});

struct CheckReport {
  double max_violation = 0.0;
  int violations = 0;
  int checked = 0;
  // Location of the largest violation.
  int worst_k = 0;
  int worst_stage = 0;

  bool ok() const { return violations == 0; }
};

// values[k - 1][i] is V^k at audit point i. Flags any step in the wrong
// direction for `kind` by more than `slack`.
CheckReport check_monotone(const std::vector<std::vector<double>>& values,
                           Kind kind, double slack = 1e-9);

// Envelope values at `points` after each insertion: out[k-1][i] = V^k(p_i).
std::vector<std::vector<double>> audit_series(const Envelope& env,
                                              const std::vector<Vector>& points);

// Union of all drawn points at stage t plus `extra` random points from the
// verification stream: unit-sphere points for min-plus, points in a ball
// covering the drawn points for SDDP.
std::vector<std::vector<Vector>> audit_points(const TdpEngine& engine,
                                              int extra, std::uint64_t seed);

// check_monotone over every stage and audit point of a run.
CheckReport check_monotone_run(const TdpEngine& engine,
                               const std::vector<std::vector<Vector>>& points,
                               double slack = 1e-9);

// Recomputes B_t(V_{t+1}^k)(x_t^{k-1}) and compares it with V_t^k(x_t^{k-1})
// for every (k, t); violations are deviations above `tolerance`.
CheckReport check_tight_at_draws(const TdpEngine& engine, double tolerance = 1e-7);

// Every quadratic atom of stage t must satisfy lmin >= -tol and
// lmax <= beta_t + tol.
CheckReport check_loewner(const RunState& state, const StabilityBounds& bounds,
                          double tolerance = 1e-9);

// Value table of a brute-force backward recursion on a tensor grid.
struct GroundTruthTable {
  int stage = 0;
  std::vector<double> lo;   // per state dimension
  std::vector<int> counts;  // points per dimension
  std::vector<double> values;  // row-major over the grid, last dim fastest
  double state_step = 0.0;
  double control_step = 0.0;
  long clamped = 0;  // points whose minimizing successor left the grid box

  Vector point(std::size_t flat) const;
  std::size_t size() const { return values.size(); }
  // Multilinear interpolation, clamped to the grid box.
  double interpolate(const Vector& x, bool* clamped_out = nullptr) const;
};

struct BruteForceGrid {
  double state_lo = -2.0;
  double state_hi = 2.0;
  double state_step = 1e-2;
  double control_lo = -3.0;
  double control_hi = 3.0;
  double control_step = 1e-3;
};

// V_T = psi on the grid; V_t(x) = min over the control grid (u per
// coordinate, and v over the control interval when present) of
// c_t + interpolated V_{t+1}(f_t). Requires n <= 2, T <= 4 and m <= 2.
std::vector<GroundTruthTable> brute_force_dp(const Problem& problem,
                                             const BruteForceGrid& grid);

struct GapRow {
  int stage = 0;
  Vector point;
  double lower = 0.0;
  double upper = 0.0;
  double gap = 0.0;
};

// Lower (Sup, base dimension) and upper (Inf, base or base + 1 dimension)
// envelopes at the points; the upper side is read on the slice (x, 1) when
// it lives in one more dimension. Sets *negative if some gap < -1e-6.
std::vector<GapRow> gap_metrics(const std::vector<Envelope>& lower,
                                const std::vector<Envelope>& upper,
                                const std::vector<Vector>& points,
                                bool* negative = nullptr);

}  // namespace tdp

#endif  // TDP_ENGINE_HPP_
