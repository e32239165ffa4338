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

#include "tdp/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

namespace tdp {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void record_violation(CheckReport& report, double amount, double tolerance,
                      int k, int t) {
  ++report.checked;
  if (amount > report.max_violation) {
    report.max_violation = amount;
    report.worst_k = k;
    report.worst_stage = t;
  }
  if (amount > tolerance) ++report.violations;
}

}  // namespace

const char* to_string(Selection s) {
  return s == Selection::Sddp ? "sddp" : "minplus";
}

TdpEngine::TdpEngine(const Problem& problem, OracleKind oracle,
                     std::uint64_t seed, RunOptions options)
    : selection_(Selection::Sddp),
      problem_(&problem),
      T_(problem.T),
      seed_(seed),
      options_(options),
      verify_rng_(options.verification_seed) {
  validate(problem);
  if (problem.final_cost.size() != 1) {
    throw InputError(
        "SDDP needs a convex final cost: exactly one final-cost matrix");
  }
  state_.oracle = std::move(oracle);
  state_.rng = seed_rng(seed);
  controls_ = nodal_controls(problem);
  if (const auto* traj = std::get_if<OptimalTrajectory>(&state_.oracle)) {
    if (traj->x0.size() != problem.n) {
      throw InputError("trajectory oracle: x0 has wrong dimension");
    }
  }
  init_envelopes(Kind::Sup, problem.n);
}

TdpEngine::TdpEngine(const SwitchedProblem& problem, OracleKind oracle,
                     std::uint64_t seed, RunOptions options)
    : selection_(Selection::MinPlus),
      switched_(&problem),
      T_(problem.T),
      seed_(seed),
      options_(options),
      verify_rng_(options.verification_seed) {
  validate(problem);
  if (std::holds_alternative<OptimalTrajectory>(oracle)) {
    throw InputError(
        "the optimal-trajectory oracle requires lower (Sup) approximations");
  }
  state_.oracle = std::move(oracle);
  state_.rng = seed_rng(seed);
  init_envelopes(Kind::Inf, problem.dim);
}

void TdpEngine::init_envelopes(Kind kind, Eigen::Index dim) {
  state_.kind = kind;
  state_.envelopes.clear();
  for (int t = 0; t <= T_; ++t) state_.envelopes.emplace_back(kind, t, dim);
}

Eigen::Index TdpEngine::stage_dim() const { return state_.envelopes.front().dim(); }

const IterationRecord& TdpEngine::step() {
  const auto start = Clock::now();
  const int k = state_.iteration + 1;

  OracleContext ctx;
  ctx.T = T_;
  ctx.dims.assign(static_cast<std::size_t>(T_) + 1, stage_dim());
  ctx.problem = problem_;
  ctx.envelopes = &state_.envelopes;
  const TrialDraw trial = draw(state_.oracle, ctx, k, state_.rng);

  IterationRecord rec;
  rec.k = k;
  rec.stages.resize(static_cast<std::size_t>(T_) + 1);

  const auto& final_cost =
      selection_ == Selection::Sddp ? problem_->final_cost : switched_->final_cost;
  for (int t = T_; t >= 0; --t) {
    const auto stage_start = Clock::now();
    const auto tt = static_cast<std::size_t>(t);
    const Vector& x = trial.points[tt];
    SelectionOutcome outcome;
    if (t == T_) {
      outcome = select_final(final_cost, x, state_.kind, T_);
    } else if (selection_ == Selection::Sddp) {
      outcome = select_sddp(state_.envelopes[tt + 1], x, problem_->stages[tt],
                            controls_);
    } else {
      outcome = select_minplus(state_.envelopes[tt + 1], x, *switched_, t, &cache_);
    }

    StageRecord& sr = rec.stages[tt];
    if (t < T_ && options_.validity_samples > 0) {
      sr.verification =
          selection_ == Selection::Sddp
              ? verify_tight_valid_sddp(outcome, state_.envelopes[tt + 1],
                                        problem_->stages[tt], controls_,
                                        options_.validity_samples,
                                        options_.sddp_sample_radius, verify_rng_)
              : verify_tight_valid_minplus(outcome, state_.envelopes[tt + 1],
                                           *switched_, t, options_.validity_samples,
                                           verify_rng_, &cache_);
    }

    state_.envelopes[tt].add(outcome.atom);
    sr.trial_point = x;
    sr.selection_value = outcome.bellman_value_at_point;
    sr.envelope_value = evaluate_envelope(state_.envelopes[tt], x).value();
    sr.switch_chosen = outcome.switch_chosen;
    sr.elapsed_ms = ms_since(stage_start);
  }

  state_.iteration = k;
  rec.elapsed_ms = ms_since(start);
  records_.push_back(std::move(rec));
  return records_.back();
}

double TdpEngine::bellman_value(int t, const Vector& x, std::size_t k) const {
  if (t < 0 || t > T_) throw InputError("bellman_value: stage out of range");
  if (t == T_) {
    const auto& final_cost =
        selection_ == Selection::Sddp ? problem_->final_cost : switched_->final_cost;
    return select_final(final_cost, x, state_.kind, T_).bellman_value_at_point;
  }
  const auto tt = static_cast<std::size_t>(t);
  const Envelope next = state_.envelopes[tt + 1].prefix(k);
  if (selection_ == Selection::Sddp) {
    return solve_nodal(x, problem_->stages[tt], next, controls_).value;
  }
  return minplus_bellman_value(next, x, *switched_, t, &cache_);
}

std::vector<Vector> TdpEngine::greedy_trajectory(const Vector& x0) const {
  if (selection_ == Selection::Sddp) {
    return optimal_trajectory(*problem_, state_.envelopes, x0);
  }
  const bool lifted = x0.size() + 1 == stage_dim();
  if (!lifted && x0.size() != stage_dim()) {
    throw InputError("greedy_trajectory: x0 has wrong dimension");
  }
  std::vector<Vector> out;
  Vector y = lifted ? lift(x0) : x0;
  out.push_back(x0);
  for (int t = 0; t < T_; ++t) {
    const auto tt = static_cast<std::size_t>(t);
    const SelectionOutcome sel =
        select_minplus(state_.envelopes[tt + 1], y, *switched_, t, &cache_);
    const LinearStage& s = switched_->stages[tt][*sel.switch_index];
    y = s.A * y + s.B * sel.control;
    out.push_back(lifted ? Vector(y.head(x0.size())) : y);
  }
  return out;
}

void TdpEngine::inject_fault(int t, double amount) {
  Envelope& env = state_.envelopes.at(static_cast<std::size_t>(t));
  if (env.empty()) throw StateError("inject_fault: stage has no atoms");
  const BasicFunction& last = env.atom(env.size() - 1);
  if (const auto* cut = std::get_if<AffineCut>(&last)) {
    env.replace_last(AffineCut(cut->slope, cut->intercept + amount, cut->stage));
  } else {
    const auto& q = std::get<PureQuadratic>(last);
    env.replace_last(PureQuadratic(
        q.matrix() - amount * Matrix::Identity(q.dim(), q.dim()), q.stage()));
  }
}

RunResult tdp_run(const Problem& problem, OracleKind oracle, int iterations,
                  std::uint64_t seed, RunOptions options) {
  if (iterations < 1) throw InputError("tdp_run: iterations must be at least 1");
  TdpEngine engine(problem, std::move(oracle), seed, options);
  for (int k = 0; k < iterations; ++k) engine.step();
  return RunResult{engine.state(), engine.records()};
}

RunResult tdp_run(const SwitchedProblem& problem, OracleKind oracle,
                  int iterations, std::uint64_t seed, RunOptions options) {
  if (iterations < 1) throw InputError("tdp_run: iterations must be at least 1");
  TdpEngine engine(problem, std::move(oracle), seed, options);
  for (int k = 0; k < iterations; ++k) engine.step();
  return RunResult{engine.state(), engine.records()};
}

CheckReport check_monotone(const std::vector<std::vector<double>>& values,
                           Kind kind, double slack) {
  CheckReport report;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k].size() != values[k - 1].size()) {
      throw InputError("check_monotone: ragged value table");
    }
    for (std::size_t i = 0; i < values[k].size(); ++i) {
      // Inf: must not increase. Sup: must not decrease.
      const double wrong_way = kind == Kind::Inf ? values[k][i] - values[k - 1][i]
                                                 : values[k - 1][i] - values[k][i];
      record_violation(report, std::max(0.0, wrong_way), slack,
                       static_cast<int>(k) + 1, 0);
    }
  }
  return report;
}

std::vector<std::vector<double>> audit_series(const Envelope& env,
                                              const std::vector<Vector>& points) {
  const double start = env.kind() == Kind::Inf
                           ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
  std::vector<double> running(points.size(), start);
  std::vector<std::vector<double>> out;
  out.reserve(env.size());
  for (std::size_t k = 0; k < env.size(); ++k) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double v = evaluate_atom(env.atom(k), points[i]);
      running[i] = env.kind() == Kind::Inf ? std::min(running[i], v)
                                           : std::max(running[i], v);
    }
    out.push_back(running);
  }
  return out;
}

std::vector<std::vector<Vector>> audit_points(const TdpEngine& engine, int extra,
                                              std::uint64_t seed) {
  const int T = engine.horizon();
  std::vector<std::vector<Vector>> points(static_cast<std::size_t>(T) + 1);
  double radius = 1.0;
  for (const IterationRecord& rec : engine.records()) {
    for (std::size_t t = 0; t < rec.stages.size(); ++t) {
      points[t].push_back(rec.stages[t].trial_point);
      radius = std::max(radius, rec.stages[t].trial_point.norm());
    }
  }
  Rng rng(seed);
  const Eigen::Index dim = engine.stage_dim();
  for (auto& stage_points : points) {
    for (int i = 0; i < extra; ++i) {
      if (engine.selection() == Selection::MinPlus) {
        stage_points.push_back(sphere_uniform(rng, dim));
      } else {
        const double s = 2.0 * radius * rng.uniform();
        stage_points.push_back(s * sphere_uniform(rng, dim));
      }
    }
  }
  return points;
}

CheckReport check_monotone_run(const TdpEngine& engine,
                               const std::vector<std::vector<Vector>>& points,
                               double slack) {
  CheckReport total;
  const auto& envs = engine.state().envelopes;
  for (std::size_t t = 0; t < envs.size(); ++t) {
    const CheckReport r =
        check_monotone(audit_series(envs[t], points.at(t)), envs[t].kind(), slack);
    total.checked += r.checked;
    total.violations += r.violations;
    if (r.max_violation > total.max_violation) {
      total.max_violation = r.max_violation;
      total.worst_k = r.worst_k;
      total.worst_stage = static_cast<int>(t);
    }
  }
  return total;
}

CheckReport check_tight_at_draws(const TdpEngine& engine, double tolerance) {
  CheckReport report;
  const auto& envs = engine.state().envelopes;
  for (const IterationRecord& rec : engine.records()) {
    const auto k = static_cast<std::size_t>(rec.k);
    for (int t = 0; t <= engine.horizon(); ++t) {
      const auto tt = static_cast<std::size_t>(t);
      const Vector& x = rec.stages[tt].trial_point;
      const double bellman = engine.bellman_value(t, x, k);
      const double value = evaluate_envelope(envs[tt].prefix(k), x).value();
      record_violation(report, std::abs(bellman - value), tolerance, rec.k, t);
    }
  }
  return report;
}

CheckReport check_loewner(const RunState& state, const StabilityBounds& bounds,
                          double tolerance) {
  CheckReport report;
  for (std::size_t t = 0; t < state.envelopes.size(); ++t) {
    const Envelope& env = state.envelopes[t];
    for (std::size_t i = 0; i < env.size(); ++i) {
      const auto* q = std::get_if<PureQuadratic>(&env.atom(i));
      if (q == nullptr) throw InputError("check_loewner: envelope holds cuts");
      const auto [lo, hi] = eig_extrema(q->matrix());
      const double excess = std::max({0.0, -lo, hi - bounds.betas.at(t)});
      record_violation(report, excess, tolerance, static_cast<int>(i) + 1,
                       static_cast<int>(t));
    }
  }
  return report;
}

Vector GroundTruthTable::point(std::size_t flat) const {
  const auto dim = static_cast<Eigen::Index>(counts.size());
  Vector x(dim);
  for (Eigen::Index d = dim - 1; d >= 0; --d) {
    const auto c = static_cast<std::size_t>(counts[static_cast<std::size_t>(d)]);
    x(d) = lo[static_cast<std::size_t>(d)] + state_step * static_cast<double>(flat % c);
    flat /= c;
  }
  return x;
}

double GroundTruthTable::interpolate(const Vector& x, bool* clamped_out) const {
  const std::size_t dim = counts.size();
  if (static_cast<std::size_t>(x.size()) != dim) {
    throw InputError("GroundTruthTable::interpolate: dimension mismatch");
  }
  bool clamped = false;
  std::vector<std::size_t> base(dim);
  std::vector<double> frac(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const double last = static_cast<double>(counts[d] - 1);
    double s = (x(static_cast<Eigen::Index>(d)) - lo[d]) / state_step;
    if (s < 0.0 || s > last) {
      clamped = true;
      s = std::clamp(s, 0.0, last);
    }
    double cell = std::floor(s);
    if (cell >= last) cell = std::max(0.0, last - 1.0);
    base[d] = static_cast<std::size_t>(cell);
    frac[d] = counts[d] > 1 ? s - cell : 0.0;
  }
  if (clamped_out != nullptr) *clamped_out = clamped;

  double result = 0.0;
  const std::size_t corners = std::size_t{1} << dim;
  for (std::size_t corner = 0; corner < corners; ++corner) {
    double weight = 1.0;
    std::size_t flat = 0;
    for (std::size_t d = 0; d < dim; ++d) {
      const bool up = (corner >> d) & 1U;
      weight *= up ? frac[d] : 1.0 - frac[d];
      const std::size_t idx =
          std::min(base[d] + (up ? 1 : 0), static_cast<std::size_t>(counts[d] - 1));
      flat = flat * static_cast<std::size_t>(counts[d]) + idx;
    }
    if (weight != 0.0) result += weight * values[flat];
  }
  return result;
}

std::vector<GroundTruthTable> brute_force_dp(const Problem& problem,
                                             const BruteForceGrid& grid) {
  validate(problem);
  if (problem.n > 2 || problem.T > 4 || problem.m > 2) {
    throw InputError("brute_force_dp: limited to n <= 2, m <= 2, T <= 4");
  }
  if (!(grid.state_step > 0.0) || !(grid.control_step > 0.0) ||
      !(grid.state_lo < grid.state_hi) || !(grid.control_lo <= grid.control_hi)) {
    throw InputError("brute_force_dp: invalid grid");
  }
  const int n = problem.n;
  const int m = problem.m;
  const int per_dim =
      static_cast<int>(std::llround((grid.state_hi - grid.state_lo) / grid.state_step)) + 1;

  GroundTruthTable shape;
  shape.lo.assign(static_cast<std::size_t>(n), grid.state_lo);
  shape.counts.assign(static_cast<std::size_t>(n), per_dim);
  shape.state_step = grid.state_step;
  shape.control_step = grid.control_step;
  std::size_t total = 1;
  for (int c : shape.counts) total *= static_cast<std::size_t>(c);

  // Control grid: every u coordinate on [control_lo, control_hi], v on the
  // control interval (or the single value 0).
  const int u_count = static_cast<int>(std::llround(
                          (grid.control_hi - grid.control_lo) / grid.control_step)) + 1;
  std::vector<double> v_values{0.0};
  if (problem.control_interval) {
    v_values.clear();
    const auto& ci = *problem.control_interval;
    const int v_count =
        static_cast<int>(std::llround((ci.hi - ci.lo) / grid.control_step)) + 1;
    for (int i = 0; i < v_count; ++i) {
      v_values.push_back(std::min(ci.hi, ci.lo + i * grid.control_step));
    }
  }
  std::size_t u_total = 1;
  for (int i = 0; i < m; ++i) u_total *= static_cast<std::size_t>(u_count);

  std::vector<GroundTruthTable> tables(static_cast<std::size_t>(problem.T) + 1, shape);
  GroundTruthTable& last = tables.back();
  last.stage = problem.T;
  last.values.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    const Vector x = last.point(i);
    double best = std::numeric_limits<double>::infinity();
    for (const Matrix& M : problem.final_cost) best = std::min(best, x.dot(M * x));
    last.values[i] = best;
  }

  Vector u(m);
  for (int t = problem.T - 1; t >= 0; --t) {
    const auto tt = static_cast<std::size_t>(t);
    const StageModel& s = problem.stages[tt];
    const GroundTruthTable& next = tables[tt + 1];
    GroundTruthTable& table = tables[tt];
    table.stage = t;
    table.values.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
      const Vector x = table.point(i);
      const Vector drift = s.A * x;
      const double state_cost = x.dot(s.C * x);
      double best = std::numeric_limits<double>::infinity();
      bool best_clamped = false;
      for (std::size_t ui = 0; ui < u_total; ++ui) {
        std::size_t rest = ui;
        for (int j = m - 1; j >= 0; --j) {
          u(j) = grid.control_lo +
                 grid.control_step * static_cast<double>(rest % static_cast<std::size_t>(u_count));
          rest /= static_cast<std::size_t>(u_count);
        }
        const Vector moved = drift + s.B * u;
        const double control_cost = u.dot(s.D * u);
        for (double v : v_values) {
          bool clamped = false;
          const double cont = next.interpolate(moved + v * s.b, &clamped);
          const double total_cost = state_cost + control_cost + v * v * s.d + cont;
          if (total_cost < best) {
            best = total_cost;
            best_clamped = clamped;
          }
        }
      }
      if (best_clamped) ++table.clamped;
      table.values[i] = best;
    }
    if (table.clamped > 0) {
      std::clog << "brute_force_dp: stage " << t << ": " << table.clamped
                << " grid points whose minimizing successor left the grid box\n";
    }
  }
  return tables;
}

std::vector<GapRow> gap_metrics(const std::vector<Envelope>& lower,
                                const std::vector<Envelope>& upper,
                                const std::vector<Vector>& points, bool* negative) {
  if (lower.size() != upper.size() || lower.size() != points.size()) {
    throw InputError("gap_metrics: expected one point and envelope per stage");
  }
  bool any_negative = false;
  std::vector<GapRow> rows;
  for (std::size_t t = 0; t < points.size(); ++t) {
    if (lower[t].kind() != Kind::Sup || upper[t].kind() != Kind::Inf) {
      throw InputError("gap_metrics: lower must be Sup and upper Inf");
    }
    const Vector& x = points[t];
    GapRow row;
    row.stage = static_cast<int>(t);
    row.point = x;
    row.lower = evaluate_envelope(lower[t], x).value();
    const bool lifted = upper[t].dim() == x.size() + 1;
    row.upper = restrict_to_slice(evaluate_envelope(upper[t], lifted ? lift(x) : x))
                    .value();
    row.gap = row.upper - row.lower;
    if (row.gap < -1e-6) any_negative = true;
    rows.push_back(std::move(row));
  }
  if (negative != nullptr) *negative = any_negative;
  return rows;
}

}  // namespace tdp
