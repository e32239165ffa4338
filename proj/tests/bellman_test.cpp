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

#include "tdp/bellman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "tdp/oracle.hpp"

namespace tdp {
namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

StageModel scalar_stage(double A, double B, double C, double D) {
  StageModel s;
  s.A = Matrix::Constant(1, 1, A);
  s.B = Matrix::Constant(1, 1, B);
  s.b = Vector::Zero(1);
  s.C = Matrix::Constant(1, 1, C);
  s.D = Matrix::Constant(1, 1, D);
  return s;
}

Envelope cuts_1d(std::initializer_list<std::pair<double, double>> cuts) {
  Envelope env(Kind::Sup, 1, 1);
  for (const auto& [a, b] : cuts) env.add(AffineCut(vec({a}), b, 1));
  return env;
}

// min over a u-grid of c(x, u) + max_j (a_j f(x, u) + b_j), scalar model.
double grid_nodal(const StageModel& s, double x, const Envelope& env, double lo,
                  double hi, double step) {
  double best = std::numeric_limits<double>::infinity();
  const long count = std::lround((hi - lo) / step);
  for (long i = 0; i <= count; ++i) {
    const double u = lo + i * step;
    const double f = s.A(0, 0) * x + s.B(0, 0) * u;
    best = std::min(best, s.C(0, 0) * x * x + s.D(0, 0) * u * u +
                              evaluate_envelope(env, vec({f})).value());
  }
  return best;
}

Matrix random_psd(Rng& rng, int n, double lmax) {
  Matrix G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = rng.normal();
  Matrix M = G * G.transpose();
  const double top = eig_extrema(0.5 * (M + M.transpose())).second;
  if (top > 0) M *= lmax * rng.uniform() / top;
  return 0.5 * (M + M.transpose());
}

Matrix random_symmetric(Rng& rng, int n) {
  Matrix G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = rng.normal();
  return 0.5 * (G + G.transpose());
}

TEST(NodalTest, ZeroCutUnconstrained) {
  const StageModel s = scalar_stage(1.0, 1.0, 0.0, 1.0);
  const NodalSolution sol = solve_nodal(vec({0.7}), s, cuts_1d({{0.0, 0.0}}), {});
  EXPECT_NEAR(sol.value, 0.0, 1e-14);
  EXPECT_NEAR(sol.control(0), 0.0, 1e-14);
  EXPECT_NEAR(sol.subgradient(0), 0.0, 1e-14);
}

// min_u u^2 + 1 + 2(1 + u) is attained at u = -1 with value 2.
TEST(NodalTest, SingleCutScalarExample) {
  const StageModel s = scalar_stage(1.0, 1.0, 1.0, 1.0);
  const Envelope env = cuts_1d({{2.0, 0.0}});
  const NodalSolution sol = solve_nodal(vec({1.0}), s, env, {});
  EXPECT_NEAR(sol.control(0), -1.0, 1e-12);
  EXPECT_NEAR(sol.value, 2.0, 1e-12);
  ASSERT_EQ(sol.active_multipliers.size(), 1u);
  EXPECT_NEAR(sol.active_multipliers.at(0), 1.0, 1e-12);
  EXPECT_NEAR(sol.subgradient(0), 4.0, 1e-12);
  EXPECT_NEAR(sol.value, grid_nodal(s, 1.0, env, -5.0, 5.0, 1e-4), 1e-6);
}

TEST(NodalTest, TwoCutsInteriorMultiplier) {
  // Cut 1 alone is minimized at u = -1, where cut 2 is larger; cut 2 alone
  // at u = 1, where cut 1 is larger. The optimum sits on the kink f = 1/4.
  const StageModel s = scalar_stage(1.0, 1.0, 1.0, 1.0);
  const Envelope env = cuts_1d({{2.0, 0.0}, {-2.0, 1.0}});
  const NodalSolution sol = solve_nodal(vec({1.0}), s, env, {});
  EXPECT_NEAR(sol.value, grid_nodal(s, 1.0, env, -5.0, 5.0, 1e-4), 1e-6);
  ASSERT_EQ(sol.active_multipliers.size(), 2u);
  const double mu = sol.active_multipliers.at(0);
  EXPECT_GT(mu, 1e-6);
  EXPECT_LT(mu, 1.0 - 1e-6);
  EXPECT_NEAR(mu + sol.active_multipliers.at(1), 1.0, 1e-12);

  // Dual: q(mu) = min_u 1 + u^2 + mu 2(1+u) + (1-mu)(-2(1+u) + 1), brute
  // forced over mu; the best mu matches and strong duality holds.
  double best_q = -std::numeric_limits<double>::infinity();
  double best_mu = 0.0;
  for (int i = 0; i <= 100000; ++i) {
    const double m = i * 1e-5;
    const double slope = 2.0 * m - 2.0 * (1.0 - m);  // coefficient of f
    const double u = -slope / 2.0;
    const double f = 1.0 + u;
    const double q = 1.0 + u * u + slope * f + (1.0 - m);
    if (q > best_q) {
      best_q = q;
      best_mu = m;
    }
  }
  EXPECT_NEAR(sol.value, best_q, 1e-8);
  EXPECT_NEAR(mu, best_mu, 1e-4);
}

TEST(NodalTest, IntervalControlMatchesGrid) {
  StageModel s = scalar_stage(0.9, 1.0, 0.1, 0.1);
  s.b = vec({1.0});
  s.d = 0.1;
  NodalControls controls;
  controls.interval = ControlInterval{1.0, 5.0};
  const Envelope env = cuts_1d({{0.5, 0.0}, {-1.0, 0.2}, {2.0, -3.0}});
  for (double x : {-4.0, -1.0, 0.0, 0.5, 2.0}) {
    const NodalSolution sol = solve_nodal(vec({x}), s, env, controls);
    // Oracle over the successor f: with u + v = f - 0.9 x fixed, the cost
    // 0.1 u^2 + 0.1 v^2 is minimized at v = clamp(s / 2, 1, 5). Scan f on a
    // grid plus the three kinks of the cut envelope.
    auto total = [&](double f) {
      const double sum = f - 0.9 * x;
      const double v = std::clamp(sum / 2.0, 1.0, 5.0);
      const double u = sum - v;
      return 0.1 * x * x + 0.1 * u * u + 0.1 * v * v +
             std::max({0.5 * f, -f + 0.2, 2.0 * f - 3.0});
    };
    double best = std::min({total(0.2 / 1.5), total(2.0), total(3.2 / 3.0)});
    for (int i = 0; i <= 400000; ++i) best = std::min(best, total(-20.0 + i * 1e-4));
    ASSERT_TRUE(sol.switch_value);
    EXPECT_GE(*sol.switch_value, 1.0 - 1e-12);
    EXPECT_LE(*sol.switch_value, 5.0 + 1e-12);
    EXPECT_LE(sol.value, best + 1e-9);
    EXPECT_NEAR(sol.value, best, 1e-7) << "x = " << x;
  }
}

TEST(NodalTest, BoxBoundsRespected) {
  StageModel s = scalar_stage(1.0, 1.0, 1.0, 1.0);
  NodalControls controls;
  controls.box = ControlBox{vec({-0.25}), vec({0.25})};
  const Envelope env = cuts_1d({{2.0, 0.0}});
  const NodalSolution sol = solve_nodal(vec({1.0}), s, env, controls);
  EXPECT_NEAR(sol.control(0), -0.25, 1e-12);
  EXPECT_NEAR(sol.value, 1.0 + 0.0625 + 1.5, 1e-12);
  EXPECT_LT(sol.bound_multipliers(0), 0.0);
}

TEST(NodalTest, EmptyCutsThrow) {
  const StageModel s = scalar_stage(1.0, 1.0, 1.0, 1.0);
  EXPECT_THROW(solve_nodal(vec({1.0}), s, Envelope(Kind::Sup, 1, 1), {}), StateError);
}

// Properties: multipliers in the simplex, value convex in x, and the cut
// built from the subgradient stays below the nodal value elsewhere.
TEST(NodalTest, RandomProblemsProperties) {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 4;
    const int m = 1 + trial % 2;
    StageModel s;
    s.A = Matrix::Random(n, n);
    s.B = Matrix::Random(n, m);
    s.b = Vector::Random(n);
    s.C = random_psd(rng, n, 1.0);
    s.D = random_psd(rng, m, 1.0) + 0.1 * Matrix::Identity(m, m);
    s.d = 0.3;
    NodalControls controls;
    controls.interval = ControlInterval{-1.0, 2.0};
    Envelope env(Kind::Sup, 1, n);
    for (int j = 0; j < 6; ++j) env.add(AffineCut(Vector::Random(n) * 3.0, rng.normal(), 1));

    const Vector x = Vector::Random(n);
    const NodalSolution sol = solve_nodal(x, s, env, controls);
    double total = 0.0;
    for (const auto& [j, mu] : sol.active_multipliers) {
      EXPECT_GE(mu, -1e-10);
      total += mu;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
    for (int k = 0; k < 10; ++k) {
      const Vector y = x + Vector::Random(n);
      const double vy = solve_nodal(y, s, env, controls).value;
      EXPECT_LE(sol.value + sol.subgradient.dot(y - x), vy + 1e-8);
      const double vmid = solve_nodal(0.5 * (x + y), s, env, controls).value;
      EXPECT_LE(vmid, 0.5 * (sol.value + vy) + 1e-8);
    }
  }
}

TEST(RiccatiTest, ZeroMatrixGivesC) {
  LinearStage s{Matrix::Identity(2, 2), Matrix::Ones(2, 1), 0.3 * Matrix::Identity(2, 2),
                Matrix::Identity(1, 1)};
  EXPECT_TRUE(riccati_apply(Matrix::Zero(2, 2), s).isApprox(s.C));
  EXPECT_TRUE(riccati_apply(Matrix::Zero(2, 2), s, RiccatiForm::Long).isApprox(s.C));
}

TEST(RiccatiTest, ScalarExample) {
  LinearStage s{Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                Matrix::Ones(1, 1)};
  const Matrix M = Matrix::Ones(1, 1);
  EXPECT_NEAR(riccati_apply(M, s)(0, 0), 1.5, 1e-14);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100000; ++i) {
    const double u = -5.0 + i * 1e-4;
    best = std::min(best, 1.0 + u * u + (1.0 + u) * (1.0 + u));
  }
  EXPECT_NEAR(best, 1.5, 1e-7);
  const Vector u = riccati_optimal_control(M, s, vec({1.0}));
  EXPECT_NEAR(u(0), -0.5, 1e-14);
}

TEST(RiccatiTest, ToyContraction) {
  const int n = 25;
  const LinearStage s{0.9 * Matrix::Identity(n, n), Matrix::Ones(n, 3),
                      0.1 * Matrix::Identity(n, n), 0.1 * Matrix::Identity(3, 3)};
  for (double alpha : {0.1, 0.5, 2.0}) {
    const Matrix R = riccati_apply(alpha * Matrix::Identity(n, n), s);
    const auto [lo, hi] = eig_extrema(R);
    EXPECT_GE(lo, -1e-12);
    EXPECT_LE(hi, 0.81 * alpha + 0.1 + 1e-12);
  }
}

TEST(RiccatiTest, OptimalControlConsistency) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 5;
    const int m = 1 + trial % 3;
    LinearStage s{Matrix::Random(n, n), Matrix::Random(n, m), random_psd(rng, n, 1.0),
                  random_psd(rng, m, 1.0) + 0.05 * Matrix::Identity(m, m)};
    const Matrix M = random_psd(rng, n, 3.0);
    const Vector x = Vector::Random(n);
    const Vector u = riccati_optimal_control(M, s, x);
    const Vector f = s.A * x + s.B * u;
    const double value = x.dot(s.C * x) + u.dot(s.D * u) + f.dot(M * f);
    const double expected = x.dot(riccati_apply(M, s) * x);
    EXPECT_NEAR(value, expected, 1e-10 * std::max(1.0, std::abs(expected)));
    EXPECT_LE(riccati_cross_check(M, s), 1e-8);
    // No perturbed control does better.
    for (int k = 0; k < 5; ++k) {
      const Vector w = u + 0.1 * Vector::Random(m);
      const Vector g = s.A * x + s.B * w;
      EXPECT_GE(x.dot(s.C * x) + w.dot(s.D * w) + g.dot(M * g), expected - 1e-10);
    }
  }
}

TEST(RiccatiTest, QuadraticOverloadShiftsStage) {
  LinearStage s{Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                Matrix::Ones(1, 1)};
  const PureQuadratic q(Matrix::Ones(1, 1), 3);
  const PureQuadratic r = riccati_apply(q, s);
  EXPECT_EQ(r.stage(), 2);
  EXPECT_NEAR(r.matrix()(0, 0), 1.5, 1e-14);
}

TEST(RiccatiTest, MonotoneInLoewnerOrder) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4;
    LinearStage s{Matrix::Random(n, n), Matrix::Random(n, 2), random_psd(rng, n, 1.0),
                  random_psd(rng, 2, 1.0) + 0.1 * Matrix::Identity(2, 2)};
    const Matrix M1 = random_psd(rng, n, 1.0);
    const Matrix M2 = M1 + random_psd(rng, n, 1.0);
    const Matrix diff = riccati_apply(M2, s) - riccati_apply(M1, s);
    EXPECT_GE(eig_extrema(0.5 * (diff + diff.transpose())).first, -1e-9);
  }
}

TEST(StabilityTest, ToyRecursion) {
  const Problem p = toy_problem(15, 25, 3, {1.0, 5.0});
  const SwitchedProblem s = homogenize(p, discretize_control(*p.control_interval, 5));
  const StabilityBounds b = stability_bounds(s, s.alpha_T);
  ASSERT_EQ(b.alphas.size(), 16u);
  EXPECT_DOUBLE_EQ(b.alphas[15], 0.1);
  for (int t = 14; t >= 0; --t) {
    const auto tt = static_cast<std::size_t>(t);
    // The homogenized blocks add v terms, so the bound can only be larger
    // than the base recursion.
    EXPECT_GE(b.alphas[tt], 0.81 * b.alphas[tt + 1] + 0.1 - 1e-12);
    EXPECT_GE(b.betas[tt], b.betas[tt + 1]);
    EXPECT_GE(b.betas[tt], b.alphas[tt]);
  }

  const SwitchedProblem base = as_switched(p);
  const StabilityBounds c = stability_bounds(base, base.alpha_T);
  for (int t = 14; t >= 0; --t) {
    const auto tt = static_cast<std::size_t>(t);
    EXPECT_NEAR(c.alphas[tt], 0.81 * c.alphas[tt + 1] + 0.1, 1e-12);
  }
}

TEST(StabilityTest, ZeroDynamicsAndRunningMax) {
  SwitchedProblem s;
  s.T = 2;
  s.dim = 1;
  s.m = 1;
  s.switches = {0.0, 1.0};
  s.final_cost = {Matrix::Ones(1, 1)};
  s.alpha_T = 2.0;
  const LinearStage lo{Matrix::Zero(1, 1), Matrix::Ones(1, 1), Matrix::Constant(1, 1, 1.0),
                       Matrix::Ones(1, 1)};
  const LinearStage hi{Matrix::Zero(1, 1), Matrix::Ones(1, 1), Matrix::Constant(1, 1, 3.0),
                       Matrix::Ones(1, 1)};
  s.stages = {{lo, lo}, {lo, hi}};
  const StabilityBounds b = stability_bounds(s, 2.0);
  EXPECT_EQ(b.alphas, (std::vector<double>{1.0, 3.0, 2.0}));
  EXPECT_EQ(b.betas, (std::vector<double>{3.0, 3.0, 2.0}));
}

TEST(EigenTest, Extrema) {
  auto [a, b] = eig_extrema(Matrix::Identity(4, 4));
  EXPECT_NEAR(a, 1.0, 1e-14);
  EXPECT_NEAR(b, 1.0, 1e-14);
  std::tie(a, b) = eig_extrema(vec({-2.0, 0.0, 5.0}).asDiagonal().toDenseMatrix());
  EXPECT_NEAR(a, -2.0, 1e-14);
  EXPECT_NEAR(b, 5.0, 1e-14);
  Matrix skew(2, 2);
  skew << 0, 1, 0, 0;
  EXPECT_THROW(eig_extrema(skew), InputError);
}

TEST(EigenTest, WeylAndCongruenceInequalities) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 6;
    const Matrix A = random_symmetric(rng, n);
    const Matrix B = random_symmetric(rng, n);
    const auto [amin, amax] = eig_extrema(A);
    const auto [bmin, bmax] = eig_extrema(B);
    const auto [smin, smax] = eig_extrema(A + B);
    EXPECT_GE(smin, amin + bmin - 1e-9);
    EXPECT_LE(smax, amax + bmax + 1e-9);
    const Matrix P = random_psd(rng, n, 5.0);
    const Matrix G = Matrix::Random(n, n);
    const Matrix GtPG = G.transpose() * P * G;
    EXPECT_LE(eig_extrema(0.5 * (GtPG + GtPG.transpose())).second,
              eig_extrema(Matrix(G.transpose() * G)).second * eig_extrema(P).second + 1e-9);
  }
}

}  // namespace
}  // namespace tdp
