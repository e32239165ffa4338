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

#include "tdp/core.hpp"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

namespace tdp {
namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

TEST(ExtRealTest, InfinityArithmetic) {
  const ExtReal p = ExtReal::PlusInfinity();
  const ExtReal m = ExtReal::MinusInfinity();
  EXPECT_TRUE((p + m).is_plus_infinity());
  EXPECT_TRUE((m + p).is_plus_infinity());
  EXPECT_TRUE((m + ExtReal(3.0)).is_minus_infinity());
  EXPECT_EQ((ExtReal(1.5) + ExtReal(2.0)).value(), 3.5);
  EXPECT_TRUE((-p).is_minus_infinity());
  EXPECT_LT(m, ExtReal(0.0));
  EXPECT_GT(p, ExtReal(1e308));
  EXPECT_EQ(to_string(p), "+inf");
  EXPECT_EQ(to_string(m), "-inf");
}

TEST(ExtRealTest, RejectsNaN) {
  EXPECT_THROW(ExtReal(std::numeric_limits<double>::quiet_NaN()), InputError);
}

TEST(AtomTest, CutValue) {
  const AffineCut cut(vec({2.0}), -1.0, 0);
  EXPECT_DOUBLE_EQ(cut(vec({3.0})), 5.0);
}

TEST(AtomTest, QuadraticValue) {
  const PureQuadratic q(Matrix::Identity(3, 3), 0);
  EXPECT_DOUBLE_EQ(q(Vector::Ones(3)), 3.0);
}

TEST(AtomTest, QuadraticIsSymmetrized) {
  Matrix M(2, 2);
  M << 1, 2, 2, 1;
  const PureQuadratic q(M, 0);
  EXPECT_DOUBLE_EQ(q(vec({1.0, 1.0})), 6.0);

  Matrix skew(2, 2);
  skew << 1, 4, 0, 1;
  const PureQuadratic s(skew, 0);
  EXPECT_DOUBLE_EQ(s.matrix()(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(s.matrix()(1, 0), 2.0);
}

TEST(AtomTest, DimensionMismatchThrows) {
  const PureQuadratic q(Matrix::Identity(2, 2), 0);
  EXPECT_THROW(q(Vector::Ones(3)), InputError);
  const AffineCut cut(Vector::Ones(2), 0.0, 0);
  EXPECT_THROW(cut(Vector::Ones(1)), InputError);
  EXPECT_THROW(PureQuadratic(Matrix::Ones(2, 3), 0), InputError);
}

TEST(EnvelopeTest, EmptyEnvelopes) {
  const Envelope inf(Kind::Inf, 0, 3);
  const Envelope sup(Kind::Sup, 0, 3);
  EXPECT_TRUE(evaluate_envelope(inf, Vector::Ones(3)).is_plus_infinity());
  EXPECT_TRUE(evaluate_envelope(sup, Vector::Ones(3)).is_minus_infinity());
  EXPECT_THROW(argmin_atom(inf, Vector::Ones(3)), StateError);
}

TEST(EnvelopeTest, ZeroCut) {
  Envelope env(Kind::Sup, 0, 4);
  env.add(AffineCut(Vector::Zero(4), 0.0, 0));
  EXPECT_EQ(evaluate_envelope(env, Vector::Ones(4)).value(), 0.0);
}

TEST(EnvelopeTest, InfOfQuadratics) {
  Envelope env(Kind::Inf, 2, 2);
  env.add(PureQuadratic(Matrix::Identity(2, 2), 2));
  env.add(PureQuadratic(2.0 * Matrix::Identity(2, 2), 2));
  EXPECT_EQ(evaluate_envelope(env, vec({1.0, 0.0})).value(), 1.0);
}

TEST(EnvelopeTest, ArgminExamples) {
  Envelope a(Kind::Inf, 0, 2);
  a.add(PureQuadratic(3.0 * Matrix::Identity(2, 2), 0));
  a.add(PureQuadratic(Matrix::Identity(2, 2), 0));
  const AtomChoice ca = argmin_atom(a, vec({1.0, 0.0}));
  EXPECT_EQ(ca.index, 1u);
  EXPECT_EQ(ca.value, 1.0);

  Envelope b(Kind::Sup, 0, 1);
  b.add(AffineCut(vec({0.0}), 0.0, 0));
  b.add(AffineCut(vec({1.0}), -2.0, 0));
  const AtomChoice cb = argmin_atom(b, vec({1.0}));
  EXPECT_EQ(cb.index, 0u);
  EXPECT_EQ(cb.value, 0.0);

  Envelope c(Kind::Inf, 0, 2);
  Matrix M1(2, 2), M2(2, 2);
  M1 << 1, 0, 0, 5;
  M2 << 4, 0, 0, 1;
  c.add(PureQuadratic(M1, 0));
  c.add(PureQuadratic(M2, 0));
  const AtomChoice cc = argmin_atom(c, vec({0.0, 1.0}));
  EXPECT_EQ(cc.index, 1u);
  EXPECT_EQ(cc.value, 1.0);
}

TEST(EnvelopeTest, TiesGoToLowestIndex) {
  Envelope env(Kind::Inf, 0, 1);
  env.add(PureQuadratic(Matrix::Identity(1, 1), 0));
  env.add(PureQuadratic(Matrix::Identity(1, 1), 0));
  EXPECT_EQ(argmin_atom(env, vec({2.0})).index, 0u);
}

TEST(EnvelopeTest, AddValidates) {
  Envelope env(Kind::Sup, 1, 2);
  EXPECT_THROW(env.add(AffineCut(Vector::Ones(3), 0.0, 1)), InputError);
  EXPECT_THROW(env.add(AffineCut(Vector::Ones(2), 0.0, 0)), InputError);
  env.add(AffineCut(Vector::Ones(2), 0.0, 1));
  EXPECT_THROW(env.add(PureQuadratic(Matrix::Identity(2, 2), 1)), InputError);
  EXPECT_EQ(env.size(), 1u);
}

TEST(EnvelopeTest, PrefixAndReplace) {
  Envelope env(Kind::Sup, 0, 1);
  for (int i = 0; i < 4; ++i) env.add(AffineCut(vec({1.0}), i, 0));
  EXPECT_EQ(env.prefix(2).size(), 2u);
  EXPECT_EQ(evaluate_envelope(env.prefix(2), vec({0.0})).value(), 1.0);
  EXPECT_THROW(env.prefix(5), InputError);
  env.replace_last(AffineCut(vec({1.0}), 10.0, 0));
  EXPECT_EQ(evaluate_envelope(env, vec({0.0})).value(), 10.0);
  EXPECT_THROW(env.replace_last(AffineCut(vec({1.0, 2.0}), 0.0, 0)), InputError);
  EXPECT_EQ(env.size(), 4u);
}

// Sup of cuts is convex; Inf of PSD quadratics is 2-homogeneous.
TEST(EnvelopeTest, StructuralProperties) {
  Envelope sup(Kind::Sup, 0, 2);
  sup.add(AffineCut(vec({1.0, -1.0}), 0.5, 0));
  sup.add(AffineCut(vec({-2.0, 0.5}), -1.0, 0));
  sup.add(AffineCut(vec({0.3, 2.0}), 0.0, 0));
  Envelope inf(Kind::Inf, 0, 2);
  inf.add(PureQuadratic(Matrix::Identity(2, 2), 0));
  Matrix M(2, 2);
  M << 3, 1, 1, 0.5;
  inf.add(PureQuadratic(M, 0));
  for (int i = 0; i < 50; ++i) {
    const Vector x = Vector::Random(2);
    const Vector y = Vector::Random(2);
    const double mid = evaluate_envelope(sup, 0.5 * (x + y)).value();
    EXPECT_LE(mid, 0.5 * (evaluate_envelope(sup, x).value() +
                          evaluate_envelope(sup, y).value()) + 1e-12);
    const double lam = 0.1 + i * 0.1;
    EXPECT_NEAR(evaluate_envelope(inf, lam * x).value(),
                lam * lam * evaluate_envelope(inf, x).value(), 1e-10);
  }
}

}  // namespace
}  // namespace tdp
