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

#ifndef TDP_CORE_HPP_
#define TDP_CORE_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace tdp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Malformed user input: dimension mismatches, bad files, bad flags.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was called on an object in the wrong state (e.g. an empty
// envelope where atoms are required).
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine failed (singular system, no convergence).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Real number extended with +inf and -inf. Unlike IEEE arithmetic,
// (+inf) + (-inf) is +inf; NaN is never representable.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  ExtReal(double value);  // NOLINT: implicit from finite or infinite doubles

  static ExtReal PlusInfinity();
  static ExtReal MinusInfinity();

  bool is_finite() const;
  bool is_plus_infinity() const;
  bool is_minus_infinity() const;

  // Underlying double, +-inf encoded as IEEE infinities.
  double value() const { return value_; }

  friend ExtReal operator+(ExtReal lhs, ExtReal rhs);
  friend ExtReal operator-(ExtReal x);
  friend bool operator==(ExtReal lhs, ExtReal rhs) {
    return lhs.value_ == rhs.value_;
  }
  friend bool operator<(ExtReal lhs, ExtReal rhs) {
    return lhs.value_ < rhs.value_;
  }
  friend bool operator>(ExtReal lhs, ExtReal rhs) { return rhs < lhs; }
  friend bool operator<=(ExtReal lhs, ExtReal rhs) { return !(rhs < lhs); }
  friend bool operator>=(ExtReal lhs, ExtReal rhs) { return !(lhs < rhs); }

 private:
  double value_ = 0.0;
};

std::string to_string(ExtReal x);

// Whether an envelope takes the pointwise infimum or supremum of its atoms.
enum class Kind { Inf, Sup };

const char* to_string(Kind kind);

// x -> <slope, x> + intercept.
struct AffineCut {
  Vector slope;
  double intercept = 0.0;
  int stage = 0;

  AffineCut() = default;
  AffineCut(Vector slope, double intercept, int stage);

  Eigen::Index dim() const { return slope.size(); }
  double operator()(const Vector& x) const;
};

// x -> x^T M x with M symmetric (symmetrized on construction).
class PureQuadratic {
 public:
  PureQuadratic() = default;
  PureQuadratic(const Matrix& matrix, int stage);

  const Matrix& matrix() const { return matrix_; }
  int stage() const { return stage_; }
  Eigen::Index dim() const { return matrix_.rows(); }
  double operator()(const Vector& x) const;

 private:
  Matrix matrix_;
  int stage_ = 0;
};

using BasicFunction = std::variant<AffineCut, PureQuadratic>;

Eigen::Index atom_dim(const BasicFunction& f);
int atom_stage(const BasicFunction& f);

// Value of a single atom at x. Throws InputError on dimension mismatch.
double evaluate_atom(const BasicFunction& f, const Vector& x);

struct AtomChoice {
  std::size_t index = 0;
  double value = 0.0;
};

// Pointwise optimum of a finite set of basic functions. Atoms are kept in
// insertion order; nothing is ever removed.
class Envelope {
 public:
  Envelope(Kind kind, int stage, Eigen::Index dim);

  Kind kind() const { return kind_; }
  int stage() const { return stage_; }
  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  const std::vector<BasicFunction>& atoms() const { return atoms_; }
  const BasicFunction& atom(std::size_t i) const { return atoms_.at(i); }

  // Throws InputError if the atom's variant, dimension or stage disagree
  // with atoms already present.
  void add(BasicFunction atom);

  // Overwrites the most recent atom. Only for fault-injection tests; the
  // TDP loop never rewrites atoms.
  void replace_last(BasicFunction atom);

  // Envelope made of the first k atoms (the state after k insertions).
  Envelope prefix(std::size_t k) const;

 private:
  Kind kind_;
  int stage_;
  Eigen::Index dim_;
  std::vector<BasicFunction> atoms_;
};

// inf (or sup) of the atoms at x; +inf for an empty Inf-envelope, -inf for
// an empty Sup-envelope.
ExtReal evaluate_envelope(const Envelope& env, const Vector& x);

// Index of the optimal atom at x under the envelope's kind, lowest index on
// ties. Throws StateError when the envelope is empty.
AtomChoice argmin_atom(const Envelope& env, const Vector& x);

}  // namespace tdp

#endif  // TDP_CORE_HPP_
