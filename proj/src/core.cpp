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
#include <sstream>

namespace tdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_dim(Eigen::Index expected, const Vector& x, const char* what) {
  if (x.size() != expected) {
    std::ostringstream os;
    os << what << ": expected a vector of dimension " << expected << ", got "
       << x.size();
    throw InputError(os.str());
  }
}

}  // namespace

ExtReal::ExtReal(double value) : value_(value) {
  if (std::isnan(value)) throw InputError("ExtReal: NaN is not an extended real");
}

ExtReal ExtReal::PlusInfinity() { return ExtReal(kInf); }
ExtReal ExtReal::MinusInfinity() { return ExtReal(-kInf); }

bool ExtReal::is_finite() const { return std::isfinite(value_); }
bool ExtReal::is_plus_infinity() const { return value_ == kInf; }
bool ExtReal::is_minus_infinity() const { return value_ == -kInf; }

ExtReal operator+(ExtReal lhs, ExtReal rhs) {
  if (lhs.is_plus_infinity() || rhs.is_plus_infinity()) {
    return ExtReal::PlusInfinity();
  }
  return ExtReal(lhs.value_ + rhs.value_);
}

ExtReal operator-(ExtReal x) { return ExtReal(-x.value_); }

std::string to_string(ExtReal x) {
  if (x.is_plus_infinity()) return "+inf";
  if (x.is_minus_infinity()) return "-inf";
  std::ostringstream os;
  os.precision(17);
  os << x.value();
  return os.str();
}

const char* to_string(Kind kind) { return kind == Kind::Inf ? "inf" : "sup"; }

AffineCut::AffineCut(Vector slope_in, double intercept_in, int stage_in)
    : slope(std::move(slope_in)), intercept(intercept_in), stage(stage_in) {
  if (!slope.allFinite() || !std::isfinite(intercept)) {
    throw InputError("AffineCut: slope and intercept must be finite");
  }
}

double AffineCut::operator()(const Vector& x) const {
  check_dim(dim(), x, "AffineCut");
  return slope.dot(x) + intercept;
}

PureQuadratic::PureQuadratic(const Matrix& matrix, int stage)
    : matrix_(0.5 * (matrix + matrix.transpose())), stage_(stage) {
  if (matrix.rows() != matrix.cols()) {
    throw InputError("PureQuadratic: matrix must be square");
  }
  if (!matrix_.allFinite()) {
    throw InputError("PureQuadratic: matrix must be finite");
  }
}

double PureQuadratic::operator()(const Vector& x) const {
  check_dim(dim(), x, "PureQuadratic");
  return x.dot(matrix_ * x);
}

Eigen::Index atom_dim(const BasicFunction& f) {
  return std::visit([](const auto& a) { return a.dim(); }, f);
}

int atom_stage(const BasicFunction& f) {
  if (const auto* cut = std::get_if<AffineCut>(&f)) return cut->stage;
  return std::get<PureQuadratic>(f).stage();
}

double evaluate_atom(const BasicFunction& f, const Vector& x) {
  return std::visit([&x](const auto& a) { return a(x); }, f);
}

Envelope::Envelope(Kind kind, int stage, Eigen::Index dim)
    : kind_(kind), stage_(stage), dim_(dim) {
  if (dim <= 0) throw InputError("Envelope: dimension must be positive");
}

void Envelope::add(BasicFunction atom) {
  if (atom_dim(atom) != dim_) {
    throw InputError("Envelope::add: atom dimension " +
                     std::to_string(atom_dim(atom)) + " != envelope dimension " +
                     std::to_string(dim_));
  }
  if (atom_stage(atom) != stage_) {
    throw InputError("Envelope::add: atom stage " +
                     std::to_string(atom_stage(atom)) + " != envelope stage " +
                     std::to_string(stage_));
  }
  if (!atoms_.empty() && atoms_.front().index() != atom.index()) {
    throw InputError("Envelope::add: cannot mix cuts and quadratics");
  }
  atoms_.push_back(std::move(atom));
}

void Envelope::replace_last(BasicFunction atom) {
  if (atoms_.empty()) throw StateError("Envelope::replace_last: no atoms");
  BasicFunction previous = std::move(atoms_.back());
  atoms_.pop_back();
  try {
    add(std::move(atom));
  } catch (...) {
    atoms_.push_back(std::move(previous));
    throw;
  }
}

Envelope Envelope::prefix(std::size_t k) const {
  if (k > atoms_.size()) {
    throw InputError("Envelope::prefix: k exceeds the number of atoms");
  }
  Envelope out(kind_, stage_, dim_);
  out.atoms_.assign(atoms_.begin(), atoms_.begin() + static_cast<long>(k));
  return out;
}

ExtReal evaluate_envelope(const Envelope& env, const Vector& x) {
  check_dim(env.dim(), x, "evaluate_envelope");
  if (env.empty()) {
    return env.kind() == Kind::Inf ? ExtReal::PlusInfinity()
                                   : ExtReal::MinusInfinity();
  }
  return ExtReal(argmin_atom(env, x).value);
}

AtomChoice argmin_atom(const Envelope& env, const Vector& x) {
  check_dim(env.dim(), x, "argmin_atom");
  if (env.empty()) throw StateError("argmin_atom: envelope has no atoms");
  AtomChoice best{0, evaluate_atom(env.atom(0), x)};
  for (std::size_t i = 1; i < env.size(); ++i) {
    const double v = evaluate_atom(env.atom(i), x);
    const bool better =
        env.kind() == Kind::Inf ? v < best.value : v > best.value;
    if (better) best = {i, v};
  }
  return best;
}

}  // namespace tdp
