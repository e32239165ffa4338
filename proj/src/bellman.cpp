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
#include <sstream>

namespace tdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense convex QP
//   min 1/2 z^T H z + g^T z   s.t.  R z <= r
// solved by the primal active-set method with null-space steps. H may be
// singular as long as it is positive definite on the null space of every
// working set the iteration visits (true for the epigraph form below, whose
// working set always holds at least one cut).
struct QpResult {
  Vector z;
  std::vector<int> working;
  Vector multipliers;  // aligned with `working`
  int pivots = 0;
};

// Relative distance below which a row counts as lying in the span of the
// working rows.
constexpr double kDependentRow = 1e-9;

QpResult solve_active_set(const Matrix& H, const Vector& g, const Matrix& R,
                          const Vector& r, Vector z, std::vector<int> working) {
  const Eigen::Index nz = z.size();
  const int ncons = static_cast<int>(R.rows());
  const int max_pivots = 50 * (ncons + static_cast<int>(nz)) + 100;

  for (int pivot = 0; pivot < max_pivots; ++pivot) {
    const Eigen::Index nw = static_cast<Eigen::Index>(working.size());
    Matrix Wt(nz, nw);
    for (Eigen::Index i = 0; i < nw; ++i) {
      Wt.col(i) = R.row(working[static_cast<std::size_t>(i)]).transpose();
    }
    const Eigen::HouseholderQR<Matrix> qr(Wt);
    const Matrix Q = qr.householderQ() * Matrix::Identity(nz, nz);
    const Matrix Rw = qr.matrixQR().topRows(nw).triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < nw; ++i) {
      if (std::abs(Rw(i, i)) <= kDependentRow * 1e-3 * Wt.col(i).norm()) {
        std::ostringstream os;
        os << "active-set QP: dependent working set at pivot " << pivot
           << " (size " << nw << ")";
        throw NumericError(os.str());
      }
    }

    const Vector grad = H * z + g;
    Vector step = Vector::Zero(nz);
    if (nw < nz) {
      const Matrix Z = Q.rightCols(nz - nw);
      const Eigen::LDLT<Matrix> reduced(Z.transpose() * H * Z);
      if (reduced.info() != Eigen::Success || !reduced.isPositive() ||
          reduced.vectorD().minCoeff() <= 0.0) {
        std::ostringstream os;
        os << "active-set QP: reduced Hessian not positive definite at pivot "
           << pivot << " (working set size " << nw << ")";
        throw NumericError(os.str());
      }
      step = -Z * reduced.solve(Z.transpose() * grad);
    }
    // Wt y = -(H (z + step) + g), in the least-squares sense.
    const Vector target = -(grad + H * step);
    const Vector y =
        nw == 0 ? Vector()
                : Vector(Rw.triangularView<Eigen::Upper>().solve(
                      (Q.leftCols(nw).transpose() * target).eval()));

    const double scale = 1.0 + z.lpNorm<Eigen::Infinity>();
    // Bland's rule (lowest index) once the iteration looks degenerate.
    const bool bland = pivot > 2 * (ncons + static_cast<int>(nz));
    if (step.lpNorm<Eigen::Infinity>() <= 1e-12 * scale) {
      const double tol = 1e-10 * std::max(1.0, y.lpNorm<Eigen::Infinity>());
      Eigen::Index drop = -1;
      for (Eigen::Index i = 0; i < nw; ++i) {
        if (y(i) >= -tol) continue;
        const auto wi = static_cast<std::size_t>(i);
        if (drop < 0 ||
            (bland ? working[wi] < working[static_cast<std::size_t>(drop)]
                   : y(i) < y(drop))) {
          drop = i;
        }
      }
      if (drop < 0) return QpResult{std::move(z), std::move(working), y, pivot};
      working.erase(working.begin() + drop);
      continue;
    }

    // Rows numerically in the span of the working set (near-duplicate cuts)
    // are skipped: in exact arithmetic their slope along the step is zero.
    auto dependent = [&](int i) {
      const Vector row = R.row(i).transpose();
      if (nw == 0) return false;
      const Vector coeffs = Q.leftCols(nw).transpose() * row;
      return (row - Q.leftCols(nw) * coeffs).norm() <= kDependentRow * row.norm();
    };

    const double step_norm = step.norm();
    double alpha = 1.0;
    int blocking = -1;
    for (int i = 0; i < ncons; ++i) {
      if (std::find(working.begin(), working.end(), i) != working.end()) continue;
      const double slope = R.row(i).dot(step);
      if (slope <= 1e-12 * R.row(i).norm() * step_norm) continue;
      if (dependent(i)) continue;
      const double room = std::max(0.0, r(i) - R.row(i).dot(z));
      const double a = room / slope;
      if (a < alpha || (bland && a == alpha && blocking >= 0 && i < blocking)) {
        alpha = a;
        blocking = i;
      }
    }
    z += alpha * step;
    if (blocking >= 0) working.push_back(blocking);
  }
  std::ostringstream os;
  os << "active-set QP: no convergence after " << max_pivots << " pivots ("
     << ncons << " constraints, " << nz << " variables)";
  throw NumericError(os.str());
}

}  // namespace

std::pair<double, double> eig_extrema(const Matrix& M) {
  if (M.rows() != M.cols() || M.rows() == 0) {
    throw InputError("eig_extrema: matrix must be square and nonempty");
  }
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InputError("eig_extrema: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericError("eig_extrema: eigensolver failed");
  }
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

NodalControls nodal_controls(const Problem& p) {
  return NodalControls{p.control_box, p.control_interval, std::nullopt};
}

double stage_cost(const StageModel& s, const Vector& x, const Vector& u,
                  double v) {
  return x.dot(s.C * x) + u.dot(s.D * u) + v * v * s.d;
}

Vector stage_dynamics(const StageModel& s, const Vector& x, const Vector& u,
                      double v) {
  return s.A * x + s.B * u + v * s.b;
}

NodalSolution solve_nodal(const Vector& x, const StageModel& stage,
                          const Envelope& cuts, const NodalControls& controls) {
  if (cuts.empty()) throw StateError("solve_nodal: empty cut set");
  const Eigen::Index n = stage.A.rows();
  const Eigen::Index m = stage.B.cols();
  if (x.size() != n || cuts.dim() != n) {
    throw InputError("solve_nodal: dimension mismatch");
  }

  const bool free_switch = controls.interval && !controls.fixed_switch;
  const double fixed_v = controls.fixed_switch.value_or(0.0);
  const Eigen::Index p = m + (free_switch ? 1 : 0);

  // Controls w = (u, v); cost w^T Dw w, dynamics A x + Bw w + offset.
  Matrix Dw = Matrix::Zero(p, p);
  Dw.topLeftCorner(m, m) = stage.D;
  Matrix Bw(n, p);
  Bw.leftCols(m) = stage.B;
  if (free_switch) {
    Dw(m, m) = stage.d;
    Bw.col(m) = stage.b;
  }
  const Vector drift = stage.A * x + fixed_v * stage.b;
  const double fixed_cost = x.dot(stage.C * x) + fixed_v * fixed_v * stage.d;

  Vector lo = Vector::Constant(p, -kInf);
  Vector hi = Vector::Constant(p, kInf);
  if (controls.box) {
    lo.head(m) = controls.box->lo;
    hi.head(m) = controls.box->hi;
  }
  if (free_switch) {
    lo(m) = controls.interval->lo;
    hi(m) = controls.interval->hi;
  }

  const int ncuts = static_cast<int>(cuts.size());
  Matrix G(ncuts, p);  // row j: (Bw^T a_j)^T
  Vector c(ncuts);     // <a_j, drift> + b_j
  for (int j = 0; j < ncuts; ++j) {
    const auto& cut = std::get<AffineCut>(cuts.atom(static_cast<std::size_t>(j)));
    G.row(j) = (Bw.transpose() * cut.slope).transpose();
    c(j) = cut.slope.dot(drift) + cut.intercept;
  }

  // Constraint rows over z = (w, lambda).
  std::vector<int> bound_var;
  std::vector<double> bound_sign;
  for (Eigen::Index i = 0; i < p; ++i) {
    if (std::isfinite(hi(i))) {
      bound_var.push_back(static_cast<int>(i));
      bound_sign.push_back(1.0);
    }
    if (std::isfinite(lo(i))) {
      bound_var.push_back(static_cast<int>(i));
      bound_sign.push_back(-1.0);
    }
  }
  const int nbounds = static_cast<int>(bound_var.size());
  Matrix R = Matrix::Zero(ncuts + nbounds, p + 1);
  Vector r(ncuts + nbounds);
  R.topLeftCorner(ncuts, p) = G;
  R.block(0, p, ncuts, 1).setConstant(-1.0);
  r.head(ncuts) = -c;
  for (int k = 0; k < nbounds; ++k) {
    const int i = bound_var[static_cast<std::size_t>(k)];
    const double sgn = bound_sign[static_cast<std::size_t>(k)];
    R(ncuts + k, i) = sgn;
    r(ncuts + k) = sgn > 0 ? hi(i) : -lo(i);
  }

  Matrix H = Matrix::Zero(p + 1, p + 1);
  H.topLeftCorner(p, p) = 2.0 * Dw;
  Vector g = Vector::Zero(p + 1);
  g(p) = 1.0;

  Vector z = Vector::Zero(p + 1);
  z.head(p) = Vector::Zero(p).cwiseMax(lo).cwiseMin(hi);
  const Vector level = G * z.head(p) + c;
  Eigen::Index first = 0;
  level.maxCoeff(&first);
  z(p) = level(first);

  QpResult qp = solve_active_set(H, g, R, r, std::move(z), {static_cast<int>(first)});

  NodalSolution sol;
  sol.pivots = qp.pivots;
  const Vector w = qp.z.head(p);
  sol.control = w.head(m);
  if (free_switch) {
    sol.switch_value = w(m);
  } else if (controls.fixed_switch) {
    sol.switch_value = fixed_v;
  }
  sol.value = fixed_cost + w.dot(Dw * w) + (G * w + c).maxCoeff();

  Vector weighted_slope = Vector::Zero(n);
  sol.bound_multipliers = Vector::Zero(p);
  for (std::size_t k = 0; k < qp.working.size(); ++k) {
    const int row = qp.working[k];
    const double mult = qp.multipliers(static_cast<Eigen::Index>(k));
    if (row < ncuts) {
      sol.active_multipliers[row] = mult;
      weighted_slope +=
          mult * std::get<AffineCut>(cuts.atom(static_cast<std::size_t>(row))).slope;
    } else {
      const int b = row - ncuts;
      sol.bound_multipliers(bound_var[static_cast<std::size_t>(b)]) +=
          bound_sign[static_cast<std::size_t>(b)] * mult;
    }
  }
  sol.subgradient = 2.0 * stage.C * x + stage.A.transpose() * weighted_slope;
  return sol;
}

Matrix riccati_apply(const Matrix& M, const LinearStage& s, RiccatiForm form) {
  const Eigen::Index n = s.A.rows();
  if (M.rows() != n || M.cols() != n) {
    throw InputError("riccati_apply: matrix dimension mismatch");
  }
  Matrix out;
  if (form == RiccatiForm::Reduced) {
    Eigen::LLT<Matrix> d_llt(s.D);
    if (d_llt.info() != Eigen::Success) {
      throw NumericError("riccati_apply: D is not positive definite");
    }
    const Matrix BDinvBt = s.B * d_llt.solve(s.B.transpose());
    const Matrix inner = Matrix::Identity(n, n) + BDinvBt * M;
    Eigen::PartialPivLU<Matrix> lu(inner);
    if (std::abs(lu.determinant()) < 1e-300) {
      throw NumericError("riccati_apply: I + B D^-1 B^T M is singular");
    }
    out = s.A.transpose() * M * lu.solve(s.A) + s.C;
  } else {
    const Matrix MB = M * s.B;
    const Matrix inner = s.D + s.B.transpose() * MB;
    Eigen::LLT<Matrix> llt(inner);
    if (llt.info() != Eigen::Success) {
      throw NumericError("riccati_apply: D + B^T M B is not positive definite");
    }
    const Matrix MA = M * s.A;
    out = s.C + s.A.transpose() * MA -
          (MB.transpose() * s.A).transpose() * llt.solve(MB.transpose() * s.A);
  }
  return 0.5 * (out + out.transpose());
}

PureQuadratic riccati_apply(const PureQuadratic& q, const LinearStage& stage,
                            RiccatiForm form) {
  return PureQuadratic(riccati_apply(q.matrix(), stage, form), q.stage() - 1);
}

double riccati_cross_check(const Matrix& M, const LinearStage& stage) {
  return (riccati_apply(M, stage, RiccatiForm::Reduced) -
          riccati_apply(M, stage, RiccatiForm::Long))
      .cwiseAbs()
      .maxCoeff();
}

Vector riccati_optimal_control(const Matrix& M, const LinearStage& s,
                               const Vector& x) {
  if (x.size() != s.A.rows() || M.rows() != s.A.rows()) {
    throw InputError("riccati_optimal_control: dimension mismatch");
  }
  const Matrix MB = M * s.B;
  Eigen::LLT<Matrix> llt(s.D + s.B.transpose() * MB);
  if (llt.info() != Eigen::Success) {
    throw NumericError("riccati_optimal_control: D + B^T M B is not positive definite");
  }
  return -llt.solve(MB.transpose() * (s.A * x));
}

StabilityBounds stability_bounds(const SwitchedProblem& p, double alpha_T) {
  const auto T = static_cast<std::size_t>(p.T);
  StabilityBounds out;
  out.alphas.assign(T + 1, 0.0);
  out.betas.assign(T + 1, 0.0);
  out.alphas[T] = alpha_T;
  out.betas[T] = alpha_T;
  for (std::size_t t = T; t-- > 0;) {
    double alpha = 0.0;
    for (const LinearStage& s : p.stages[t]) {
      const double grow = eig_extrema(s.A.transpose() * s.A).second;
      const double cost = eig_extrema(s.C).second;
      alpha = std::max(alpha, out.alphas[t + 1] * grow + cost);
    }
    out.alphas[t] = alpha;
    out.betas[t] = std::max(alpha, out.betas[t + 1]);
  }
  return out;
}

}  // namespace tdp
