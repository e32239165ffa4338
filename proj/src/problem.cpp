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

#include "tdp/problem.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "tdp/bellman.hpp"

namespace tdp {

using nlohmann::json;

namespace {

std::string stage_label(int t) { return "stage " + std::to_string(t); }

void require(bool cond, const std::string& msg) {
  if (!cond) throw InputError(msg);
}

void require_shape(const Matrix& M, Eigen::Index rows, Eigen::Index cols,
                   const std::string& what) {
  if (M.rows() != rows || M.cols() != cols) {
    std::ostringstream os;
    os << what << ": expected " << rows << "x" << cols << ", got " << M.rows()
       << "x" << M.cols();
    throw InputError(os.str());
  }
}

void require_psd(const Matrix& M, const std::string& what) {
  const auto [lo, hi] = eig_extrema(M);
  (void)hi;
  if (lo < -kPsdTolerance) {
    std::ostringstream os;
    os << what << " is not positive semidefinite (smallest eigenvalue " << lo
       << ")";
    throw InputError(os.str());
  }
}

void require_pd(const Matrix& M, const std::string& what) {
  const auto [lo, hi] = eig_extrema(M);
  (void)hi;
  if (lo < kPdTolerance) {
    std::ostringstream os;
    os << what << " is not positive definite (smallest eigenvalue " << lo
       << ")";
    throw InputError(os.str());
  }
}

void require_symmetric(const Matrix& M, const std::string& what) {
  if (!M.isApprox(M.transpose(), 1e-12) &&
      (M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InputError(what + " is not symmetric");
  }
}

// Matrix literal: nested row-major arrays, {"scaledId": c}, {"ones": true}
// or {"zeros": true}.
Matrix parse_matrix(const json& j, Eigen::Index rows, Eigen::Index cols,
                    const std::string& what) {
  if (j.is_object()) {
    if (j.contains("scaledId")) {
      require(rows == cols, what + ": scaledId requires a square matrix");
      return j.at("scaledId").get<double>() * Matrix::Identity(rows, cols);
    }
    if (j.contains("ones")) return Matrix::Ones(rows, cols);
    if (j.contains("zeros")) return Matrix::Zero(rows, cols);
    throw InputError(what + ": unknown matrix shorthand " + j.dump());
  }
  require(j.is_array(), what + ": expected a matrix");
  require(static_cast<Eigen::Index>(j.size()) == rows,
          what + ": expected " + std::to_string(rows) + " rows");
  Matrix M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols,
            what + ": row " + std::to_string(r) + " must have " +
                std::to_string(cols) + " entries");
    for (Eigen::Index c = 0; c < cols; ++c) {
      M(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return M;
}

// Vector literal: array, {"ones": true}, {"zeros": true} or {"fill": c}.
Vector parse_vector(const json& j, Eigen::Index size, const std::string& what) {
  if (j.is_object()) {
    if (j.contains("ones")) return Vector::Ones(size);
    if (j.contains("zeros")) return Vector::Zero(size);
    if (j.contains("fill")) {
      return Vector::Constant(size, j.at("fill").get<double>());
    }
    throw InputError(what + ": unknown vector shorthand " + j.dump());
  }
  require(j.is_array() && static_cast<Eigen::Index>(j.size()) == size,
          what + ": expected a vector of size " + std::to_string(size));
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

void validate_final_cost(const std::vector<Matrix>& final_cost,
                         Eigen::Index dim, double alpha_T) {
  require(!final_cost.empty(), "final_cost: at least one matrix is required");
  for (std::size_t i = 0; i < final_cost.size(); ++i) {
    const std::string what = "final_cost[" + std::to_string(i) + "]";
    require_shape(final_cost[i], dim, dim, what);
    require_symmetric(final_cost[i], what);
    require_psd(final_cost[i], what);
    const double top = eig_extrema(final_cost[i]).second;
    if (top > alpha_T + kPsdTolerance) {
      std::ostringstream os;
      os << what << " exceeds alpha_T * Id (largest eigenvalue " << top
         << " > alpha_T = " << alpha_T << ")";
      throw InputError(os.str());
    }
  }
}

}  // namespace

bool operator==(const Problem& lhs, const Problem& rhs) {
  if (lhs.T != rhs.T || lhs.n != rhs.n || lhs.m != rhs.m ||
      lhs.alpha_T != rhs.alpha_T || lhs.stages.size() != rhs.stages.size() ||
      lhs.final_cost.size() != rhs.final_cost.size()) {
    return false;
  }
  for (std::size_t t = 0; t < lhs.stages.size(); ++t) {
    const StageModel& a = lhs.stages[t];
    const StageModel& b = rhs.stages[t];
    if (!same(a.A, b.A) || !same(a.B, b.B) || !same(a.b, b.b) ||
        !same(a.C, b.C) || !same(a.D, b.D) || a.d != b.d) {
      return false;
    }
  }
  for (std::size_t i = 0; i < lhs.final_cost.size(); ++i) {
    if (!same(lhs.final_cost[i], rhs.final_cost[i])) return false;
  }
  if (lhs.control_interval.has_value() != rhs.control_interval.has_value())
    return false;
  if (lhs.control_interval &&
      (lhs.control_interval->lo != rhs.control_interval->lo ||
       lhs.control_interval->hi != rhs.control_interval->hi)) {
    return false;
  }
  if (lhs.control_box.has_value() != rhs.control_box.has_value()) return false;
  if (lhs.control_box && (!same(lhs.control_box->lo, rhs.control_box->lo) ||
                          !same(lhs.control_box->hi, rhs.control_box->hi))) {
    return false;
  }
  if (lhs.x0.has_value() != rhs.x0.has_value()) return false;
  return !lhs.x0 || same(*lhs.x0, *rhs.x0);
}

void validate(const Problem& p) {
  require(p.T >= 1, "T must be a positive integer");
  require(p.n >= 1, "n must be a positive integer");
  require(p.m >= 1, "m must be a positive integer");
  require(static_cast<int>(p.stages.size()) == p.T,
          "expected " + std::to_string(p.T) + " stages, got " +
              std::to_string(p.stages.size()));
  for (int t = 0; t < p.T; ++t) {
    const StageModel& s = p.stages[static_cast<std::size_t>(t)];
    const std::string at = stage_label(t);
    require_shape(s.A, p.n, p.n, at + " A");
    require_shape(s.B, p.n, p.m, at + " B");
    require(s.b.size() == p.n, at + " b: expected size " + std::to_string(p.n));
    require_shape(s.C, p.n, p.n, at + " C");
    require_shape(s.D, p.m, p.m, at + " D");
    require_symmetric(s.C, at + " C");
    require_symmetric(s.D, at + " D");
    require_psd(s.C, at + " C");
    require_pd(s.D, at + " D");
    require(std::isfinite(s.d) && s.d >= 0.0, at + " d must be nonnegative");
    if (p.control_interval) {
      require(s.d > 0.0,
              at + " d must be positive when a control interval is declared");
    }
  }
  validate_final_cost(p.final_cost, p.n, p.alpha_T);
  if (p.control_interval) {
    require(p.control_interval->lo < p.control_interval->hi,
            "control_interval: expected beta < gamma");
  }
  if (p.control_box) {
    require(p.control_box->lo.size() == p.m && p.control_box->hi.size() == p.m,
            "control_box: bounds must have size m");
    require((p.control_box->lo.array() <= p.control_box->hi.array()).all(),
            "control_box: lo must not exceed hi");
  }
  if (p.x0) require(p.x0->size() == p.n, "x0: expected size n");
}

void validate(const SwitchedProblem& p) {
  require(p.T >= 1, "T must be a positive integer");
  require(p.dim >= 1 && p.m >= 1, "dimensions must be positive");
  require(!p.switches.empty(), "switches must be nonempty");
  for (std::size_t i = 1; i < p.switches.size(); ++i) {
    require(p.switches[i - 1] < p.switches[i],
            "switches must be strictly increasing");
  }
  require(static_cast<int>(p.stages.size()) == p.T, "expected T stages");
  for (int t = 0; t < p.T; ++t) {
    const auto& per_switch = p.stages[static_cast<std::size_t>(t)];
    require(per_switch.size() == p.switches.size(),
            stage_label(t) + ": one model per switch is required");
    for (std::size_t i = 0; i < per_switch.size(); ++i) {
      const LinearStage& s = per_switch[i];
      const std::string at =
          stage_label(t) + " switch " + std::to_string(p.switches[i]);
      require_shape(s.A, p.dim, p.dim, at + " A");
      require_shape(s.B, p.dim, p.m, at + " B");
      require_shape(s.C, p.dim, p.dim, at + " C");
      require_shape(s.D, p.m, p.m, at + " D");
      require_psd(s.C, at + " C");
      require_pd(s.D, at + " D");
    }
  }
  validate_final_cost(p.final_cost, p.dim, p.alpha_T);
}

Problem problem_from_json(const json& j) {
  try {
    Problem p;
    p.T = j.at("T").get<int>();
    p.n = j.at("n").get<int>();
    p.m = j.at("m").get<int>();
    require(p.T >= 1 && p.n >= 1 && p.m >= 1, "T, n and m must be positive");

    const json& stages = j.at("stages");
    require(stages.is_array() && !stages.empty(), "stages must be a nonempty array");
    for (const json& entry : stages) {
      const int t = static_cast<int>(p.stages.size());
      const std::string at = stage_label(t);
      StageModel s;
      s.A = parse_matrix(entry.at("A"), p.n, p.n, at + " A");
      s.B = parse_matrix(entry.at("B"), p.n, p.m, at + " B");
      s.b = entry.contains("b") ? parse_vector(entry.at("b"), p.n, at + " b")
                                : Vector::Zero(p.n);
      s.C = parse_matrix(entry.at("C"), p.n, p.n, at + " C");
      s.D = parse_matrix(entry.at("D"), p.m, p.m, at + " D");
      s.d = entry.value("d", 0.0);
      const int repeat = entry.value("repeat", 1);
      require(repeat >= 1, at + ": repeat must be positive");
      for (int r = 0; r < repeat; ++r) p.stages.push_back(s);
    }

    for (const json& M : j.at("final_cost")) {
      p.final_cost.push_back(parse_matrix(M, p.n, p.n, "final_cost"));
    }
    if (j.contains("control_interval")) {
      const json& ci = j.at("control_interval");
      require(ci.is_array() && ci.size() == 2,
              "control_interval must be [beta, gamma]");
      p.control_interval = ControlInterval{ci[0].get<double>(), ci[1].get<double>()};
    }
    if (j.contains("control_box")) {
      const json& box = j.at("control_box");
      p.control_box = ControlBox{parse_vector(box.at("lo"), p.m, "control_box lo"),
                                 parse_vector(box.at("hi"), p.m, "control_box hi")};
    }
    p.alpha_T = j.at("alpha_T").get<double>();
    if (j.contains("x0")) p.x0 = parse_vector(j.at("x0"), p.n, "x0");
    validate(p);
    return p;
  } catch (const json::exception& e) {
    throw InputError(std::string("problem file: ") + e.what());
  }
}

json problem_to_json(const Problem& p) {
  json j;
  j["T"] = p.T;
  j["n"] = p.n;
  j["m"] = p.m;
  json stages = json::array();
  for (const StageModel& s : p.stages) {
    stages.push_back({{"A", matrix_to_json(s.A)},
                      {"B", matrix_to_json(s.B)},
                      {"b", vector_to_json(s.b)},
                      {"C", matrix_to_json(s.C)},
                      {"D", matrix_to_json(s.D)},
                      {"d", s.d}});
  }
  j["stages"] = std::move(stages);
  json final_cost = json::array();
  for (const Matrix& M : p.final_cost) final_cost.push_back(matrix_to_json(M));
  j["final_cost"] = std::move(final_cost);
  if (p.control_interval) {
    j["control_interval"] = {p.control_interval->lo, p.control_interval->hi};
  }
  if (p.control_box) {
    j["control_box"] = {{"lo", vector_to_json(p.control_box->lo)},
                        {"hi", vector_to_json(p.control_box->hi)}};
  }
  j["alpha_T"] = p.alpha_T;
  if (p.x0) j["x0"] = vector_to_json(*p.x0);
  return j;
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open problem file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("problem file " + path + ": " + e.what());
  }
  return problem_from_json(j);
}

void save_problem(const Problem& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write problem file: " + path);
  out << problem_to_json(p).dump(2) << '\n';
}

std::vector<double> discretize_control(const ControlInterval& interval, int N) {
  if (N < 2) throw InputError("discretize_control: N must be at least 2");
  if (!(interval.lo < interval.hi)) {
    throw InputError("discretize_control: expected beta < gamma");
  }
  std::vector<double> v(static_cast<std::size_t>(N));
  const double step = (interval.hi - interval.lo) / (N - 1);
  for (int i = 0; i < N; ++i) v[static_cast<std::size_t>(i)] = interval.lo + i * step;
  v.back() = interval.hi;
  return v;
}

SwitchedProblem homogenize(const Problem& p, const std::vector<double>& switches) {
  validate(p);
  if (switches.empty()) throw InputError("homogenize: no switch values");
  const Eigen::Index n = p.n;
  SwitchedProblem out;
  out.T = p.T;
  out.dim = p.n + 1;
  out.m = p.m;
  out.switches = switches;
  out.alpha_T = p.alpha_T;
  for (const StageModel& s : p.stages) {
    std::vector<LinearStage> per_switch;
    per_switch.reserve(switches.size());
    for (double v : switches) {
      LinearStage h;
      h.A = Matrix::Zero(n + 1, n + 1);
      h.A.topLeftCorner(n, n) = s.A;
      h.A.topRightCorner(n, 1) = v * s.b;
      h.A(n, n) = 1.0;
      h.B = Matrix::Zero(n + 1, p.m);
      h.B.topRows(n) = s.B;
      h.C = Matrix::Zero(n + 1, n + 1);
      h.C.topLeftCorner(n, n) = s.C;
      h.C(n, n) = v * v * s.d;
      h.D = s.D;
      per_switch.push_back(std::move(h));
    }
    out.stages.push_back(std::move(per_switch));
  }
  for (const Matrix& M : p.final_cost) {
    Matrix H = Matrix::Zero(n + 1, n + 1);
    H.topLeftCorner(n, n) = M;
    out.final_cost.push_back(std::move(H));
  }
  validate(out);
  return out;
}

SwitchedProblem as_switched(const Problem& p) {
  validate(p);
  SwitchedProblem out;
  out.T = p.T;
  out.dim = p.n;
  out.m = p.m;
  out.switches = {0.0};
  out.alpha_T = p.alpha_T;
  for (const StageModel& s : p.stages) {
    out.stages.push_back({LinearStage{s.A, s.B, s.C, s.D}});
  }
  out.final_cost = p.final_cost;
  return out;
}

Vector lift(const Vector& x) {
  Vector y(x.size() + 1);
  y.head(x.size()) = x;
  y(x.size()) = 1.0;
  return y;
}

Problem toy_problem(int T, int n, int m, ControlInterval interval) {
  Problem p;
  p.T = T;
  p.n = n;
  p.m = m;
  StageModel s;
  s.A = 0.9 * Matrix::Identity(n, n);
  s.B = Matrix::Ones(n, m);
  s.b = Vector::Ones(n);
  s.C = 0.1 * Matrix::Identity(n, n);
  s.D = 0.1 * Matrix::Identity(m, m);
  s.d = 0.1;
  p.stages.assign(static_cast<std::size_t>(T), s);
  p.final_cost = {0.1 * Matrix::Identity(n, n)};
  p.alpha_T = 0.1;
  p.control_interval = interval;
  p.x0 = Vector::Constant(n, 0.2);
  validate(p);
  return p;
}

}  // namespace tdp
