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

#include "tdp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace tdp {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string format_optional(const std::optional<double>& x) {
  return x ? format_double(*x) : std::string();
}

// Reads both envelopes along `points` (one per stage).
void append_rows(PairedResult& result, int k, const std::vector<Vector>& points,
                 const TdpEngine* lower, const TdpEngine* upper,
                 double lower_ms, double upper_ms) {
  for (std::size_t t = 0; t < points.size(); ++t) {
    GapRecord row;
    row.iteration = k;
    row.stage = static_cast<int>(t);
    const Vector& x = points[t];
    if (lower != nullptr) {
      row.lower = evaluate_envelope(lower->state().envelopes[t], x).value();
    }
    if (upper != nullptr) {
      const Envelope& env = upper->state().envelopes[t];
      const Vector y = env.dim() == x.size() + 1 ? lift(x) : x;
      row.upper = restrict_to_slice(evaluate_envelope(env, y)).value();
    }
    row.wall_ms = lower_ms + upper_ms;
    result.rows.push_back(std::move(row));
  }
}

// Polyline chart with a shared y range; series are (label, x, y).
struct Series {
  std::string label;
  std::string color;
  std::vector<double> xs;
  std::vector<double> ys;
};

void write_svg(const std::string& path, const std::string& title,
               const std::string& x_label, const std::vector<Series>& series) {
  constexpr double W = 640, H = 400, L = 70, R = 20, Tm = 40, B = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      xmin = std::min(xmin, s.xs[i]);
      xmax = std::max(xmax, s.xs[i]);
      ymin = std::min(ymin, s.ys[i]);
      ymax = std::max(ymax, s.ys[i]);
    }
  }
  if (xmin > xmax) return;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - Tm - B); };

  std::ofstream out(path);
  out << std::setprecision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
      << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title
      << "</text>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R
      << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\""
      << H - B << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 10
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  out << "<text x=\"" << L - 5 << "\" y=\"" << Tm << "\" text-anchor=\"end\">"
      << ymax << "</text>\n";
  out << "<text x=\"" << L - 5 << "\" y=\"" << H - B << "\" text-anchor=\"end\">"
      << ymin << "</text>\n";
  out << "<text x=\"" << L << "\" y=\"" << H - B + 15 << "\">" << xmin << "</text>\n";
  out << "<text x=\"" << W - R << "\" y=\"" << H - B + 15
      << "\" text-anchor=\"end\">" << xmax << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" points=\"";
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      out << px(s.xs[i]) << ',' << py(s.ys[i]) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << W - R - 5 << "\" y=\"" << Tm + 15 * static_cast<double>(k)
        << "\" text-anchor=\"end\" fill=\"" << s.color << "\">" << s.label
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace

Mode parse_mode(const std::string& s) {
  if (s == "sddp") return Mode::Sddp;
  if (s == "minplus") return Mode::MinPlus;
  if (s == "both") return Mode::Both;
  throw InputError("unknown mode '" + s + "' (expected sddp, minplus or both)");
}

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::Sddp:
      return "sddp";
    case Mode::MinPlus:
      return "minplus";
    case Mode::Both:
      return "both";
  }
  return "?";
}

void validate(const RunConfig& config, const Problem& problem) {
  if (config.iterations < 1) throw InputError("--iters must be at least 1");
  if (config.mode != Mode::Sddp && problem.control_interval && config.N < 2) {
    throw InputError("--N must be at least 2 for a problem with a control interval");
  }
  if (config.mode != Mode::Sddp && problem.control_box) {
    throw InputError("control_box is supported only with --mode sddp");
  }
  if (config.gap_threshold && !(*config.gap_threshold >= 0.0)) {
    throw InputError("--gap-threshold must be nonnegative");
  }
}

Vector initial_state(const Problem& problem) {
  return problem.x0 ? *problem.x0 : Vector::Ones(problem.n);
}

SwitchedProblem upper_model(const Problem& problem, int N) {
  if (problem.control_interval) {
    return homogenize(problem, discretize_control(*problem.control_interval, N));
  }
  return as_switched(problem);
}

PairedResult run_paired(const Problem& problem, const RunConfig& config) {
  validate(config, problem);
  const Vector x0 = initial_state(problem);
  const bool want_lower = config.mode != Mode::MinPlus;
  const bool want_upper = config.mode != Mode::Sddp;

  std::unique_ptr<TdpEngine> lower;
  std::unique_ptr<SwitchedProblem> switched;
  std::unique_ptr<TdpEngine> upper;
  if (want_lower) {
    lower = std::make_unique<TdpEngine>(problem, OptimalTrajectory{x0}, config.seed);
  }
  if (want_upper) {
    switched = std::make_unique<SwitchedProblem>(upper_model(problem, config.N));
    upper = std::make_unique<TdpEngine>(*switched, SphereUniform{}, config.seed);
  }

  PairedResult result;
  std::optional<double> previous_gap;
  for (int k = 1; k <= config.iterations; ++k) {
    double lower_ms = 0.0;
    double upper_ms = 0.0;
    std::future<void> pending;
    if (lower) {
      pending = std::async(std::launch::async,
                           [&] { lower_ms = lower->step().elapsed_ms; });
    }
    try {
      if (upper) upper_ms = upper->step().elapsed_ms;
    } catch (...) {
      if (pending.valid()) pending.wait();
      throw;
    }
    if (pending.valid()) pending.get();
    result.lower_ms.push_back(lower_ms);
    result.upper_ms.push_back(upper_ms);

    const std::vector<Vector> points =
        lower ? lower->greedy_trajectory(x0) : upper->greedy_trajectory(x0);
    append_rows(result, k, points, lower.get(), upper.get(), lower_ms, upper_ms);
    result.iterations_run = k;

    const GapRecord& head = result.rows[result.rows.size() - points.size()];
    if (const auto gap = head.gap()) {
      if (*gap < -1e-6) {
        result.invariant_failures.push_back(
            "iteration " + std::to_string(k) + ": negative gap " +
            format_double(*gap) + " at x0");
      }
      if (previous_gap && *gap > *previous_gap + 1e-9) {
        result.invariant_failures.push_back(
            "iteration " + std::to_string(k) + ": gap at x0 increased from " +
            format_double(*previous_gap) + " to " + format_double(*gap));
      }
      previous_gap = gap;
      if (config.gap_threshold &&
          *gap <= *config.gap_threshold * std::max(1.0, std::abs(*head.upper))) {
        result.stopped_on_gap = true;
        break;
      }
    }
  }
  return result;
}

void write_run_csv(const PairedResult& result, bool timings, std::ostream& out) {
  out << "iteration,stage,lower,upper,gap,wall_ms\n";
  for (const GapRecord& row : result.rows) {
    out << row.iteration << ',' << row.stage << ',' << format_optional(row.lower)
        << ',' << format_optional(row.upper) << ',' << format_optional(row.gap())
        << ',';
    if (timings) out << format_double(row.wall_ms);
    out << '\n';
  }
}

void write_plots(const PairedResult& result, int horizon, const std::string& dir) {
  namespace fs = std::filesystem;
  const int K = result.iterations_run;
  if (K == 0) return;
  std::vector<int> shown{1, std::max(1, K / 2), K};
  shown.erase(std::unique(shown.begin(), shown.end()), shown.end());
  const char* lower_colors[] = {"#9ecae1", "#4292c6", "#08519c"};
  const char* upper_colors[] = {"#fcbba1", "#ef3b2c", "#99000d"};

  std::vector<Series> gap_series;
  for (std::size_t i = 0; i < shown.size(); ++i) {
    Series lo{"lower k=" + std::to_string(shown[i]), lower_colors[i], {}, {}};
    Series up{"upper k=" + std::to_string(shown[i]), upper_colors[i], {}, {}};
    for (const GapRecord& row : result.rows) {
      if (row.iteration != shown[i] || row.stage >= horizon) continue;
      if (row.lower) {
        lo.xs.push_back(row.stage);
        lo.ys.push_back(*row.lower);
      }
      if (row.upper) {
        up.xs.push_back(row.stage);
        up.ys.push_back(*row.upper);
      }
    }
    if (!lo.xs.empty()) gap_series.push_back(std::move(lo));
    if (!up.xs.empty()) gap_series.push_back(std::move(up));
  }
  write_svg((fs::path(dir) / "gap.svg").string(), "Bounds along the trajectory",
            "stage t", gap_series);

  Series lo_time{"sddp ms", "#08519c", {}, {}};
  Series up_time{"min-plus ms", "#99000d", {}, {}};
  for (int k = 0; k < K; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    lo_time.xs.push_back(k + 1);
    lo_time.ys.push_back(result.lower_ms[kk]);
    up_time.xs.push_back(k + 1);
    up_time.ys.push_back(result.upper_ms[kk]);
  }
  write_svg((fs::path(dir) / "time.svg").string(), "Time per iteration",
            "iteration k", {lo_time, up_time});
}

int run_experiment(const RunConfig& config, std::ostream& log) {
  namespace fs = std::filesystem;
  const Problem problem = load_problem(config.problem_path);
  validate(config, problem);
  fs::create_directories(config.out_dir);
  const fs::path dir(config.out_dir);

  nlohmann::json meta;
  meta["seed"] = config.seed;
  meta["version"] = kVersion;
  meta["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                          std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION);
  meta["config"] = {{"problem", config.problem_path},
                    {"mode", to_string(config.mode)},
                    {"iterations", config.iterations},
                    {"N", config.N},
                    {"out", config.out_dir},
                    {"plot", config.plot},
                    {"timings", config.timings}};
  if (config.gap_threshold) meta["config"]["gap_threshold"] = *config.gap_threshold;
  meta["problem"] = {{"T", problem.T}, {"n", problem.n}, {"m", problem.m}};

  const PairedResult result = run_paired(problem, config);
  meta["iterations_run"] = result.iterations_run;
  meta["stopped_on_gap"] = result.stopped_on_gap;

  {
    std::ofstream csv(dir / "run.csv", std::ios::binary);
    if (!csv) throw InputError("cannot write " + (dir / "run.csv").string());
    write_run_csv(result, config.timings, csv);
  }
  {
    std::ofstream out(dir / "meta.json");
    out << meta.dump(2) << '\n';
  }
  if (config.plot) write_plots(result, problem.T, config.out_dir);

  const GapRecord& last = result.rows[result.rows.size() - static_cast<std::size_t>(problem.T) - 1];
  log << "iterations: " << result.iterations_run << "\n";
  log << "x0: lower " << format_optional(last.lower) << "  upper "
      << format_optional(last.upper) << "  gap " << format_optional(last.gap())
      << "\n";
  if (!result.invariant_failures.empty()) {
    std::ofstream report(dir / "report.txt");
    for (const std::string& f : result.invariant_failures) {
      report << f << '\n';
      log << "invariant violation: " << f << '\n';
    }
    return 3;
  }
  return 0;
}

std::vector<SuiteResult> verify_suites(const Problem& problem, const RunConfig& config) {
  validate(config, problem);
  const Vector x0 = initial_state(problem);
  RunOptions options;
  options.validity_samples = config.validity_samples;
  options.sddp_sample_radius = std::max(1.0, x0.norm());
  options.verification_seed = config.seed ^ 0x9e3779b97f4a7c15ULL;

  TdpEngine lower(problem, OptimalTrajectory{x0}, config.seed, options);
  const SwitchedProblem switched = upper_model(problem, config.N);
  TdpEngine upper(switched, SphereUniform{}, config.seed, options);
  for (int k = 0; k < config.iterations; ++k) {
    lower.step();
    upper.step();
  }
  if (config.inject_fault) lower.inject_fault(0, 1.0);

  std::vector<SuiteResult> suites;
  auto describe = [](const CheckReport& r) {
    std::ostringstream os;
    os << r.checked << " checks, " << r.violations << " violations, max "
       << std::setprecision(3) << r.max_violation;
    if (r.violations > 0) os << " (k=" << r.worst_k << ", t=" << r.worst_stage << ")";
    return os.str();
  };

  {
    const auto lower_points = audit_points(lower, 50, config.seed + 1);
    const auto upper_points = audit_points(upper, 50, config.seed + 2);
    CheckReport lo = check_monotone_run(lower, lower_points);
    CheckReport up = check_monotone_run(upper, upper_points);
    suites.push_back({"monotone", lo.ok() && up.ok(), false,
                      "lower: " + describe(lo) + "; upper: " + describe(up)});
  }
  {
    CheckReport lo = check_tight_at_draws(lower);
    CheckReport up = check_tight_at_draws(upper);
    suites.push_back({"tightness", lo.ok() && up.ok(), false,
                      "lower: " + describe(lo) + "; upper: " + describe(up)});
  }
  {
    int violations = 0;
    int samples = 0;
    double worst = 0.0;
    for (const TdpEngine* e : {&lower, &upper}) {
      for (const IterationRecord& rec : e->records()) {
        for (const StageRecord& s : rec.stages) {
          if (!s.verification) continue;
          violations += s.verification->violations;
          samples += s.verification->samples;
          worst = std::max(worst, s.verification->max_validity_violation);
        }
      }
    }
    std::ostringstream os;
    os << samples << " samples, " << violations << " violations, max "
       << std::setprecision(3) << worst;
    suites.push_back({"validity", violations == 0, false, os.str()});
  }
  {
    const StabilityBounds bounds = stability_bounds(switched, switched.alpha_T);
    CheckReport r = check_loewner(upper.state(), bounds);
    suites.push_back({"loewner", r.ok(), false, describe(r)});
  }
  if (problem.n == 1 && problem.m == 1 && problem.T <= 4) {
    BruteForceGrid grid;
    const auto tables = brute_force_dp(problem, grid);
    constexpr double eps = 5e-2;
    CheckReport r;
    for (std::size_t t = 0; t < tables.size(); ++t) {
      const GroundTruthTable& table = tables[t];
      std::vector<Vector> points;
      std::vector<double> truth;
      for (std::size_t i = 0; i < table.size(); i += 10) {
        points.push_back(table.point(i));
        truth.push_back(table.values[i]);
      }
      const auto lo = audit_series(lower.state().envelopes[t], points);
      std::vector<Vector> lifted = points;
      if (switched.dim == problem.n + 1) {
        for (Vector& p : lifted) p = lift(p);
      }
      const auto up = audit_series(upper.state().envelopes[t], lifted);
      for (std::size_t k = 0; k < lo.size(); ++k) {
        for (std::size_t i = 0; i < points.size(); ++i) {
          const double excess = std::max(lo[k][i] - (truth[i] + eps),
                                         (truth[i] - eps) - up[k][i]);
          ++r.checked;
          if (excess > r.max_violation) {
            r.max_violation = excess;
            r.worst_k = static_cast<int>(k) + 1;
            r.worst_stage = static_cast<int>(t);
          }
          if (excess > 0.0) ++r.violations;
        }
      }
    }
    suites.push_back({"sandwich", r.ok(), false, describe(r)});
  } else {
    suites.push_back({"sandwich", true, true, "needs n = m = 1 and T <= 4"});
  }
  return suites;
}

int verify(const RunConfig& config, std::ostream& out) {
  const Problem problem = load_problem(config.problem_path);
  const auto suites = verify_suites(problem, config);
  bool all = true;
  for (const SuiteResult& s : suites) {
    const char* status = s.skipped ? "SKIP" : (s.passed ? "PASS" : "FAIL");
    out << std::left << std::setw(6) << status << std::setw(11) << s.name
        << s.detail << '\n';
    all = all && s.passed;
  }
  return all ? 0 : 1;
}

}  // namespace tdp
