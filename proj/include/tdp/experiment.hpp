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

// Batch experiments behind the `tdp` command line: paired lower/upper runs,
// CSV/JSON/SVG artifacts, and the verification suites.

#ifndef TDP_EXPERIMENT_HPP_
#define TDP_EXPERIMENT_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tdp/engine.hpp"
#include "tdp/problem.hpp"

namespace tdp {

enum class Mode { Sddp, MinPlus, Both };

Mode parse_mode(const std::string& s);
const char* to_string(Mode mode);

struct RunConfig {
  std::string problem_path;
  Mode mode = Mode::Both;
  int iterations = 40;
  int N = 5;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  // Stop once upper - lower <= threshold * max(1, |upper|) at (t = 0, x0).
  std::optional<double> gap_threshold;
  bool plot = false;
  // Fill the wall_ms column (makes run.csv timing-dependent).
  bool timings = false;
  // verify only: validity samples per selection and fault injection.
  int validity_samples = 100;
  bool inject_fault = false;
};

// Throws InputError for an unusable configuration (K < 1, N < 2 with a
// control interval in a min-plus mode).
void validate(const RunConfig& config, const Problem& problem);

struct GapRecord {
  int iteration = 0;
  int stage = 0;
  std::optional<double> lower;
  std::optional<double> upper;
  double wall_ms = 0.0;

  std::optional<double> gap() const {
    if (lower && upper) return *upper - *lower;
    return std::nullopt;
  }
};

struct PairedResult {
  std::vector<GapRecord> rows;  // one per (k, t)
  std::vector<double> lower_ms;  // per iteration
  std::vector<double> upper_ms;
  int iterations_run = 0;
  bool stopped_on_gap = false;
  std::vector<std::string> invariant_failures;
};

// Initial state: the problem's x0, or the all-ones vector.
Vector initial_state(const Problem& problem);

// Switched model the upper side runs on: homogenized over N discretized
// switch values when the problem has a control interval, the single-switch
// view otherwise.
SwitchedProblem upper_model(const Problem& problem, int N);

// Runs the configured engines for up to config.iterations iterations,
// stepping both sides in parallel. After iteration k both envelopes are
// read along the lower side's optimal trajectory from x0 (the upper side's
// greedy trajectory in minplus mode).
PairedResult run_paired(const Problem& problem, const RunConfig& config);

// CSV with header iteration,stage,lower,upper,gap,wall_ms; a missing side
// is an empty field.
void write_run_csv(const PairedResult& result, bool timings, std::ostream& out);

// Line charts: gap.svg (lower/upper across stages for a few iterations)
// and time.svg (wall time per iteration).
void write_plots(const PairedResult& result, int horizon, const std::string& dir);

// Writes run.csv, meta.json and optional plots; returns the process exit
// status (0 ok, 3 invariant violation, see report.txt).
int run_experiment(const RunConfig& config, std::ostream& log);

struct SuiteResult {
  std::string name;
  bool passed = false;
  bool skipped = false;
  std::string detail;
};

// Monotonicity, tightness, validity, Loewner and (n = m = 1, T <= 4)
// brute-force sandwich suites. Prints one line per suite.
std::vector<SuiteResult> verify_suites(const Problem& problem, const RunConfig& config);

// Returns 0 when every suite passed, 1 otherwise.
int verify(const RunConfig& config, std::ostream& out);

}  // namespace tdp

#endif  // TDP_EXPERIMENT_HPP_
