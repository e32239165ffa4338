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

// tdp run    --problem P [--mode both] [--iters 40] [--N 5] [--seed S] ...
// tdp verify --problem P [--iters 40] [--N 5] [--inject-fault]

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tdp/experiment.hpp"

namespace {

constexpr int kUsageError = 2;

std::uint64_t seed_from_env() {
  const char* env = std::getenv("TDP_SEED");
  if (env == nullptr || *env == '\0') return 0;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw tdp::InputError(std::string("TDP_SEED is not an unsigned integer: ") + env);
  }
}

void add_common(CLI::App* cmd, tdp::RunConfig& config, std::string& mode,
                std::uint64_t& seed) {
  cmd->add_option("--problem", config.problem_path, "Problem JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--mode", mode, "sddp, minplus or both")
      ->check(CLI::IsMember({"sddp", "minplus", "both"}));
  cmd->add_option("--iters", config.iterations, "Number of iterations K")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--N", config.N, "Discretization count for the control interval")
      ->check(CLI::Range(2, 1 << 20));
  cmd->add_option("--seed", seed, "Random seed (default: $TDP_SEED, else 0)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tropical dynamic programming: paired lower/upper bounds"};
  app.require_subcommand(1);

  tdp::RunConfig config;
  std::string mode = "both";
  std::uint64_t seed = 0;
  double gap_threshold = 0.0;

  CLI::App* run = app.add_subcommand("run", "Run an experiment and write artifacts");
  add_common(run, config, mode, seed);
  run->add_option("--out", config.out_dir, "Output directory");
  CLI::Option* gap_opt = run->add_option(
      "--gap-threshold", gap_threshold,
      "Stop once the relative gap at x0 falls below this value");
  run->add_flag("--plot", config.plot, "Write gap.svg and time.svg");
  run->add_flag("--timings", config.timings, "Fill the wall_ms column");

  CLI::App* ver = app.add_subcommand("verify", "Run the verification suites");
  add_common(ver, config, mode, seed);
  ver->add_option("--samples", config.validity_samples,
                  "Validity samples per selection");
  ver->add_flag("--inject-fault", config.inject_fault,
                "Corrupt the newest stage-0 cut before checking");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    bool seed_given = false;
    for (CLI::App* sub : {run, ver}) {
      if (sub->parsed() && sub->count("--seed") > 0) seed_given = true;
    }
    config.seed = seed_given ? seed : seed_from_env();
    config.mode = tdp::parse_mode(mode);
    if (gap_opt->count() > 0) config.gap_threshold = gap_threshold;

    if (run->parsed()) return tdp::run_experiment(config, std::cout);
    return tdp::verify(config, std::cout);
  } catch (const tdp::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
