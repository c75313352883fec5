// Copyright 2026 The feelsim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cli.hpp"
#include "feelsim/verify.hpp"

namespace {

feelsim::cli::MetricsFormat parse_format(const std::string& s) {
  return s == "jsonl" ? feelsim::cli::MetricsFormat::kJsonl : feelsim::cli::MetricsFormat::kCsv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated edge learning simulator with hybrid analog/digital uplink"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_rounds;
  std::optional<std::size_t> trials;
  std::string suite;

  auto add_experiment_options = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "Experiment config (INI)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir, "Output directory")->required();
    cmd->add_option("--seed", seed, "Override run.seed");
    cmd->add_option("--max-rounds", max_rounds, "Override run.max_rounds");
    cmd->add_option("--format", format, "Metrics format")->check(CLI::IsMember({"csv", "jsonl"}));
  };

  CLI::App* run = app.add_subcommand("run", "Run the configured algorithm");
  add_experiment_options(run);
  CLI::App* compare = app.add_subcommand("compare", "Run tcs_h, tcs_d and top_k on a shared seed");
  add_experiment_options(compare);

  std::vector<std::string> suite_names = feelsim::verify_suites();
  suite_names.push_back("all");
  CLI::App* verify = app.add_subcommand("verify", "Run a property suite");
  verify->add_option("suite", suite, "Suite name")->required()->check(CLI::IsMember(suite_names));
  verify->add_option("--seed", seed, "Seed (default: fresh)");
  verify->add_option("--trials", trials, "Trial count (suite default if omitted)");

  CLI11_PARSE(app, argc, argv);

  const feelsim::cli::Overrides overrides{seed, max_rounds};
  if (*run) {
    return feelsim::cli::cmd_run(config_path, out_dir, overrides, parse_format(format), std::cout, std::cerr);
  }
  if (*compare) {
    return feelsim::cli::cmd_compare(config_path, out_dir, overrides, parse_format(format), std::cout, std::cerr);
  }
  return feelsim::cli::cmd_verify(suite, seed, trials, std::cout, std::cerr);
}
