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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "feelsim/orchestrator.hpp"

namespace feelsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitContract = 3;

enum class MetricsFormat { kCsv, kJsonl };

// Command-line values that replace the ones read from the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_rounds;
};

inline constexpr const char* kCsvHeader = "round,loss,accuracy,n_scheduled,u_round,blocks_cum,power_spent_max";

std::string csv_row(const RoundReport& r);
std::string jsonl_row(const RoundReport& r);

/// Runs the configured algorithm and writes manifest.json, metrics.csv (or
/// metrics.jsonl) and summary.json into out_dir.
int cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
            const Overrides& overrides, MetricsFormat format, std::ostream& out, std::ostream& err);

/// Runs all three algorithms on one environment and writes a combined
/// metrics file keyed by algorithm plus a summary table.
int cmd_compare(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                const Overrides& overrides, MetricsFormat format, std::ostream& out, std::ostream& err);

/// Runs one property suite; a missing seed is drawn from the OS entropy
/// source and printed.
int cmd_verify(const std::string& suite, std::optional<std::uint64_t> seed, std::optional<std::size_t> trials,
               std::ostream& out, std::ostream& err);

}  // namespace feelsim::cli
