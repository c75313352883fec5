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

#include <cstdint>
#include <filesystem>
#include <string>

#include "feelsim/orchestrator.hpp"

namespace feelsim {

/// Experiment configuration files are INI text:
///
///   [run]          algorithm, seed, max_rounds, target_accuracy
///   [system]       devices, subchannels, slots, noise_var, power_avg,
///                  power_scalar, alpha, baseline_scheduled
///   [compression]  k_global | phi_global, k_local | phi_local, bits
///   [learning]     local_steps, batch, lr, hidden (comma-separated widths)
///   [data]         classes, dim, train_samples, test_samples, separation,
///                  partition (iid | label_skew), classes_per_device,
///                  train_csv, test_csv
///
/// Omitted keys keep their RunConfig defaults. Unknown sections or keys and
/// unparsable values raise ConfigError naming "section.key".
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text with every key in a fixed order; parse_config inverts it.
std::string to_ini(const RunConfig& cfg);

/// FNV-1a 64 of to_ini(cfg), as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

/// Shortest round-trippable decimal form, used for every emitted double.
std::string format_double(double v);

}  // namespace feelsim
