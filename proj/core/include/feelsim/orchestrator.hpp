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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "feelsim/allocation.hpp"
#include "feelsim/compression.hpp"
#include "feelsim/learning.hpp"
#include "feelsim/param_vector.hpp"

namespace feelsim {

enum class Algorithm { kTcsH, kTcsD, kTopK };

std::string to_string(Algorithm a);
// Accepts "tcs_h", "tcs_d", "top_k". Throws std::invalid_argument otherwise.
Algorithm parse_algorithm(const std::string& name);

/// A sparsity given either as an absolute count or as a fraction of d
/// (rounded to nearest).
struct Sparsity {
  std::optional<std::size_t> count;
  double fraction = 0.0;

  std::size_t resolve(std::size_t dim) const;
};

/// Complete description of one experiment. Every random draw derives from
/// `seed`.
struct RunConfig {
  Algorithm algorithm = Algorithm::kTcsH;
  std::uint64_t seed = 1;
  std::size_t max_rounds = 100;
  double target_accuracy = 0.0;  // early stop when reached; 0 disables

  // Uplink
  std::size_t devices = 20;           // N
  std::size_t subchannels = 25;       // M
  std::size_t total_slots = 100000;   // C
  double noise_var = 1e-6;            // sigma_0^2
  double power_avg = 5.0;             // P_bar_n (mW), same for every device
  double power_scalar = 5.0;          // sigma_t
  double alpha = 1.0;
  std::size_t baseline_scheduled = 13;  // devices drawn per round by tcs_d / top_k

  // Compression
  Sparsity sparsity_global{std::nullopt, 0.2};
  Sparsity sparsity_local{std::nullopt, 0.05};
  int bits = 16;

  // Learning
  std::size_t local_steps = 10;  // H
  std::size_t batch = 64;        // B
  double lr = 0.05;
  std::vector<std::size_t> hidden{32};

  // Data
  std::size_t num_classes = 10;
  std::size_t feature_dim = 20;
  std::size_t train_samples = 4000;
  std::size_t test_samples = 1000;
  double separation = 3.0;
  PartitionMode partition = PartitionMode::iid();
  std::string train_csv;  // optional; replaces the synthetic generator
  std::string test_csv;

  ModelSpec model() const;
  CompressionSpec compression() const;

  // Throws ConfigError naming the offending key.
  void validate() const;
};

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Datasets and model architecture shared by every algorithm run with the
/// same seed.
struct Environment {
  ModelSpec model;
  std::vector<Dataset> shards;
  Dataset test;
};

Environment build_environment(const RunConfig& cfg);

struct RoundReport {
  std::size_t round = 0;
  double loss = 0.0;      // global training loss F(w_t)
  double accuracy = 0.0;  // test accuracy of w_t
  std::size_t n_scheduled = 0;
  std::size_t u_global = 0;
  std::size_t u_local = 0;
  std::size_t u_round = 0;
  std::size_t blocks_cum = 0;      // sum_tau U_tau * M
  double power_spent_max = 0.0;    // max_n energy spent this round
  bool skipped = false;
  double gamma = 0.0;
  double mean_error_norm = 0.0;    // mean_n ||e_{t,n}||
};

struct InitialState {
  ParamVector w_init;  // w_{-1}
  ParamVector w;       // w_0
  ParamVector g_hat;   // g_0
};

/// w_{-1} is seeded; g_0 is one exact, cost-free aggregation of the full
/// local gradients: g_0 = -lr * mean_n grad F_n(w_{-1}).
InitialState initialize(const RunConfig& cfg, const Environment& env);

/// g_hat = y / (sigma_t N_t) + (1/N_t) sum_n locals_n.
ParamVector aggregate_eq2(const ParamVector& y, std::span<const SparseUpdate> locals, std::size_t n_scheduled,
                          double power_scalar);

/// Called after every executed round with its report and the new model.
using RoundObserver = std::function<void(const RoundReport&, const ParamVector&)>;

struct RunResult {
  Algorithm algorithm = Algorithm::kTcsH;
  std::vector<RoundReport> rounds;
  PowerBudget ledger;
  ParamVector final_model;
  // True when the loop ended because the next round did not fit the slot budget.
  bool budget_exhausted = false;
  std::size_t rejected_round_slots = 0;
};

RunResult run_tcs_h(const RunConfig& cfg, const Environment& env, const RoundObserver& observer = {});
RunResult run_tcs_d(const RunConfig& cfg, const Environment& env, const RoundObserver& observer = {});
RunResult run_top_k(const RunConfig& cfg, const Environment& env, const RoundObserver& observer = {});

/// Dispatches on cfg.algorithm.
RunResult run(const RunConfig& cfg, const Environment& env, const RoundObserver& observer = {});

/// Per-device digital payload in bits for each algorithm.
std::size_t tcs_h_payload_bits(const CompressionSpec& spec);
std::size_t tcs_d_payload_bits(const CompressionSpec& spec);
std::size_t top_k_payload_bits(const CompressionSpec& spec);

}  // namespace feelsim
