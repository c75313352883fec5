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
#include <optional>
#include <string>
#include <vector>

namespace feelsim {

struct PropertyResult {
  std::string name;
  bool pass = false;
  std::string detail;
  std::string counterexample;  // JSON text, empty when the property held
};

struct SuiteReport {
  std::string suite;
  std::vector<PropertyResult> results;

  bool all_pass() const;
};

/// Names accepted by run_verify_suite.
const std::vector<std::string>& verify_suites();

/// Runs one self-check suite with the given seed. `trials` overrides the
/// suite's default repetition count (Monte Carlo trials or random
/// instances). Throws std::invalid_argument for an unknown suite.
///
///   lemma1     sparsify+quantize error vs (1 - gamma) ||x||^2, quantizer
///              unbiasedness and variance bound
///   matching   bottleneck matching vs brute force over all injections
///   waterfill  KKT residuals and random-search optimality
///   oac        noiseless exactness and receiver noise calibration
///   gradcheck  backpropagation vs central finite differences
SuiteReport run_verify_suite(const std::string& suite, std::uint64_t seed,
                             std::optional<std::size_t> trials = std::nullopt);

}  // namespace feelsim
