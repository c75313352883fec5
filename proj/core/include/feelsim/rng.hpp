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
#include <random>
#include <span>
#include <vector>

namespace feelsim {

/// What a random stream is used for. Part of the derivation key so that two
/// purposes never share a sequence.
enum class Purpose : std::uint32_t {
  kModelInit = 1,
  kDataset = 2,
  kPartition = 3,
  kLocalSgd = 4,
  kQuantize = 5,
  kChannel = 6,
  kOacNoise = 7,
  kSchedule = 8,
  kVerify = 9,
};

struct StreamContext {
  std::uint64_t round = 0;
  std::uint64_t device = 0;
  Purpose purpose = Purpose::kVerify;
  std::uint64_t sub = 0;  // extra key, e.g. sub-channel or trial index
};

/// Reproducible random stream keyed by (master seed, context). The same key
/// always yields the same sequence no matter what other streams were drawn
/// before it, so per-device work can run in any order.
///
/// Variates are produced from raw 64-bit engine output with fixed transforms
/// rather than <random> distributions, whose algorithms are
/// implementation-defined.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, const StreamContext& context);

  static std::uint64_t derive_seed(std::uint64_t master_seed, const StreamContext& context) noexcept;

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform();
  // Uniform in (0, 1).
  double uniform_open();
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();
  // Rayleigh amplitude with the given scale parameter.
  double rayleigh(double scale = 1.0);

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // k distinct indices from [0, n) in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace feelsim
