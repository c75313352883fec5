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
#include <span>
#include <vector>

#include "feelsim/compression.hpp"
#include "feelsim/param_vector.hpp"
#include "feelsim/rng.hpp"

namespace feelsim {

/// Per-round uplink state: real, positive channel amplitudes |h_{n,m}| for N
/// devices and M sub-channels, plus the receiver noise variance. Phases are
/// assumed perfectly pre-compensated.
struct ChannelRealization {
  std::size_t devices = 0;
  std::size_t subchannels = 0;
  std::vector<double> gains;  // row-major N x M
  double noise_var = 0.0;

  double gain(std::size_t n, std::size_t m) const noexcept { return gains[n * subchannels + m]; }
  double& gain(std::size_t n, std::size_t m) noexcept { return gains[n * subchannels + m]; }
};

struct OacConfig {
  double power_scalar = 5.0;  // sigma_t
  std::size_t subchannels = 1;
  std::size_t k_global = 0;

  /// Slots needed to push k_global symbols through M parallel sub-channels.
  std::size_t slots() const noexcept {
    return subchannels == 0 ? 0 : (k_global + subchannels - 1) / subchannels;
  }
};

/// i.i.d. Rayleigh(scale 1) amplitudes.
ChannelRealization draw_channel(std::size_t devices, std::size_t subchannels, double noise_var,
                                RngStream& rng);

/// Sizes of the M segments of a length-k vector: the first k mod M get
/// ceil(k/M) elements, the rest floor(k/M).
std::vector<std::size_t> segment_sizes(std::size_t k, std::size_t subchannels);

/// Splits values into M contiguous segments following segment_sizes.
std::vector<std::vector<double>> segment(std::span<const double> values, std::size_t subchannels);

/// Energy device n spends sending its globally-masked values with channel
/// inversion: sum over segments m of sigma_t^2 * ||segment_m||^2 / h_{n,m}^2.
double oac_transmit_power(const SparseUpdate& update, const ChannelRealization& ch, std::size_t device,
                          const OacConfig& cfg);

/// Keys the receiver noise: sub-channel m draws from stream
/// (seed, {round, 0, kOacNoise, m}), one sample per slot.
struct NoiseKey {
  std::uint64_t seed = 0;
  std::uint64_t round = 0;
};

/// Received superposition mapped back onto the shared mask:
/// y[j(i)] = sigma_t * sum_n g_n[i] + z_i, z_i ~ N(0, noise_var). Every
/// device pre-inverts its own gain, so the gains cancel in the sum.
/// Throws ContractViolation if the masks differ or no update is given.
ParamVector oac_aggregate(std::span<const SparseUpdate* const> updates, const ChannelRealization& ch,
                          const OacConfig& cfg, const NoiseKey& noise);

/// Bits per slot of device n: sum over assigned m of
/// log2(1 + p_m |h_{n,m}|^2 / noise_var). powers[i] belongs to assigned[i].
double digital_rate(const ChannelRealization& ch, std::size_t device,
                    std::span<const std::size_t> assigned, std::span<const double> powers);

/// log2(1 + power * gain^2 / noise_var), with 0 for zero power and +inf for
/// positive power over a noiseless link.
double link_rate(double power, double gain, double noise_var) noexcept;

}  // namespace feelsim
