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
#include <span>
#include <string>
#include <vector>

#include "feelsim/channel.hpp"

namespace feelsim {

/// Energy ledger for the whole run. Slot and power spending only grow.
struct PowerBudget {
  std::size_t total_slots = 0;       // C
  std::vector<double> avg_power;     // P_bar_n
  std::vector<double> spent_power;   // sum_tau P_{tau,n}
  std::size_t spent_slots = 0;       // sum_tau U_tau
  double alpha = 1.0;

  PowerBudget() = default;
  PowerBudget(std::size_t slots, std::vector<double> avg, double alpha_coeff = 1.0);

  std::size_t remaining_slots() const noexcept {
    return spent_slots >= total_slots ? 0 : total_slots - spent_slots;
  }
  double remaining_energy(std::size_t n) const noexcept {
    return static_cast<double>(total_slots) * avg_power[n] - spent_power[n];
  }

  /// P_bar_{t,n} = (C P_bar_n - sum P_{tau,n}) / (C - sum U_tau), floored at 0
  /// and 0 once the slots are gone.
  double per_slot(std::size_t n) const noexcept;
  std::vector<double> per_slot_all() const;

  /// Records one round. Throws ContractViolation if the slot budget or any
  /// device's energy budget would be exceeded.
  void commit(std::size_t slots, std::span<const double> energy);
};

/// Sub-channel assignment, power split and slot counts for one round.
/// Entries of `channels`, `powers`, `rates` and `device_slots` follow the
/// order of `scheduled`.
struct Allocation {
  std::vector<std::size_t> scheduled;
  std::vector<std::vector<std::size_t>> channels;  // beta, as a channel list per device
  std::vector<std::vector<double>> powers;         // P^[l], aligned with channels
  std::vector<double> rates;                       // R_{t,n}, bits per slot
  std::vector<std::size_t> device_slots;           // U^[l]_{t,n}
  std::size_t u_global = 0;
  std::size_t u_local = 0;
  std::size_t u_total = 0;

  double digital_power(std::size_t i) const;
};

/// Devices whose over-the-air energy fits alpha * P_bar_{t,n} * U^[g]. A
/// device with no remaining budget is never scheduled.
std::vector<std::size_t> schedule_devices(std::span<const double> oac_energy,
                                          std::span<const double> per_slot_budget, double alpha,
                                          std::size_t u_global);

/// Dense rows x cols matrix of edge weights (rows: devices, cols: channels).
struct WeightMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  WeightMatrix() = default;
  WeightMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
};

struct Matching {
  std::vector<std::size_t> channel_of;  // per row
  double bottleneck = 0.0;              // min matched weight
};

/// Max-min perfect matching of rows into columns. Threshold policy: binary
/// search over the distinct weights, testing each threshold with an
/// augmenting-path maximum matching restricted to edges at or above it.
/// Throws std::invalid_argument when rows > cols or a weight is NaN.
Matching bottleneck_matching(const WeightMatrix& weights);

/// Sum rate of device n over `channels` when `total_power` is split equally.
double equal_split_rate(const ChannelRealization& ch, std::size_t device,
                        std::span<const std::size_t> channels, double total_power);

/// Greedy growth of an initial one-channel-per-device assignment: the
/// improvable device with the lowest equal-split rate asks for its best free
/// channel and takes it if the equal-split rate gain is positive, else it
/// stops being improvable. Ties go to the lower device or channel index.
/// `budget[i]` is the per-slot budget of alloc.scheduled[i].
void assign_remaining(Allocation& alloc, const ChannelRealization& ch, std::span<const double> budget);

struct WaterFilling {
  std::vector<double> powers;
  double level = 0.0;  // 1 / lambda
};

/// Rate-optimal split of total_power over parallel channels:
/// p_m = (level - noise_var / g_m^2)^+ with sum p_m = total_power. Exact
/// breakpoint solution on the sorted inverse CNRs.
WaterFilling water_fill(std::span<const double> gains, double noise_var, double total_power);

/// Full per-round resource allocation for an already scheduled set:
/// bottleneck matching, remaining-channel growth, water-filling, then
/// U^[l]_{t,n} = ceil(payload_bits / R_{t,n}). Pure; the caller commits.
/// Throws std::invalid_argument when more devices than sub-channels are
/// scheduled and ContractViolation when a scheduled device ends with a zero
/// rate but has bits to send.
Allocation allocate_round(std::span<const std::size_t> scheduled, const ChannelRealization& ch,
                          std::span<const double> per_slot_budget, std::size_t payload_bits,
                          std::size_t u_global);

/// Checks channel exclusivity, per-device power feasibility and
/// U^[l]_{t,n} * R_{t,n} >= payload_bits; returns a description of the first
/// violation or an empty string.
std::string check_allocation(const Allocation& alloc, std::span<const double> per_slot_budget,
                             std::size_t subchannels, std::size_t payload_bits,
                             double tolerance = 1e-9);

}  // namespace feelsim
