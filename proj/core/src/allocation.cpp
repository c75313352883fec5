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

#include "feelsim/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "feelsim/errors.hpp"

namespace feelsim {

PowerBudget::PowerBudget(std::size_t slots, std::vector<double> avg, double alpha_coeff)
    : total_slots(slots), avg_power(std::move(avg)), spent_power(avg_power.size(), 0.0), alpha(alpha_coeff) {}

double PowerBudget::per_slot(std::size_t n) const noexcept {
  const std::size_t left = remaining_slots();
  if (left == 0) return 0.0;
  const double energy = remaining_energy(n);
  if (energy <= 0.0) return 0.0;
  return energy / static_cast<double>(left);
}

std::vector<double> PowerBudget::per_slot_all() const {
  std::vector<double> out(avg_power.size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = per_slot(n);
  return out;
}

void PowerBudget::commit(std::size_t slots, std::span<const double> energy) {
  if (energy.size() != avg_power.size()) throw std::invalid_argument("PowerBudget::commit: one entry per device");
  if (slots > remaining_slots()) {
    throw ContractViolation("PowerBudget::commit: round needs " + std::to_string(slots) + " slots, " +
                            std::to_string(remaining_slots()) + " left");
  }
  for (std::size_t n = 0; n < energy.size(); ++n) {
    if (energy[n] < 0.0) throw ContractViolation("PowerBudget::commit: negative energy");
    if (spent_power[n] + energy[n] > static_cast<double>(total_slots) * avg_power[n]) {
      throw ContractViolation("PowerBudget::commit: device " + std::to_string(n) +
                              " would exceed its energy budget");
    }
  }
  for (std::size_t n = 0; n < energy.size(); ++n) spent_power[n] += energy[n];
  spent_slots += slots;
}

double Allocation::digital_power(std::size_t i) const {
  return std::accumulate(powers[i].begin(), powers[i].end(), 0.0);
}

std::vector<std::size_t> schedule_devices(std::span<const double> oac_energy,
                                          std::span<const double> per_slot_budget, double alpha,
                                          std::size_t u_global) {
  if (oac_energy.size() != per_slot_budget.size()) {
    throw std::invalid_argument("schedule_devices: one budget per device required");
  }
  std::vector<std::size_t> scheduled;
  for (std::size_t n = 0; n < oac_energy.size(); ++n) {
    if (per_slot_budget[n] <= 0.0) continue;
    if (oac_energy[n] <= alpha * per_slot_budget[n] * static_cast<double>(u_global)) scheduled.push_back(n);
  }
  return scheduled;
}

namespace {

class AugmentingMatcher {
 public:
  AugmentingMatcher(const WeightMatrix& w, double threshold) : w_(w), threshold_(threshold) {}

  // Returns the matched row count; row_to_col_ holds the assignment.
  std::size_t run() {
    col_to_row_.assign(w_.cols, kNone);
    row_to_col_.assign(w_.rows, kNone);
    std::size_t matched = 0;
    for (std::size_t r = 0; r < w_.rows; ++r) {
      visited_.assign(w_.cols, false);
      if (augment(r)) ++matched;
    }
    return matched;
  }

  const std::vector<std::size_t>& assignment() const { return row_to_col_; }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  bool augment(std::size_t r) {
    for (std::size_t c = 0; c < w_.cols; ++c) {
      if (visited_[c] || w_(r, c) < threshold_) continue;
      visited_[c] = true;
      if (col_to_row_[c] == kNone || augment(col_to_row_[c])) {
        col_to_row_[c] = r;
        row_to_col_[r] = c;
        return true;
      }
    }
    return false;
  }

  const WeightMatrix& w_;
  double threshold_;
  std::vector<std::size_t> col_to_row_;
  std::vector<std::size_t> row_to_col_;
  std::vector<bool> visited_;
};

}  // namespace

Matching bottleneck_matching(const WeightMatrix& weights) {
  if (weights.rows > weights.cols) {
    throw std::invalid_argument("bottleneck_matching: more devices (" + std::to_string(weights.rows) +
                                ") than sub-channels (" + std::to_string(weights.cols) + ")");
  }
  if (weights.rows == 0) return {};
  for (double v : weights.data) {
    if (std::isnan(v)) throw std::invalid_argument("bottleneck_matching: NaN weight");
  }
  std::vector<double> levels = weights.data;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  // Feasibility is monotone: lowering the threshold only adds edges. The
  // lowest level activates the complete graph, which always matches.
  std::size_t lo = 0;
  std::size_t hi = levels.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    AugmentingMatcher probe(weights, levels[mid]);
    if (probe.run() == weights.rows) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  AugmentingMatcher final_match(weights, levels[lo]);
  final_match.run();
  Matching out{final_match.assignment(), std::numeric_limits<double>::infinity()};
  for (std::size_t r = 0; r < weights.rows; ++r) {
    out.bottleneck = std::min(out.bottleneck, weights(r, out.channel_of[r]));
  }
  return out;
}

double equal_split_rate(const ChannelRealization& ch, std::size_t device,
                        std::span<const std::size_t> channels, double total_power) {
  if (channels.empty()) return 0.0;
  const double share = total_power / static_cast<double>(channels.size());
  double rate = 0.0;
  for (std::size_t m : channels) rate += link_rate(share, ch.gain(device, m), ch.noise_var);
  return rate;
}

void assign_remaining(Allocation& alloc, const ChannelRealization& ch, std::span<const double> budget) {
  const std::size_t count = alloc.scheduled.size();
  if (budget.size() != count || alloc.channels.size() != count) {
    throw std::invalid_argument("assign_remaining: allocation and budget sizes disagree");
  }
  std::vector<bool> taken(ch.subchannels, false);
  for (const auto& list : alloc.channels) {
    for (std::size_t m : list) taken[m] = true;
  }
  std::vector<bool> improvable(count, true);
  std::vector<double> rate(count);
  for (std::size_t i = 0; i < count; ++i) {
    rate[i] = equal_split_rate(ch, alloc.scheduled[i], alloc.channels[i], budget[i]);
  }

  while (true) {
    const bool any_free = std::find(taken.begin(), taken.end(), false) != taken.end();
    if (!any_free) break;
    std::size_t pick = count;
    for (std::size_t i = 0; i < count; ++i) {
      if (improvable[i] && (pick == count || rate[i] < rate[pick])) pick = i;
    }
    if (pick == count) break;

    const std::size_t device = alloc.scheduled[pick];
    std::size_t best = ch.subchannels;
    for (std::size_t m = 0; m < ch.subchannels; ++m) {
      if (taken[m]) continue;
      if (best == ch.subchannels || ch.gain(device, m) > ch.gain(device, best)) best = m;
    }
    std::vector<std::size_t> grown = alloc.channels[pick];
    grown.push_back(best);
    const double grown_rate = equal_split_rate(ch, device, grown, budget[pick]);
    const double gain = grown_rate - rate[pick];
    if (gain > 0.0) {
      alloc.channels[pick] = std::move(grown);
      taken[best] = true;
      rate[pick] = grown_rate;
    } else {
      improvable[pick] = false;
    }
  }
  for (auto& list : alloc.channels) std::sort(list.begin(), list.end());
}

WaterFilling water_fill(std::span<const double> gains, double noise_var, double total_power) {
  WaterFilling out;
  out.powers.assign(gains.size(), 0.0);
  if (gains.empty() || !(total_power > 0.0)) return out;

  std::vector<double> inv_cnr(gains.size());
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const double g2 = gains[i] * gains[i];
    inv_cnr[i] = g2 > 0.0 ? noise_var / g2 : std::numeric_limits<double>::infinity();
  }
  std::vector<std::size_t> order(gains.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return inv_cnr[a] < inv_cnr[b]; });

  // Largest active set whose water level clears its worst member.
  double prefix = 0.0;
  std::size_t active = 0;
  double level = 0.0;
  for (std::size_t k = 1; k <= order.size(); ++k) {
    const double a = inv_cnr[order[k - 1]];
    if (!std::isfinite(a)) break;
    const double candidate = (total_power + prefix + a) / static_cast<double>(k);
    if (candidate <= a) break;
    prefix += a;
    active = k;
    level = candidate;
  }
  for (std::size_t k = 0; k < active; ++k) {
    const std::size_t i = order[k];
    out.powers[i] = std::max(level - inv_cnr[i], 0.0);
  }
  out.level = level;
  return out;
}

Allocation allocate_round(std::span<const std::size_t> scheduled, const ChannelRealization& ch,
                          std::span<const double> per_slot_budget, std::size_t payload_bits,
                          std::size_t u_global) {
  if (scheduled.empty()) throw ContractViolation("allocate_round: no scheduled device");
  if (scheduled.size() > ch.subchannels) {
    throw std::invalid_argument("allocate_round: more scheduled devices than sub-channels");
  }
  const std::size_t count = scheduled.size();
  std::vector<double> budget(count);
  for (std::size_t i = 0; i < count; ++i) budget[i] = per_slot_budget[scheduled[i]];

  WeightMatrix weights(count, ch.subchannels);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t m = 0; m < ch.subchannels; ++m) {
      weights(i, m) = link_rate(budget[i], ch.gain(scheduled[i], m), ch.noise_var);
    }
  }
  const Matching initial = bottleneck_matching(weights);

  Allocation alloc;
  alloc.scheduled.assign(scheduled.begin(), scheduled.end());
  alloc.channels.resize(count);
  for (std::size_t i = 0; i < count; ++i) alloc.channels[i] = {initial.channel_of[i]};
  assign_remaining(alloc, ch, budget);

  alloc.powers.resize(count);
  alloc.rates.resize(count);
  alloc.device_slots.assign(count, 0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t device = scheduled[i];
    std::vector<double> gains;
    for (std::size_t m : alloc.channels[i]) gains.push_back(ch.gain(device, m));
    alloc.powers[i] = water_fill(gains, ch.noise_var, budget[i]).powers;
    alloc.rates[i] = digital_rate(ch, device, alloc.channels[i], alloc.powers[i]);
    if (payload_bits == 0) continue;
    const double rate = alloc.rates[i];
    if (!(rate > 0.0)) {
      throw ContractViolation("allocate_round: device " + std::to_string(device) + " has zero rate");
    }
    const double need = std::ceil(static_cast<double>(payload_bits) / rate);
    if (need > 1e15) {
      throw ContractViolation("allocate_round: device " + std::to_string(device) + " rate too small");
    }
    alloc.device_slots[i] = static_cast<std::size_t>(need);
  }
  alloc.u_global = u_global;
  alloc.u_local = alloc.device_slots.empty()
                      ? 0
                      : *std::max_element(alloc.device_slots.begin(), alloc.device_slots.end());
  alloc.u_total = alloc.u_global + alloc.u_local;
  return alloc;
}

std::string check_allocation(const Allocation& alloc, std::span<const double> per_slot_budget,
                             std::size_t subchannels, std::size_t payload_bits, double tolerance) {
  std::vector<int> owners(subchannels, 0);
  for (std::size_t i = 0; i < alloc.scheduled.size(); ++i) {
    const std::size_t device = alloc.scheduled[i];
    double total = 0.0;
    for (std::size_t k = 0; k < alloc.channels[i].size(); ++k) {
      const std::size_t m = alloc.channels[i][k];
      if (m >= subchannels) return "device " + std::to_string(device) + " holds a non-existent sub-channel";
      if (++owners[m] > 1) return "sub-channel " + std::to_string(m) + " assigned twice";
      if (alloc.powers[i][k] < 0.0) return "negative power for device " + std::to_string(device);
      total += alloc.powers[i][k];
    }
    const double cap = per_slot_budget[device];
    if (total > cap + tolerance * std::max(cap, 1.0)) {
      return "device " + std::to_string(device) + " exceeds its per-slot power budget";
    }
    if (payload_bits > 0 &&
        static_cast<double>(alloc.device_slots[i]) * alloc.rates[i] < static_cast<double>(payload_bits)) {
      return "device " + std::to_string(device) + " cannot deliver its payload in its slots";
    }
  }
  return {};
}

}  // namespace feelsim
