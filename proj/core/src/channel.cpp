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

#include "feelsim/channel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "feelsim/errors.hpp"

namespace feelsim {

ChannelRealization draw_channel(std::size_t devices, std::size_t subchannels, double noise_var,
                                RngStream& rng) {
  if (devices == 0 || subchannels == 0) {
    throw std::invalid_argument("draw_channel: need at least one device and one sub-channel");
  }
  ChannelRealization ch{devices, subchannels, std::vector<double>(devices * subchannels), noise_var};
  for (auto& g : ch.gains) g = rng.rayleigh(1.0);
  return ch;
}

std::vector<std::size_t> segment_sizes(std::size_t k, std::size_t subchannels) {
  if (subchannels == 0) throw std::invalid_argument("segment_sizes: need at least one sub-channel");
  std::vector<std::size_t> sizes(subchannels, k / subchannels);
  for (std::size_t m = 0; m < k % subchannels; ++m) ++sizes[m];
  return sizes;
}

std::vector<std::vector<double>> segment(std::span<const double> values, std::size_t subchannels) {
  const auto sizes = segment_sizes(values.size(), subchannels);
  std::vector<std::vector<double>> out(subchannels);
  std::size_t cursor = 0;
  for (std::size_t m = 0; m < subchannels; ++m) {
    out[m].assign(values.begin() + static_cast<std::ptrdiff_t>(cursor),
                  values.begin() + static_cast<std::ptrdiff_t>(cursor + sizes[m]));
    cursor += sizes[m];
  }
  return out;
}

double oac_transmit_power(const SparseUpdate& update, const ChannelRealization& ch, std::size_t device,
                          const OacConfig& cfg) {
  if (device >= ch.devices) throw std::invalid_argument("oac_transmit_power: device out of range");
  if (cfg.subchannels != ch.subchannels) {
    throw std::invalid_argument("oac_transmit_power: sub-channel count mismatch");
  }
  const auto sizes = segment_sizes(update.values.size(), cfg.subchannels);
  const double s2 = cfg.power_scalar * cfg.power_scalar;
  double energy = 0.0;
  std::size_t cursor = 0;
  for (std::size_t m = 0; m < cfg.subchannels; ++m) {
    double sq = 0.0;
    for (std::size_t i = 0; i < sizes[m]; ++i, ++cursor) sq += update.values[cursor] * update.values[cursor];
    const double h = ch.gain(device, m);
    energy += s2 * sq / (h * h);
  }
  return energy;
}

ParamVector oac_aggregate(std::span<const SparseUpdate* const> updates, const ChannelRealization& ch,
                          const OacConfig& cfg, const NoiseKey& noise) {
  if (updates.empty()) throw ContractViolation("oac_aggregate: no scheduled device");
  const MaskVector& mask = updates.front()->mask;
  for (const SparseUpdate* u : updates) {
    if (!(u->mask == mask)) throw ContractViolation("oac_aggregate: global masks differ across devices");
    if (u->values.size() != mask.count()) throw ContractViolation("oac_aggregate: malformed update");
  }
  if (cfg.subchannels != ch.subchannels) throw std::invalid_argument("oac_aggregate: sub-channel count mismatch");

  const auto sizes = segment_sizes(mask.count(), cfg.subchannels);
  const double noise_std = std::sqrt(ch.noise_var);
  const auto positions = mask.positions();
  ParamVector y(mask.dim());
  std::size_t cursor = 0;
  for (std::size_t m = 0; m < cfg.subchannels; ++m) {
    RngStream z(noise.seed, StreamContext{noise.round, 0, Purpose::kOacNoise, m});
    for (std::size_t slot = 0; slot < sizes[m]; ++slot, ++cursor) {
      double sum = 0.0;
      for (const SparseUpdate* u : updates) sum += u->values[cursor];
      double received = cfg.power_scalar * sum;
      if (noise_std > 0.0) received += noise_std * z.normal();
      y[positions[cursor]] = received;
    }
  }
  return y;
}

double link_rate(double power, double gain, double noise_var) noexcept {
  if (power <= 0.0) return 0.0;
  if (noise_var <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log2(1.0 + power * gain * gain / noise_var);
}

double digital_rate(const ChannelRealization& ch, std::size_t device,
                    std::span<const std::size_t> assigned, std::span<const double> powers) {
  if (assigned.size() != powers.size()) {
    throw std::invalid_argument("digital_rate: one power per assigned sub-channel required");
  }
  double rate = 0.0;
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    if (powers[i] < 0.0) throw std::invalid_argument("digital_rate: negative power");
    rate += link_rate(powers[i], ch.gain(device, assigned[i]), ch.noise_var);
  }
  return rate;
}

}  // namespace feelsim
