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

#include "feelsim/compression.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace feelsim {

std::size_t ceil_log2(std::size_t n) noexcept {
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  return bits;
}

void CompressionSpec::validate() const {
  if (dim == 0) throw std::invalid_argument("compression: dimension must be positive");
  if (k_global + k_local > dim) {
    throw std::invalid_argument("compression: k_global + k_local (" +
                                std::to_string(k_global + k_local) + ") exceeds dimension " +
                                std::to_string(dim));
  }
  if (bits < 2 || bits > 53) {
    throw std::invalid_argument("compression: bits must lie in [2, 53], got " + std::to_string(bits));
  }
  // k_local < 2^(2q-2); 2q-2 >= 64 cannot overflow a size_t comparison.
  const int exponent = 2 * bits - 2;
  if (exponent < 64 && k_local >= (std::uint64_t{1} << exponent)) {
    throw std::invalid_argument("compression: k_local must be < 2^(2q-2) (compression bound precondition)");
  }
  const double g = gamma();
  if (!(g > 0.0 && g <= 1.0)) {
    throw std::invalid_argument("compression: gamma must lie in (0, 1], got " + std::to_string(g));
  }
}

double CompressionSpec::gamma() const noexcept {
  const double quant = 1.0 - static_cast<double>(k_local) / std::ldexp(1.0, 2 * bits - 2);
  return quant * static_cast<double>(k_global + k_local) / static_cast<double>(dim);
}

std::size_t CompressionSpec::position_bits() const noexcept { return ceil_log2(dim); }

std::size_t CompressionSpec::local_payload_bits() const noexcept {
  return (position_bits() + static_cast<std::size_t>(bits)) * k_local;
}

SparseUpdate SparseUpdate::from_dense(const ParamVector& x, const MaskVector& mask) {
  return SparseUpdate{mask, gather(x, mask)};
}

ParamVector SparseUpdate::densify() const {
  ParamVector out(mask.dim());
  const auto pos = mask.positions();
  for (std::size_t i = 0; i < pos.size(); ++i) out[pos[i]] = values[i];
  return out;
}

ParamVector QuantizedUpdate::densify() const { return dequantize(*this).densify(); }

MaskVector global_mask(const ParamVector& g_hat_prev, const CompressionSpec& spec) {
  if (g_hat_prev.size() != spec.dim) {
    throw std::invalid_argument("global_mask: vector dimension does not match spec");
  }
  return top_k_mask(g_hat_prev, spec.k_global);
}

MaskVector local_mask(const ParamVector& g_ec, const MaskVector& global, const CompressionSpec& spec) {
  if (spec.k_global + spec.k_local > spec.dim) {
    throw std::invalid_argument("local_mask: k_global + k_local exceeds dimension");
  }
  if (g_ec.size() != spec.dim || global.dim() != spec.dim) {
    throw std::invalid_argument("local_mask: dimension mismatch");
  }
  // Select among the coordinates outside the global mask only; candidates are
  // increasing, so the lower-index tie-break carries over.
  const MaskVector outside = complement_mask(global);
  const auto candidates = outside.positions();
  if (spec.k_local > candidates.size()) {
    throw std::invalid_argument("local_mask: not enough coordinates outside the global mask");
  }
  ParamVector compact(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) compact[i] = g_ec[candidates[i]];
  const MaskVector picked = top_k_mask(compact, spec.k_local);
  std::vector<std::size_t> positions;
  positions.reserve(picked.count());
  for (std::size_t i : picked.positions()) positions.push_back(candidates[i]);
  return MaskVector(spec.dim, std::move(positions));
}

QuantizedUpdate quantize(const SparseUpdate& update, int bits, RngStream& rng) {
  if (bits < 2 || bits > 53) {
    throw std::invalid_argument("quantize: bits must lie in [2, 53]");
  }
  if (update.values.size() != update.mask.count()) {
    throw std::invalid_argument("quantize: value count does not match mask");
  }
  QuantizedUpdate q;
  q.mask = update.mask;
  q.bits = bits;
  const std::size_t n = update.values.size();
  q.signs.assign(n, 1);
  q.levels.assign(n, 0);

  double sq = 0.0;
  for (double v : update.values) sq += v * v;
  q.scale = std::sqrt(sq);

  const auto s = static_cast<double>(q.max_level());
  for (std::size_t i = 0; i < n; ++i) {
    const double v = update.values[i];
    q.signs[i] = v < 0.0 ? -1 : 1;
    const double u = rng.uniform();
    if (q.scale == 0.0) continue;
    const double r = std::min(std::abs(v) / q.scale * s, s);
    const double lower = std::floor(r);
    auto level = static_cast<std::uint64_t>(lower);
    if (u < r - lower) ++level;
    q.levels[i] = level;
  }
  return q;
}

SparseUpdate dequantize(const QuantizedUpdate& q) {
  SparseUpdate out;
  out.mask = q.mask;
  out.values.resize(q.levels.size());
  const auto s = static_cast<double>(q.max_level());
  for (std::size_t i = 0; i < q.levels.size(); ++i) {
    out.values[i] = q.scale * static_cast<double>(q.signs[i]) * (static_cast<double>(q.levels[i]) / s);
  }
  return out;
}

CompressedUpdate compress_round(const ParamVector& g_ec, const MaskVector& global,
                                const CompressionSpec& spec, RngStream& rng) {
  if (g_ec.size() != spec.dim || global.dim() != spec.dim) {
    throw std::invalid_argument("compress_round: dimension mismatch");
  }
  const MaskVector local = local_mask(g_ec, global, spec);
  return CompressedUpdate{SparseUpdate::from_dense(g_ec, global),
                          quantize(SparseUpdate::from_dense(g_ec, local), spec.bits, rng)};
}

CompressedUpdate compress_round(const ParamVector& g_ec, const ParamVector& g_hat_prev,
                                const CompressionSpec& spec, RngStream& rng) {
  return compress_round(g_ec, global_mask(g_hat_prev, spec), spec, rng);
}

ParamVector error_update(const ParamVector& g_ec, const SparseUpdate& global,
                         const QuantizedUpdate& local, bool scheduled,
                         const ParamVector& prior_error) {
  if (!scheduled) return prior_error;
  ParamVector e = g_ec;
  const auto gpos = global.mask.positions();
  for (std::size_t i = 0; i < gpos.size(); ++i) e[gpos[i]] -= global.values[i];
  const SparseUpdate sent = dequantize(local);
  const auto lpos = sent.mask.positions();
  for (std::size_t i = 0; i < lpos.size(); ++i) e[lpos[i]] -= sent.values[i];
  return e;
}

}  // namespace feelsim
