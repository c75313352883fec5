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
#include <vector>

#include "feelsim/mask.hpp"
#include "feelsim/param_vector.hpp"
#include "feelsim/rng.hpp"

namespace feelsim {

/// Sparsity and quantization parameters of the time-correlated sparsifier.
struct CompressionSpec {
  std::size_t dim = 0;
  std::size_t k_global = 0;
  std::size_t k_local = 0;
  int bits = 16;

  // Throws std::invalid_argument naming the violated constraint:
  // k_global + k_local <= dim, 2 <= bits <= 53, k_local < 2^(2*bits - 2),
  // and gamma() in (0, 1].
  void validate() const;

  /// Quantization levels s = 2^(bits-1).
  std::uint64_t levels() const noexcept { return std::uint64_t{1} << (bits - 1); }

  /// Compression quality constant
  ///   gamma = (1 - k_local / 2^(2q-2)) * (k_global + k_local) / d.
  double gamma() const noexcept;

  /// ceil(log2 d): bits needed to address one coordinate.
  std::size_t position_bits() const noexcept;

  /// Digital payload of the local part: (ceil(log2 d) + q) * k_local bits.
  std::size_t local_payload_bits() const noexcept;
};

std::size_t ceil_log2(std::size_t n) noexcept;

/// Values of a vector at the positions of a mask, in position order.
struct SparseUpdate {
  MaskVector mask;
  std::vector<double> values;

  static SparseUpdate from_dense(const ParamVector& x, const MaskVector& mask);
  ParamVector densify() const;
};

/// QSGD-style stochastic quantization of a sparse update: one l2-norm scale
/// for the whole vector, a sign and an integer level in [0, s] per value.
struct QuantizedUpdate {
  MaskVector mask;
  int bits = 16;
  double scale = 0.0;
  std::vector<std::int8_t> signs;
  std::vector<std::uint64_t> levels;

  std::uint64_t max_level() const noexcept { return std::uint64_t{1} << (bits - 1); }
  ParamVector densify() const;
};

MaskVector global_mask(const ParamVector& g_hat_prev, const CompressionSpec& spec);

/// Top-k_local of g_ec restricted to the complement of the global mask.
MaskVector local_mask(const ParamVector& g_ec, const MaskVector& global, const CompressionSpec& spec);

/// Unbiased stochastic quantization with s = 2^(bits-1) levels. For each
/// value v with r = |v| / ||u||_2 * s, the level is floor(r) + 1 with
/// probability r - floor(r), otherwise floor(r). One uniform draw is
/// consumed per value.
QuantizedUpdate quantize(const SparseUpdate& update, int bits, RngStream& rng);

SparseUpdate dequantize(const QuantizedUpdate& q);

struct CompressedUpdate {
  SparseUpdate global;    // full precision, sent over the air
  QuantizedUpdate local;  // quantized, sent digitally
};

CompressedUpdate compress_round(const ParamVector& g_ec, const MaskVector& global,
                                const CompressionSpec& spec, RngStream& rng);

CompressedUpdate compress_round(const ParamVector& g_ec, const ParamVector& g_hat_prev,
                                const CompressionSpec& spec, RngStream& rng);

/// Residual kept for the next round. A scheduled device keeps
/// g_ec - global - dequantize(local); an unscheduled one keeps prior_error.
ParamVector error_update(const ParamVector& g_ec, const SparseUpdate& global,
                         const QuantizedUpdate& local, bool scheduled,
                         const ParamVector& prior_error);

}  // namespace feelsim
