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

#include "feelsim/compression.hpp"

namespace feelsim {

/// Wire image of a quantized local update:
///
///   [k position fields of ceil(log2 d) bits][k value fields of q bits]
///
/// A value field is a sign bit followed by a (q-1)-bit level. Level s = 2^(q-1)
/// does not fit in q-1 bits; it is written as the otherwise unused
/// "negative zero" code (sign 1, level 0) and its sign travels in the sign of
/// the 64-bit scale header. For q >= 3 at most one coordinate can reach level
/// s, so this is lossless. The header is not counted in bit_count.
struct LocalPayload {
  double header = 0.0;
  std::size_t bit_count = 0;
  std::vector<std::uint8_t> bytes;
};

/// Throws std::invalid_argument when the update holds more than one
/// saturated level (possible only for q = 2).
LocalPayload encode_local_payload(const QuantizedUpdate& update);

QuantizedUpdate decode_local_payload(const LocalPayload& payload, std::size_t dim, int bits,
                                     std::size_t count);

}  // namespace feelsim
