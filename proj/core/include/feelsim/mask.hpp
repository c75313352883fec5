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
#include <vector>

#include "feelsim/param_vector.hpp"

namespace feelsim {

/// Set of retained coordinates of a d-dimensional vector, stored as strictly
/// increasing positions. Equivalent to a {0,1}^d indicator vector.
class MaskVector {
 public:
  MaskVector() = default;

  // Throws std::invalid_argument unless positions are strictly increasing
  // and all lie in [0, dim).
  MaskVector(std::size_t dim, std::vector<std::size_t> positions);

  static MaskVector empty(std::size_t dim) { return MaskVector(dim, {}); }
  static MaskVector full(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return positions_.size(); }
  std::span<const std::size_t> positions() const noexcept { return positions_; }

  bool contains(std::size_t i) const noexcept;
  bool disjoint(const MaskVector& other) const noexcept;

  friend bool operator==(const MaskVector&, const MaskVector&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<std::size_t> positions_;
};

/// Positions of the k largest |x[i]|. Ties (including the zero padding used
/// when x has fewer than k non-zeros) resolve to the lower index. Runs in
/// O(d + k log k).
MaskVector top_k_mask(const ParamVector& x, std::size_t k);

/// result[i] = x[i] on the mask, 0 elsewhere.
ParamVector apply_mask(const ParamVector& x, const MaskVector& mask);

MaskVector complement_mask(const MaskVector& mask);

/// Values of x at the mask positions, in position order.
std::vector<double> gather(const ParamVector& x, const MaskVector& mask);

}  // namespace feelsim
