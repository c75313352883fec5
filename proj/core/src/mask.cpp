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

#include "feelsim/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace feelsim {

MaskVector::MaskVector(std::size_t dim, std::vector<std::size_t> positions)
    : dim_(dim), positions_(std::move(positions)) {
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (positions_[i] >= dim_) {
      throw std::invalid_argument("MaskVector: position " + std::to_string(positions_[i]) +
                                  " out of range for dimension " + std::to_string(dim_));
    }
    if (i > 0 && positions_[i] <= positions_[i - 1]) {
      throw std::invalid_argument("MaskVector: positions must be strictly increasing");
    }
  }
}

MaskVector MaskVector::full(std::size_t dim) {
  std::vector<std::size_t> all(dim);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return MaskVector(dim, std::move(all));
}

bool MaskVector::contains(std::size_t i) const noexcept {
  return std::binary_search(positions_.begin(), positions_.end(), i);
}

bool MaskVector::disjoint(const MaskVector& other) const noexcept {
  auto a = positions_.begin();
  auto b = other.positions_.begin();
  while (a != positions_.end() && b != other.positions_.end()) {
    if (*a == *b) return false;
    if (*a < *b) {
      ++a;
    } else {
      ++b;
    }
  }
  return true;
}

MaskVector top_k_mask(const ParamVector& x, std::size_t k) {
  const std::size_t d = x.size();
  if (k > d) {
    throw std::invalid_argument("top_k_mask: K=" + std::to_string(k) + " exceeds dimension " +
                                std::to_string(d));
  }
  if (k == 0) return MaskVector::empty(d);
  if (k == d) return MaskVector::full(d);

  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Strict total order: larger magnitude first, then lower index.
  auto before = [&x](std::size_t a, std::size_t b) {
    const double ma = std::abs(x[a]);
    const double mb = std::abs(x[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(), before);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return MaskVector(d, std::move(idx));
}

ParamVector apply_mask(const ParamVector& x, const MaskVector& mask) {
  if (mask.dim() != x.size()) {
    throw std::invalid_argument("apply_mask: mask dimension " + std::to_string(mask.dim()) +
                                " does not match vector dimension " + std::to_string(x.size()));
  }
  ParamVector out(x.size());
  for (std::size_t p : mask.positions()) out[p] = x[p];
  return out;
}

MaskVector complement_mask(const MaskVector& mask) {
  std::vector<std::size_t> rest;
  rest.reserve(mask.dim() - mask.count());
  auto it = mask.positions().begin();
  for (std::size_t i = 0; i < mask.dim(); ++i) {
    if (it != mask.positions().end() && *it == i) {
      ++it;
    } else {
      rest.push_back(i);
    }
  }
  return MaskVector(mask.dim(), std::move(rest));
}

std::vector<double> gather(const ParamVector& x, const MaskVector& mask) {
  if (mask.dim() != x.size()) {
    throw std::invalid_argument("gather: mask dimension does not match vector dimension");
  }
  std::vector<double> out;
  out.reserve(mask.count());
  for (std::size_t p : mask.positions()) out.push_back(x[p]);
  return out;
}

}  // namespace feelsim
