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

#include "feelsim/param_vector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace feelsim {
namespace {

void require_same_size(const ParamVector& a, const ParamVector& b, const char* op) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string("ParamVector::") + op + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace

ParamVector& ParamVector::operator+=(const ParamVector& other) {
  require_same_size(*this, other, "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& other) {
  require_same_size(*this, other, "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

ParamVector& ParamVector::operator*=(double scale) noexcept {
  for (auto& v : values_) v *= scale;
  return *this;
}

ParamVector& ParamVector::axpy(double scale, const ParamVector& other) {
  require_same_size(*this, other, "axpy");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += scale * other.values_[i];
  return *this;
}

double ParamVector::dot(const ParamVector& other) const {
  require_same_size(*this, other, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) acc += values_[i] * other.values_[i];
  return acc;
}

double ParamVector::squared_norm() const noexcept {
  double acc = 0.0;
  for (double v : values_) acc += v * v;
  return acc;
}

double ParamVector::norm() const noexcept { return std::sqrt(squared_norm()); }

bool ParamVector::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ParamVector operator+(ParamVector lhs, const ParamVector& rhs) {
  lhs += rhs;
  return lhs;
}

ParamVector operator-(ParamVector lhs, const ParamVector& rhs) {
  lhs -= rhs;
  return lhs;
}

ParamVector operator*(double scale, ParamVector v) {
  v *= scale;
  return v;
}

double relative_distance(const ParamVector& a, const ParamVector& b) {
  const double denom = std::max(b.norm(), 1e-300);
  return (a - b).norm() / denom;
}

}  // namespace feelsim
