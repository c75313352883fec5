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

// Independent reference implementations used as test oracles. They favour
// obviousness over speed and share no code with the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace feelsim::oracle {

// Largest achievable minimum weight over all injections rows -> cols.
inline double brute_force_bottleneck(const std::vector<std::vector<double>>& w) {
  const std::size_t rows = w.size();
  const std::size_t cols = rows ? w[0].size() : 0;
  std::vector<std::size_t> perm(cols);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = -std::numeric_limits<double>::infinity();
  // Every injection is the prefix of some permutation of the columns.
  do {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < rows; ++r) m = std::min(m, w[r][perm[r]]);
    best = std::max(best, m);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double sum_rate(const std::vector<double>& gains, double noise_var, const std::vector<double>& powers) {
  double r = 0.0;
  for (std::size_t i = 0; i < gains.size(); ++i) r += std::log2(1.0 + powers[i] * gains[i] * gains[i] / noise_var);
  return r;
}

// KKT residual of a power split without trusting any reported water level:
// the level is re-derived from the active channels.
inline double kkt_residual(const std::vector<double>& gains, double noise_var, double total_power,
                           const std::vector<double>& powers) {
  double level = 0.0;
  std::size_t active = 0;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    if (powers[i] > 0.0) {
      level += powers[i] + noise_var / (gains[i] * gains[i]);
      ++active;
    }
  }
  if (active) level /= static_cast<double>(active);
  double residual = std::abs(std::accumulate(powers.begin(), powers.end(), 0.0) - total_power);
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const double floor = noise_var / (gains[i] * gains[i]);
    if (powers[i] < 0.0) residual = std::max(residual, -powers[i]);
    residual = std::max(residual, powers[i] > 0.0 ? std::abs(level - floor - powers[i]) : std::max(0.0, level - floor));
  }
  return residual;
}

// Water level by bisection on sum_i (mu - a_i)^+ = P.
inline std::vector<double> bisection_water_fill(const std::vector<double>& gains, double noise_var,
                                                double total_power) {
  std::vector<double> floor(gains.size());
  for (std::size_t i = 0; i < gains.size(); ++i) floor[i] = noise_var / (gains[i] * gains[i]);
  double lo = 0.0;
  double hi = *std::min_element(floor.begin(), floor.end()) + total_power;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double used = 0.0;
    for (double a : floor) used += std::max(0.0, mid - a);
    (used > total_power ? hi : lo) = mid;
  }
  std::vector<double> p(gains.size());
  for (std::size_t i = 0; i < gains.size(); ++i) p[i] = std::max(0.0, lo - floor[i]);
  return p;
}

// Best sum rate over `trials` uniformly random (Dirichlet(1)) power splits.
inline double best_random_split(const std::vector<double>& gains, double noise_var, double total_power,
                                std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> p(gains.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    double total = 0.0;
    for (auto& v : p) total += (v = expo(eng));
    for (auto& v : p) v *= total_power / total;
    best = std::max(best, sum_rate(gains, noise_var, p));
  }
  return best;
}

// Rate of a device that splits `power` equally over the listed channel gains.
inline double equal_split(const std::vector<double>& gains, double power, double noise_var) {
  double r = 0.0;
  const double k = static_cast<double>(gains.size());
  for (double h : gains) r += std::log2(1.0 + power * h * h / (noise_var * k));
  return r;
}

// Mean cross-entropy of a ReLU MLP written with plain nested loops.
// Parameters per layer: weights (out x in, row-major), then biases.
inline double naive_loss(const std::vector<std::size_t>& layers, const std::vector<double>& w,
                         const std::vector<std::vector<double>>& xs, const std::vector<std::size_t>& ys) {
  double total = 0.0;
  for (std::size_t s = 0; s < xs.size(); ++s) {
    std::vector<double> a = xs[s];
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
      const std::size_t in = layers[l];
      const std::size_t out = layers[l + 1];
      std::vector<double> z(out);
      for (std::size_t o = 0; o < out; ++o) {
        double acc = w[off + in * out + o];
        for (std::size_t i = 0; i < in; ++i) acc += w[off + o * in + i] * a[i];
        z[o] = (l + 2 < layers.size()) ? std::max(0.0, acc) : acc;
      }
      off += in * out + out;
      a = z;
    }
    const double mx = *std::max_element(a.begin(), a.end());
    double se = 0.0;
    for (double v : a) se += std::exp(v - mx);
    total += -(a[ys[s]] - mx - std::log(se));
  }
  return total / static_cast<double>(xs.size());
}

inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double step) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    const double up = f(x);
    x[i] = keep - step;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

inline double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return l2(d) / std::max({l2(a), l2(b), 1e-300});
}

// Sub-channel carrying element i of a K-vector split over M sub-channels,
// filled by walking the segments one by one.
inline std::vector<std::size_t> segment_of(std::size_t k, std::size_t m) {
  std::vector<std::size_t> owner;
  for (std::size_t s = 0; s < m; ++s) {
    const std::size_t len = k / m + (s < k % m ? 1 : 0);
    for (std::size_t j = 0; j < len; ++j) owner.push_back(s);
  }
  return owner;
}

}  // namespace feelsim::oracle
