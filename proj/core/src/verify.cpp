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

#include "feelsim/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "feelsim/allocation.hpp"
#include "feelsim/channel.hpp"
#include "feelsim/compression.hpp"
#include "feelsim/config.hpp"
#include "feelsim/learning.hpp"

namespace feelsim {

bool SuiteReport::all_pass() const {
  return std::all_of(results.begin(), results.end(), [](const PropertyResult& r) { return r.pass; });
}

const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> names{"lemma1", "matching", "waterfill", "oac", "gradcheck"};
  return names;
}

namespace {

using nlohmann::json;

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.std = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  return r;
}

std::string fmt(double v) { return format_double(v); }

SuiteReport compression_bound_suite(std::uint64_t seed, std::size_t trials) {
  SuiteReport rep{"lemma1", {}};
  {
    const CompressionSpec spec{1000, 200, 50, 16};
    std::vector<double> ratios(trials);
    for (std::size_t t = 0; t < trials; ++t) {
      RngStream rng(seed, {t, 0, Purpose::kVerify, 1});
      ParamVector x(spec.dim);
      for (auto& v : x) v = rng.normal();
      const CompressedUpdate c = compress_round(x, x, spec, rng);
      ParamVector residual = x - c.global.densify() - c.local.densify();
      ratios[t] = residual.squared_norm() / x.squared_norm();
    }
    const MeanStd ms = mean_std(ratios);
    const double bound = 1.0 - spec.gamma();
    const double limit = bound + 3.0 * ms.std / std::sqrt(static_cast<double>(trials));
    PropertyResult r{"compression_error_bound", ms.mean <= limit,
                     "mean ratio " + fmt(ms.mean) + " vs 1-gamma " + fmt(bound) + " (limit " + fmt(limit) + ", " +
                         std::to_string(trials) + " trials)",
                     {}};
    if (!r.pass) r.counterexample = json{{"mean", ms.mean}, {"bound", bound}, {"limit", limit}}.dump();
    rep.results.push_back(r);
  }
  {
    const std::vector<double> u{1.0, 0.3, -0.7};
    const MaskVector mask(3, {0, 1, 2});
    const int bits = 3;
    const std::size_t draws = trials * 10;
    std::vector<std::vector<double>> samples(3, std::vector<double>(draws));
    std::vector<double> sq_err(draws);
    RngStream rng(seed, {0, 0, Purpose::kVerify, 2});
    for (std::size_t i = 0; i < draws; ++i) {
      const SparseUpdate back = dequantize(quantize(SparseUpdate{mask, u}, bits, rng));
      double e = 0.0;
      for (std::size_t j = 0; j < 3; ++j) {
        samples[j][i] = back.values[j];
        e += (back.values[j] - u[j]) * (back.values[j] - u[j]);
      }
      sq_err[i] = e;
    }
    bool unbiased = true;
    json worst;
    std::string detail;
    for (std::size_t j = 0; j < 3; ++j) {
      const MeanStd ms = mean_std(samples[j]);
      const double se = ms.std / std::sqrt(static_cast<double>(draws));
      const bool ok = std::abs(ms.mean - u[j]) <= 3.0 * se;
      detail += (j ? ", " : "") + fmt(ms.mean);
      if (!ok) {
        unbiased = false;
        worst = json{{"coordinate", j}, {"input", u[j]}, {"mean", ms.mean}, {"se", se}};
      }
    }
    rep.results.push_back({"quantizer_unbiased", unbiased, "means [" + detail + "] for [1, 0.3, -0.7]",
                           unbiased ? std::string{} : worst.dump()});

    const MeanStd err = mean_std(sq_err);
    const double s = std::ldexp(1.0, bits - 1);
    const double bound = 3.0 / (s * s) * (1.0 + 0.09 + 0.49);
    const double limit = bound + 3.0 * err.std / std::sqrt(static_cast<double>(draws));
    const bool ok = err.mean <= limit;
    rep.results.push_back({"quantizer_variance", ok, "E||Q(u)-u||^2 " + fmt(err.mean) + " vs n/s^2 ||u||^2 " + fmt(bound),
                           ok ? std::string{} : json{{"mean", err.mean}, {"bound", bound}}.dump()});
  }
  return rep;
}

double brute_force_bottleneck(const WeightMatrix& w) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<bool> used(w.cols, false);
  std::function<void(std::size_t, double)> rec = [&](std::size_t row, double current) {
    if (row == w.rows) {
      best = std::max(best, current);
      return;
    }
    for (std::size_t c = 0; c < w.cols; ++c) {
      if (used[c]) continue;
      used[c] = true;
      rec(row + 1, std::min(current, w(row, c)));
      used[c] = false;
    }
  };
  rec(0, std::numeric_limits<double>::infinity());
  return best;
}

SuiteReport matching_suite(std::uint64_t seed, std::size_t trials) {
  SuiteReport rep{"matching", {}};
  std::size_t agree = 0;
  json first_failure;
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream rng(seed, {t, 0, Purpose::kVerify, 3});
    const std::size_t rows = 2 + rng.uniform_index(5);
    const std::size_t cols = rows + rng.uniform_index(9 - rows);
    const bool coarse = t % 2 == 1;  // integer weights exercise ties
    WeightMatrix w(rows, cols);
    for (auto& v : w.data) v = coarse ? static_cast<double>(rng.uniform_index(5)) : rng.uniform() * 10.0;
    const Matching m = bottleneck_matching(w);
    const double reference = brute_force_bottleneck(w);
    std::vector<bool> seen(cols, false);
    bool valid = m.channel_of.size() == rows;
    for (std::size_t c : m.channel_of) {
      if (c >= cols || seen[c]) valid = false;
      else seen[c] = true;
    }
    if (valid && m.bottleneck == reference) {
      ++agree;
    } else if (first_failure.is_null()) {
      first_failure = json{{"rows", rows}, {"cols", cols}, {"weights", w.data}, {"found", m.bottleneck},
                           {"brute_force", reference}};
    }
  }
  rep.results.push_back({"bottleneck_equals_brute_force", agree == trials,
                         std::to_string(agree) + "/" + std::to_string(trials) + " agreements",
                         agree == trials ? std::string{} : first_failure.dump()});
  return rep;
}

SuiteReport waterfill_suite(std::uint64_t seed, std::size_t trials) {
  SuiteReport rep{"waterfill", {}};
  constexpr std::size_t kSearches = 100000;
  double worst_kkt = 0.0;
  double worst_gap = -std::numeric_limits<double>::infinity();
  json kkt_fail;
  json opt_fail;
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream rng(seed, {t, 0, Purpose::kVerify, 4});
    const std::size_t k = 5;
    std::vector<double> gains(k);
    for (auto& g : gains) g = rng.rayleigh(1.0);
    const double noise = 0.1 + 1.9 * rng.uniform();
    const double power = 0.1 + 4.9 * rng.uniform();
    const WaterFilling wf = water_fill(gains, noise, power);

    double kkt = std::abs(std::accumulate(wf.powers.begin(), wf.powers.end(), 0.0) - power);
    for (std::size_t i = 0; i < k; ++i) {
      const double a = noise / (gains[i] * gains[i]);
      kkt = std::max(kkt, wf.powers[i] > 0.0 ? std::abs(wf.level - a - wf.powers[i])
                                             : std::max(0.0, wf.level - a));
    }
    if (kkt > worst_kkt) worst_kkt = kkt;
    if (kkt >= 1e-9 && kkt_fail.is_null()) {
      kkt_fail = json{{"gains", gains}, {"noise_var", noise}, {"power", power}, {"residual", kkt}};
    }

    auto rate = [&](const std::vector<double>& p) {
      double r = 0.0;
      for (std::size_t i = 0; i < k; ++i) r += std::log2(1.0 + p[i] * gains[i] * gains[i] / noise);
      return r;
    };
    const double optimum = rate(wf.powers);
    std::vector<double> split(k);
    double best_random = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < kSearches; ++s) {
      double total = 0.0;
      for (auto& p : split) total += (p = -std::log(rng.uniform_open()));
      for (auto& p : split) p *= power / total;
      best_random = std::max(best_random, rate(split));
    }
    const double gap = best_random - optimum;
    worst_gap = std::max(worst_gap, gap);
    if (gap > 1e-12 && opt_fail.is_null()) {
      opt_fail = json{{"gains", gains}, {"noise_var", noise}, {"power", power}, {"water_filling", optimum},
                      {"random_best", best_random}};
    }
  }
  rep.results.push_back({"kkt_residual", kkt_fail.is_null(), "max residual " + fmt(worst_kkt),
                         kkt_fail.is_null() ? std::string{} : kkt_fail.dump()});
  rep.results.push_back({"beats_random_splits", opt_fail.is_null(),
                         "max(best random - water-filling) " + fmt(worst_gap) + " over " +
                             std::to_string(kSearches) + " splits per instance",
                         opt_fail.is_null() ? std::string{} : opt_fail.dump()});
  return rep;
}

SuiteReport oac_suite(std::uint64_t seed, std::size_t trials) {
  SuiteReport rep{"oac", {}};
  const std::size_t devices = 5;
  const std::size_t dim = 400;
  const std::size_t k = 50;
  const OacConfig cfg{5.0, 25, k};

  RngStream setup(seed, {0, 0, Purpose::kVerify, 5});
  std::vector<std::size_t> pos = setup.sample_without_replacement(dim, k);
  std::sort(pos.begin(), pos.end());
  const MaskVector mask(dim, pos);
  std::vector<SparseUpdate> updates(devices, SparseUpdate{mask, std::vector<double>(k)});
  for (auto& u : updates) {
    for (auto& v : u.values) v = setup.normal();
  }
  std::vector<const SparseUpdate*> ptrs;
  for (const auto& u : updates) ptrs.push_back(&u);

  {
    ChannelRealization ch = draw_channel(devices, cfg.subchannels, 0.0, setup);
    ChannelRealization other = draw_channel(devices, cfg.subchannels, 0.0, setup);
    const ParamVector y = oac_aggregate(ptrs, ch, cfg, NoiseKey{seed, 0});
    const ParamVector y_other = oac_aggregate(ptrs, other, cfg, NoiseKey{seed, 0});
    ParamVector expected(dim);
    for (const auto& u : updates) expected += u.densify();
    const double rel = relative_distance((1.0 / cfg.power_scalar) * y, expected);
    const bool ok = rel <= 1e-10 && y == y_other;
    rep.results.push_back({"noiseless_exact", ok, "relative error " + fmt(rel) + ", gain independent: " +
                                                     (y == y_other ? "yes" : "no"),
                           ok ? std::string{} : json{{"relative_error", rel}}.dump()});
  }
  {
    const double noise_var = 1e-6;
    ChannelRealization ch = draw_channel(devices, cfg.subchannels, noise_var, setup);
    ParamVector clean(dim);
    for (const auto& u : updates) clean += u.densify();
    clean *= cfg.power_scalar;
    std::vector<double> sum(k, 0.0);
    std::vector<double> sum_sq(k, 0.0);
    for (std::size_t rep_i = 0; rep_i < trials; ++rep_i) {
      const ParamVector y = oac_aggregate(ptrs, ch, cfg, NoiseKey{seed, rep_i + 1});
      for (std::size_t i = 0; i < k; ++i) {
        const double z = y[pos[i]] - clean[pos[i]];
        sum[i] += z;
        sum_sq[i] += z * z;
      }
    }
    double worst = 0.0;
    std::size_t worst_i = 0;
    const auto n = static_cast<double>(trials);
    for (std::size_t i = 0; i < k; ++i) {
      const double mean = sum[i] / n;
      const double var = (sum_sq[i] - n * mean * mean) / (n - 1.0);
      const double dev = std::abs(var / noise_var - 1.0);
      if (dev > worst) {
        worst = dev;
        worst_i = i;
      }
    }
    const bool ok = worst <= 0.05;
    rep.results.push_back({"noise_variance_calibrated", ok,
                           "worst relative deviation " + fmt(worst) + " over " + std::to_string(k) +
                               " coordinates, " + std::to_string(trials) + " repetitions",
                           ok ? std::string{} : json{{"position", pos[worst_i]}, {"deviation", worst}}.dump()});
  }
  return rep;
}

SuiteReport gradcheck_suite(std::uint64_t seed, std::size_t trials) {
  SuiteReport rep{"gradcheck", {}};
  const ModelSpec model{{20, 32, 10}};
  RngStream data_rng(seed, {0, 0, Purpose::kVerify, 6});
  const Dataset data = synthesize_dataset(10, 16, 20, 3.0, data_rng);
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  json failure;
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream rng(seed, {t, 0, Purpose::kVerify, 7});
    ParamVector w = init_params(model, rng);
    for (auto& v : w) v += 0.1 * rng.normal();
    ParamVector analytic;
    loss_and_gradient(model, w, data, all, &analytic);
    ParamVector numeric(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      ParamVector plus = w;
      ParamVector minus = w;
      plus[i] += kStep;
      minus[i] -= kStep;
      numeric[i] = (loss_and_gradient(model, plus, data, all, nullptr) -
                    loss_and_gradient(model, minus, data, all, nullptr)) /
                   (2.0 * kStep);
    }
    const double rel = (analytic - numeric).norm() / std::max({analytic.norm(), numeric.norm(), 1e-300});
    worst = std::max(worst, rel);
    if (rel > 1e-5 && failure.is_null()) failure = json{{"point", t}, {"relative_error", rel}};
  }
  rep.results.push_back({"analytic_matches_finite_difference", failure.is_null(),
                         "worst relative error " + fmt(worst) + " over " + std::to_string(trials) + " points",
                         failure.is_null() ? std::string{} : failure.dump()});
  return rep;
}

}  // namespace

SuiteReport run_verify_suite(const std::string& suite, std::uint64_t seed, std::optional<std::size_t> trials) {
  if (trials && *trials < 2) throw std::invalid_argument("verify: need at least 2 trials");
  if (suite == "lemma1") return compression_bound_suite(seed, trials.value_or(10000));
  if (suite == "matching") return matching_suite(seed, trials.value_or(100));
  if (suite == "waterfill") return waterfill_suite(seed, trials.value_or(100));
  if (suite == "oac") return oac_suite(seed, trials.value_or(10000));
  if (suite == "gradcheck") return gradcheck_suite(seed, trials.value_or(10));
  throw std::invalid_argument("unknown verify suite '" + suite + "'");
}

}  // namespace feelsim
