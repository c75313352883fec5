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

#include "feelsim/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "feelsim/channel.hpp"
#include "feelsim/errors.hpp"

namespace feelsim {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kTcsH: return "tcs_h";
    case Algorithm::kTcsD: return "tcs_d";
    case Algorithm::kTopK: return "top_k";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "tcs_h") return Algorithm::kTcsH;
  if (name == "tcs_d") return Algorithm::kTcsD;
  if (name == "top_k") return Algorithm::kTopK;
  throw std::invalid_argument("unknown algorithm '" + name + "' (expected tcs_h, tcs_d or top_k)");
}

std::size_t Sparsity::resolve(std::size_t dim) const {
  if (count) return *count;
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(dim)));
}

ModelSpec RunConfig::model() const {
  ModelSpec spec;
  spec.layer_sizes.clear();
  spec.layer_sizes.push_back(feature_dim);
  spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
  spec.layer_sizes.push_back(num_classes);
  return spec;
}

CompressionSpec RunConfig::compression() const {
  const std::size_t d = model().param_count();
  return CompressionSpec{d, sparsity_global.resolve(d), sparsity_local.resolve(d), bits};
}

void RunConfig::validate() const {
  auto require = [](bool ok, const char* key, const std::string& msg) {
    if (!ok) throw ConfigError(key, msg);
  };
  require(max_rounds >= 1, "run.max_rounds", "must be at least 1");
  require(target_accuracy >= 0.0 && target_accuracy <= 1.0, "run.target_accuracy", "must lie in [0, 1]");
  require(devices >= 1, "system.devices", "must be at least 1");
  require(subchannels >= 1, "system.subchannels", "must be at least 1");
  require(total_slots >= 1, "system.slots", "must be at least 1");
  require(noise_var >= 0.0 && std::isfinite(noise_var), "system.noise_var", "must be finite and >= 0");
  require(power_avg > 0.0 && std::isfinite(power_avg), "system.power_avg", "must be positive");
  require(power_scalar > 0.0 && std::isfinite(power_scalar), "system.power_scalar", "must be positive");
  require(alpha > 0.0 && alpha <= 1.0, "system.alpha", "must lie in (0, 1]");
  if (algorithm == Algorithm::kTcsH) {
    require(devices <= subchannels, "system.devices",
            "tcs_h may schedule every device, so devices must not exceed subchannels");
  } else {
    require(baseline_scheduled >= 1 && baseline_scheduled <= devices, "system.baseline_scheduled",
            "must lie in [1, devices]");
    require(baseline_scheduled <= subchannels, "system.baseline_scheduled", "must not exceed subchannels");
  }

  for (std::size_t h : hidden) require(h >= 1, "learning.hidden", "layer widths must be positive");
  require(local_steps >= 1, "learning.local_steps", "must be at least 1");
  require(batch >= 1, "learning.batch", "must be at least 1");
  require(lr > 0.0 && std::isfinite(lr), "learning.lr", "must be positive");

  require(num_classes >= 2, "data.classes", "need at least two classes");
  require(feature_dim >= 1, "data.dim", "must be at least 1");
  if (train_csv.empty()) {
    require(train_samples >= num_classes, "data.train_samples", "must be at least the class count");
    require(test_samples >= 1, "data.test_samples", "must be at least 1");
    require(train_samples / devices >= batch, "learning.batch", "exceeds the per-device shard size");
  } else {
    require(!test_csv.empty(), "data.test_csv", "required when data.train_csv is set");
  }
  require(separation >= 0.0, "data.separation", "must be >= 0");
  if (partition.kind == PartitionMode::Kind::kLabelSkew) {
    require(partition.classes_per_device >= 1 && partition.classes_per_device <= num_classes,
            "data.classes_per_device", "must lie in [1, classes]");
    require(partition.classes_per_device * devices >= num_classes, "data.classes_per_device",
            "classes_per_device * devices must cover every class");
  }

  require(bits >= 2 && bits <= 53, "compression.bits", "must lie in [2, 53]");
  const CompressionSpec spec = compression();
  require(spec.k_global + spec.k_local <= spec.dim, "compression.k_global",
          "k_global + k_local exceeds the parameter count " + std::to_string(spec.dim));
  const int exponent = 2 * bits - 2;
  require(exponent >= 64 || spec.k_local < (std::uint64_t{1} << exponent), "compression.k_local",
          "must be < 2^(2q-2), the compression bound precondition");
  require(spec.gamma() > 0.0, "compression.k_global", "k_global + k_local must be positive");
}

Environment build_environment(const RunConfig& cfg) {
  Environment env;
  env.model = cfg.model();
  Dataset train;
  if (cfg.train_csv.empty()) {
    RngStream means(cfg.seed, {0, 0, Purpose::kDataset, 0});
    const ClusterModel clusters = make_clusters(cfg.num_classes, cfg.feature_dim, cfg.separation, means);
    RngStream train_rng(cfg.seed, {0, 0, Purpose::kDataset, 1});
    RngStream test_rng(cfg.seed, {0, 0, Purpose::kDataset, 2});
    train = sample_clusters(clusters, cfg.train_samples, train_rng);
    env.test = sample_clusters(clusters, cfg.test_samples, test_rng);
  } else {
    auto load = [&](const std::string& path, const char* key) {
      try {
        return load_csv_dataset(path, cfg.num_classes);
      } catch (const std::exception& e) {
        throw ConfigError(key, e.what());
      }
    };
    train = load(cfg.train_csv, "data.train_csv");
    env.test = load(cfg.test_csv, "data.test_csv");
    if (train.feature_dim != cfg.feature_dim || env.test.feature_dim != cfg.feature_dim) {
      throw ConfigError("data.dim", "does not match the feature width of the CSV dataset");
    }
  }
  RngStream part(cfg.seed, {0, 0, Purpose::kPartition, 0});
  env.shards = partition(train, cfg.devices, cfg.partition, part);
  for (const auto& shard : env.shards) {
    if (shard.size() < cfg.batch) throw ConfigError("learning.batch", "exceeds a device's shard size");
  }
  return env;
}

InitialState initialize(const RunConfig& cfg, const Environment& env) {
  RngStream init(cfg.seed, {0, 0, Purpose::kModelInit, 0});
  InitialState s;
  s.w_init = init_params(env.model, init);
  ParamVector sum(s.w_init.size());
  for (const auto& shard : env.shards) sum += full_batch_gradient(env.model, s.w_init, shard);
  s.g_hat = (-cfg.lr / static_cast<double>(env.shards.size())) * sum;
  s.w = s.w_init + s.g_hat;
  return s;
}

ParamVector aggregate_eq2(const ParamVector& y, std::span<const SparseUpdate> locals, std::size_t n_scheduled,
                          double power_scalar) {
  if (n_scheduled == 0) throw ContractViolation("aggregate_eq2: no scheduled device");
  const double inv_n = 1.0 / static_cast<double>(n_scheduled);
  ParamVector g = (inv_n / power_scalar) * y;
  for (const SparseUpdate& u : locals) {
    if (u.mask.dim() != g.size()) throw ContractViolation("aggregate_eq2: dimension mismatch");
    const auto pos = u.mask.positions();
    for (std::size_t i = 0; i < pos.size(); ++i) g[pos[i]] += inv_n * u.values[i];
  }
  return g;
}

std::size_t tcs_h_payload_bits(const CompressionSpec& spec) { return spec.local_payload_bits(); }

std::size_t tcs_d_payload_bits(const CompressionSpec& spec) {
  // The global mask is common knowledge, so only its values are sent.
  return static_cast<std::size_t>(spec.bits) * spec.k_global + spec.local_payload_bits();
}

std::size_t top_k_payload_bits(const CompressionSpec& spec) {
  return (spec.position_bits() + static_cast<std::size_t>(spec.bits)) * (spec.k_global + spec.k_local);
}

namespace {

// Per-slot budgets are shaded by this factor so that floating-point rounding
// in the energy sums can never push a device past C * P_bar_n.
constexpr double kBudgetShade = 1.0 - 1e-12;

// What a round did, as seen by the loop driver.
struct RoundOutcome {
  enum class Kind { kExecuted, kSkipped, kOverrun } kind = Kind::kSkipped;
  std::size_t n_scheduled = 0;
  std::size_t u_global = 0;
  std::size_t u_local = 0;
  std::vector<double> energy;  // per device
};

class Simulation {
 public:
  Simulation(const RunConfig& cfg, const Environment& env, const RoundObserver& observer)
      : cfg_(cfg), env_(env), observer_(observer), spec_(cfg.compression()) {
    cfg_.validate();
    spec_.validate();
    if (env_.model.param_count() != spec_.dim) {
      throw ContractViolation("environment model does not match the configuration");
    }
    if (env_.shards.size() != cfg_.devices) {
      throw ContractViolation("environment shard count does not match the device count");
    }
    const InitialState init = initialize(cfg_, env_);
    w_ = init.w;
    g_hat_ = init.g_hat;
    errors_.assign(cfg_.devices, ParamVector(spec_.dim));
    result_.algorithm = cfg_.algorithm;
    result_.ledger = PowerBudget(cfg_.total_slots, std::vector<double>(cfg_.devices, cfg_.power_avg), cfg_.alpha);
  }

  template <typename RoundFn>
  RunResult drive(RoundFn&& round_fn) {
    for (std::size_t t = 1; t <= cfg_.max_rounds; ++t) {
      if (result_.ledger.remaining_slots() == 0) {
        result_.budget_exhausted = true;
        break;
      }
      RoundOutcome out = round_fn(t);
      if (out.kind == RoundOutcome::Kind::kOverrun) {
        result_.budget_exhausted = true;
        result_.rejected_round_slots = out.u_global + out.u_local;
        break;
      }
      if (!w_.all_finite()) throw ContractViolation("model became non-finite in round " + std::to_string(t));

      RoundReport r;
      r.round = t;
      r.skipped = out.kind == RoundOutcome::Kind::kSkipped;
      r.n_scheduled = out.n_scheduled;
      r.u_global = out.u_global;
      r.u_local = out.u_local;
      r.u_round = out.u_global + out.u_local;
      if (!r.skipped) {
        result_.ledger.commit(r.u_round, out.energy);
        r.power_spent_max = *std::max_element(out.energy.begin(), out.energy.end());
      }
      r.blocks_cum = result_.ledger.spent_slots * cfg_.subchannels;
      double loss = 0.0;
      for (const auto& shard : env_.shards) loss += evaluate(env_.model, w_, shard).loss;
      r.loss = loss / static_cast<double>(env_.shards.size());
      r.accuracy = evaluate(env_.model, w_, env_.test).accuracy;
      r.gamma = spec_.gamma();
      double enorm = 0.0;
      for (const auto& e : errors_) enorm += e.norm();
      r.mean_error_norm = enorm / static_cast<double>(errors_.size());
      result_.rounds.push_back(r);
      if (observer_) observer_(r, w_);
      if (cfg_.target_accuracy > 0.0 && r.accuracy >= cfg_.target_accuracy) break;
    }
    result_.final_model = w_;
    return std::move(result_);
  }

  RoundOutcome round_tcs_h(std::size_t t) {
    const std::size_t n_dev = cfg_.devices;
    const std::vector<double> budget = shaded_budget();

    // Every device derives the global mask from its own copy of g_hat.
    const MaskVector mask = global_mask(g_hat_, spec_);
    std::vector<ParamVector> g_ec(n_dev);
    std::vector<CompressedUpdate> sent(n_dev);
    for (std::size_t n = 0; n < n_dev; ++n) {
      const MaskVector mine = global_mask(g_hat_, spec_);
      if (!(mine == mask)) throw ContractViolation("global masks diverged across devices");
      g_ec[n] = local_update(t, n);
      RngStream qrng(cfg_.seed, {t, n, Purpose::kQuantize, 0});
      sent[n] = compress_round(g_ec[n], mine, spec_, qrng);
    }

    const OacConfig oac{cfg_.power_scalar, cfg_.subchannels, spec_.k_global};
    const ChannelRealization ch = channel(t);
    std::vector<double> oac_energy(n_dev);
    for (std::size_t n = 0; n < n_dev; ++n) oac_energy[n] = oac_transmit_power(sent[n].global, ch, n, oac);

    const auto scheduled = schedule_devices(oac_energy, budget, cfg_.alpha, oac.slots());
    if (scheduled.empty()) return RoundOutcome{};

    const Allocation alloc = allocate_round(scheduled, ch, budget, tcs_h_payload_bits(spec_), oac.slots());
    RoundOutcome out = outcome_from(alloc);
    if (alloc.u_total > result_.ledger.remaining_slots()) {
      out.kind = RoundOutcome::Kind::kOverrun;
      return out;
    }

    std::vector<const SparseUpdate*> analog;
    std::vector<SparseUpdate> digital;
    for (std::size_t n : scheduled) {
      analog.push_back(&sent[n].global);
      digital.push_back(dequantize(sent[n].local));
    }
    const ParamVector y = oac_aggregate(analog, ch, oac, NoiseKey{cfg_.seed, t});
    g_hat_ = aggregate_eq2(y, digital, scheduled.size(), cfg_.power_scalar);
    w_ += g_hat_;

    for (std::size_t i = 0; i < scheduled.size(); ++i) {
      const std::size_t n = scheduled[i];
      errors_[n] = error_update(g_ec[n], sent[n].global, sent[n].local, true, errors_[n]);
      out.energy[n] = oac_energy[n] + static_cast<double>(alloc.device_slots[i]) * alloc.digital_power(i);
    }
    return out;
  }

  RoundOutcome round_tcs_d(std::size_t t) {
    const std::vector<double> budget = shaded_budget();
    const auto scheduled = random_schedule(t, budget);
    if (scheduled.empty()) return RoundOutcome{};

    const MaskVector mask = global_mask(g_hat_, spec_);
    std::vector<ParamVector> g_ec(cfg_.devices);
    std::vector<QuantizedUpdate> q_global(cfg_.devices);
    std::vector<QuantizedUpdate> q_local(cfg_.devices);
    for (std::size_t n : scheduled) {
      g_ec[n] = local_update(t, n);
      RngStream local_rng(cfg_.seed, {t, n, Purpose::kQuantize, 0});
      RngStream global_rng(cfg_.seed, {t, n, Purpose::kQuantize, 1});
      const CompressedUpdate c = compress_round(g_ec[n], mask, spec_, local_rng);
      q_global[n] = quantize(c.global, spec_.bits, global_rng);
      q_local[n] = c.local;
    }

    const ChannelRealization ch = channel(t);
    const Allocation alloc = allocate_round(scheduled, ch, budget, tcs_d_payload_bits(spec_), 0);
    RoundOutcome out = outcome_from(alloc);
    if (alloc.u_total > result_.ledger.remaining_slots()) {
      out.kind = RoundOutcome::Kind::kOverrun;
      return out;
    }

    ParamVector sum(spec_.dim);
    for (std::size_t n : scheduled) {
      const ParamVector g_part = q_global[n].densify();
      const ParamVector l_part = q_local[n].densify();
      sum += g_part;
      sum += l_part;
      errors_[n] = g_ec[n] - g_part - l_part;
    }
    g_hat_ = (1.0 / static_cast<double>(scheduled.size())) * sum;
    w_ += g_hat_;
    fill_digital_energy(alloc, out);
    return out;
  }

  RoundOutcome round_top_k(std::size_t t) {
    const std::vector<double> budget = shaded_budget();
    const auto scheduled = random_schedule(t, budget);
    if (scheduled.empty()) return RoundOutcome{};

    const std::size_t k = spec_.k_global + spec_.k_local;
    std::vector<ParamVector> g_ec(cfg_.devices);
    std::vector<QuantizedUpdate> q(cfg_.devices);
    for (std::size_t n : scheduled) {
      g_ec[n] = local_update(t, n);
      RngStream qrng(cfg_.seed, {t, n, Purpose::kQuantize, 0});
      q[n] = quantize(SparseUpdate::from_dense(g_ec[n], top_k_mask(g_ec[n], k)), spec_.bits, qrng);
    }

    const ChannelRealization ch = channel(t);
    const Allocation alloc = allocate_round(scheduled, ch, budget, top_k_payload_bits(spec_), 0);
    RoundOutcome out = outcome_from(alloc);
    if (alloc.u_total > result_.ledger.remaining_slots()) {
      out.kind = RoundOutcome::Kind::kOverrun;
      return out;
    }

    ParamVector sum(spec_.dim);
    for (std::size_t n : scheduled) {
      const ParamVector sent = q[n].densify();
      sum += sent;
      errors_[n] = g_ec[n] - sent;
    }
    g_hat_ = (1.0 / static_cast<double>(scheduled.size())) * sum;
    w_ += g_hat_;
    fill_digital_energy(alloc, out);
    return out;
  }

 private:
  std::vector<double> shaded_budget() const {
    std::vector<double> b = result_.ledger.per_slot_all();
    for (double& v : b) v *= kBudgetShade;
    return b;
  }

  // g_ec = local model difference + carried error.
  ParamVector local_update(std::size_t t, std::size_t n) const {
    RngStream sgd(cfg_.seed, {t, n, Purpose::kLocalSgd, 0});
    ParamVector g = local_sgd(env_.model, w_, env_.shards[n], cfg_.local_steps, cfg_.batch, cfg_.lr, sgd);
    g += errors_[n];
    return g;
  }

  ChannelRealization channel(std::size_t t) const {
    RngStream rng(cfg_.seed, {t, 0, Purpose::kChannel, 0});
    return draw_channel(cfg_.devices, cfg_.subchannels, cfg_.noise_var, rng);
  }

  // Uniform choice of a fixed number of devices among those with budget left.
  std::vector<std::size_t> random_schedule(std::size_t t, const std::vector<double>& budget) const {
    std::vector<std::size_t> pool;
    for (std::size_t n = 0; n < budget.size(); ++n) {
      if (budget[n] > 0.0) pool.push_back(n);
    }
    const std::size_t k = std::min(cfg_.baseline_scheduled, pool.size());
    RngStream rng(cfg_.seed, {t, 0, Purpose::kSchedule, 0});
    std::vector<std::size_t> picked;
    for (std::size_t i : rng.sample_without_replacement(pool.size(), k)) picked.push_back(pool[i]);
    std::sort(picked.begin(), picked.end());
    return picked;
  }

  RoundOutcome outcome_from(const Allocation& alloc) const {
    RoundOutcome out;
    out.kind = RoundOutcome::Kind::kExecuted;
    out.n_scheduled = alloc.scheduled.size();
    out.u_global = alloc.u_global;
    out.u_local = alloc.u_local;
    out.energy.assign(cfg_.devices, 0.0);
    return out;
  }

  static void fill_digital_energy(const Allocation& alloc, RoundOutcome& out) {
    for (std::size_t i = 0; i < alloc.scheduled.size(); ++i) {
      out.energy[alloc.scheduled[i]] = static_cast<double>(alloc.device_slots[i]) * alloc.digital_power(i);
    }
  }

  RunConfig cfg_;
  const Environment& env_;
  RoundObserver observer_;
  CompressionSpec spec_;
  ParamVector w_;
  ParamVector g_hat_;
  std::vector<ParamVector> errors_;
  RunResult result_;
};

}  // namespace

RunResult run_tcs_h(const RunConfig& cfg, const Environment& env, const RoundObserver& observer) {
  if (cfg.algorithm != Algorithm::kTcsH) throw std::invalid_argument("run_tcs_h: config selects another algorithm");
  Simulation sim(cfg, env, observer);
  return sim.drive([&](std::size_t t) { return sim.round_tcs_h(t); });
}

RunResult run_tcs_d(const RunConfig& cfg, const Environment& env, const RoundObserver& observer) {
  if (cfg.algorithm != Algorithm::kTcsD) throw std::invalid_argument("run_tcs_d: config selects another algorithm");
  Simulation sim(cfg, env, observer);
  return sim.drive([&](std::size_t t) { return sim.round_tcs_d(t); });
}

RunResult run_top_k(const RunConfig& cfg, const Environment& env, const RoundObserver& observer) {
  if (cfg.algorithm != Algorithm::kTopK) throw std::invalid_argument("run_top_k: config selects another algorithm");
  Simulation sim(cfg, env, observer);
  return sim.drive([&](std::size_t t) { return sim.round_top_k(t); });
}

RunResult run(const RunConfig& cfg, const Environment& env, const RoundObserver& observer) {
  switch (cfg.algorithm) {
    case Algorithm::kTcsH: return run_tcs_h(cfg, env, observer);
    case Algorithm::kTcsD: return run_tcs_d(cfg, env, observer);
    case Algorithm::kTopK: return run_top_k(cfg, env, observer);
  }
  throw std::invalid_argument("run: unknown algorithm");
}

}  // namespace feelsim
