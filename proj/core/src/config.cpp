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

#include "feelsim/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace feelsim {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"run", {"algorithm", "seed", "max_rounds", "target_accuracy"}},
      {"system",
       {"devices", "subchannels", "slots", "noise_var", "power_avg", "power_scalar", "alpha",
        "baseline_scheduled"}},
      {"compression", {"k_global", "phi_global", "k_local", "phi_local", "bits"}},
      {"learning", {"local_steps", "batch", "lr", "hidden"}},
      {"data",
       {"classes", "dim", "train_samples", "test_samples", "separation", "partition", "classes_per_device",
        "train_csv", "test_csv"}},
  };
  return keys;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t to_u64(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + raw + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    throw ConfigError(key, "expected a finite number, got '" + raw + "'");
  }
  return out;
}

std::vector<std::size_t> to_list(const std::string& key, const std::string& raw) {
  std::vector<std::size_t> out;
  std::string v = trim(raw);
  if (v.empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<std::size_t>(to_u64(key, item)));
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ec == std::errc{} ? ptr : buf);
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config", std::string("malformed INI: ") + e.message() + " (line " +
                                    std::to_string(e.line()) + ")");
  }

  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw ConfigError(section, "unknown section");
    if (body.empty() && !body.data().empty()) throw ConfigError(section, "key outside of a section");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError(section + "." + key, "unknown key");
    }
  }

  RunConfig cfg;
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return *v;
    return std::nullopt;
  };
  auto u64 = [&](const std::string& path, auto& field) {
    if (auto v = get(path)) field = static_cast<std::remove_reference_t<decltype(field)>>(to_u64(path, *v));
  };
  auto real = [&](const std::string& path, double& field) {
    if (auto v = get(path)) field = to_double(path, *v);
  };

  if (auto v = get("run.algorithm")) {
    try {
      cfg.algorithm = parse_algorithm(trim(*v));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("run.algorithm", e.what());
    }
  }
  u64("run.seed", cfg.seed);
  u64("run.max_rounds", cfg.max_rounds);
  real("run.target_accuracy", cfg.target_accuracy);

  u64("system.devices", cfg.devices);
  u64("system.subchannels", cfg.subchannels);
  u64("system.slots", cfg.total_slots);
  real("system.noise_var", cfg.noise_var);
  real("system.power_avg", cfg.power_avg);
  real("system.power_scalar", cfg.power_scalar);
  real("system.alpha", cfg.alpha);
  u64("system.baseline_scheduled", cfg.baseline_scheduled);

  auto sparsity = [&](const std::string& which, Sparsity& field) {
    const auto k = get("compression.k_" + which);
    const auto phi = get("compression.phi_" + which);
    if (k && phi) throw ConfigError("compression.k_" + which, "give either k_" + which + " or phi_" + which);
    if (k) field = Sparsity{static_cast<std::size_t>(to_u64("compression.k_" + which, *k)), 0.0};
    if (phi) {
      const double f = to_double("compression.phi_" + which, *phi);
      if (f < 0.0 || f > 1.0) throw ConfigError("compression.phi_" + which, "must lie in [0, 1]");
      field = Sparsity{std::nullopt, f};
    }
  };
  sparsity("global", cfg.sparsity_global);
  sparsity("local", cfg.sparsity_local);
  if (auto v = get("compression.bits")) {
    const auto b = to_u64("compression.bits", *v);
    if (b > 64) throw ConfigError("compression.bits", "must lie in [2, 53]");
    cfg.bits = static_cast<int>(b);
  }

  u64("learning.local_steps", cfg.local_steps);
  u64("learning.batch", cfg.batch);
  real("learning.lr", cfg.lr);
  if (auto v = get("learning.hidden")) cfg.hidden = to_list("learning.hidden", *v);

  u64("data.classes", cfg.num_classes);
  u64("data.dim", cfg.feature_dim);
  u64("data.train_samples", cfg.train_samples);
  u64("data.test_samples", cfg.test_samples);
  real("data.separation", cfg.separation);
  if (auto v = get("data.partition")) {
    const std::string mode = trim(*v);
    if (mode == "iid") {
      cfg.partition = PartitionMode::iid();
    } else if (mode == "label_skew") {
      cfg.partition = PartitionMode::label_skew(2);
    } else {
      throw ConfigError("data.partition", "expected iid or label_skew, got '" + mode + "'");
    }
  }
  if (auto v = get("data.classes_per_device")) {
    const auto c = static_cast<std::size_t>(to_u64("data.classes_per_device", *v));
    if (cfg.partition.kind == PartitionMode::Kind::kLabelSkew) cfg.partition.classes_per_device = c;
  }
  if (auto v = get("data.train_csv")) cfg.train_csv = trim(*v);
  if (auto v = get("data.test_csv")) cfg.test_csv = trim(*v);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_ini(const RunConfig& cfg) {
  std::ostringstream o;
  auto sparsity = [&](const char* which, const Sparsity& s) {
    if (s.count) {
      o << "k_" << which << " = " << *s.count << "\n";
    } else {
      o << "phi_" << which << " = " << format_double(s.fraction) << "\n";
    }
  };
  o << "[run]\n"
    << "algorithm = " << to_string(cfg.algorithm) << "\n"
    << "seed = " << cfg.seed << "\n"
    << "max_rounds = " << cfg.max_rounds << "\n"
    << "target_accuracy = " << format_double(cfg.target_accuracy) << "\n\n";
  o << "[system]\n"
    << "devices = " << cfg.devices << "\n"
    << "subchannels = " << cfg.subchannels << "\n"
    << "slots = " << cfg.total_slots << "\n"
    << "noise_var = " << format_double(cfg.noise_var) << "\n"
    << "power_avg = " << format_double(cfg.power_avg) << "\n"
    << "power_scalar = " << format_double(cfg.power_scalar) << "\n"
    << "alpha = " << format_double(cfg.alpha) << "\n"
    << "baseline_scheduled = " << cfg.baseline_scheduled << "\n\n";
  o << "[compression]\n";
  sparsity("global", cfg.sparsity_global);
  sparsity("local", cfg.sparsity_local);
  o << "bits = " << cfg.bits << "\n\n";
  o << "[learning]\n"
    << "local_steps = " << cfg.local_steps << "\n"
    << "batch = " << cfg.batch << "\n"
    << "lr = " << format_double(cfg.lr) << "\n"
    << "hidden = ";
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i) o << (i ? "," : "") << cfg.hidden[i];
  o << "\n\n";
  o << "[data]\n"
    << "classes = " << cfg.num_classes << "\n"
    << "dim = " << cfg.feature_dim << "\n"
    << "train_samples = " << cfg.train_samples << "\n"
    << "test_samples = " << cfg.test_samples << "\n"
    << "separation = " << format_double(cfg.separation) << "\n";
  if (cfg.partition.kind == PartitionMode::Kind::kIid) {
    o << "partition = iid\n";
  } else {
    o << "partition = label_skew\n"
      << "classes_per_device = " << cfg.partition.classes_per_device << "\n";
  }
  if (!cfg.train_csv.empty()) o << "train_csv = " << cfg.train_csv << "\n";
  if (!cfg.test_csv.empty()) o << "test_csv = " << cfg.test_csv << "\n";
  return o.str();
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_ini(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace feelsim
