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

#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "feelsim/config.hpp"
#include "feelsim/errors.hpp"
#include "feelsim/verify.hpp"

#ifndef FEELSIM_VERSION
#define FEELSIM_VERSION "unknown"
#endif

namespace feelsim::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = std::make_shared<spdlog::logger>("feelsim", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    l->set_level(spdlog::level::info);
    if (const char* env = std::getenv("FEELSIM_LOG")) {
      const std::string want(env);
      const auto level = spdlog::level::from_str(want);
      if (level != spdlog::level::off || want == "off") {
        l->set_level(level);
      } else {
        l->warn("FEELSIM_LOG='{}' not recognised; using info", want);
      }
    }
    return l;
  }();
  return log;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

RunConfig load_with_overrides(const fs::path& config_path, const Overrides& o) {
  RunConfig cfg = load_config(config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.max_rounds) cfg.max_rounds = *o.max_rounds;
  return cfg;
}

// Owns one metrics file: writes the hash header once, then appends rows in
// round order.
class MetricsWriter {
 public:
  MetricsWriter(const fs::path& path, MetricsFormat format, const std::string& hash, bool keyed)
      : file_(path, std::ios::binary | std::ios::trunc), format_(format), keyed_(keyed) {
    if (!file_) throw std::runtime_error("cannot write " + path.string());
    if (format_ == MetricsFormat::kCsv) {
      file_ << "# config_hash=" << hash << '\n' << (keyed_ ? "algorithm," : "") << kCsvHeader << '\n';
    } else {
      file_ << json{{"config_hash", hash}}.dump() << '\n';
    }
    file_.flush();
  }

  void append(Algorithm algorithm, const RoundReport& r) {
    if (format_ == MetricsFormat::kCsv) {
      if (keyed_) file_ << to_string(algorithm) << ',';
      file_ << csv_row(r) << '\n';
    } else {
      json row = json::parse(jsonl_row(r));
      if (keyed_) row["algorithm"] = to_string(algorithm);
      file_ << row.dump() << '\n';
    }
    file_.flush();
  }

 private:
  std::ofstream file_;
  MetricsFormat format_;
  bool keyed_;
};

std::string metrics_name(MetricsFormat format) {
  return format == MetricsFormat::kCsv ? "metrics.csv" : "metrics.jsonl";
}

json manifest_json(const RunConfig& cfg, const std::string& command, const fs::path& out_dir, MetricsFormat format) {
  return json{{"command", command},
              {"version", FEELSIM_VERSION},
              {"seed", cfg.seed},
              {"config_hash", config_hash(cfg)},
              {"config", to_ini(cfg)},
              {"start_time", utc_now()},
              {"end_time", nullptr},
              {"status", "running"},
              {"outputs",
               {{"manifest", (out_dir / "manifest.json").string()},
                {"metrics", (out_dir / metrics_name(format)).string()},
                {"summary", (out_dir / "summary.json").string()}}}};
}

json run_summary(const RunResult& r, std::size_t subchannels) {
  const std::size_t slots = r.ledger.spent_slots;
  double energy_fraction = 0.0;
  for (std::size_t n = 0; n < r.ledger.avg_power.size(); ++n) {
    const double cap = static_cast<double>(r.ledger.total_slots) * r.ledger.avg_power[n];
    if (cap > 0.0) energy_fraction = std::max(energy_fraction, r.ledger.spent_power[n] / cap);
  }
  json s{{"algorithm", to_string(r.algorithm)},
         {"rounds_completed", r.rounds.size()},
         {"blocks_consumed", slots * subchannels},
         {"slots_used", slots},
         {"slots_total", r.ledger.total_slots},
         {"max_energy_fraction", energy_fraction},
         {"budget_exhausted", r.budget_exhausted},
         {"rejected_round_slots", r.rejected_round_slots},
         {"final_accuracy", nullptr},
         {"final_loss", nullptr}};
  if (!r.rounds.empty()) {
    s["final_accuracy"] = finite_or_null(r.rounds.back().accuracy);
    s["final_loss"] = finite_or_null(r.rounds.back().loss);
  }
  return s;
}

// Accuracy of the last round whose cumulative block count fits the budget.
double accuracy_at(const RunResult& r, std::size_t budget) {
  double acc = std::numeric_limits<double>::quiet_NaN();
  for (const auto& round : r.rounds) {
    if (round.blocks_cum > budget) break;
    acc = round.accuracy;
  }
  return acc;
}

// Shared error handling: maps exceptions to exit codes and records the
// outcome in the manifest when one has been written.
template <typename Body>
int guarded(const fs::path& out_dir, json* manifest, std::ostream& err, Body&& body) {
  auto finish = [&](const std::string& status) {
    if (manifest && !manifest->is_null()) {
      (*manifest)["status"] = status;
      (*manifest)["end_time"] = utc_now();
      try {
        write_text(out_dir / "manifest.json", manifest->dump(2) + "\n");
      } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
      }
    }
  };
  try {
    body();
    finish("completed");
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error [" << e.key() << "]: " << e.what() << '\n';
    finish("config_error");
    return kExitConfig;
  } catch (const ContractViolation& e) {
    err << "contract violation: " << e.what() << '\n';
    finish("contract_violation");
    return kExitContract;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    finish("failed");
    return kExitFailure;
  }
}

RoundObserver progress_observer(MetricsWriter& metrics, Algorithm algorithm) {
  return [&metrics, algorithm](const RoundReport& r, const ParamVector&) {
    metrics.append(algorithm, r);
    logger()->debug("{} round {}: loss {} acc {} scheduled {} slots {} blocks {}", to_string(algorithm), r.round,
                    format_double(r.loss), format_double(r.accuracy), r.n_scheduled, r.u_round, r.blocks_cum);
  };
}

}  // namespace

std::string csv_row(const RoundReport& r) {
  std::string s = std::to_string(r.round);
  s += ',' + format_double(r.loss);
  s += ',' + format_double(r.accuracy);
  s += ',' + std::to_string(r.n_scheduled);
  s += ',' + std::to_string(r.u_round);
  s += ',' + std::to_string(r.blocks_cum);
  s += ',' + format_double(r.power_spent_max);
  return s;
}

std::string jsonl_row(const RoundReport& r) {
  return json{{"round", r.round},
              {"loss", finite_or_null(r.loss)},
              {"accuracy", finite_or_null(r.accuracy)},
              {"n_scheduled", r.n_scheduled},
              {"u_global", r.u_global},
              {"u_local", r.u_local},
              {"u_round", r.u_round},
              {"blocks_cum", r.blocks_cum},
              {"power_spent_max", finite_or_null(r.power_spent_max)},
              {"skipped", r.skipped},
              {"gamma", r.gamma},
              {"mean_error_norm", finite_or_null(r.mean_error_norm)}}
      .dump();
}

int cmd_run(const fs::path& config_path, const fs::path& out_dir, const Overrides& overrides, MetricsFormat format,
            std::ostream& out, std::ostream& err) {
  json manifest;
  return guarded(out_dir, &manifest, err, [&] {
    const RunConfig cfg = load_with_overrides(config_path, overrides);
    cfg.validate();
    fs::create_directories(out_dir);
    manifest = manifest_json(cfg, "run", out_dir, format);
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");

    logger()->info("{}: seed {}, up to {} rounds, config {}", to_string(cfg.algorithm), cfg.seed, cfg.max_rounds,
                   config_hash(cfg));
    const Environment env = build_environment(cfg);
    MetricsWriter metrics(out_dir / metrics_name(format), format, config_hash(cfg), false);
    const RunResult result = run(cfg, env, progress_observer(metrics, cfg.algorithm));

    json summary = run_summary(result, cfg.subchannels);
    summary["config_hash"] = config_hash(cfg);
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");
    out << to_string(cfg.algorithm) << ": " << result.rounds.size() << " rounds, "
        << summary["blocks_consumed"].get<std::size_t>() << " blocks, final accuracy "
        << (result.rounds.empty() ? std::string("n/a") : format_double(result.rounds.back().accuracy)) << '\n';
  });
}

int cmd_compare(const fs::path& config_path, const fs::path& out_dir, const Overrides& overrides,
                MetricsFormat format, std::ostream& out, std::ostream& err) {
  json manifest;
  return guarded(out_dir, &manifest, err, [&] {
    const RunConfig base = load_with_overrides(config_path, overrides);
    const Algorithm order[] = {Algorithm::kTcsH, Algorithm::kTcsD, Algorithm::kTopK};
    std::vector<RunConfig> configs;
    for (Algorithm a : order) {
      RunConfig c = base;
      c.algorithm = a;
      c.validate();
      configs.push_back(c);
    }
    fs::create_directories(out_dir);
    manifest = manifest_json(base, "compare", out_dir, format);
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");

    const Environment env = build_environment(base);
    MetricsWriter metrics(out_dir / metrics_name(format), format, config_hash(base), true);
    std::vector<RunResult> results;
    for (const RunConfig& c : configs) {
      logger()->info("compare: running {}", to_string(c.algorithm));
      results.push_back(run(c, env, progress_observer(metrics, c.algorithm)));
    }

    std::vector<std::size_t> budgets;
    for (const auto& r : results) budgets.push_back(r.ledger.spent_slots * base.subchannels);
    budgets.push_back(base.total_slots * base.subchannels);
    std::sort(budgets.begin(), budgets.end());
    budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());

    json summary{{"config_hash", config_hash(base)}, {"budgets", budgets}, {"algorithms", json::array()}};
    std::ostringstream table;
    table << std::left << std::setw(8) << "algo" << std::right << std::setw(8) << "rounds" << std::setw(14)
          << "blocks" << std::setw(12) << "final_acc";
    for (std::size_t b : budgets) table << std::setw(14) << ("acc@" + std::to_string(b));
    table << '\n';
    for (const auto& r : results) {
      json s = run_summary(r, base.subchannels);
      json at = json::array();
      table << std::left << std::setw(8) << to_string(r.algorithm) << std::right << std::setw(8) << r.rounds.size()
            << std::setw(14) << s["blocks_consumed"].get<std::size_t>() << std::setw(12)
            << (r.rounds.empty() ? std::string("-") : format_double(r.rounds.back().accuracy));
      for (std::size_t b : budgets) {
        const double acc = accuracy_at(r, b);
        at.push_back(finite_or_null(acc));
        table << std::setw(14) << (std::isfinite(acc) ? format_double(acc) : std::string("-"));
      }
      table << '\n';
      s["accuracy_at_budget"] = at;
      summary["algorithms"].push_back(s);
    }
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");
    out << table.str();
  });
}

int cmd_verify(const std::string& suite, std::optional<std::uint64_t> seed, std::optional<std::size_t> trials,
               std::ostream& out, std::ostream& err) {
  const std::uint64_t used_seed = seed.value_or([] {
    std::random_device rd;
    return (std::uint64_t{rd()} << 32) ^ rd();
  }());
  int status = kExitOk;
  const int rc = guarded({}, nullptr, err, [&] {
    const std::vector<std::string> suites =
        suite == "all" ? verify_suites() : std::vector<std::string>{suite};
    out << "seed " << used_seed << '\n';
    for (const auto& name : suites) {
      const SuiteReport rep = run_verify_suite(name, used_seed, trials);
      for (const auto& r : rep.results) {
        out << (r.pass ? "PASS " : "FAIL ") << rep.suite << '.' << r.name << ": " << r.detail << '\n';
        if (!r.pass) out << "  counterexample: " << r.counterexample << '\n';
      }
      if (!rep.all_pass()) status = kExitFailure;
    }
  });
  return rc != kExitOk ? rc : status;
}

}  // namespace feelsim::cli
