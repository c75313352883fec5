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

#include <gtest/gtest.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "feelsim/config.hpp"
#include "feelsim/errors.hpp"

namespace feelsim::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kSmall = R"(; small run
[run]
algorithm = tcs_h
seed = 5
max_rounds = 6

[system]
devices = 4
subchannels = 6
slots = 100000
noise_var = 1e-6
power_avg = 5
power_scalar = 5
alpha = 1
baseline_scheduled = 3

[compression]
phi_global = 0.2
phi_local = 0.05
bits = 16

[learning]
local_steps = 2
batch = 16
lr = 0.05
hidden = 8

[data]
train_samples = 400
test_samples = 100
)";

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("feelsim_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return path_ / name;
  }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return text.replace(at, from.size(), to);
}

TEST(Config, RoundTripsThroughIni) {
  const RunConfig a = parse_config(kSmall);
  const std::string ini = to_ini(a);
  EXPECT_EQ(to_ini(parse_config(ini)), ini);
  EXPECT_EQ(config_hash(parse_config(ini)), config_hash(a));
  RunConfig b = a;
  b.seed = 6;
  EXPECT_NE(config_hash(b), config_hash(a));
}

TEST(Config, RejectsUnknownAndMalformedKeys) {
  auto key_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string();
  };
  EXPECT_EQ(key_of(replace(kSmall, "bits = 16", "bits = 16\nbogus = 1")), "compression.bogus");
  EXPECT_EQ(key_of(replace(kSmall, "seed = 5", "seed = five")), "run.seed");
  EXPECT_EQ(key_of(replace(kSmall, "algorithm = tcs_h", "algorithm = sgd")), "run.algorithm");
}

TEST(Run, WritesHeaderHashAndOneRowPerRound) {
  TempDir dir;
  const fs::path cfg = dir.write("c.ini", kSmall);
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(cfg, dir.path() / "out", {}, MetricsFormat::kCsv, out, err), kExitOk) << err.str();
  const auto rows = lines_of(slurp(dir.path() / "out" / "metrics.csv"));
  const std::string hash = config_hash(load_config(cfg));
  ASSERT_EQ(rows.size(), 2u + 6u);
  EXPECT_EQ(rows[0], "# config_hash=" + hash);
  EXPECT_EQ(rows[1], kCsvHeader);
  for (std::size_t i = 2; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].substr(0, rows[i].find(',')), std::to_string(i - 1));
    EXPECT_EQ(std::count(rows[i].begin(), rows[i].end(), ','), 6);
  }

  const json manifest = json::parse(slurp(dir.path() / "out" / "manifest.json"));
  EXPECT_EQ(manifest["status"], "completed");
  EXPECT_EQ(manifest["config_hash"], hash);
  EXPECT_EQ(manifest["seed"], 5);
  const json summary = json::parse(slurp(dir.path() / "out" / "summary.json"));
  EXPECT_EQ(summary["rounds_completed"], 6);
  EXPECT_EQ(summary["config_hash"], hash);
  EXPECT_EQ(summary["blocks_consumed"].get<std::size_t>(), summary["slots_used"].get<std::size_t>() * 6);
}

TEST(Run, OverridesApplyAndRerunIsByteIdentical) {
  TempDir dir;
  const fs::path cfg = dir.write("c.ini", kSmall);
  std::ostringstream out, err;
  const Overrides o{7, 3};
  ASSERT_EQ(cmd_run(cfg, dir.path() / "a", o, MetricsFormat::kCsv, out, err), kExitOk);
  ASSERT_EQ(cmd_run(cfg, dir.path() / "b", o, MetricsFormat::kCsv, out, err), kExitOk);
  EXPECT_EQ(lines_of(slurp(dir.path() / "a" / "metrics.csv")).size(), 2u + 3u);
  EXPECT_EQ(slurp(dir.path() / "a" / "metrics.csv"), slurp(dir.path() / "b" / "metrics.csv"));
  EXPECT_EQ(slurp(dir.path() / "a" / "summary.json"), slurp(dir.path() / "b" / "summary.json"));
  EXPECT_EQ(json::parse(slurp(dir.path() / "a" / "manifest.json"))["seed"], 7);
}

TEST(Run, JsonlCarriesEveryReportField) {
  TempDir dir;
  const fs::path cfg = dir.write("c.ini", kSmall);
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(cfg, dir.path() / "o", {}, MetricsFormat::kJsonl, out, err), kExitOk);
  const auto rows = lines_of(slurp(dir.path() / "o" / "metrics.jsonl"));
  ASSERT_EQ(rows.size(), 1u + 6u);
  EXPECT_TRUE(json::parse(rows[0]).contains("config_hash"));
  std::size_t previous = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const json r = json::parse(rows[i]);
    for (const char* k : {"round", "loss", "accuracy", "n_scheduled", "u_round", "blocks_cum", "power_spent_max"}) {
      EXPECT_TRUE(r.contains(k)) << k;
    }
    EXPECT_GT(r["round"].get<std::size_t>(), previous);
    previous = r["round"].get<std::size_t>();
  }
}

TEST(Run, ConfigErrorsExitTwoAndNameTheKey) {
  TempDir dir;
  // 2^(2q-2) = 16 for q = 3; the local count must stay below it.
  const std::string text = replace(replace(kSmall, "bits = 16", "bits = 3"), "phi_local = 0.05", "k_local = 16");
  const fs::path cfg = dir.write("c.ini", text);
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run(cfg, dir.path() / "o", {}, MetricsFormat::kCsv, out, err), kExitConfig);
  EXPECT_NE(err.str().find("compression.k_local"), std::string::npos) << err.str();

  const fs::path missing = dir.path() / "missing.ini";
  EXPECT_EQ(cmd_run(missing, dir.path() / "m", {}, MetricsFormat::kCsv, out, err), kExitConfig);
}

TEST(Compare, SummaryListsAllAlgorithmsWithBudgets) {
  TempDir dir;
  const fs::path cfg = dir.write("c.ini", kSmall);
  std::ostringstream out, err;
  ASSERT_EQ(cmd_compare(cfg, dir.path() / "o", {}, MetricsFormat::kCsv, out, err), kExitOk) << err.str();
  const json s = json::parse(slurp(dir.path() / "o" / "summary.json"));
  ASSERT_EQ(s["algorithms"].size(), 3u);
  EXPECT_EQ(s["algorithms"][0]["algorithm"], "tcs_h");
  EXPECT_EQ(s["algorithms"][1]["algorithm"], "tcs_d");
  EXPECT_EQ(s["algorithms"][2]["algorithm"], "top_k");
  const auto budgets = s["budgets"].get<std::vector<std::size_t>>();
  EXPECT_TRUE(std::is_sorted(budgets.begin(), budgets.end()));
  EXPECT_EQ(budgets.back(), 100000u * 6u);
  for (const auto& a : s["algorithms"]) EXPECT_EQ(a["accuracy_at_budget"].size(), budgets.size());
  const auto blocks = [&](int i) { return s["algorithms"][i]["blocks_consumed"].get<std::size_t>(); };
  EXPECT_LT(blocks(0), blocks(1));
  EXPECT_LT(blocks(1), blocks(2));

  const auto rows = lines_of(slurp(dir.path() / "o" / "metrics.csv"));
  EXPECT_EQ(rows.size(), 2u + 3u * 6u);
  EXPECT_EQ(rows[1].substr(0, rows[1].find(',')), "algorithm");
  EXPECT_NE(out.str().find("top_k"), std::string::npos);
}

TEST(Verify, SuitesPassAndReportSeed) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify("waterfill", 3, 20, out, err), kExitOk) << out.str();
  EXPECT_NE(out.str().find("PASS"), std::string::npos);
  EXPECT_EQ(out.str().find("FAIL"), std::string::npos);

  std::ostringstream fresh;
  EXPECT_EQ(cmd_verify("matching", std::nullopt, 10, fresh, err), kExitOk);
  EXPECT_EQ(fresh.str().rfind("seed ", 0), 0u);
}

TEST(Verify, UnknownSuiteFails) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify("nonsense", 1, 10, out, err), kExitFailure);
}

}  // namespace
}  // namespace feelsim::cli
