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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unistd.h>
#include <vector>

#include "feelsim/learning.hpp"
#include "oracles.hpp"

namespace feelsim {
namespace {

// Samples whose first feature is their index, so shards can be traced back.
Dataset indexed_dataset(std::size_t n, std::size_t classes) {
  Dataset d;
  d.feature_dim = 2;
  d.num_classes = classes;
  for (std::size_t i = 0; i < n; ++i) {
    const double x[2] = {static_cast<double>(i), 0.5};
    d.push_back(x, i % classes);
  }
  return d;
}

std::vector<std::vector<double>> rows(const Dataset& d) {
  std::vector<std::vector<double>> r;
  for (std::size_t i = 0; i < d.size(); ++i) r.emplace_back(d.row(i).begin(), d.row(i).end());
  return r;
}

TEST(Model, ParamCountAndInit) {
  const ModelSpec m{{20, 32, 10}};
  EXPECT_EQ(m.param_count(), 20u * 32u + 32u + 32u * 10u + 10u);
  RngStream rng(1, {});
  const ParamVector w = init_params(m, rng);
  const double b1 = std::sqrt(6.0 / 52.0);
  const double b2 = std::sqrt(6.0 / 42.0);
  for (std::size_t i = 0; i < 640; ++i) EXPECT_LE(std::abs(w[i]), b1);
  for (std::size_t i = 640; i < 672; ++i) EXPECT_EQ(w[i], 0.0);
  for (std::size_t i = 672; i < 992; ++i) EXPECT_LE(std::abs(w[i]), b2);
  for (std::size_t i = 992; i < 1002; ++i) EXPECT_EQ(w[i], 0.0);
  EXPECT_THROW((ModelSpec{{5}}.validate()), std::invalid_argument);
}

TEST(Partition, IidEvenDisjointCovering) {
  const Dataset d = indexed_dataset(100, 10);
  RngStream rng(2, {});
  const auto shards = partition(d, 10, PartitionMode::iid(), rng);
  ASSERT_EQ(shards.size(), 10u);
  std::multiset<double> seen;
  for (const auto& s : shards) {
    EXPECT_EQ(s.size(), 10u);
    for (std::size_t i = 0; i < s.size(); ++i) seen.insert(s.row(i)[0]);
  }
  std::multiset<double> expected;
  for (std::size_t i = 0; i < 100; ++i) expected.insert(static_cast<double>(i));
  EXPECT_EQ(seen, expected);
}

TEST(Partition, LabelSkewEachClassInFourShards) {
  const Dataset d = indexed_dataset(2000, 10);
  RngStream rng(3, {});
  const auto shards = partition(d, 20, PartitionMode::label_skew(2), rng);
  std::map<std::size_t, std::set<std::size_t>> holders;
  std::multiset<double> seen;
  for (std::size_t n = 0; n < shards.size(); ++n) {
    std::set<std::size_t> classes(shards[n].labels.begin(), shards[n].labels.end());
    EXPECT_EQ(classes.size(), 2u);
    for (std::size_t c : classes) holders[c].insert(n);
    for (std::size_t i = 0; i < shards[n].size(); ++i) seen.insert(shards[n].row(i)[0]);
  }
  for (const auto& [c, devices] : holders) EXPECT_EQ(devices.size(), 4u) << "class " << c;
  EXPECT_EQ(seen.size(), 2000u);
  EXPECT_EQ(std::set<double>(seen.begin(), seen.end()).size(), 2000u);
}

TEST(Partition, SameSeedSamePartition) {
  const Dataset d = indexed_dataset(300, 10);
  for (auto mode : {PartitionMode::iid(), PartitionMode::label_skew(3)}) {
    RngStream a(4, {});
    RngStream b(4, {});
    const auto sa = partition(d, 7, mode, a);
    const auto sb = partition(d, 7, mode, b);
    for (std::size_t n = 0; n < 7; ++n) EXPECT_EQ(sa[n].features, sb[n].features);
  }
}

class TrainingFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    RngStream rng(5, {});
    data = synthesize_dataset(10, 200, 20, 3.0, rng);
    RngStream init(6, {});
    w = init_params(model, init);
  }
  ModelSpec model{{20, 32, 10}};
  Dataset data;
  ParamVector w;
};

TEST_F(TrainingFixture, ZeroLearningRateGivesZeroStep) {
  RngStream rng(7, {});
  EXPECT_EQ(local_sgd(model, w, data, 1, 16, 0.0, rng), ParamVector(w.size()));
}

TEST_F(TrainingFixture, FullBatchStepEqualsGradientStep) {
  RngStream rng(8, {});
  const ParamVector step = local_sgd(model, w, data, 1, data.size(), 0.1, rng);
  const ParamVector expected = (w + (-0.1) * full_batch_gradient(model, w, data)) - w;
  EXPECT_EQ(step, expected);

  const auto xs = rows(data);
  const auto fd = oracle::central_difference(
      [&](const std::vector<double>& p) { return oracle::naive_loss(model.layer_sizes, p, xs, data.labels); },
      w.values(), 1e-5);
  std::vector<double> fd_step(fd.size());
  for (std::size_t i = 0; i < fd.size(); ++i) fd_step[i] = -0.1 * fd[i];
  EXPECT_LE(oracle::relative_error(step.values(), fd_step), 1e-5);
}

TEST_F(TrainingFixture, GradientMatchesFiniteDifferences) {
  // A small batch keeps rectifier kinks out of the 1e-5 difference window.
  std::vector<std::size_t> idx(20);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const Dataset batch = data.select(idx);
  const auto xs = rows(batch);
  for (std::uint64_t p = 0; p < 10; ++p) {
    RngStream rng(9, {p, 0, Purpose::kVerify, 0});
    ParamVector point = w;
    for (auto& v : point) v += 0.2 * rng.normal();
    ParamVector grad;
    loss_and_gradient(model, point, batch, idx, &grad);
    const auto fd = oracle::central_difference(
        [&](const std::vector<double>& q) { return oracle::naive_loss(model.layer_sizes, q, xs, batch.labels); },
        point.values(), 1e-5);
    EXPECT_LE(oracle::relative_error(grad.values(), fd), 1e-5) << "point " << p;
  }
}

TEST_F(TrainingFixture, LossMatchesNaiveSummation) {
  const auto xs = rows(data);
  std::vector<std::vector<double>> first(xs.begin(), xs.begin() + 100);
  std::vector<std::size_t> labels(data.labels.begin(), data.labels.begin() + 100);
  std::vector<std::size_t> idx(100);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const double loss = loss_and_gradient(model, w, data, idx, nullptr);
  EXPECT_NEAR(loss, oracle::naive_loss(model.layer_sizes, w.values(), first, labels), 1e-12);
}

TEST_F(TrainingFixture, LossDecreasesOnSeparableShard) {
  RngStream rng(10, {});
  const Dataset easy = synthesize_dataset(10, 100, 20, 8.0, rng);
  const double before = evaluate(model, w, easy).loss;
  RngStream sgd(11, {});
  const ParamVector step = local_sgd(model, w, easy, 5, 20, 0.01, sgd);
  EXPECT_LT(evaluate(model, w + step, easy).loss, before);
}

TEST_F(TrainingFixture, DeterministicSteps) {
  RngStream a(12, {3, 4, Purpose::kLocalSgd, 0});
  RngStream b(12, {3, 4, Purpose::kLocalSgd, 0});
  EXPECT_EQ(local_sgd(model, w, data, 10, 16, 0.05, a), local_sgd(model, w, data, 10, 16, 0.05, b));
}

TEST_F(TrainingFixture, RejectsBadArguments) {
  RngStream rng(13, {});
  EXPECT_THROW(local_sgd(model, w, data, 0, 16, 0.05, rng), std::invalid_argument);
  EXPECT_THROW(local_sgd(model, w, data, 1, data.size() + 1, 0.05, rng), std::invalid_argument);
  EXPECT_THROW(local_sgd(model, w, data, 1, 16, -1.0, rng), std::invalid_argument);
  EXPECT_THROW(local_sgd(model, w, Dataset{20, 10, {}, {}}, 1, 1, 0.05, rng), std::invalid_argument);
}

TEST(Evaluate, UniformLogits) {
  const ModelSpec m{{4, 8, 10}};
  Dataset d;
  d.feature_dim = 4;
  d.num_classes = 10;
  for (std::size_t i = 0; i < 100; ++i) {
    const double x[4] = {1, 2, 3, 4};
    d.push_back(x, i % 10);
  }
  const EvalResult r = evaluate(m, ParamVector(m.param_count()), d);
  EXPECT_NEAR(r.loss, std::log(10.0), 1e-12);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.1);
}

TEST(Evaluate, PerfectLogits) {
  const ModelSpec m{{3, 3}};
  ParamVector w(m.param_count());
  for (std::size_t i = 0; i < 3; ++i) w[i * 3 + i] = 50.0;
  Dataset d;
  d.feature_dim = 3;
  d.num_classes = 3;
  for (std::size_t c = 0; c < 3; ++c) {
    double x[3] = {0, 0, 0};
    x[c] = 1.0;
    d.push_back(x, c);
  }
  const EvalResult r = evaluate(m, w, d);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_LT(r.loss, 1e-20);
}

TEST(Synthesize, Deterministic) {
  RngStream a(14, {});
  RngStream b(14, {});
  const Dataset da = synthesize_dataset(10, 50, 20, 3.0, a);
  const Dataset db = synthesize_dataset(10, 50, 20, 3.0, b);
  EXPECT_EQ(da.features, db.features);
  EXPECT_EQ(da.labels, db.labels);
}

double centralized_accuracy(double separation) {
  RngStream means(15, {0, 0, Purpose::kDataset, 0});
  const ClusterModel clusters = make_clusters(10, 20, separation, means);
  RngStream train_rng(15, {0, 0, Purpose::kDataset, 1});
  RngStream test_rng(15, {0, 0, Purpose::kDataset, 2});
  const Dataset train = sample_clusters(clusters, 1000, train_rng);
  const Dataset test = sample_clusters(clusters, 1000, test_rng);
  const ModelSpec m{{20, 32, 10}};
  RngStream init(16, {});
  ParamVector w = init_params(m, init);
  RngStream sgd(17, {});
  w += local_sgd(m, w, train, 200, train.size(), 0.5, sgd);
  return separation == 0.0 ? evaluate(m, w, test).accuracy : evaluate(m, w, train).accuracy;
}

TEST(Synthesize, NoSeparationIsChance) {
  const double acc = centralized_accuracy(0.0);
  EXPECT_GT(acc, 0.05);
  EXPECT_LT(acc, 0.16);
}

TEST(Synthesize, WideSeparationIsLearnable) { EXPECT_GE(centralized_accuracy(6.0), 0.95); }

class CsvFixture : public ::testing::Test {
 protected:
  std::filesystem::path write(const std::string& text) {
    const auto p = std::filesystem::temp_directory_path() /
                   ("feelsim_csv_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++) + ".csv");
    std::ofstream(p) << text;
    files_.push_back(p);
    return p;
  }
  void TearDown() override {
    for (const auto& f : files_) std::filesystem::remove(f);
  }

 private:
  int counter_ = 0;
  std::vector<std::filesystem::path> files_;
};

TEST_F(CsvFixture, LoadsRows) {
  const Dataset d = load_csv_dataset(write("0,1.5,2\n2,-3,4e-1\n\n1,0,0\n"));
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.feature_dim, 2u);
  EXPECT_EQ(d.num_classes, 3u);
  EXPECT_EQ(d.labels, (std::vector<std::size_t>{0, 2, 1}));
  EXPECT_EQ(d.features, (std::vector<double>{1.5, 2, -3, 0.4, 0, 0}));
}

TEST_F(CsvFixture, RejectsMalformed) {
  EXPECT_THROW(load_csv_dataset(write("0,1,2\n1,3\n")), std::invalid_argument);
  EXPECT_THROW(load_csv_dataset(write("0.5,1,2\n")), std::invalid_argument);
  EXPECT_THROW(load_csv_dataset(write("0,abc\n")), std::invalid_argument);
  EXPECT_THROW(load_csv_dataset(write("3,1\n"), 2), std::invalid_argument);
  EXPECT_THROW(load_csv_dataset("/nonexistent/feelsim.csv"), std::invalid_argument);
}

}  // namespace
}  // namespace feelsim
