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

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "feelsim/errors.hpp"
#include "feelsim/mask.hpp"
#include "feelsim/param_vector.hpp"
#include "feelsim/rng.hpp"

namespace feelsim {
namespace {

std::vector<std::size_t> pos(const MaskVector& m) { return {m.positions().begin(), m.positions().end()}; }

TEST(ParamVector, ArithmeticRequiresEqualLengths) {
  ParamVector a{1, 2, 3};
  const ParamVector b{1, 2};
  EXPECT_THROW(a += b, std::invalid_argument);
  EXPECT_THROW(a -= b, std::invalid_argument);
  EXPECT_THROW(a.axpy(1.0, b), std::invalid_argument);
  EXPECT_THROW((void)a.dot(b), std::invalid_argument);
}

TEST(ParamVector, BasicOps) {
  ParamVector a{1, 2, 3};
  const ParamVector b{4, 5, 6};
  EXPECT_EQ(a + b, (ParamVector{5, 7, 9}));
  EXPECT_EQ(b - a, (ParamVector{3, 3, 3}));
  EXPECT_EQ(2.0 * a, (ParamVector{2, 4, 6}));
  EXPECT_DOUBLE_EQ(a.dot(b), 32.0);
  EXPECT_DOUBLE_EQ(a.squared_norm(), 14.0);
  a.axpy(-1.0, b);
  EXPECT_EQ(a, (ParamVector{-3, -3, -3}));
  EXPECT_TRUE(a.all_finite());
  a[0] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(a.all_finite());
}

TEST(ParamVector, RelativeDistance) {
  EXPECT_DOUBLE_EQ(relative_distance(ParamVector{3, 4}, ParamVector{0, 0}), 5.0 / 1e-300);
  EXPECT_DOUBLE_EQ(relative_distance(ParamVector{1, 1}, ParamVector{1, 0}), 1.0);
}

TEST(MaskVector, ValidatesPositions) {
  EXPECT_THROW(MaskVector(3, {1, 1}), std::invalid_argument);
  EXPECT_THROW(MaskVector(3, {2, 1}), std::invalid_argument);
  EXPECT_THROW(MaskVector(3, {3}), std::invalid_argument);
  EXPECT_NO_THROW(MaskVector(3, {0, 2}));
}

TEST(TopK, TwoLargestMagnitudes) { EXPECT_EQ(pos(top_k_mask(ParamVector{3, -5, 2, 0}, 2)), (std::vector<std::size_t>{0, 1})); }

TEST(TopK, TieBreakLowestIndex) { EXPECT_EQ(pos(top_k_mask(ParamVector{1, 1, 1}, 2)), (std::vector<std::size_t>{0, 1})); }

TEST(TopK, ZeroPaddingLowestIndexFirst) {
  EXPECT_EQ(pos(top_k_mask(ParamVector{0, 0, 0, 7}, 2)), (std::vector<std::size_t>{0, 3}));
}

TEST(TopK, KLargerThanDimensionThrows) { EXPECT_THROW(top_k_mask(ParamVector{1, 2}, 3), std::invalid_argument); }

TEST(TopK, ZeroAndFull) {
  const ParamVector x{4, -1, 2};
  EXPECT_EQ(top_k_mask(x, 0).count(), 0u);
  EXPECT_EQ(pos(top_k_mask(x, 3)), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(TopK, KeepsMaximumEnergy) {
  std::mt19937_64 eng(1);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + eng() % 40;
    const std::size_t k = eng() % (d + 1);
    ParamVector x(d);
    for (auto& v : x) v = trial % 4 == 0 ? std::round(g(eng)) : g(eng);  // rounding creates ties
    std::vector<double> sq;
    for (double v : x) sq.push_back(v * v);
    std::sort(sq.rbegin(), sq.rend());
    const double best = std::accumulate(sq.begin(), sq.begin() + static_cast<long>(k), 0.0);
    double got = 0.0;
    const MaskVector m = top_k_mask(x, k);
    ASSERT_EQ(m.count(), k);
    for (std::size_t i : m.positions()) got += x[i] * x[i];
    EXPECT_DOUBLE_EQ(got, best);
  }
}

TEST(TopK, PermutationEquivariantForDistinctMagnitudes) {
  std::mt19937_64 eng(2);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 30;
    ParamVector x(d);
    for (auto& v : x) v = g(eng);
    std::vector<std::size_t> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), eng);
    ParamVector px(d);
    for (std::size_t i = 0; i < d; ++i) px[i] = x[perm[i]];
    const MaskVector mx = top_k_mask(x, 7);
    const MaskVector mp = top_k_mask(px, 7);
    std::set<std::size_t> direct(mx.positions().begin(), mx.positions().end());
    std::set<std::size_t> back;
    for (std::size_t i : mp.positions()) back.insert(perm[i]);
    EXPECT_EQ(direct, back);
  }
}

TEST(TopK, LargeDimension) {
  RngStream rng(3, {});
  ParamVector x(100000);
  for (auto& v : x) v = rng.normal();
  const MaskVector m = top_k_mask(x, 2000);
  EXPECT_EQ(m.count(), 2000u);
  double kept_min = INFINITY;
  for (std::size_t i : m.positions()) kept_min = std::min(kept_min, std::abs(x[i]));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!m.contains(i)) EXPECT_LE(std::abs(x[i]), kept_min);
  }
}

TEST(ApplyMask, Examples) {
  EXPECT_EQ(apply_mask(ParamVector{5, 6, 7}, MaskVector(3, {1})), (ParamVector{0, 6, 0}));
  const ParamVector x{1.5, -2.25, 3.125};
  EXPECT_EQ(apply_mask(x, MaskVector::full(3)), x);
  EXPECT_EQ(apply_mask(x, MaskVector::empty(3)), ParamVector(3));
  EXPECT_THROW(apply_mask(x, MaskVector::full(4)), std::invalid_argument);
}

TEST(ComplementMask, Examples) {
  EXPECT_EQ(pos(complement_mask(MaskVector(4, {0, 2}))), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(pos(complement_mask(MaskVector::empty(3))), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(ComplementMask, InvolutionAndDisjoint) {
  RngStream rng(4, {});
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + rng.uniform_index(50);
    auto p = rng.sample_without_replacement(d, rng.uniform_index(d + 1));
    std::sort(p.begin(), p.end());
    const MaskVector m(d, p);
    const MaskVector c = complement_mask(m);
    EXPECT_TRUE(m.disjoint(c));
    EXPECT_EQ(m.count() + c.count(), d);
    EXPECT_EQ(complement_mask(c), m);
  }
}

TEST(Rng, SameContextSameSequence) {
  const StreamContext ctx{5, 3, Purpose::kLocalSgd, 1};
  RngStream a(42, ctx);
  RngStream b(42, ctx);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, ContextsAreIndependentOfDrawOrder) {
  RngStream first(42, {1, 0, Purpose::kQuantize, 0});
  const double x = first.normal();
  RngStream other(42, {1, 1, Purpose::kQuantize, 0});
  for (int i = 0; i < 10; ++i) other.normal();
  RngStream again(42, {1, 0, Purpose::kQuantize, 0});
  EXPECT_EQ(again.normal(), x);
}

TEST(Rng, DifferentKeysDiffer) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t r = 0; r < 20; ++r) {
    for (std::uint64_t d = 0; d < 20; ++d) {
      seeds.insert(RngStream::derive_seed(1, {r, d, Purpose::kLocalSgd, 0}));
      seeds.insert(RngStream::derive_seed(1, {r, d, Purpose::kQuantize, 0}));
    }
  }
  EXPECT_EQ(seeds.size(), 800u);
}

TEST(Rng, UniformRanges) {
  RngStream rng(7, {});
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double o = rng.uniform_open();
    ASSERT_GT(o, 0.0);
    ASSERT_LT(o, 1.0);
    ASSERT_LT(rng.uniform_index(7), 7u);
  }
}

TEST(Rng, NormalMoments) {
  RngStream rng(8, {});
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Rng, SampleWithoutReplacement) {
  RngStream rng(9, {});
  const auto s = rng.sample_without_replacement(20, 13);
  EXPECT_EQ(s.size(), 13u);
  EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), 13u);
  for (std::size_t v : s) EXPECT_LT(v, 20u);
  EXPECT_THROW(rng.sample_without_replacement(3, 4), std::invalid_argument);
}

}  // namespace
}  // namespace feelsim
