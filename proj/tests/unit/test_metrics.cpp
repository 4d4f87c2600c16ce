// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "shufflegate/error.hpp"
#include "shufflegate/metrics.hpp"

using namespace shufflegate;

namespace {

double pairwise_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        den += 1.0;
      }
  return num / den;
}

}  // namespace

TEST(Auc, HandExamples) {
  const std::vector<double> perfect{0.1, 0.2, 0.8, 0.9};
  const std::vector<std::uint8_t> y{0, 0, 1, 1};
  EXPECT_EQ(auc(perfect, y), 1.0);
  const std::vector<double> flat(4, 0.3);
  EXPECT_EQ(auc(flat, y), 0.5);
  const std::vector<double> s{0.2, 0.8, 0.5, 0.5};
  const std::vector<std::uint8_t> y2{0, 1, 1, 0};
  EXPECT_EQ(auc(s, y2), pairwise_auc(s, y2));
  EXPECT_EQ(auc(s, y2), 0.875);
}

TEST(Auc, MatchesPairwiseOracle) {
  std::mt19937_64 rng(2024);
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    // Coarse scores so ties are common.
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 12) / 11.0;
      y[i] = static_cast<std::uint8_t>(rng() & 1u);
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_NEAR(auc(s, y), pairwise_auc(s, y), 1e-12) << "instance " << inst;
  }
}

TEST(Auc, InvariantUnderIncreasingTransform) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> s(200), t(200);
  std::vector<std::uint8_t> y(200);
  for (std::size_t i = 0; i < 200; ++i) {
    s[i] = n(rng);
    t[i] = std::exp(3.0 * s[i]) + 7.0;
    y[i] = static_cast<std::uint8_t>(rng() & 1u);
  }
  EXPECT_EQ(auc(s, y), auc(t, y));
}

TEST(Auc, ComplementSumsToOne) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(150);
  std::vector<std::uint8_t> y(150), flipped(150);
  for (std::size_t i = 0; i < 150; ++i) {
    s[i] = u(rng);
    y[i] = static_cast<std::uint8_t>(rng() & 1u);
    flipped[i] = 1 - y[i];
  }
  EXPECT_NEAR(auc(s, y) + auc(s, flipped), 1.0, 1e-12);
}

TEST(Auc, DegenerateInputsThrow) {
  const std::vector<double> s{0.1, 0.2};
  EXPECT_THROW(auc(s, std::vector<std::uint8_t>{1, 1}), DomainError);
  EXPECT_THROW(auc(s, std::vector<std::uint8_t>{1}), DomainError);
}

TEST(Logloss, KnownValue) {
  const std::vector<double> p{0.5, 0.5};
  EXPECT_NEAR(logloss(p, std::vector<std::uint8_t>{0, 1}), std::log(2.0), 1e-15);
  const std::vector<double> sure{1.0};
  EXPECT_TRUE(std::isfinite(logloss(sure, std::vector<std::uint8_t>{0})));
}

TEST(SAuc, HandExamples) {
  EXPECT_EQ(s_auc({{"A", {{"d1", 0.8}, {"d2", 0.6}}}, {"B", {{"d1", 0.7}, {"d2", 0.8}}}}).at("A"),
            0.875);
  const auto same = s_auc({{"A", {{"d", 0.7}}}, {"B", {{"d", 0.7}}}});
  EXPECT_EQ(same.at("A"), 1.0);
  EXPECT_EQ(same.at("B"), 1.0);
  const auto single = s_auc({{"A", {{"d", 0.9}}}, {"B", {{"d", 0.6}}}});
  EXPECT_EQ(single.at("A"), 1.0);
  EXPECT_GT(single.at("B"), 0.0);
  EXPECT_LT(single.at("B"), 1.0);
  EXPECT_THROW(s_auc({{"A", {{"d1", 0.8}}}, {"B", {{"d2", 0.8}}}}), DomainError);
}

TEST(Compression, RetentionAndReduction) {
  EXPECT_EQ(feature_retention(2, 4), 0.5);
  EXPECT_EQ(feature_retention(4, 4), 1.0);
  EXPECT_EQ(dimension_reduction(4 + 2, 32), 0.1875);
  EXPECT_THROW(feature_retention(5, 4), DomainError);
}

TEST(Kendall, HandExamples) {
  const std::vector<std::size_t> a{1, 2, 3, 4}, b{1, 3, 2, 4}, r{4, 3, 2, 1};
  EXPECT_EQ(kendall_tau(a, b), 2.0 / 3.0);
  EXPECT_EQ(kendall_tau(a, a), 1.0);
  EXPECT_EQ(kendall_tau(a, r), -1.0);
  EXPECT_THROW(kendall_tau(a, std::vector<std::size_t>{1, 2, 3}), DomainError);
  EXPECT_THROW(kendall_tau(a, std::vector<std::size_t>{1, 2, 3, 5}), DomainError);
}

TEST(Ranking, DescendingWithStableTies) {
  const std::vector<double> g{0.2, 0.9, 0.5, 0.5, 0.9};
  EXPECT_EQ(ranking_desc(g), (std::vector<std::size_t>{1, 4, 2, 3, 0}));
}

TEST(Polarization, HandExamples) {
  const std::vector<double> g{0.0005, 0.98};
  const auto r = polarization_report(g, 1e-3, 0.05);
  EXPECT_EQ(r.frac_low, 0.5);
  EXPECT_EQ(r.frac_high, 0.5);
  EXPECT_EQ(r.mid_band_mass, 0.0);
  EXPECT_NEAR(r.margin, 0.9795, 1e-15);
  const std::vector<double> half(6, 0.5);
  EXPECT_EQ(polarization_report(half).mid_band_mass, 1.0);
  EXPECT_TRUE(std::isnan(polarization_report(half).margin));
}
