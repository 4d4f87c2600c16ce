// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "shufflegate/kernels.hpp"

namespace k = shufflegate::kernels;

namespace {

std::vector<double> rand_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<std::uint32_t> rand_ids(std::mt19937_64& rng, std::size_t n, std::uint32_t vocab) {
  std::vector<std::uint32_t> v(n);
  for (auto& x : v) x = static_cast<std::uint32_t>(rng() % vocab);
  return v;
}

}  // namespace

// Parallel kernels split work by output row only, so results match the
// serial reference bit for bit.
TEST(Kernels, MatmulFamilyMatchesSerial) {
  std::mt19937_64 rng(1);
  const std::size_t rows = 67, inner = 33, cols = 19;
  const auto a = rand_vec(rng, rows * inner), w = rand_vec(rng, inner * cols),
             g = rand_vec(rng, rows * cols);
  std::vector<double> s(rows * cols), o(rows * cols);
  k::serial::matmul<double>(a, w, s, rows, inner, cols);
  k::omp::matmul<double>(a, w, o, rows, inner, cols);
  EXPECT_EQ(s, o);
  std::vector<double> sa(rows * inner, 0.5), oa(rows * inner, 0.5);
  k::serial::matmul_grad_input<double>(g, w, sa, rows, inner, cols);
  k::omp::matmul_grad_input<double>(g, w, oa, rows, inner, cols);
  EXPECT_EQ(sa, oa);
  std::vector<double> sw(inner * cols, 0.25), ow(inner * cols, 0.25);
  k::serial::matmul_grad_weight<double>(a, g, sw, rows, inner, cols);
  k::omp::matmul_grad_weight<double>(a, g, ow, rows, inner, cols);
  EXPECT_EQ(sw, ow);
}

TEST(Kernels, GatherScatterMatchSerial) {
  std::mt19937_64 rng(2);
  const std::size_t vocab = 40, width = 8, n = 300;
  const auto table = rand_vec(rng, vocab * width);
  const auto ids = rand_ids(rng, n, vocab);
  std::vector<double> s(n * width), o(n * width);
  k::serial::gather_rows<double>(table, ids, s, width);
  k::omp::gather_rows<double>(table, ids, o, width);
  EXPECT_EQ(s, o);
  const auto g = rand_vec(rng, n * width);
  std::vector<double> st(vocab * width, 0.0), ot(vocab * width, 0.0);
  k::serial::scatter_add_rows<double>(g, ids, st, width);
  k::omp::scatter_add_rows<double>(g, ids, ot, width);
  EXPECT_EQ(st, ot);
}

TEST(Kernels, UnitPermutationMatchesSerial) {
  std::mt19937_64 rng(3);
  const std::size_t rows = 50, cols = 12;
  const std::vector<std::size_t> begins{0, 3, 4, 8, 12};
  std::vector<std::uint32_t> perms;
  for (std::size_t u = 0; u + 1 < begins.size(); ++u) {
    std::vector<std::uint32_t> p(rows);
    for (std::size_t r = 0; r < rows; ++r) p[r] = static_cast<std::uint32_t>(r);
    std::shuffle(p.begin(), p.end(), rng);
    perms.insert(perms.end(), p.begin(), p.end());
  }
  const auto in = rand_vec(rng, rows * cols);
  std::vector<double> s(rows * cols), o(rows * cols);
  k::serial::permute_rows_by_unit<double>(in, perms, begins, s, rows, cols);
  k::omp::permute_rows_by_unit<double>(in, perms, begins, o, rows, cols);
  EXPECT_EQ(s, o);
}
