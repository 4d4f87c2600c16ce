// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernels vs their OpenMP versions at training shapes.

#include <benchmark/benchmark.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "shufflegate/kernels.hpp"

namespace k = shufflegate::kernels;

namespace {

std::vector<float> rand_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Shapes arrive as runtime arguments {rows, inner, cols} so neither side is
// specialised on constant sizes. Default: first MLP layer, 12 fields * 8 -> 64.
void shapes(benchmark::internal::Benchmark* b) {
  for (std::int64_t rows : {256, 4096}) b->Args({rows, 96, 64});
}

template <bool Parallel>
void BM_Matmul(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto kInner = static_cast<std::size_t>(state.range(1));
  const auto kCols = static_cast<std::size_t>(state.range(2));
  const auto a = rand_vec(rows * kInner, 1), w = rand_vec(kInner * kCols, 2);
  std::vector<float> out(rows * kCols);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::omp::matmul<float>(a, w, out, rows, kInner, kCols);
    else
      k::serial::matmul<float>(a, w, out, rows, kInner, kCols);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(rows));
}

template <bool Parallel>
void BM_MatmulGradWeight(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto kInner = static_cast<std::size_t>(state.range(1));
  const auto kCols = static_cast<std::size_t>(state.range(2));
  const auto a = rand_vec(rows * kInner, 1), g = rand_vec(rows * kCols, 3);
  std::vector<float> gw(kInner * kCols);
  for (auto _ : state) {
    std::fill(gw.begin(), gw.end(), 0.0f);
    if constexpr (Parallel)
      k::omp::matmul_grad_weight<float>(a, g, gw, rows, kInner, kCols);
    else
      k::serial::matmul_grad_weight<float>(a, g, gw, rows, kInner, kCols);
    benchmark::DoNotOptimize(gw.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(rows));
}

template <bool Parallel>
void BM_PermuteColumns(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto kInner = static_cast<std::size_t>(state.range(1));
  const auto kCols = static_cast<std::size_t>(state.range(2));
  const auto in = rand_vec(rows * kInner, 4);
  std::vector<std::size_t> begins(kInner + 1);
  std::iota(begins.begin(), begins.end(), std::size_t{0});
  std::vector<std::uint32_t> perms;
  std::mt19937_64 rng(5);
  for (std::size_t u = 0; u < kInner; ++u) {
    std::vector<std::uint32_t> p(rows);
    std::iota(p.begin(), p.end(), 0u);
    std::shuffle(p.begin(), p.end(), rng);
    perms.insert(perms.end(), p.begin(), p.end());
  }
  std::vector<float> out(rows * kInner);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::omp::permute_rows_by_unit<float>(in, perms, begins, out, rows, kInner);
    else
      k::serial::permute_rows_by_unit<float>(in, perms, begins, out, rows, kInner);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(rows));
}

template <bool Parallel>
void BM_Gather(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto kInner = static_cast<std::size_t>(state.range(1));
  const auto kCols = static_cast<std::size_t>(state.range(2));
  const std::size_t vocab = 100, width = kInner / 12;
  const auto table = rand_vec(vocab * width, 6);
  std::vector<std::uint32_t> ids(rows);
  std::mt19937_64 rng(7);
  for (auto& i : ids) i = static_cast<std::uint32_t>(rng() % vocab);
  std::vector<float> out(rows * width);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::omp::gather_rows<float>(table, ids, out, width);
    else
      k::serial::gather_rows<float>(table, ids, out, width);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(rows));
}

}  // namespace

BENCHMARK(BM_Matmul<false>)->Name("matmul/serial")->Apply(shapes);
BENCHMARK(BM_Matmul<true>)->Name("matmul/omp")->Apply(shapes);
BENCHMARK(BM_MatmulGradWeight<false>)->Name("matmul_grad_weight/serial")->Apply(shapes);
BENCHMARK(BM_MatmulGradWeight<true>)->Name("matmul_grad_weight/omp")->Apply(shapes);
BENCHMARK(BM_PermuteColumns<false>)->Name("permute_columns/serial")->Apply(shapes);
BENCHMARK(BM_PermuteColumns<true>)->Name("permute_columns/omp")->Apply(shapes);
BENCHMARK(BM_Gather<false>)->Name("gather_rows/serial")->Apply(shapes);
BENCHMARK(BM_Gather<true>)->Name("gather_rows/omp")->Apply(shapes);

BENCHMARK_MAIN();
