// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include "shufflegate/shuffle.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "shufflegate/error.hpp"
#include "shufflegate/kernels.hpp"

namespace shufflegate {

PermutationMatrix make_permutations(Rng& rng, std::size_t units,
                                    std::size_t batch) {
  if (batch == 0) throw ContractError("make_permutations: batch must be >= 1");
  PermutationMatrix p{units, batch, std::vector<std::uint32_t>(units * batch)};
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> keys(batch);
  for (std::size_t u = 0; u < units; ++u) {
    for (auto& k : keys) k = uniform(rng);
    auto row = p.data.begin() + static_cast<std::ptrdiff_t>(u * batch);
    std::iota(row, row + static_cast<std::ptrdiff_t>(batch), 0u);
    std::stable_sort(row, row + static_cast<std::ptrdiff_t>(batch),
                     [&](std::uint32_t a, std::uint32_t b) {
                       return keys[a] < keys[b];
                     });
  }
  return p;
}

ShuffleUnit ShuffleUnit::per_field(
    std::vector<std::pair<std::size_t, std::size_t>> ranges) {
  if (ranges.empty()) throw DimensionError("ShuffleUnit: no column ranges");
  ShuffleUnit u;
  u.kind_ = Kind::PerFieldRows;
  std::size_t expected = 0;
  for (auto [b, e] : ranges) {
    if (b != expected || e <= b)
      throw DimensionError(
          "ShuffleUnit: column ranges must be disjoint, ordered and cover the "
          "width");
    u.begins_.push_back(e);
    expected = e;
  }
  return u;
}

ShuffleUnit ShuffleUnit::per_column(std::size_t width, std::size_t chunk,
                                    const std::vector<std::size_t>& field_widths) {
  if (width == 0 || chunk == 0)
    throw DimensionError("ShuffleUnit: width and chunk must be positive");
  if (width % chunk != 0)
    throw DimensionError("ShuffleUnit: chunk " + std::to_string(chunk) +
                         " does not divide width " + std::to_string(width));
  for (auto w : field_widths)
    if (w % chunk != 0)
      throw DimensionError("ShuffleUnit: chunk " + std::to_string(chunk) +
                           " does not divide field width " +
                           std::to_string(w));
  ShuffleUnit u;
  u.kind_ = Kind::PerColumnRows;
  u.chunk_ = chunk;
  for (std::size_t c = chunk; c <= width; c += chunk) u.begins_.push_back(c);
  return u;
}

template <typename T>
Tensor<T> batch_shuffle(const Tensor<T>& s, const ShuffleUnit& unit, Rng& rng) {
  if (s.shape().size() != 2 || s.cols() != unit.width())
    throw DimensionError("batch_shuffle: unit width " +
                         std::to_string(unit.width()) +
                         " does not match tensor width");
  const std::size_t rows = s.rows(), cols = s.cols();
  auto perms = make_permutations(rng, unit.units(), rows);
  std::vector<T> out(rows * cols);
  kernels::omp::permute_rows_by_unit<T>(s.data(), perms.data,
                                        unit.boundaries(), out, rows, cols);
  return Tensor<T>::from({rows, cols}, std::move(out), false);
}

IndexMatrix shuffle_indices(const IndexMatrix& x, std::size_t field, Rng& rng) {
  if (field >= x.cols)
    throw ContractError("shuffle_indices: field " + std::to_string(field) +
                        " out of range for " + std::to_string(x.cols) +
                        " columns");
  auto perm = make_permutations(rng, 1, x.rows);
  IndexMatrix out = x;
  for (std::size_t r = 0; r < x.rows; ++r)
    out(r, field) = x(perm.data[r], field);
  return out;
}

template Tensor<float> batch_shuffle(const Tensor<float>&, const ShuffleUnit&, Rng&);
template Tensor<double> batch_shuffle(const Tensor<double>&, const ShuffleUnit&, Rng&);

}  // namespace shufflegate
