// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace shufflegate {

// Row-major matrix of categorical ids.
struct IndexMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint32_t> data;

  IndexMatrix() = default;
  IndexMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0) {}
  // Takes ownership of row-major `values`; an empty vector is filled later.
  IndexMatrix(std::size_t r, std::size_t c, std::vector<std::uint32_t> values)
      : rows(r), cols(c), data(std::move(values)) {
    if (!data.empty() && data.size() != r * c)
      throw std::invalid_argument("IndexMatrix: data size does not match shape");
  }

  std::uint32_t& operator()(std::size_t r, std::size_t c) {
    return data[r * cols + c];
  }
  std::uint32_t operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
  std::span<const std::uint32_t> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  std::vector<std::uint32_t> column(std::size_t c) const {
    std::vector<std::uint32_t> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r] = data[r * cols + c];
    return out;
  }
  // Rows picked by `index`, in that order.
  IndexMatrix select_rows(std::span<const std::uint32_t> index) const {
    IndexMatrix out(index.size(), cols);
    for (std::size_t i = 0; i < index.size(); ++i)
      for (std::size_t c = 0; c < cols; ++c)
        out.data[i * cols + c] = data[index[i] * cols + c];
    return out;
  }
  friend bool operator==(const IndexMatrix&, const IndexMatrix&) = default;
};

}  // namespace shufflegate
