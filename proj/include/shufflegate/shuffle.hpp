// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Batch-wise shuffling: each unit (a field's column span, or a chunk of
// columns) has its rows permuted by its own random permutation, which keeps
// every column's within-batch multiset and breaks its alignment with labels.

#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "shufflegate/diffcore.hpp"
#include "shufflegate/index_matrix.hpp"
#include "shufflegate/random.hpp"

namespace shufflegate {

// units x batch, row-major; row u is a permutation of 0..batch-1.
struct PermutationMatrix {
  std::size_t units = 0;
  std::size_t batch = 0;
  std::vector<std::uint32_t> data;

  std::span<const std::uint32_t> row(std::size_t u) const {
    return {data.data() + u * batch, batch};
  }
};

// Draws Uniform(0,1) keys and argsorts each row.
PermutationMatrix make_permutations(Rng& rng, std::size_t units,
                                    std::size_t batch);

class ShuffleUnit {
 public:
  enum class Kind { PerFieldRows, PerColumnRows };

  // Column spans [begin, end) that must tile [0, width) in order.
  static ShuffleUnit per_field(std::vector<std::pair<std::size_t, std::size_t>> ranges);
  // Independent permutation per group of `chunk` consecutive columns. With
  // field widths given, chunk must divide every width.
  static ShuffleUnit per_column(std::size_t width, std::size_t chunk = 1,
                                const std::vector<std::size_t>& field_widths = {});

  Kind kind() const { return kind_; }
  std::size_t width() const { return begins_.back(); }
  std::size_t units() const { return begins_.size() - 1; }
  std::size_t chunk() const { return chunk_; }
  // units()+1 boundaries.
  const std::vector<std::size_t>& boundaries() const { return begins_; }

 private:
  Kind kind_ = Kind::PerColumnRows;
  std::size_t chunk_ = 1;
  std::vector<std::size_t> begins_{0};
};

// Row-permutes each unit of s[B x d] independently. The result is a fresh
// leaf with no gradient path back to s.
template <typename T>
Tensor<T> batch_shuffle(const Tensor<T>& s, const ShuffleUnit& unit, Rng& rng);

// Copy of X with column `field` permuted within the batch.
IndexMatrix shuffle_indices(const IndexMatrix& x, std::size_t field, Rng& rng);

}  // namespace shufflegate
