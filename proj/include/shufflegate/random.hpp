// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace shufflegate {

using Rng = std::mt19937_64;

// Independent stream for (seed, stream) so that e.g. initialisation, batch
// order and shuffling never share state.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x5367u};
  return Rng(seq);
}

// Named streams.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kBatches = 3;
inline constexpr std::uint64_t kShuffle = 4;
inline constexpr std::uint64_t kEval = 5;
inline constexpr std::uint64_t kPermutationImportance = 6;
inline constexpr std::uint64_t kSynthetic = 7;
}  // namespace stream

}  // namespace shufflegate
