// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "shufflegate/diffcore.hpp"

namespace shufflegate {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with a step counter per parameter, so parameters that start updating
// late (gates after warm-up) get their own bias correction.
template <typename T>
class Adam {
 public:
  struct Slot {
    Tensor<T> param;
    std::vector<T> m;
    std::vector<T> v;
    std::uint64_t t = 0;
  };

  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  std::size_t add(Tensor<T> param);
  // Applies one update from param.grad. Entries whose mask byte is 0 are
  // held at zero and keep zero moments.
  void step(std::size_t slot, const std::vector<std::uint8_t>* mask = nullptr);

  const AdamConfig& config() const { return cfg_; }
  std::vector<Slot>& slots() { return slots_; }
  const std::vector<Slot>& slots() const { return slots_; }

 private:
  AdamConfig cfg_;
  std::vector<Slot> slots_;
};

}  // namespace shufflegate
