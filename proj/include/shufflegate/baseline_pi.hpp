// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Classical permutation importance over whole-split column shuffles, with an
// exact count of full-split model evaluations.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "shufflegate/backbone.hpp"
#include "shufflegate/data.hpp"

namespace shufflegate {

struct PiReport {
  std::vector<double> importance;  // per field: base AUC - shuffled AUC
  double base_auc = 0.0;
  std::size_t n_eval_passes = 0;  // (F + 1) * repeats
  std::size_t repeats = 0;
  double wall_time = 0.0;
};

// Model must be gate-free. Field i of the trainer's schema reads dataset
// column schema.fields[i].column.
PiReport permutation_importance(const Trainer<float>& trainer, const Dataset& ds,
                                SplitName which, std::size_t repeats = 3,
                                std::uint64_t seed = 0,
                                std::size_t batch_size = 4096);

// Kendall tau between the PI ranking and the gate ranking.
double rank_agreement(const PiReport& pi, std::span<const double> gates);

}  // namespace shufflegate
