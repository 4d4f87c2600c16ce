// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Learnable gates g = sigmoid(tau * phi) mixing a component with its
// batch-shuffled counterpart:
//
//   z* = g * z + (1 - g) * stop_grad(z_shuffled)
//
// plus the sparsity term alpha * mean(g) over every gate of the granularity.

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "shufflegate/diffcore.hpp"
#include "shufflegate/schema.hpp"

namespace shufflegate {

enum class Granularity { Field, Dimension, Entry };

std::string to_string(Granularity g);
// Accepts "field", "dim"/"dimension", "entry".
Granularity parse_granularity(const std::string& s);

struct GateConfig {
  Granularity granularity = Granularity::Field;
  std::size_t chunk = 1;  // Dimension only
  double tau = 5.0;
  double alpha = 0.0;
  std::size_t warmup_steps = 0;
  double init_gate = 0.99;
};

// phi such that sigmoid(tau * phi) == gate.
double phi_for_gate(double gate, double tau);

template <typename T>
class GateSet {
 public:
  GateSet() = default;
  static GateSet create(const FieldSchema& schema, const GateConfig& cfg);

  Granularity granularity() const { return cfg_.granularity; }
  const GateConfig& config() const { return cfg_; }
  T tau() const { return static_cast<T>(cfg_.tau); }
  T alpha() const { return static_cast<T>(cfg_.alpha); }
  void set_alpha(double alpha) { cfg_.alpha = alpha; }
  std::size_t chunk() const { return cfg_.chunk; }
  std::size_t warmup_steps() const { return cfg_.warmup_steps; }

  // Field: one {F} tensor. Dimension: one {D / chunk}. Entry: one {V_i, d_i}
  // per field.
  std::vector<Tensor<T>>& phi() { return phi_; }
  const std::vector<Tensor<T>>& phi() const { return phi_; }

  // |S|, the denominator of the sparsity term.
  std::size_t total_gates() const;
  // Flattened gate values / raw phi in unit order.
  std::vector<T> values() const;
  std::vector<T> phi_values() const;

  // Throws ConfigError when phi shapes do not fit the schema.
  void check_schema(const FieldSchema& schema) const;

  GateSet clone() const;

 private:
  GateConfig cfg_;
  std::vector<Tensor<T>> phi_;
};

// sigmoid(tau * phi), differentiable in phi.
template <typename T>
Tensor<T> gate_values(Tape<T>& tape, const Tensor<T>& phi, T tau);

// g * z + (1 - g) * stop_grad(z_shuffled); g broadcast as in broadcast_mul.
template <typename T>
Tensor<T> apply_gates(Tape<T>& tape, const Tensor<T>& z,
                      const Tensor<T>& z_shuffled, const Tensor<T>& g);

// sigmoid(tau * G[indices]) -> [B x d]
template <typename T>
Tensor<T> entry_gate_lookup(Tape<T>& tape, const Tensor<T>& gate_phi,
                            std::span<const std::uint32_t> indices, T tau);

// alpha * mean(g) over all of S. For Field/Dimension the term is built on the
// tape from `gates` (the {F} or {D/chunk} gate-value tensor of this step).
// For Entry the value is returned as a constant and its gradient must be
// added with add_entry_penalty_grad after backward.
template <typename T>
Tensor<T> sparsity_penalty(Tape<T>& tape, const GateSet<T>& gs,
                           const Tensor<T>& gates);

// phi.grad += alpha * tau * g (1 - g) / |S| for every entry gate.
template <typename T>
void add_entry_penalty_grad(GateSet<T>& gs);

struct GateStats {
  double mean = 0.0;
  double frac_below = 0.0;  // g < threshold
  double frac_above = 0.0;  // g > threshold
  // Relative to the fixed 0.5 cut; NaN when the side is empty.
  double min_kept = std::numeric_limits<double>::quiet_NaN();
  double max_pruned = std::numeric_limits<double>::quiet_NaN();
};

GateStats gate_stats(std::span<const double> gates, double threshold = 0.5);

}  // namespace shufflegate
