// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deep CTR backbone: per-field embedding tables, concatenation, a relu MLP
// and a single logit. The optional GateSet injects the gated shuffle mix
// between the embedding lookup and the MLP.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "shufflegate/adam.hpp"
#include "shufflegate/diffcore.hpp"
#include "shufflegate/gates.hpp"
#include "shufflegate/index_matrix.hpp"
#include "shufflegate/random.hpp"
#include "shufflegate/schema.hpp"

namespace shufflegate {

struct BackboneConfig {
  std::vector<std::size_t> hidden{64, 32};
};

template <typename T>
struct BackboneParams {
  std::vector<Tensor<T>> embeddings;  // V_i x d_i
  std::vector<Tensor<T>> weights;     // hidden layers then the output layer
  std::vector<Tensor<T>> biases;
  // Entry pruning keeps table shapes and masks pruned entries (1 = kept).
  // Empty when unmasked.
  std::vector<std::vector<std::uint8_t>> entry_masks;

  std::vector<Tensor<T>> all() const;
  BackboneParams clone() const;
};

// Embeddings U(-1/sqrt(d), 1/sqrt(d)); weights U(-1/sqrt(fan_in),
// 1/sqrt(fan_in)); biases zero.
template <typename T>
BackboneParams<T> init_backbone(const FieldSchema& schema,
                                const BackboneConfig& cfg, Rng& rng);

// Shuffle replaces pruned signal with batch noise; None multiplies by g only
// (used to check equivalence with physical pruning).
enum class NoiseMode { Shuffle, None };

template <typename T>
struct ForwardResult {
  Tensor<T> logits;  // B x 1
  // Field/Dimension: the {F} or {D/chunk} gate tensor of this pass, needed by
  // the in-graph sparsity term. Undefined otherwise.
  Tensor<T> gates;
};

// x holds dataset columns; each field reads x(:, field.column).
template <typename T>
ForwardResult<T> forward(Tape<T>& tape, const BackboneParams<T>& params,
                         const FieldSchema& schema, const IndexMatrix& x,
                         const GateSet<T>* gates, Rng& rng,
                         NoiseMode noise = NoiseMode::Shuffle);

struct StepLosses {
  double task = 0.0;
  double penalty = 0.0;
  double total = 0.0;
};

// Owns everything one training run mutates: parameters, gates, optimizer
// state and the shuffle PRNG stream.
template <typename T>
class Trainer {
 public:
  Trainer(FieldSchema schema, BackboneParams<T> params,
          std::optional<GateSet<T>> gates, AdamConfig adam,
          std::uint64_t seed);

  // forward -> bce + sparsity -> backward -> Adam. Gates are frozen during
  // warm-up. Throws NumericError on a non-finite loss.
  StepLosses train_step(const IndexMatrix& x, std::span<const T> y);

  // sigmoid(logits) in batches. With gates present the shuffle branch stays
  // active, drawing permutations from `rng`.
  std::vector<double> predict(const IndexMatrix& x, Rng& rng,
                              std::size_t batch_size = 4096) const;

  const FieldSchema& schema() const { return schema_; }
  BackboneParams<T>& params() { return params_; }
  const BackboneParams<T>& params() const { return params_; }
  std::optional<GateSet<T>>& gates() { return gates_; }
  const std::optional<GateSet<T>>& gates() const { return gates_; }
  Adam<T>& adam() { return adam_; }
  const Adam<T>& adam() const { return adam_; }
  Rng& shuffle_rng() { return shuffle_rng_; }
  const Rng& shuffle_rng() const { return shuffle_rng_; }
  std::uint64_t steps() const { return steps_; }
  void set_steps(std::uint64_t s) { steps_ = s; }

 private:
  FieldSchema schema_;
  BackboneParams<T> params_;
  std::optional<GateSet<T>> gates_;
  Adam<T> adam_;
  std::vector<std::size_t> param_slots_;
  std::vector<std::size_t> gate_slots_;
  Rng shuffle_rng_;
  std::uint64_t steps_ = 0;
};

}  // namespace shufflegate
