// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal define-by-run reverse-mode differentiation over dense row-major
// tensors. A Tape records one op per output node; Tape::backward replays the
// recorded rules in reverse recording order, which is a valid reverse
// topological order because an op can only consume nodes recorded before it.
//
// Only the ops the gated CTR backbone needs are provided. Instantiated for
// float (training) and double (gradient checks).

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace shufflegate {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until something accumulates into it
  bool requires_grad = false;
  std::int64_t id = -1;  // position on the recording tape, -1 for leaves

  std::size_t size() const { return value.size(); }
  // Lazily allocates a zeroed gradient buffer.
  std::span<T> grad_buffer();
};

// Handle to a node. Copies share storage; parameters are long-lived leaf
// tensors whose gradients accumulate across one step and are zeroed by the
// trainer.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values,
                     bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const { return node_->shape.at(0); }
  std::size_t cols() const {
    return node_->shape.size() > 1 ? node_->shape[1] : 1;
  }

  std::span<T> data() { return node_->value; }
  std::span<const T> data() const { return node_->value; }
  T item() const;
  T at(std::size_t r, std::size_t c) const {
    return node_->value[r * cols() + c];
  }

  bool has_grad() const { return !node_->grad.empty(); }
  // Empty span when nothing has been accumulated.
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad_buffer(); }
  void zero_grad();

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  std::int64_t node_id() const { return node_->id; }

  // Deep copy of shape and values as a fresh leaf; gradient is not copied.
  Tensor clone() const;

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

template <typename T>
class Tape {
 public:
  using Rule = std::function<void(Node<T>& out)>;

  // A non-recording tape evaluates ops without storing backward rules
  // (inference).
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Wraps a freshly computed value as a node on this tape. `rule` reads
  // out.grad and accumulates into the inputs it captured.
  Tensor<T> record(Shape shape, std::vector<T> value, bool requires_grad,
                   Rule rule);

  // Propagates d(loss)/d(node) to every reachable requires_grad node and
  // consumes the tape.
  void backward(const Tensor<T>& loss);

  void reset();
  bool consumed() const { return consumed_; }
  bool recording() const { return recording_; }
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::shared_ptr<Node<T>> out;
    Rule rule;
  };
  std::vector<Entry> entries_;
  std::int64_t next_id_ = 0;
  bool recording_ = true;
  bool consumed_ = false;
};

// ---- ops -----------------------------------------------------------------

// [B x m] x [m x n] -> [B x n]
template <typename T>
Tensor<T> matmul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& w);

// table[V x d] rows selected by indices -> [B x d]; backward scatter-adds.
template <typename T>
Tensor<T> gather_rows(Tape<T>& tape, const Tensor<T>& table,
                      std::span<const std::uint32_t> indices);

// z[B x d] * g with g of size 1 (scalar), d (per column) or B x d.
template <typename T>
Tensor<T> broadcast_mul(Tape<T>& tape, const Tensor<T>& z, const Tensor<T>& g);

// Forward identity, no gradient path.
template <typename T>
Tensor<T> stop_grad(Tape<T>& tape, const Tensor<T>& x);

template <typename T>
Tensor<T> sigmoid(Tape<T>& tape, const Tensor<T>& x);

template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& x);

// x[B x n] + b[n] broadcast over rows.
template <typename T>
Tensor<T> add_bias(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& b);

// Elementwise sum of equally shaped tensors.
template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y);

// scale * x + shift, elementwise.
template <typename T>
Tensor<T> affine(Tape<T>& tape, const Tensor<T>& x, T scale, T shift);

// Concatenates [B x d_i] blocks into [B x sum d_i].
template <typename T>
Tensor<T> concat_cols(Tape<T>& tape, std::span<const Tensor<T>> parts);

// 1-D g of length k expanded to length sum(counts): element i repeated
// counts[i] times. Used to broadcast per-field or per-chunk gates to columns.
template <typename T>
Tensor<T> repeat_segments(Tape<T>& tape, const Tensor<T>& g,
                          std::span<const std::size_t> counts);

template <typename T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& x);

template <typename T>
Tensor<T> mean(Tape<T>& tape, const Tensor<T>& x);

// Mean binary cross-entropy from logits [B x 1] in the log-sum-exp form.
template <typename T>
Tensor<T> bce_mean(Tape<T>& tape, const Tensor<T>& logits,
                   std::span<const T> labels);

// ---- gradient checking ------------------------------------------------

// Worst component-wise relative error between the reverse-mode gradient and
// central differences (f(p+eps) - f(p-eps)) / 2eps, with denominator
// max(|analytic|, |numeric|, 1e-8). `loss_fn` must build a fresh graph on the
// tape it is given and be deterministic (reseed any PRNG inside).
double grad_check(const std::function<Tensor<double>(Tape<double>&)>& loss_fn,
                  std::span<Tensor<double>> params, double epsilon = 1e-6);

}  // namespace shufflegate
