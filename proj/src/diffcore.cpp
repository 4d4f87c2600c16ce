// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include "shufflegate/diffcore.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "shufflegate/error.hpp"
#include "shufflegate/kernels.hpp"

namespace shufflegate {

namespace {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

template <typename T>
void require_matrix(const Tensor<T>& t, const char* what) {
  if (!t.defined() || t.shape().size() != 2)
    throw DimensionError(std::string(what) + ": expected a 2-D tensor");
}

template <typename T>
bool any_grad(const Tensor<T>& a) {
  return a.requires_grad();
}

template <typename T, typename... Rest>
bool any_grad(const Tensor<T>& a, const Rest&... rest) {
  return a.requires_grad() || any_grad(rest...);
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

template <typename T>
std::span<T> Node<T>::grad_buffer() {
  if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  return grad;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  auto n = shape_size(shape);
  return from(std::move(shape), std::vector<T>(n, T(0)), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values,
                          bool requires_grad) {
  for (auto d : shape)
    if (d == 0) throw DimensionError("tensor dimensions must be positive");
  if (values.size() != shape_size(shape))
    throw DimensionError("data length " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(shape));
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw ContractError("item() on a non-scalar tensor");
  return node_->value[0];
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  return from(node_->shape, node_->value, node_->requires_grad);
}

// ---- Tape ----------------------------------------------------------------

template <typename T>
Tensor<T> Tape<T>::record(Shape shape, std::vector<T> value,
                          bool requires_grad, Rule rule) {
  if (consumed_)
    throw StateError("tape already consumed by backward; call reset()");
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad = requires_grad && recording_;
  node->id = next_id_++;
  if (recording_) entries_.push_back({node, node->requires_grad ? std::move(rule) : Rule{}});
  return Tensor<T>(std::move(node));
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (consumed_) throw StateError("backward called twice on one tape");
  if (!recording_) throw StateError("backward on a non-recording tape");
  if (!loss.defined() || loss.size() != 1)
    throw ContractError("backward requires a scalar loss");
  auto id = loss.node_id();
  if (id < 0 || static_cast<std::size_t>(id) >= entries_.size() ||
      entries_[static_cast<std::size_t>(id)].out != loss.node())
    throw ContractError("loss was not recorded on this tape");

  consumed_ = true;
  if (!loss.requires_grad()) {
    entries_.clear();
    return;
  }
  loss.node()->grad_buffer()[0] += T(1);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->rule && !it->out->grad.empty()) it->rule(*it->out);
  }
  entries_.clear();
}

template <typename T>
void Tape<T>::reset() {
  entries_.clear();
  next_id_ = 0;
  consumed_ = false;
}

// ---- ops -----------------------------------------------------------------

template <typename T>
Tensor<T> matmul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& w) {
  require_matrix(a, "matmul");
  require_matrix(w, "matmul");
  const std::size_t rows = a.rows(), inner = a.cols(), cols = w.cols();
  if (w.rows() != inner)
    throw DimensionError("matmul: inner dimensions disagree " +
                         shape_str(a.shape()) + " x " + shape_str(w.shape()));
  std::vector<T> out(rows * cols);
  kernels::omp::matmul<T>(a.data(), w.data(), out, rows, inner, cols);
  auto an = a.node(), wn = w.node();
  return tape.record(
      {rows, cols}, std::move(out), any_grad(a, w),
      [an, wn, rows, inner, cols](Node<T>& o) {
        if (an->requires_grad)
          kernels::omp::matmul_grad_input<T>(o.grad, wn->value,
                                             an->grad_buffer(), rows, inner,
                                             cols);
        if (wn->requires_grad)
          kernels::omp::matmul_grad_weight<T>(an->value, o.grad,
                                              wn->grad_buffer(), rows, inner,
                                              cols);
      });
}

template <typename T>
Tensor<T> gather_rows(Tape<T>& tape, const Tensor<T>& table,
                      std::span<const std::uint32_t> indices) {
  require_matrix(table, "gather_rows");
  const std::size_t vocab = table.rows(), width = table.cols();
  for (auto idx : indices)
    if (idx >= vocab)
      throw LookupError("gather_rows: index " + std::to_string(idx) +
                        " out of range for " + std::to_string(vocab) +
                        " rows");
  if (indices.empty()) throw DimensionError("gather_rows: empty index list");
  std::vector<T> out(indices.size() * width);
  kernels::omp::gather_rows<T>(table.data(), indices, out, width);
  auto tn = table.node();
  std::vector<std::uint32_t> idx(indices.begin(), indices.end());
  return tape.record({indices.size(), width}, std::move(out),
                     table.requires_grad(),
                     [tn, idx = std::move(idx), width](Node<T>& o) {
                       kernels::omp::scatter_add_rows<T>(
                           o.grad, idx, tn->grad_buffer(), width);
                     });
}

template <typename T>
Tensor<T> broadcast_mul(Tape<T>& tape, const Tensor<T>& z,
                        const Tensor<T>& g) {
  require_matrix(z, "broadcast_mul");
  const std::size_t rows = z.rows(), cols = z.cols();
  enum class Mode { Scalar, Column, Full } mode;
  if (g.size() == 1)
    mode = Mode::Scalar;
  else if (g.size() == cols && (g.shape().size() == 1 || g.shape()[0] == 1))
    mode = Mode::Column;
  else if (g.shape() == z.shape())
    mode = Mode::Full;
  else
    throw DimensionError("broadcast_mul: cannot broadcast " +
                         shape_str(g.shape()) + " to " + shape_str(z.shape()));

  auto zv = z.data();
  auto gv = g.data();
  std::vector<T> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      const T gi = mode == Mode::Scalar ? gv[0]
                   : mode == Mode::Column ? gv[c]
                                          : gv[i];
      out[i] = zv[i] * gi;
    }
  auto zn = z.node(), gn = g.node();
  return tape.record(
      {rows, cols}, std::move(out), any_grad(z, g),
      [zn, gn, rows, cols, mode](Node<T>& o) {
        if (zn->requires_grad) {
          auto zg = zn->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) {
              const std::size_t i = r * cols + c;
              const T gi = mode == Mode::Scalar   ? gn->value[0]
                           : mode == Mode::Column ? gn->value[c]
                                                  : gn->value[i];
              zg[i] += o.grad[i] * gi;
            }
        }
        if (gn->requires_grad) {
          auto gg = gn->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) {
              const std::size_t i = r * cols + c;
              const T contrib = o.grad[i] * zn->value[i];
              if (mode == Mode::Scalar)
                gg[0] += contrib;
              else if (mode == Mode::Column)
                gg[c] += contrib;
              else
                gg[i] += contrib;
            }
        }
      });
}

template <typename T>
Tensor<T> stop_grad(Tape<T>& tape, const Tensor<T>& x) {
  std::vector<T> v(x.data().begin(), x.data().end());
  return tape.record(x.shape(), std::move(v), false, {});
}

template <typename T>
Tensor<T> sigmoid(Tape<T>& tape, const Tensor<T>& x) {
  std::vector<T> out(x.size());
  auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    // Branch on sign so exp never overflows.
    const T v = xv[i];
    if (v >= T(0)) {
      out[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      out[i] = e / (T(1) + e);
    }
  }
  auto xn = x.node();
  return tape.record(x.shape(), std::move(out), x.requires_grad(),
                     [xn](Node<T>& o) {
                       auto g = xn->grad_buffer();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         const T s = o.value[i];
                         g[i] += o.grad[i] * s * (T(1) - s);
                       }
                     });
}

template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& x) {
  std::vector<T> out(x.size());
  auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = xv[i] > T(0) ? xv[i] : T(0);
  auto xn = x.node();
  return tape.record(x.shape(), std::move(out), x.requires_grad(),
                     [xn](Node<T>& o) {
                       auto g = xn->grad_buffer();
                       for (std::size_t i = 0; i < g.size(); ++i)
                         if (xn->value[i] > T(0)) g[i] += o.grad[i];
                     });
}

template <typename T>
Tensor<T> add_bias(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& b) {
  require_matrix(x, "add_bias");
  const std::size_t rows = x.rows(), cols = x.cols();
  if (b.size() != cols)
    throw DimensionError("add_bias: bias length " + std::to_string(b.size()) +
                         " does not match width " + std::to_string(cols));
  std::vector<T> out(x.data().begin(), x.data().end());
  auto bv = b.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bv[c];
  auto xn = x.node(), bn = b.node();
  return tape.record({rows, cols}, std::move(out), any_grad(x, b),
                     [xn, bn, rows, cols](Node<T>& o) {
                       if (xn->requires_grad) {
                         auto g = xn->grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i)
                           g[i] += o.grad[i];
                       }
                       if (bn->requires_grad) {
                         auto g = bn->grad_buffer();
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t c = 0; c < cols; ++c)
                             g[c] += o.grad[r * cols + c];
                       }
                     });
}

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y) {
  if (x.shape() != y.shape())
    throw DimensionError("add: shapes differ " + shape_str(x.shape()) +
                         " vs " + shape_str(y.shape()));
  std::vector<T> out(x.size());
  auto xv = x.data(), yv = y.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] + yv[i];
  auto xn = x.node(), yn = y.node();
  return tape.record(x.shape(), std::move(out), any_grad(x, y),
                     [xn, yn](Node<T>& o) {
                       for (auto* n : {xn.get(), yn.get()}) {
                         if (!n->requires_grad) continue;
                         auto g = n->grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i)
                           g[i] += o.grad[i];
                       }
                     });
}

template <typename T>
Tensor<T> affine(Tape<T>& tape, const Tensor<T>& x, T scale, T shift) {
  std::vector<T> out(x.size());
  auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * xv[i] + shift;
  auto xn = x.node();
  return tape.record(x.shape(), std::move(out), x.requires_grad(),
                     [xn, scale](Node<T>& o) {
                       auto g = xn->grad_buffer();
                       for (std::size_t i = 0; i < g.size(); ++i)
                         g[i] += scale * o.grad[i];
                     });
}

template <typename T>
Tensor<T> concat_cols(Tape<T>& tape, std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t total = 0;
  bool needs_grad = false;
  for (const auto& p : parts) {
    require_matrix(p, "concat_cols");
    if (p.rows() != rows)
      throw DimensionError("concat_cols: batch dimensions differ");
    total += p.cols();
    needs_grad = needs_grad || p.requires_grad();
  }
  std::vector<T> out(rows * total);
  std::vector<std::shared_ptr<Node<T>>> nodes;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    auto pv = p.data();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pv.data() + r * w, w, out.data() + r * total + offset);
    offset += w;
    nodes.push_back(p.node());
  }
  return tape.record({rows, total}, std::move(out), needs_grad,
                     [nodes = std::move(nodes), rows, total](Node<T>& o) {
                       std::size_t off = 0;
                       for (const auto& n : nodes) {
                         const std::size_t w = n->shape[1];
                         if (n->requires_grad) {
                           auto g = n->grad_buffer();
                           for (std::size_t r = 0; r < rows; ++r)
                             for (std::size_t c = 0; c < w; ++c)
                               g[r * w + c] += o.grad[r * total + off + c];
                         }
                         off += w;
                       }
                     });
}

template <typename T>
Tensor<T> repeat_segments(Tape<T>& tape, const Tensor<T>& g,
                          std::span<const std::size_t> counts) {
  if (counts.size() != g.size())
    throw DimensionError("repeat_segments: " + std::to_string(counts.size()) +
                         " counts for " + std::to_string(g.size()) +
                         " elements");
  std::size_t total = 0;
  for (auto c : counts) total += c;
  std::vector<T> out;
  out.reserve(total);
  auto gv = g.data();
  for (std::size_t i = 0; i < counts.size(); ++i)
    out.insert(out.end(), counts[i], gv[i]);
  auto gn = g.node();
  std::vector<std::size_t> cnt(counts.begin(), counts.end());
  return tape.record({total}, std::move(out), g.requires_grad(),
                     [gn, cnt = std::move(cnt)](Node<T>& o) {
                       auto gg = gn->grad_buffer();
                       std::size_t pos = 0;
                       for (std::size_t i = 0; i < cnt.size(); ++i)
                         for (std::size_t k = 0; k < cnt[i]; ++k)
                           gg[i] += o.grad[pos++];
                     });
}

template <typename T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& x) {
  T s = T(0);
  for (T v : x.data()) s += v;
  auto xn = x.node();
  return tape.record({1}, {s}, x.requires_grad(), [xn](Node<T>& o) {
    auto g = xn->grad_buffer();
    for (auto& gi : g) gi += o.grad[0];
  });
}

template <typename T>
Tensor<T> mean(Tape<T>& tape, const Tensor<T>& x) {
  const T n = static_cast<T>(x.size());
  T s = T(0);
  for (T v : x.data()) s += v;
  auto xn = x.node();
  return tape.record({1}, {s / n}, x.requires_grad(), [xn, n](Node<T>& o) {
    auto g = xn->grad_buffer();
    for (auto& gi : g) gi += o.grad[0] / n;
  });
}

template <typename T>
Tensor<T> bce_mean(Tape<T>& tape, const Tensor<T>& logits,
                   std::span<const T> labels) {
  const std::size_t n = logits.size();
  if (n == 0 || labels.empty())
    throw DomainError("bce_mean: empty batch");
  if (labels.size() != n)
    throw DimensionError("bce_mean: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(n) + " logits");
  for (T y : labels)
    if (y != T(0) && y != T(1))
      throw DomainError("bce_mean: labels must be 0 or 1");
  auto lv = logits.data();
  // Accumulate in double; at float precision the batch sum would otherwise
  // lose digits for B in the thousands.
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double l = lv[i], y = labels[i];
    total += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l)));
  }
  auto ln = logits.node();
  std::vector<T> y(labels.begin(), labels.end());
  return tape.record(
      {1}, {static_cast<T>(total / static_cast<double>(n))},
      logits.requires_grad(), [ln, y = std::move(y)](Node<T>& o) {
        auto g = ln->grad_buffer();
        const T scale = o.grad[0] / static_cast<T>(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
          const T l = ln->value[i];
          const T s = l >= T(0) ? T(1) / (T(1) + std::exp(-l))
                                : std::exp(l) / (T(1) + std::exp(l));
          g[i] += (s - y[i]) * scale;
        }
      });
}

// ---- grad_check ------------------------------------------------------------

double grad_check(const std::function<Tensor<double>(Tape<double>&)>& loss_fn,
                  std::span<Tensor<double>> params, double epsilon) {
  for (auto& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  {
    Tape<double> tape;
    auto loss = loss_fn(tape);
    tape.backward(loss);
  }
  auto eval = [&]() {
    Tape<double> tape(false);
    return loss_fn(tape).item();
  };
  double worst = 0.0;
  for (auto& p : params) {
    std::vector<double> analytic(p.size(), 0.0);
    if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), analytic.begin());
    auto values = p.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + epsilon;
      const double up = eval();
      values[i] = saved - epsilon;
      const double down = eval();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double denom =
          std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
  }
  return worst;
}

// ---- instantiations ------------------------------------------------------

#define SHUFFLEGATE_INSTANTIATE(T)                                          \
  template struct Node<T>;                                                  \
  template class Tensor<T>;                                                 \
  template class Tape<T>;                                                   \
  template Tensor<T> matmul(Tape<T>&, const Tensor<T>&, const Tensor<T>&);  \
  template Tensor<T> gather_rows(Tape<T>&, const Tensor<T>&,                \
                                 std::span<const std::uint32_t>);           \
  template Tensor<T> broadcast_mul(Tape<T>&, const Tensor<T>&,              \
                                   const Tensor<T>&);                       \
  template Tensor<T> stop_grad(Tape<T>&, const Tensor<T>&);                 \
  template Tensor<T> sigmoid(Tape<T>&, const Tensor<T>&);                   \
  template Tensor<T> relu(Tape<T>&, const Tensor<T>&);                      \
  template Tensor<T> add_bias(Tape<T>&, const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> add(Tape<T>&, const Tensor<T>&, const Tensor<T>&);     \
  template Tensor<T> affine(Tape<T>&, const Tensor<T>&, T, T);              \
  template Tensor<T> concat_cols(Tape<T>&, std::span<const Tensor<T>>);     \
  template Tensor<T> repeat_segments(Tape<T>&, const Tensor<T>&,            \
                                     std::span<const std::size_t>);         \
  template Tensor<T> sum(Tape<T>&, const Tensor<T>&);                       \
  template Tensor<T> mean(Tape<T>&, const Tensor<T>&);                      \
  template Tensor<T> bce_mean(Tape<T>&, const Tensor<T>&, std::span<const T>);

SHUFFLEGATE_INSTANTIATE(float)
SHUFFLEGATE_INSTANTIATE(double)

#undef SHUFFLEGATE_INSTANTIATE

}  // namespace shufflegate
