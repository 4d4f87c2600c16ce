// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include "shufflegate/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "shufflegate/error.hpp"
#include "shufflegate/shuffle.hpp"

namespace shufflegate {

template <typename T>
std::vector<Tensor<T>> BackboneParams<T>::all() const {
  std::vector<Tensor<T>> out(embeddings);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.push_back(weights[i]);
    out.push_back(biases[i]);
  }
  return out;
}

template <typename T>
BackboneParams<T> BackboneParams<T>::clone() const {
  BackboneParams out;
  for (const auto& e : embeddings) out.embeddings.push_back(e.clone());
  for (const auto& w : weights) out.weights.push_back(w.clone());
  for (const auto& b : biases) out.biases.push_back(b.clone());
  out.entry_masks = entry_masks;
  return out;
}

template <typename T>
BackboneParams<T> init_backbone(const FieldSchema& schema,
                                const BackboneConfig& cfg, Rng& rng) {
  schema.validate();
  BackboneParams<T> p;
  auto uniform_tensor = [&rng](Shape shape, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<T> v(shape_size(shape));
    for (auto& x : v) x = static_cast<T>(u(rng));
    return Tensor<T>::from(std::move(shape), std::move(v), true);
  };
  for (const auto& f : schema.fields)
    p.embeddings.push_back(uniform_tensor(
        {f.vocab, f.dim}, 1.0 / std::sqrt(static_cast<double>(f.dim))));
  std::size_t fan_in = schema.total_dim();
  std::vector<std::size_t> widths(cfg.hidden);
  widths.push_back(1);
  for (auto w : widths) {
    if (w == 0) throw ConfigError("hidden layer width must be positive");
    p.weights.push_back(uniform_tensor(
        {fan_in, w}, 1.0 / std::sqrt(static_cast<double>(fan_in))));
    p.biases.push_back(Tensor<T>::zeros({w}, true));
    fan_in = w;
  }
  return p;
}

namespace {

template <typename T>
Tensor<T> mlp(Tape<T>& tape, const BackboneParams<T>& params, Tensor<T> h) {
  const std::size_t layers = params.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    h = add_bias(tape, matmul(tape, h, params.weights[l]), params.biases[l]);
    if (l + 1 < layers) h = relu(tape, h);
  }
  return h;
}

}  // namespace

template <typename T>
ForwardResult<T> forward(Tape<T>& tape, const BackboneParams<T>& params,
                         const FieldSchema& schema, const IndexMatrix& x,
                         const GateSet<T>* gates, Rng& rng, NoiseMode noise) {
  const std::size_t nf = schema.size();
  if (params.embeddings.size() != nf)
    throw ConfigError("parameters do not match the schema's field count");
  if (params.weights.empty() || params.weights[0].rows() != schema.total_dim())
    throw ConfigError("first MLP layer does not match the embedding width");
  if (gates) gates->check_schema(schema);
  const std::size_t batch = x.rows;

  std::vector<std::vector<std::uint32_t>> idx(nf);
  for (std::size_t i = 0; i < nf; ++i) {
    const auto col = schema.fields[i].column;
    if (col >= x.cols)
      throw ConfigError("field " + schema.fields[i].name +
                        " reads a column the batch does not have");
    idx[i] = x.column(col);
  }

  std::vector<Tensor<T>> clean;
  clean.reserve(nf);
  for (std::size_t i = 0; i < nf; ++i)
    clean.push_back(gather_rows(tape, params.embeddings[i], idx[i]));
  auto e = concat_cols<T>(tape, clean);

  ForwardResult<T> result;
  if (!gates) {
    result.logits = mlp(tape, params, e);
    return result;
  }

  const T tau = gates->tau();
  const auto dims = schema.dims();
  // Noise counterpart (a constant; apply_gates wraps it in stop_grad).
  auto shuffled = [&](Granularity g) -> Tensor<T> {
    if (noise == NoiseMode::None)
      return Tensor<T>::zeros({batch, schema.total_dim()});
    if (g == Granularity::Field) {
      // Permute the raw ids per field, then look them up.
      auto perms = make_permutations(rng, nf, batch);
      std::vector<Tensor<T>> parts;
      for (std::size_t i = 0; i < nf; ++i) {
        std::vector<std::uint32_t> sidx(batch);
        auto p = perms.row(i);
        for (std::size_t r = 0; r < batch; ++r) sidx[r] = idx[i][p[r]];
        parts.push_back(
            stop_grad(tape, gather_rows(tape, params.embeddings[i], sidx)));
      }
      return concat_cols<T>(tape, parts);
    }
    if (g == Granularity::Dimension)
      return batch_shuffle(e, ShuffleUnit::per_column(schema.total_dim(),
                                                      gates->chunk(), dims),
                           rng);
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (auto off : schema.offsets()) ranges.push_back({off, 0});
    for (std::size_t i = 0; i < nf; ++i) ranges[i].second = ranges[i].first + dims[i];
    return batch_shuffle(e, ShuffleUnit::per_field(ranges), rng);
  };

  Tensor<T> mixed;
  switch (gates->granularity()) {
    case Granularity::Field: {
      auto g = gate_values(tape, gates->phi()[0], tau);
      auto cols = repeat_segments<T>(tape, g, dims);
      mixed = apply_gates(tape, e, shuffled(Granularity::Field), cols);
      result.gates = g;
      break;
    }
    case Granularity::Dimension: {
      auto g = gate_values(tape, gates->phi()[0], tau);
      Tensor<T> cols = g;
      if (gates->chunk() > 1) {
        std::vector<std::size_t> counts(g.size(), gates->chunk());
        cols = repeat_segments<T>(tape, g, counts);
      }
      mixed = apply_gates(tape, e, shuffled(Granularity::Dimension), cols);
      result.gates = g;
      break;
    }
    case Granularity::Entry: {
      std::vector<Tensor<T>> parts;
      for (std::size_t i = 0; i < nf; ++i)
        parts.push_back(entry_gate_lookup(tape, gates->phi()[i], idx[i], tau));
      auto g = concat_cols<T>(tape, parts);
      mixed = apply_gates(tape, e, shuffled(Granularity::Entry), g);
      break;
    }
  }
  result.logits = mlp(tape, params, mixed);
  return result;
}

template <typename T>
Trainer<T>::Trainer(FieldSchema schema, BackboneParams<T> params,
                    std::optional<GateSet<T>> gates, AdamConfig adam,
                    std::uint64_t seed)
    : schema_(std::move(schema)),
      params_(std::move(params)),
      gates_(std::move(gates)),
      adam_(adam),
      shuffle_rng_(make_rng(seed, stream::kShuffle)) {
  schema_.validate();
  if (gates_) gates_->check_schema(schema_);
  for (auto& p : params_.all()) param_slots_.push_back(adam_.add(p));
  if (gates_)
    for (auto& p : gates_->phi()) gate_slots_.push_back(adam_.add(p));
}

template <typename T>
StepLosses Trainer<T>::train_step(const IndexMatrix& x, std::span<const T> y) {
  if (x.rows == 0) throw DomainError("train_step: empty batch");
  for (auto& p : params_.all()) p.zero_grad();
  if (gates_)
    for (auto& p : gates_->phi()) p.zero_grad();

  Tape<T> tape;
  auto fwd = forward(tape, params_, schema_, x, gates_ ? &*gates_ : nullptr,
                     shuffle_rng_);
  auto task = bce_mean(tape, fwd.logits, y);
  StepLosses losses;
  losses.task = task.item();
  Tensor<T> total = task;
  if (gates_) {
    auto pen = sparsity_penalty(tape, *gates_, fwd.gates);
    losses.penalty = pen.item();
    total = add(tape, task, pen);
  }
  losses.total = total.item();
  if (!std::isfinite(losses.total)) {
    std::ostringstream os;
    os << "non-finite loss at step " << steps_ << " (task " << losses.task
       << ", penalty " << losses.penalty << ")";
    throw NumericError(os.str());
  }
  tape.backward(total);

  const bool frozen = gates_ && steps_ < gates_->warmup_steps();
  if (gates_ && !frozen) add_entry_penalty_grad(*gates_);

  const std::size_t n_emb = params_.embeddings.size();
  for (std::size_t i = 0; i < param_slots_.size(); ++i) {
    const std::vector<std::uint8_t>* mask = nullptr;
    if (i < n_emb && i < params_.entry_masks.size() &&
        !params_.entry_masks[i].empty())
      mask = &params_.entry_masks[i];
    adam_.step(param_slots_[i], mask);
  }
  if (!frozen)
    for (auto s : gate_slots_) adam_.step(s);
  ++steps_;
  return losses;
}

template <typename T>
std::vector<double> Trainer<T>::predict(const IndexMatrix& x, Rng& rng,
                                        std::size_t batch_size) const {
  std::vector<double> out;
  out.reserve(x.rows);
  const GateSet<T>* g = gates_ ? &*gates_ : nullptr;
  for (std::size_t start = 0; start < x.rows; start += batch_size) {
    const std::size_t end = std::min(x.rows, start + batch_size);
    IndexMatrix xb(end - start, x.cols);
    std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(start * x.cols),
              x.data.begin() + static_cast<std::ptrdiff_t>(end * x.cols),
              xb.data.begin());
    Tape<T> tape(false);
    auto fwd = forward(tape, params_, schema_, xb, g, rng);
    for (T l : fwd.logits.data()) {
      const double v = l;
      out.push_back(v >= 0 ? 1.0 / (1.0 + std::exp(-v))
                           : std::exp(v) / (1.0 + std::exp(v)));
    }
  }
  return out;
}

#define SHUFFLEGATE_INSTANTIATE(T)                                            \
  template struct BackboneParams<T>;                                          \
  template BackboneParams<T> init_backbone(const FieldSchema&,                \
                                           const BackboneConfig&, Rng&);      \
  template ForwardResult<T> forward(Tape<T>&, const BackboneParams<T>&,       \
                                    const FieldSchema&, const IndexMatrix&,   \
                                    const GateSet<T>*, Rng&, NoiseMode);      \
  template class Trainer<T>;

SHUFFLEGATE_INSTANTIATE(float)
SHUFFLEGATE_INSTANTIATE(double)

#undef SHUFFLEGATE_INSTANTIATE

}  // namespace shufflegate
