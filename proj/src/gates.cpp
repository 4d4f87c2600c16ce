// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include "shufflegate/gates.hpp"

#include <algorithm>
#include <cmath>

#include "shufflegate/error.hpp"

namespace shufflegate {

std::string to_string(Granularity g) {
  switch (g) {
    case Granularity::Field:
      return "field";
    case Granularity::Dimension:
      return "dim";
    case Granularity::Entry:
      return "entry";
  }
  return "?";
}

Granularity parse_granularity(const std::string& s) {
  if (s == "field") return Granularity::Field;
  if (s == "dim" || s == "dimension") return Granularity::Dimension;
  if (s == "entry") return Granularity::Entry;
  throw ConfigError("unknown granularity '" + s +
                    "' (expected field, dim or entry)");
}

double phi_for_gate(double gate, double tau) {
  return std::log(gate / (1.0 - gate)) / tau;
}

template <typename T>
GateSet<T> GateSet<T>::create(const FieldSchema& schema, const GateConfig& cfg) {
  schema.validate();
  if (!(cfg.tau > 0.0)) throw ConfigError("gate temperature must be positive");
  if (cfg.alpha < 0.0) throw ConfigError("alpha must be nonnegative");
  if (!(cfg.init_gate > 0.0 && cfg.init_gate < 1.0))
    throw ConfigError("initial gate must lie in (0, 1)");
  GateSet gs;
  gs.cfg_ = cfg;
  const T phi0 = static_cast<T>(phi_for_gate(cfg.init_gate, cfg.tau));
  switch (cfg.granularity) {
    case Granularity::Field:
      gs.phi_.push_back(Tensor<T>::from(
          {schema.size()}, std::vector<T>(schema.size(), phi0), true));
      break;
    case Granularity::Dimension: {
      if (cfg.chunk == 0) throw ConfigError("chunk must be positive");
      for (const auto& f : schema.fields)
        if (f.dim % cfg.chunk != 0)
          throw ConfigError("chunk " + std::to_string(cfg.chunk) +
                            " does not divide the width of field " + f.name);
      const std::size_t n = schema.total_dim() / cfg.chunk;
      gs.phi_.push_back(Tensor<T>::from({n}, std::vector<T>(n, phi0), true));
      break;
    }
    case Granularity::Entry:
      for (const auto& f : schema.fields)
        gs.phi_.push_back(Tensor<T>::from(
            {f.vocab, f.dim}, std::vector<T>(f.vocab * f.dim, phi0), true));
      break;
  }
  return gs;
}

template <typename T>
std::size_t GateSet<T>::total_gates() const {
  std::size_t n = 0;
  for (const auto& p : phi_) n += p.size();
  return n;
}

template <typename T>
std::vector<T> GateSet<T>::phi_values() const {
  std::vector<T> out;
  out.reserve(total_gates());
  for (const auto& p : phi_) out.insert(out.end(), p.data().begin(), p.data().end());
  return out;
}

template <typename T>
std::vector<T> GateSet<T>::values() const {
  auto out = phi_values();
  const T t = tau();
  for (auto& v : out) {
    const T x = t * v;
    v = x >= T(0) ? T(1) / (T(1) + std::exp(-x))
                  : std::exp(x) / (T(1) + std::exp(x));
  }
  return out;
}

template <typename T>
void GateSet<T>::check_schema(const FieldSchema& schema) const {
  switch (cfg_.granularity) {
    case Granularity::Field:
      if (phi_.size() != 1 || phi_[0].size() != schema.size())
        throw ConfigError("field gates do not match the schema's field count");
      break;
    case Granularity::Dimension:
      if (phi_.size() != 1 || cfg_.chunk == 0 ||
          phi_[0].size() * cfg_.chunk != schema.total_dim())
        throw ConfigError(
            "dimension gates do not match the schema's embedding width");
      break;
    case Granularity::Entry:
      if (phi_.size() != schema.size())
        throw ConfigError("entry gates need one table per field");
      for (std::size_t i = 0; i < phi_.size(); ++i)
        if (phi_[i].shape() != Shape{schema.fields[i].vocab, schema.fields[i].dim})
          throw ConfigError("entry gate table for field " +
                            schema.fields[i].name +
                            " does not match its embedding table");
      break;
  }
}

template <typename T>
GateSet<T> GateSet<T>::clone() const {
  GateSet out;
  out.cfg_ = cfg_;
  for (const auto& p : phi_) out.phi_.push_back(p.clone());
  return out;
}

template <typename T>
Tensor<T> gate_values(Tape<T>& tape, const Tensor<T>& phi, T tau) {
  return sigmoid(tape, affine(tape, phi, tau, T(0)));
}

template <typename T>
Tensor<T> apply_gates(Tape<T>& tape, const Tensor<T>& z,
                      const Tensor<T>& z_shuffled, const Tensor<T>& g) {
  if (z.shape() != z_shuffled.shape())
    throw DimensionError("apply_gates: clean and shuffled shapes differ");
  auto kept = broadcast_mul(tape, z, g);
  auto noise = broadcast_mul(tape, stop_grad(tape, z_shuffled),
                             affine(tape, g, T(-1), T(1)));
  return add(tape, kept, noise);
}

template <typename T>
Tensor<T> entry_gate_lookup(Tape<T>& tape, const Tensor<T>& gate_phi,
                            std::span<const std::uint32_t> indices, T tau) {
  return gate_values(tape, gather_rows(tape, gate_phi, indices), tau);
}

template <typename T>
Tensor<T> sparsity_penalty(Tape<T>& tape, const GateSet<T>& gs,
                           const Tensor<T>& gates) {
  if (gs.granularity() == Granularity::Entry) {
    double total = 0.0;
    for (T g : gs.values()) total += g;
    const double value =
        gs.config().alpha * total / static_cast<double>(gs.total_gates());
    return stop_grad(tape, Tensor<T>::scalar(static_cast<T>(value)));
  }
  if (!gates.defined() || gates.size() != gs.total_gates())
    throw ContractError("sparsity_penalty: gate tensor does not cover S");
  return affine(tape, mean(tape, gates), gs.alpha(), T(0));
}

template <typename T>
void add_entry_penalty_grad(GateSet<T>& gs) {
  if (gs.granularity() != Granularity::Entry) return;
  const double scale = gs.config().alpha * gs.config().tau /
                       static_cast<double>(gs.total_gates());
  if (scale == 0.0) return;
  const T t = gs.tau();
  for (auto& p : gs.phi()) {
    auto grad = p.mutable_grad();
    auto phi = p.data();
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const T x = t * phi[i];
      const T g = x >= T(0) ? T(1) / (T(1) + std::exp(-x))
                            : std::exp(x) / (T(1) + std::exp(x));
      grad[i] += static_cast<T>(scale) * g * (T(1) - g);
    }
  }
}

GateStats gate_stats(std::span<const double> gates, double threshold) {
  GateStats s;
  if (gates.empty()) return s;
  double total = 0.0;
  std::size_t below = 0, above = 0;
  for (double g : gates) {
    total += g;
    below += g < threshold;
    above += g > threshold;
    if (g >= 0.5)
      s.min_kept = std::isnan(s.min_kept) ? g : std::min(s.min_kept, g);
    else
      s.max_pruned = std::isnan(s.max_pruned) ? g : std::max(s.max_pruned, g);
  }
  const double n = static_cast<double>(gates.size());
  s.mean = total / n;
  s.frac_below = static_cast<double>(below) / n;
  s.frac_above = static_cast<double>(above) / n;
  return s;
}

#define SHUFFLEGATE_INSTANTIATE(T)                                             \
  template class GateSet<T>;                                                   \
  template Tensor<T> gate_values(Tape<T>&, const Tensor<T>&, T);               \
  template Tensor<T> apply_gates(Tape<T>&, const Tensor<T>&, const Tensor<T>&, \
                                 const Tensor<T>&);                            \
  template Tensor<T> entry_gate_lookup(Tape<T>&, const Tensor<T>&,             \
                                       std::span<const std::uint32_t>, T);     \
  template Tensor<T> sparsity_penalty(Tape<T>&, const GateSet<T>&,             \
                                      const Tensor<T>&);                       \
  template void add_entry_penalty_grad(GateSet<T>&);

SHUFFLEGATE_INSTANTIATE(float)
SHUFFLEGATE_INSTANTIATE(double)

#undef SHUFFLEGATE_INSTANTIATE

}  // namespace shufflegate
