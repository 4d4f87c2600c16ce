// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include "shufflegate/prune.hpp"

#include <algorithm>
#include <numeric>

#include "shufflegate/error.hpp"

namespace shufflegate {

std::string to_string(PruneStrategy s) {
  return s == PruneStrategy::Threshold ? "threshold" : "topk";
}

PruneStrategy parse_prune_strategy(const std::string& s) {
  if (s == "threshold") return PruneStrategy::Threshold;
  if (s == "topk") return PruneStrategy::TopK;
  throw ConfigError("unknown prune strategy '" + s +
                    "' (expected threshold or topk)");
}

PruneDecision PruneDecision::keep_all(const FieldSchema& schema,
                                      Granularity granularity,
                                      std::size_t chunk) {
  PruneDecision d;
  d.granularity = granularity;
  d.chunk = chunk;
  switch (granularity) {
    case Granularity::Field:
      d.total_units = schema.size();
      break;
    case Granularity::Dimension:
      d.total_units = schema.total_dim() / chunk;
      break;
    case Granularity::Entry:
      for (const auto& f : schema.fields) d.total_units += f.vocab * f.dim;
      break;
  }
  d.kept.resize(d.total_units);
  std::iota(d.kept.begin(), d.kept.end(), std::size_t{0});
  d.k = d.total_units;
  d.ratio = 1.0;
  d.schema_fingerprint = schema.fingerprint_hex();
  return d;
}

namespace {

// Copies the selected rows of the first layer weight.
template <typename T>
Tensor<T> take_rows(const Tensor<T>& w, const std::vector<std::size_t>& rows) {
  const std::size_t cols = w.cols();
  std::vector<T> out;
  out.reserve(rows.size() * cols);
  auto v = w.data();
  for (auto r : rows)
    out.insert(out.end(), v.begin() + static_cast<std::ptrdiff_t>(r * cols),
               v.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
  return Tensor<T>::from({rows.size(), cols}, std::move(out),
                         w.requires_grad());
}

}  // namespace

template <typename T>
PrunedModel<T> physical_prune(const BackboneParams<T>& params,
                              const FieldSchema& schema,
                              const PruneDecision& decision) {
  if (decision.kept.empty())
    throw ConfigError("prune decision keeps nothing");
  if (params.embeddings.size() != schema.size())
    throw ConfigError("parameters do not match the schema");
  if (decision.total_units != 0 &&
      decision.total_units !=
          PruneDecision::keep_all(schema, decision.granularity, decision.chunk)
              .total_units)
    throw ConfigError("prune decision was made for a different schema");
  for (auto u : decision.kept)
    if (u >= decision.total_units)
      throw ConfigError("prune decision references unit out of range");

  PrunedModel<T> out;
  const auto offsets = schema.offsets();

  if (decision.granularity == Granularity::Entry) {
    out.params = params.clone();
    out.schema = schema;
    out.params.entry_masks.assign(schema.size(), {});
    std::vector<std::size_t> table_begin;
    std::size_t acc = 0;
    for (const auto& f : schema.fields) {
      table_begin.push_back(acc);
      acc += f.vocab * f.dim;
    }
    for (std::size_t i = 0; i < schema.size(); ++i)
      out.params.entry_masks[i].assign(
          schema.fields[i].vocab * schema.fields[i].dim, 0);
    for (auto u : decision.kept) {
      auto it = std::upper_bound(table_begin.begin(), table_begin.end(), u);
      const auto t = static_cast<std::size_t>(it - table_begin.begin()) - 1;
      out.params.entry_masks[t][u - table_begin[t]] = 1;
    }
    // An existing mask composes: previously pruned entries stay pruned.
    for (std::size_t i = 0; i < schema.size(); ++i) {
      auto& mask = out.params.entry_masks[i];
      if (i < params.entry_masks.size() && !params.entry_masks[i].empty())
        for (std::size_t j = 0; j < mask.size(); ++j)
          mask[j] = mask[j] && params.entry_masks[i][j];
      auto v = out.params.embeddings[i].data();
      for (std::size_t j = 0; j < mask.size(); ++j)
        if (!mask[j]) v[j] = T(0);
    }
    if (decision.kept.size() == decision.total_units &&
        params.entry_masks.empty())
      out.params.entry_masks.clear();
    return out;
  }

  // Kept columns of the concatenated embedding, per field.
  std::vector<std::vector<std::size_t>> kept_cols(schema.size());
  if (decision.granularity == Granularity::Field) {
    for (auto f : decision.kept)
      for (std::size_t c = 0; c < schema.fields[f].dim; ++c)
        kept_cols[f].push_back(c);
  } else {
    const std::size_t chunk = decision.chunk == 0 ? 1 : decision.chunk;
    for (auto u : decision.kept)
      for (std::size_t c = u * chunk; c < (u + 1) * chunk; ++c) {
        auto it = std::upper_bound(offsets.begin(), offsets.end(), c);
        const auto f = static_cast<std::size_t>(it - offsets.begin()) - 1;
        kept_cols[f].push_back(c - offsets[f]);
      }
  }

  const bool masked = !params.entry_masks.empty();
  std::vector<std::size_t> first_rows;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    if (kept_cols[f].empty()) continue;
    const auto& spec = schema.fields[f];
    FieldSpec ns = spec;
    ns.dim = kept_cols[f].size();
    out.schema.fields.push_back(ns);
    const auto& table = params.embeddings[f];
    std::vector<T> v;
    v.reserve(spec.vocab * ns.dim);
    auto src = table.data();
    for (std::size_t r = 0; r < spec.vocab; ++r)
      for (auto c : kept_cols[f]) v.push_back(src[r * spec.dim + c]);
    out.params.embeddings.push_back(
        Tensor<T>::from({spec.vocab, ns.dim}, std::move(v), table.requires_grad()));
    if (masked) {
      std::vector<std::uint8_t> m;
      const bool has = f < params.entry_masks.size() && !params.entry_masks[f].empty();
      for (std::size_t r = 0; r < spec.vocab; ++r)
        for (auto c : kept_cols[f])
          m.push_back(has ? params.entry_masks[f][r * spec.dim + c] : 1);
      out.params.entry_masks.push_back(std::move(m));
    }
    for (auto c : kept_cols[f]) first_rows.push_back(offsets[f] + c);
  }

  out.params.weights.push_back(take_rows(params.weights[0], first_rows));
  out.params.biases.push_back(params.biases[0].clone());
  for (std::size_t l = 1; l < params.weights.size(); ++l) {
    out.params.weights.push_back(params.weights[l].clone());
    out.params.biases.push_back(params.biases[l].clone());
  }
  return out;
}

template PrunedModel<float> physical_prune(const BackboneParams<float>&,
                                           const FieldSchema&,
                                           const PruneDecision&);
template PrunedModel<double> physical_prune(const BackboneParams<double>&,
                                            const FieldSchema&,
                                            const PruneDecision&);

}  // namespace shufflegate
