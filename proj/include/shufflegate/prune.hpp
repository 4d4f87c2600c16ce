// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "shufflegate/backbone.hpp"
#include "shufflegate/gates.hpp"
#include "shufflegate/schema.hpp"

namespace shufflegate {

enum class PruneStrategy { Threshold, TopK };

std::string to_string(PruneStrategy s);
PruneStrategy parse_prune_strategy(const std::string& s);

// Which gate units survive. Units are fields (Field), column chunks
// (Dimension) or flattened entries in field-major, row-major order (Entry).
struct PruneDecision {
  PruneStrategy strategy = PruneStrategy::Threshold;
  double threshold = 0.5;
  std::size_t k = 0;
  Granularity granularity = Granularity::Field;
  std::size_t chunk = 1;
  std::size_t total_units = 0;
  std::vector<std::size_t> kept;  // ascending
  // FR for Field, DR for Dimension, kept-entry fraction for Entry.
  double ratio = 0.0;
  std::string schema_fingerprint;

  // Keeps every unit of `schema` at `granularity`.
  static PruneDecision keep_all(const FieldSchema& schema,
                                Granularity granularity, std::size_t chunk = 1);
};

template <typename T>
struct PrunedModel {
  BackboneParams<T> params;
  FieldSchema schema;
};

// Field: drops tables and the matching rows of the first MLP weight.
// Dimension: drops embedding columns and matching MLP input rows (fields left
// without columns disappear). Entry: zeroes pruned entries and installs the
// mask. Retained values are copied exactly.
template <typename T>
PrunedModel<T> physical_prune(const BackboneParams<T>& params,
                              const FieldSchema& schema,
                              const PruneDecision& decision);

}  // namespace shufflegate
