// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Categorical datasets: synthetic generation with known field roles, CSV
// ingestion, seeded splitting and batching.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shufflegate/index_matrix.hpp"
#include "shufflegate/schema.hpp"

namespace shufflegate {

enum class RoleKind { Informative, Redundant, Noise, Spurious };

std::string to_string(RoleKind r);
RoleKind parse_role(const std::string& s);

struct FieldRole {
  RoleKind kind = RoleKind::Noise;
  // Source column for Redundant, unused otherwise.
  std::optional<std::size_t> source;

  friend bool operator==(const FieldRole&, const FieldRole&) = default;
};

struct Splits {
  std::vector<std::uint32_t> train, val, test;
};

enum class SplitName { Train, Val, Test };

struct Dataset {
  IndexMatrix x;
  std::vector<std::uint8_t> y;
  FieldSchema schema;
  std::vector<FieldRole> roles;  // empty when unknown
  Splits splits;

  std::size_t rows() const { return x.rows; }
  const std::vector<std::uint32_t>& split(SplitName s) const;
  // Validates vocab bounds, label values and split coverage.
  void validate() const;
};

struct SyntheticSpec {
  std::size_t n_informative = 5;
  std::size_t n_redundant = 2;
  std::size_t n_noise = 5;
  std::size_t vocab = 100;
  double effect_scale = 1.0;
  std::size_t n_samples = 200000;
  std::uint64_t seed = 0;
  std::size_t emb_dim = 8;
};

// Informative fields carry per-category logit effects ~ N(0, scale^2);
// the intercept is bisected so the expected base rate is 0.5. Redundant
// field j is a seeded bijective recoding of informative field j mod
// n_informative. Noise fields are uniform and label-independent.
Dataset generate_synthetic(const SyntheticSpec& spec);

// Recodes field `field` so that on train rows it copies the label with
// probability `strength` (category drawn from the label's half of the
// vocabulary) and is uniform everywhere else. Requires splits.
void inject_spurious_field(Dataset& ds, std::size_t field, double strength,
                           std::uint64_t seed);

// Header row required. Integer or string categories; strings get dense ids
// in first-seen order per column. Vocab = max id + 1.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 std::size_t emb_dim = 8);
void write_csv(const Dataset& ds, const std::string& path,
               const std::string& label_column = "label");

// Sidecar with columns field,role,source_field.
void write_roles(const Dataset& ds, const std::string& path);
std::vector<FieldRole> load_roles(const std::string& path,
                                  const FieldSchema& schema);

// Seeded shuffle of row ids then a contiguous 8:1:1 cut.
void split(Dataset& ds, std::uint64_t seed);

struct Batch {
  IndexMatrix x;
  std::vector<float> y;
};

// One epoch of batches over a split, reshuffled per (seed, epoch). The last
// partial batch is kept.
class BatchIterator {
 public:
  BatchIterator(const Dataset& ds, SplitName which, std::size_t batch_size,
                std::uint64_t seed, std::uint64_t epoch);
  bool next(Batch& out);
  std::size_t batches() const;
  const std::vector<std::uint32_t>& order() const { return order_; }

 private:
  const Dataset* ds_;
  std::vector<std::uint32_t> order_;
  std::size_t batch_size_;
  std::size_t pos_ = 0;
};

// Rows of one split, in split order.
IndexMatrix split_rows(const Dataset& ds, SplitName which);
std::vector<std::uint8_t> split_labels(const Dataset& ds, SplitName which);

}  // namespace shufflegate
