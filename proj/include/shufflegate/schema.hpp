// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace shufflegate {

struct FieldSpec {
  std::string name;
  std::size_t vocab = 1;
  std::size_t dim = 8;
  // Column of the dataset's index matrix this field reads. Pruned schemas
  // keep pointing at the original columns.
  std::size_t column = 0;

  friend bool operator==(const FieldSpec&, const FieldSpec&) = default;
};

struct FieldSchema {
  std::vector<FieldSpec> fields;

  std::size_t size() const { return fields.size(); }
  std::size_t total_dim() const;
  // Column offset of each field inside the concatenated embedding.
  std::vector<std::size_t> offsets() const;
  std::vector<std::size_t> dims() const;
  // Throws ConfigError on vocab/dim of zero or an empty schema.
  void validate() const;
  // FNV-1a over names, vocab sizes and dims.
  std::uint64_t fingerprint() const;
  std::string fingerprint_hex() const;

  friend bool operator==(const FieldSchema&, const FieldSchema&) = default;
};

}  // namespace shufflegate
