// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include "shufflegate/schema.hpp"

#include <cstdio>

#include "shufflegate/error.hpp"

namespace shufflegate {

std::size_t FieldSchema::total_dim() const {
  std::size_t d = 0;
  for (const auto& f : fields) d += f.dim;
  return d;
}

std::vector<std::size_t> FieldSchema::offsets() const {
  std::vector<std::size_t> out;
  std::size_t off = 0;
  for (const auto& f : fields) {
    out.push_back(off);
    off += f.dim;
  }
  return out;
}

std::vector<std::size_t> FieldSchema::dims() const {
  std::vector<std::size_t> out;
  for (const auto& f : fields) out.push_back(f.dim);
  return out;
}

void FieldSchema::validate() const {
  if (fields.empty()) throw ConfigError("schema has no fields");
  for (const auto& f : fields) {
    if (f.vocab < 1) throw ConfigError("field " + f.name + " has vocab 0");
    if (f.dim < 1) throw ConfigError("field " + f.name + " has dim 0");
  }
}

std::uint64_t FieldSchema::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& f : fields) {
    mix(f.name.data(), f.name.size());
    const std::uint64_t v = f.vocab, d = f.dim;
    mix(&v, sizeof v);
    mix(&d, sizeof d);
    mix("|", 1);
  }
  return h;
}

std::string FieldSchema::fingerprint_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fingerprint()));
  return buf;
}

}  // namespace shufflegate
