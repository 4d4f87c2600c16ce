// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoints: a little-endian container of named records (dtype,
// shape, raw bytes). Holds the schema, backbone parameters, entry masks,
// gate parameters, Adam moments and step counters, and the shuffle PRNG
// state, so a reload resumes bit-exactly.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "shufflegate/backbone.hpp"

namespace shufflegate {

enum class RecordType : std::uint8_t { F32 = 0, F64 = 1, U8 = 2, U64 = 3, Text = 4 };

struct Record {
  RecordType type = RecordType::F32;
  std::vector<std::uint64_t> shape;
  std::vector<std::uint8_t> bytes;
};

// Ordered by name so files are byte-stable.
using RecordMap = std::map<std::string, Record>;

void write_records(const std::string& path, const RecordMap& records);
// Throws IoError on unreadable files and ParseError on malformed ones.
RecordMap read_records(const std::string& path);

void save_checkpoint(const std::string& path, const Trainer<float>& trainer);
Trainer<float> load_checkpoint(const std::string& path);

// Schema fingerprint stored in a checkpoint, without loading tensors.
std::string checkpoint_fingerprint(const std::string& path);

}  // namespace shufflegate
