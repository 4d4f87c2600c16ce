// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON and CSV views of pipeline results. Every wall-clock quantity lives
// under a key starting with "wall_time" so reports can be compared
// byte-for-byte after stripping them.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "shufflegate/baseline_pi.hpp"
#include "shufflegate/pipeline.hpp"

namespace shufflegate {

using Json = nlohmann::ordered_json;

Json to_json(const SearchConfig& cfg);
// Applies the keys present in `j` onto `cfg`; unknown keys and bad values
// throw ConfigError.
void apply_json(const Json& j, SearchConfig& cfg);

Json to_json(const EvalResult& r);
Json to_json(const PolarizationReport& p);
Json to_json(const GateStats& s);
Json to_json(const SearchReport& r);
Json to_json(const PruneDecision& d);
PruneDecision decision_from_json(const Json& j);
Json to_json(const RetrainResult& r);
Json to_json(const PiReport& r);

// Reads back the fields of report.json that later stages need (config,
// fingerprint, final gates, curve, AUC).
SearchReport search_report_from_json(const Json& j);

// Recursively drops keys starting with "wall_time".
Json strip_wall_time(Json j);

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

// step,gate_id,g_value,mean_g,frac_below_0.5,val_auc
void write_trace_csv(const std::string& path, const SearchReport& r,
                     const std::vector<std::string>& gate_names = {});
// bin_lo,bin_hi,count over [0,1] in `bins` equal bins.
void write_gate_histogram_csv(const std::string& path,
                              const std::vector<double>& gates,
                              std::size_t bins = 20);
// step,val_auc,mean_g
void write_auc_curve_csv(const std::string& path, const SearchReport& r);

}  // namespace shufflegate
