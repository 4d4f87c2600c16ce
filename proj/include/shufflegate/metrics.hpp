// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace shufflegate {

struct EvalResult {
  double auc = 0.0;
  double logloss = 0.0;
  std::size_t n = 0;
};

// Mann-Whitney AUC via average ranks; ties get half credit. Throws
// DomainError unless both classes are present.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

double logloss(std::span<const double> probs, std::span<const std::uint8_t> labels);

EvalResult evaluate(std::span<const double> probs,
                    std::span<const std::uint8_t> labels);

// table[method][dataset] -> per-method mean of AUC / column max.
std::map<std::string, double> s_auc(
    const std::map<std::string, std::map<std::string, double>>& table);

double feature_retention(std::size_t kept_fields, std::size_t total_fields);
double dimension_reduction(std::size_t kept_dims, std::size_t total_dims);

// Rankings are item ids in rank order (best first).
double kendall_tau(std::span<const std::size_t> rank_a,
                   std::span<const std::size_t> rank_b);

// Item ids sorted by descending score, ties by ascending id.
std::vector<std::size_t> ranking_desc(std::span<const double> scores);

struct PolarizationReport {
  double frac_low = 0.0;   // g < eps
  double frac_high = 0.0;  // g > 1 - delta
  double mid_band_mass = 0.0;  // 0.3 <= g <= 0.7
  // min(g >= 0.5) - max(g < 0.5); NaN when either side is empty.
  double margin = 0.0;
};

PolarizationReport polarization_report(std::span<const double> gates,
                                       double eps = 1e-3, double delta = 0.05);

}  // namespace shufflegate
