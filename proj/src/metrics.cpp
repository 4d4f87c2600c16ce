// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include "shufflegate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "shufflegate/error.hpp"

namespace shufflegate {

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size())
    throw DomainError("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of (1-based, tie-averaged) ranks of the positives.
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]]) {
        rank_sum += avg_rank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw DomainError("auc: needs at least one positive and one negative");
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double logloss(std::span<const double> probs, std::span<const std::uint8_t> labels) {
  if (probs.empty()) return 0.0;
  constexpr double kClip = 1e-15;
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kClip, 1.0 - kClip);
    total -= labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(probs.size());
}

EvalResult evaluate(std::span<const double> probs,
                    std::span<const std::uint8_t> labels) {
  return {auc(probs, labels), logloss(probs, labels), probs.size()};
}

std::map<std::string, double> s_auc(
    const std::map<std::string, std::map<std::string, double>>& table) {
  std::set<std::string> datasets;
  for (const auto& [method, row] : table)
    for (const auto& [ds, v] : row) datasets.insert(ds);
  std::map<std::string, double> col_max;
  for (const auto& ds : datasets) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& [method, row] : table) {
      auto it = row.find(ds);
      if (it == row.end())
        throw DomainError("s_auc: method " + method + " has no AUC on " + ds);
      m = std::max(m, it->second);
    }
    col_max[ds] = m;
  }
  std::map<std::string, double> out;
  for (const auto& [method, row] : table) {
    double s = 0.0;
    for (const auto& ds : datasets) s += row.at(ds) / col_max[ds];
    out[method] = datasets.empty() ? 0.0 : s / static_cast<double>(datasets.size());
  }
  return out;
}

double feature_retention(std::size_t kept_fields, std::size_t total_fields) {
  if (kept_fields > total_fields) throw DomainError("kept exceeds total fields");
  return total_fields == 0 ? 0.0
                           : static_cast<double>(kept_fields) /
                                 static_cast<double>(total_fields);
}

double dimension_reduction(std::size_t kept_dims, std::size_t total_dims) {
  if (kept_dims > total_dims) throw DomainError("kept exceeds total dims");
  return total_dims == 0 ? 0.0
                         : static_cast<double>(kept_dims) /
                               static_cast<double>(total_dims);
}

double kendall_tau(std::span<const std::size_t> rank_a,
                   std::span<const std::size_t> rank_b) {
  if (rank_a.size() != rank_b.size())
    throw DomainError("kendall_tau: rankings differ in length");
  const std::size_t n = rank_a.size();
  if (n < 2) return 1.0;
  std::size_t max_id = 0;
  for (auto v : rank_a) max_id = std::max(max_id, v);
  for (auto v : rank_b) max_id = std::max(max_id, v);
  std::vector<std::ptrdiff_t> pos_b(max_id + 1, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (pos_b[rank_b[i]] != -1) throw DomainError("kendall_tau: duplicate item");
    pos_b[rank_b[i]] = static_cast<std::ptrdiff_t>(i);
  }
  std::vector<std::ptrdiff_t> seq(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (pos_b[rank_a[i]] < 0)
      throw DomainError("kendall_tau: rankings cover different items");
    seq[i] = pos_b[rank_a[i]];
  }
  long long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      (seq[i] < seq[j] ? concordant : discordant) += 1;
  return static_cast<double>(concordant - discordant) /
         static_cast<double>(concordant + discordant);
}

std::vector<std::size_t> ranking_desc(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  return order;
}

PolarizationReport polarization_report(std::span<const double> gates,
                                       double eps, double delta) {
  PolarizationReport r;
  if (gates.empty()) return r;
  std::size_t low = 0, high = 0, mid = 0;
  double min_kept = std::numeric_limits<double>::quiet_NaN();
  double max_pruned = std::numeric_limits<double>::quiet_NaN();
  for (double g : gates) {
    low += g < eps;
    high += g > 1.0 - delta;
    mid += g >= 0.3 && g <= 0.7;
    if (g >= 0.5)
      min_kept = std::isnan(min_kept) ? g : std::min(min_kept, g);
    else
      max_pruned = std::isnan(max_pruned) ? g : std::max(max_pruned, g);
  }
  const double n = static_cast<double>(gates.size());
  r.frac_low = static_cast<double>(low) / n;
  r.frac_high = static_cast<double>(high) / n;
  r.mid_band_mass = static_cast<double>(mid) / n;
  r.margin = min_kept - max_pruned;
  return r;
}

}  // namespace shufflegate
