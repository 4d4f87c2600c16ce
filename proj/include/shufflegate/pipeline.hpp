// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-stage protocol: gated search, prune decision, physical prune, retrain
// (from scratch or warm-started), and the gap between the gate-learning AUC
// and the retrained model's AUC.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shufflegate/backbone.hpp"
#include "shufflegate/data.hpp"
#include "shufflegate/gates.hpp"
#include "shufflegate/metrics.hpp"
#include "shufflegate/prune.hpp"

namespace shufflegate {

struct SearchConfig {
  Granularity granularity = Granularity::Field;
  std::size_t chunk = 1;
  double alpha = 0.01;
  double tau = 5.0;
  double init_gate = 0.99;
  std::size_t epochs = 3;
  std::size_t batch_size = 256;
  std::size_t warmup_steps = 0;
  std::size_t eval_every = 200;
  // Gate values are traced more often than validation runs.
  std::size_t trace_every = 50;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  std::vector<std::size_t> hidden{64, 32};
  std::size_t eval_batch_size = 4096;
  std::size_t retrain_epochs = 3;
  std::size_t finetune_epochs = 1;

  // Throws ConfigError on out-of-range values.
  void validate() const;
  GateConfig gate_config() const;
  AdamConfig adam_config() const;
};

struct TraceRow {
  std::uint64_t step = 0;
  // -1 marks a summary row (entry granularity stores summaries only).
  std::int64_t gate_id = -1;
  double g_value = 0.0;
  double mean_g = 0.0;
  double frac_below = 0.0;  // below 0.5
  std::optional<double> val_auc;
};

struct CurvePoint {
  std::uint64_t step = 0;
  double val_auc = 0.0;
  double mean_g = 0.0;
};

struct SearchReport {
  SearchConfig config;
  std::string schema_fingerprint;
  std::vector<std::string> unit_names;  // empty for entry granularity
  std::vector<TraceRow> trace;
  std::vector<CurvePoint> curve;
  std::vector<double> final_gates;
  std::vector<std::size_t> ranking;  // descending g, ties by index
  PolarizationReport polarization;
  GateStats stats;
  double final_val_auc = 0.0;
  double init_mean_gate = 0.0;
  std::uint64_t steps = 0;
  std::size_t eval_passes = 0;
  double wall_time = 0.0;
  bool failed = false;
  std::string failure;
};

struct SearchResult {
  SearchReport report;
  std::optional<Trainer<float>> trainer;
};

SearchResult run_search(const SearchConfig& cfg, const Dataset& ds);

// Threshold keeps g >= threshold; TopK keeps the k highest (ties by index).
PruneDecision decide_prune(const SearchReport& report, const FieldSchema& schema,
                           PruneStrategy strategy, std::size_t k = 0,
                           double threshold = 0.5);

struct RetrainResult {
  EvalResult val;
  EvalResult test;
  std::size_t epochs = 0;
  std::uint64_t steps = 0;
  double wall_time = 0.0;
  FieldSchema schema;
  std::optional<Trainer<float>> trainer;
};

// Physically prunes, then trains the gate-free model: from a fresh
// initialisation, or from `warm_from` (the search trainer) when warm-starting.
// `epochs` overrides the config (retrain_epochs / finetune_epochs).
RetrainResult run_retrain(const SearchConfig& cfg, const Dataset& ds,
                          const PruneDecision& decision,
                          const Trainer<float>* warm_from = nullptr,
                          std::optional<std::size_t> epochs = std::nullopt);

// Plain model on the full schema.
RetrainResult train_plain(const SearchConfig& cfg, const Dataset& ds,
                          std::optional<std::size_t> epochs = std::nullopt);

// |gate-learning val AUC - retrained val AUC|
double wysiwyg_gap(const SearchReport& report, const RetrainResult& retrain);

struct AlphaStability {
  SearchReport low;
  SearchReport high;
  bool polarized = false;
  std::optional<double> tau;  // only set when both runs are polarized
  std::string violation;
};

// Two searches differing only in alpha; Kendall tau of their rankings.
// Polarized means frac_below(0.5) in [0.25, 0.99].
AlphaStability alpha_stability(const SearchConfig& cfg, const Dataset& ds,
                               double alpha_a, double alpha_b);

struct StressResult {
  SearchReport search;
  PruneDecision decision;
  RetrainResult retrain;
  // Per field: fraction of its looked-up (train split) entries pruned.
  std::vector<double> pruned_fraction_seen;
};

// Entry-level search, TopK mask over keep_fraction of all entries, masked
// retrain from scratch.
StressResult stress_entry(const SearchConfig& cfg, const Dataset& ds,
                          double keep_fraction);

// Gate values recomputed in double from the stored phi, so ranking is not
// limited by float saturation near 0 and 1.
std::vector<double> gate_values_f64(const GateSet<float>& gs);

struct AlphaTuneResult {
  double alpha = 0.0;
  std::vector<std::pair<double, double>> probes;  // (alpha, max departure)
};

// Doubles alpha from `start` until the mean gate departs from its initial
// value by more than `departure` within the first epoch.
AlphaTuneResult auto_tune_alpha(const SearchConfig& cfg, const Dataset& ds,
                                double start = 1e-4, double departure = 0.02,
                                std::size_t max_doublings = 40);

// Budget-matched alpha: doubles alpha from `start`, running full searches,
// until the fraction of gates above 0.5 is at most `keep_fraction`. Probes
// record (alpha, fraction above 0.5).
AlphaTuneResult budget_alpha(const SearchConfig& cfg, const Dataset& ds,
                             double keep_fraction, double start,
                             std::size_t max_doublings = 20);

// Gate-equipped or plain evaluation on a split, with permutations drawn from a
// stream keyed by `eval_key`.
EvalResult evaluate_split(const Trainer<float>& trainer, const Dataset& ds,
                          SplitName which, std::uint64_t seed,
                          std::uint64_t eval_key,
                          std::size_t batch_size = 4096);

}  // namespace shufflegate
