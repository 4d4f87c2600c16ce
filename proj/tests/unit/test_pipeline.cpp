// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>

#include "helpers.hpp"
#include "shufflegate/baseline_pi.hpp"
#include "shufflegate/error.hpp"
#include "shufflegate/pipeline.hpp"
#include "shufflegate/report.hpp"

using namespace shufflegate;

namespace {

FieldSchema schema_n(std::size_t n, std::size_t dim = 8) {
  FieldSchema s;
  for (std::size_t i = 0; i < n; ++i) s.fields.push_back({"f" + std::to_string(i), 5, dim, i});
  return s;
}

SearchReport fake_report(const FieldSchema& s, std::vector<double> gates,
                         Granularity g = Granularity::Field, std::size_t chunk = 1) {
  SearchReport r;
  r.config.granularity = g;
  r.config.chunk = chunk;
  r.schema_fingerprint = s.fingerprint_hex();
  r.final_gates = std::move(gates);
  r.ranking = ranking_desc(r.final_gates);
  return r;
}

SearchConfig quick_config() {
  SearchConfig c;
  c.epochs = 1;
  c.batch_size = 64;
  c.eval_every = 20;
  c.trace_every = 10;
  c.hidden = {16, 8};
  c.retrain_epochs = 1;
  return c;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST(DecidePrune, ThresholdKeepsAtOrAboveHalf) {
  const auto s = schema_n(5);
  const auto d = decide_prune(fake_report(s, {0.9, 0.1, 0.6, 0.4, 0.5}), s, PruneStrategy::Threshold);
  EXPECT_EQ(d.kept, (std::vector<std::size_t>{0, 2, 4}));
  EXPECT_DOUBLE_EQ(d.ratio, 0.6);
  EXPECT_EQ(d.total_units, 5u);
}

TEST(DecidePrune, TopKBreaksTiesByIndex) {
  const auto s = schema_n(5);
  const auto d = decide_prune(fake_report(s, {0.9, 0.8, 0.5, 0.5, 0.1}), s, PruneStrategy::TopK, 3);
  EXPECT_EQ(d.kept, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(DecidePrune, TopKSetsAreNested) {
  const auto s = schema_n(8);
  const auto r = fake_report(s, {0.3, 0.9, 0.9, 0.1, 0.7, 0.2, 0.7, 0.95});
  const auto quarter = decide_prune(r, s, PruneStrategy::TopK, 2);
  const auto half = decide_prune(r, s, PruneStrategy::TopK, 4);
  EXPECT_TRUE(std::includes(half.kept.begin(), half.kept.end(), quarter.kept.begin(),
                            quarter.kept.end()));
}

TEST(DecidePrune, DimensionRatio) {
  const auto s = schema_n(4, 8);
  std::vector<double> g(16, 0.1);
  g[0] = g[1] = g[5] = 0.9;  // three chunks of two columns
  const auto d = decide_prune(fake_report(s, g, Granularity::Dimension, 2), s, PruneStrategy::Threshold);
  EXPECT_EQ(d.kept.size(), 3u);
  EXPECT_DOUBLE_EQ(d.ratio, 0.1875);
}

TEST(DecidePrune, ErrorPaths) {
  const auto s = schema_n(3);
  try {
    decide_prune(fake_report(s, {0.1, 0.2, 0.3}), s, PruneStrategy::Threshold);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("lower alpha"), std::string::npos);
  }
  EXPECT_THROW(decide_prune(fake_report(schema_n(4), {0.9, 0.9, 0.9, 0.9}), s,
                            PruneStrategy::Threshold),
               ConfigError);
}

TEST(Pipeline, KeepAllRetrainMatchesHandRolledPlainTraining) {
  const auto ds = sgtest::small_synthetic(1);
  const auto cfg = quick_config();
  const auto r = run_retrain(cfg, ds, PruneDecision::keep_all(ds.schema, Granularity::Field));

  Rng init = make_rng(cfg.seed, stream::kInit);
  Trainer<float> tr(ds.schema, init_backbone<float>(ds.schema, BackboneConfig{cfg.hidden}, init),
                    std::nullopt, cfg.adam_config(), cfg.seed);
  Batch b;
  for (std::size_t e = 0; e < cfg.retrain_epochs; ++e) {
    BatchIterator it(ds, SplitName::Train, cfg.batch_size, cfg.seed, e);
    while (it.next(b)) tr.train_step(b.x, b.y);
  }
  const auto val = evaluate_split(tr, ds, SplitName::Val, cfg.seed, tr.steps());
  EXPECT_EQ(r.steps, tr.steps());
  EXPECT_EQ(r.val.auc, val.auc);
  EXPECT_EQ(r.val.logloss, val.logloss);
}

TEST(Pipeline, SearchIsDeterministic) {
  const auto ds = sgtest::small_synthetic(2);
  auto cfg = quick_config();
  cfg.alpha = 0.05;
  const auto a = run_search(cfg, ds), b = run_search(cfg, ds);
  EXPECT_EQ(strip_wall_time(to_json(a.report)), strip_wall_time(to_json(b.report)));
  EXPECT_EQ(a.report.ranking, b.report.ranking);
}

TEST(Pipeline, ZeroAlphaLeavesGatesNearInit) {
  const auto ds = sgtest::small_synthetic(3);
  auto cfg = quick_config();
  cfg.alpha = 0.0;
  const auto r = run_search(cfg, ds).report;
  for (double g : r.final_gates) EXPECT_NEAR(g, 0.99, 0.02);
}

TEST(Pipeline, HugeAlphaClosesEveryGate) {
  const auto ds = sgtest::small_synthetic(4);
  auto cfg = quick_config();
  cfg.alpha = 1e3;
  cfg.lr = 0.01;
  cfg.batch_size = 16;
  const auto r = run_search(cfg, ds).report;
  for (double g : r.final_gates) EXPECT_LT(g, 0.5);
}

TEST(Pipeline, MeanGateFallsWithAlpha) {
  const auto ds = sgtest::small_synthetic(5);
  auto cfg = quick_config();
  cfg.lr = 0.01;
  cfg.epochs = 2;
  double prev = 1.0;
  for (double a : {0.0, 0.01, 0.1, 1.0}) {
    cfg.alpha = a;
    const double m = mean(run_search(cfg, ds).report.final_gates);
    EXPECT_LE(m, prev) << "alpha " << a;
    prev = m;
  }
}

TEST(Pipeline, EvalPassesIndependentOfFieldCount) {
  auto cfg = quick_config();
  std::size_t passes = 0;
  for (std::size_t noise : {1u, 6u}) {
    SyntheticSpec spec;
    spec.n_informative = 2;
    spec.n_redundant = 0;
    spec.n_noise = noise;
    spec.vocab = 10;
    spec.n_samples = 3000;
    spec.emb_dim = 4;
    auto ds = generate_synthetic(spec);
    split(ds, 0);
    const auto r = run_search(cfg, ds).report;
    // ceil(2400 / 64) = 38 steps: evaluations at 20 and the final step 38.
    EXPECT_EQ(r.steps, 38u);
    EXPECT_EQ(r.eval_passes, 2u);
    if (passes) EXPECT_EQ(r.eval_passes, passes);
    passes = r.eval_passes;
  }
}

TEST(Pipeline, AlphaStabilityReportsPolarizationViolation) {
  const auto ds = sgtest::small_synthetic(6);
  auto cfg = quick_config();
  const auto st = alpha_stability(cfg, ds, 0.0, 0.0);
  EXPECT_FALSE(st.polarized);
  EXPECT_FALSE(st.tau.has_value());
  EXPECT_FALSE(st.violation.empty());
}

TEST(Pipeline, AlphaStabilitySameAlphaIsPerfectAgreement) {
  const auto ds = sgtest::small_synthetic(7);
  auto cfg = quick_config();
  cfg.lr = 0.01;
  cfg.epochs = 3;
  const auto st = alpha_stability(cfg, ds, 0.05, 0.05);
  ASSERT_TRUE(st.polarized) << st.violation;
  EXPECT_EQ(st.tau.value(), 1.0);
}

TEST(Pipeline, FullKeepStressEqualsPlainModel) {
  const auto ds = sgtest::small_synthetic(8);
  auto cfg = quick_config();
  cfg.granularity = Granularity::Entry;
  const auto st = stress_entry(cfg, ds, 1.0);
  EXPECT_EQ(st.decision.kept.size(), st.decision.total_units);
  auto plain_cfg = cfg;
  plain_cfg.granularity = Granularity::Field;
  const auto plain = train_plain(plain_cfg, ds);
  EXPECT_EQ(st.retrain.val.auc, plain.val.auc);
  EXPECT_EQ(st.retrain.test.auc, plain.test.auc);
  for (double f : st.pruned_fraction_seen) EXPECT_EQ(f, 0.0);
}

TEST(Pipeline, AutoTunePicksFirstDepartingAlpha) {
  const auto ds = sgtest::small_synthetic(9);
  auto cfg = quick_config();
  cfg.lr = 0.01;
  const auto t = auto_tune_alpha(cfg, ds);
  ASSERT_FALSE(t.probes.empty());
  EXPECT_EQ(t.probes.back().first, t.alpha);
  EXPECT_GT(t.probes.back().second, 0.02);
  for (std::size_t i = 0; i + 1 < t.probes.size(); ++i) {
    EXPECT_LE(t.probes[i].second, 0.02);
    EXPECT_EQ(t.probes[i + 1].first, 2.0 * t.probes[i].first);
  }
}

TEST(PermutationImportance, ConstantAndDeterminingFields) {
  // Field 0 determines the label; field 1 is constant; field 2 is noise.
  Dataset ds;
  const std::size_t n = 2000;
  ds.x = IndexMatrix(n, 3);
  ds.y.resize(n);
  std::mt19937_64 rng(1);
  for (std::size_t r = 0; r < n; ++r) {
    ds.x(r, 0) = static_cast<std::uint32_t>(rng() % 6);
    ds.x(r, 1) = 0;
    ds.x(r, 2) = static_cast<std::uint32_t>(rng() % 6);
    ds.y[r] = ds.x(r, 0) < 3;
  }
  ds.schema.fields = {{"det", 6, 4, 0}, {"const", 1, 4, 1}, {"noise", 6, 4, 2}};
  split(ds, 0);
  auto cfg = quick_config();
  cfg.lr = 0.01;
  auto plain = train_plain(cfg, ds, 2);
  const auto pi = permutation_importance(*plain.trainer, ds, SplitName::Val, 3, 0);
  EXPECT_EQ(pi.importance[1], 0.0);
  EXPECT_GT(pi.importance[0], 0.3);
  EXPECT_LT(std::abs(pi.importance[2]), 0.05);
  EXPECT_EQ(pi.n_eval_passes, (3u + 1u) * 3u);
}

TEST(PermutationImportance, PassCountIsLinearInFields) {
  for (std::size_t noise : {2u, 9u}) {
    SyntheticSpec spec;
    spec.n_informative = 1;
    spec.n_redundant = 0;
    spec.n_noise = noise;
    spec.vocab = 8;
    spec.n_samples = 1000;
    spec.emb_dim = 2;
    auto ds = generate_synthetic(spec);
    split(ds, 0);
    auto cfg = quick_config();
    auto plain = train_plain(cfg, ds, 1);
    const auto pi = permutation_importance(*plain.trainer, ds, SplitName::Val, 2, 0);
    EXPECT_EQ(pi.n_eval_passes, (ds.schema.size() + 1) * 2);
  }
}

TEST(PermutationImportance, RejectsGatedModelsAndRanksAgree) {
  const auto ds = sgtest::small_synthetic(10);
  auto cfg = quick_config();
  auto s = run_search(cfg, ds);
  EXPECT_THROW(permutation_importance(*s.trainer, ds, SplitName::Val), ContractError);
  PiReport pi;
  pi.importance = {0.3, 0.1, 0.2};
  const std::vector<double> same{0.9, 0.2, 0.5};
  EXPECT_EQ(rank_agreement(pi, same), 1.0);
  EXPECT_THROW(rank_agreement(pi, std::vector<double>{0.1, 0.2}), DimensionError);
}

TEST(Report, SearchReportRoundTrips) {
  const auto ds = sgtest::small_synthetic(11);
  auto cfg = quick_config();
  cfg.alpha = 0.02;
  const auto r = run_search(cfg, ds).report;
  const auto j = to_json(r);
  EXPECT_EQ(to_json(search_report_from_json(j)), j);
  const auto d = decide_prune(r, ds.schema, PruneStrategy::TopK, 3);
  EXPECT_EQ(to_json(decision_from_json(to_json(d))), to_json(d));
}

TEST(Report, ConfigRejectsUnknownKeysAndBadValues) {
  SearchConfig cfg;
  EXPECT_THROW(apply_json(Json{{"alhpa", 0.1}}, cfg), ConfigError);
  EXPECT_THROW(apply_json(Json{{"alpha", -1.0}}, cfg), ConfigError);
  apply_json(Json{{"alpha", 0.25}, {"granularity", "dim"}, {"chunk", 2}}, cfg);
  EXPECT_EQ(cfg.alpha, 0.25);
  EXPECT_EQ(cfg.granularity, Granularity::Dimension);
  SearchConfig back;
  apply_json(to_json(cfg), back);
  EXPECT_EQ(to_json(back), to_json(cfg));
}

TEST(Pipeline, BudgetAlphaStopsAtFirstAlphaWithinBudget) {
  const auto ds = sgtest::small_synthetic(12);
  auto cfg = quick_config();
  cfg.lr = 0.01;
  cfg.batch_size = 16;
  const auto b = budget_alpha(cfg, ds, 0.5, 0.01);
  ASSERT_FALSE(b.probes.empty());
  EXPECT_EQ(b.probes.back().first, b.alpha);
  EXPECT_LE(b.probes.back().second, 0.5);
  for (std::size_t i = 0; i + 1 < b.probes.size(); ++i) EXPECT_GT(b.probes[i].second, 0.5);
  EXPECT_THROW(budget_alpha(cfg, ds, 0.0, 0.01), ConfigError);
}
