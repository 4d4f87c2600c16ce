// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include "shufflegate/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "shufflegate/error.hpp"

namespace shufflegate {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

BackboneConfig backbone_config(const SearchConfig& cfg) {
  return BackboneConfig{cfg.hidden};
}

std::vector<std::string> unit_names(const FieldSchema& schema, Granularity g,
                                    std::size_t chunk) {
  std::vector<std::string> out;
  if (g == Granularity::Field) {
    for (const auto& f : schema.fields) out.push_back(f.name);
  } else if (g == Granularity::Dimension) {
    for (const auto& f : schema.fields)
      for (std::size_t c = 0; c < f.dim; c += chunk)
        out.push_back(f.name + ":" + std::to_string(c / chunk));
  }
  return out;
}

// Runs `epochs` epochs of train_step; `on_step` sees the trainer after each
// step and may return false to stop early.
void train_loop(Trainer<float>& tr, const Dataset& ds, std::size_t batch_size,
                std::uint64_t seed, std::size_t epochs,
                const std::function<bool(Trainer<float>&)>& on_step) {
  Batch b;
  for (std::size_t e = 0; e < epochs; ++e) {
    BatchIterator it(ds, SplitName::Train, batch_size, seed, e);
    while (it.next(b)) {
      tr.train_step(b.x, b.y);
      if (on_step && !on_step(tr)) return;
    }
  }
}

void require_splits(const Dataset& ds) {
  if (ds.splits.train.empty() || ds.splits.val.empty())
    throw ConfigError("dataset has no train/val split");
}

}  // namespace

std::vector<double> gate_values_f64(const GateSet<float>& gs) {
  std::vector<double> out;
  const double tau = gs.config().tau;
  for (float p : gs.phi_values()) {
    const double x = tau * static_cast<double>(p);
    out.push_back(x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                         : std::exp(x) / (1.0 + std::exp(x)));
  }
  return out;
}

void SearchConfig::validate() const {
  if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (trace_every < 1) throw ConfigError("trace_every must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (chunk < 1) throw ConfigError("chunk must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(init_gate > 0.0 && init_gate < 1.0))
    throw ConfigError("init_gate must lie in (0, 1)");
}

GateConfig SearchConfig::gate_config() const {
  return GateConfig{granularity, chunk, tau, alpha, warmup_steps, init_gate};
}

AdamConfig SearchConfig::adam_config() const {
  AdamConfig a;
  a.lr = lr;
  return a;
}

EvalResult evaluate_split(const Trainer<float>& trainer, const Dataset& ds,
                          SplitName which, std::uint64_t seed,
                          std::uint64_t eval_key, std::size_t batch_size) {
  Rng rng = make_rng(seed * 1000003ull + eval_key, stream::kEval);
  const auto x = split_rows(ds, which);
  const auto y = split_labels(ds, which);
  const auto p = trainer.predict(x, rng, batch_size);
  return evaluate(p, y);
}

SearchResult run_search(const SearchConfig& cfg, const Dataset& ds) {
  cfg.validate();
  require_splits(ds);
  const auto t0 = Clock::now();

  Rng init = make_rng(cfg.seed, stream::kInit);
  auto params = init_backbone<float>(ds.schema, backbone_config(cfg), init);
  auto gates = GateSet<float>::create(ds.schema, cfg.gate_config());

  SearchResult result;
  auto& rep = result.report;
  rep.config = cfg;
  rep.schema_fingerprint = ds.schema.fingerprint_hex();
  rep.unit_names = unit_names(ds.schema, cfg.granularity, cfg.chunk);
  result.trainer.emplace(ds.schema, std::move(params), std::move(gates),
                         cfg.adam_config(), cfg.seed);
  auto& tr = *result.trainer;

  auto record = [&](std::uint64_t step, std::optional<double> val_auc) {
    const auto g = gate_values_f64(*tr.gates());
    const auto s = gate_stats(g);
    if (cfg.granularity == Granularity::Entry) {
      rep.trace.push_back({step, -1, s.mean, s.mean, s.frac_below, val_auc});
    } else {
      for (std::size_t i = 0; i < g.size(); ++i)
        rep.trace.push_back({step, static_cast<std::int64_t>(i), g[i], s.mean,
                             s.frac_below, val_auc});
    }
    if (val_auc) rep.curve.push_back({step, *val_auc, s.mean});
    return s;
  };
  auto validate_now = [&](std::uint64_t step) {
    ++rep.eval_passes;
    return evaluate_split(tr, ds, SplitName::Val, cfg.seed, step,
                          cfg.eval_batch_size)
        .auc;
  };

  rep.init_mean_gate = record(0, std::nullopt).mean;
  std::uint64_t last_eval = 0;
  try {
    train_loop(tr, ds, cfg.batch_size, cfg.seed, cfg.epochs,
               [&](Trainer<float>& t) {
                 const auto step = t.steps();
                 const bool eval = step % cfg.eval_every == 0;
                 if (eval || step % cfg.trace_every == 0) {
                   std::optional<double> auc;
                   if (eval) {
                     auc = validate_now(step);
                     last_eval = step;
                   }
                   record(step, auc);
                 }
                 return true;
               });
  } catch (const NumericError& e) {
    rep.failed = true;
    rep.failure = e.what();
  }
  rep.steps = tr.steps();
  if (!rep.failed) {
    if (last_eval != rep.steps || rep.curve.empty()) {
      // Drop a trace-only row for the final step so it is not duplicated.
      while (!rep.trace.empty() && rep.trace.back().step == rep.steps)
        rep.trace.pop_back();
      record(rep.steps, validate_now(rep.steps));
    }
    rep.final_val_auc = rep.curve.back().val_auc;
  }
  rep.final_gates = gate_values_f64(*tr.gates());
  rep.ranking = ranking_desc(rep.final_gates);
  rep.polarization = polarization_report(rep.final_gates);
  rep.stats = gate_stats(rep.final_gates);
  rep.wall_time = seconds_since(t0);
  return result;
}

PruneDecision decide_prune(const SearchReport& report, const FieldSchema& schema,
                           PruneStrategy strategy, std::size_t k,
                           double threshold) {
  if (report.schema_fingerprint != schema.fingerprint_hex())
    throw ConfigError("search report schema " + report.schema_fingerprint +
                      " does not match dataset schema " +
                      schema.fingerprint_hex());
  const auto& cfg = report.config;
  PruneDecision d =
      PruneDecision::keep_all(schema, cfg.granularity, cfg.chunk);
  if (report.final_gates.size() != d.total_units)
    throw ConfigError("search report gate count does not match the schema");
  d.strategy = strategy;
  d.threshold = threshold;
  d.kept.clear();
  if (strategy == PruneStrategy::Threshold) {
    for (std::size_t i = 0; i < report.final_gates.size(); ++i)
      if (report.final_gates[i] >= threshold) d.kept.push_back(i);
    if (d.kept.empty())
      throw ConfigError(
          "threshold pruning keeps no units: every gate is below " +
          std::to_string(threshold) + "; lower alpha and search again");
    d.k = d.kept.size();
  } else {
    if (k == 0 || k > d.total_units)
      throw ConfigError("top-k needs 1 <= k <= " +
                        std::to_string(d.total_units));
    const auto order = ranking_desc(report.final_gates);
    d.kept.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(d.kept.begin(), d.kept.end());
    d.k = k;
  }
  switch (cfg.granularity) {
    case Granularity::Field:
      d.ratio = feature_retention(d.kept.size(), schema.size());
      break;
    case Granularity::Dimension:
      d.ratio = dimension_reduction(d.kept.size() * cfg.chunk, schema.total_dim());
      break;
    case Granularity::Entry:
      d.ratio = static_cast<double>(d.kept.size()) /
                static_cast<double>(d.total_units);
      break;
  }
  return d;
}

RetrainResult run_retrain(const SearchConfig& cfg, const Dataset& ds,
                          const PruneDecision& decision,
                          const Trainer<float>* warm_from,
                          std::optional<std::size_t> epochs) {
  cfg.validate();
  require_splits(ds);
  if (!decision.schema_fingerprint.empty() &&
      decision.schema_fingerprint != ds.schema.fingerprint_hex())
    throw ConfigError("prune decision is for schema " +
                      decision.schema_fingerprint + " but the dataset has " +
                      ds.schema.fingerprint_hex());
  const auto t0 = Clock::now();

  PrunedModel<float> pm;
  if (warm_from) {
    pm = physical_prune(warm_from->params(), warm_from->schema(), decision);
  } else {
    Rng init = make_rng(cfg.seed, stream::kInit);
    auto full = init_backbone<float>(ds.schema, backbone_config(cfg), init);
    pm = physical_prune(full, ds.schema, decision);
    if (decision.granularity != Granularity::Entry) {
      // Fresh initialisation of the smaller architecture.
      auto masks = std::move(pm.params.entry_masks);
      Rng again = make_rng(cfg.seed, stream::kInit);
      pm.params = init_backbone<float>(pm.schema, backbone_config(cfg), again);
      pm.params.entry_masks = std::move(masks);
    }
  }

  RetrainResult r;
  r.epochs = epochs.value_or(warm_from ? cfg.finetune_epochs : cfg.retrain_epochs);
  r.schema = pm.schema;
  r.trainer.emplace(pm.schema, std::move(pm.params), std::nullopt,
                    cfg.adam_config(), cfg.seed);
  train_loop(*r.trainer, ds, cfg.batch_size, cfg.seed, r.epochs, {});
  r.steps = r.trainer->steps();
  r.val = evaluate_split(*r.trainer, ds, SplitName::Val, cfg.seed, r.steps,
                         cfg.eval_batch_size);
  if (!ds.splits.test.empty())
    r.test = evaluate_split(*r.trainer, ds, SplitName::Test, cfg.seed,
                            r.steps + 1, cfg.eval_batch_size);
  r.wall_time = seconds_since(t0);
  return r;
}

RetrainResult train_plain(const SearchConfig& cfg, const Dataset& ds,
                          std::optional<std::size_t> epochs) {
  return run_retrain(cfg, ds,
                     PruneDecision::keep_all(ds.schema, Granularity::Field),
                     nullptr, epochs);
}

double wysiwyg_gap(const SearchReport& report, const RetrainResult& retrain) {
  return std::abs(report.final_val_auc - retrain.val.auc);
}

AlphaStability alpha_stability(const SearchConfig& cfg, const Dataset& ds,
                               double alpha_a, double alpha_b) {
  AlphaStability out;
  SearchConfig a = cfg, b = cfg;
  a.alpha = alpha_a;
  b.alpha = alpha_b;
  out.low = run_search(a, ds).report;
  out.high = run_search(b, ds).report;
  auto polarized = [](const SearchReport& r) {
    return !r.failed && r.stats.frac_below >= 0.25 && r.stats.frac_below <= 0.99;
  };
  out.polarized = polarized(out.low) && polarized(out.high);
  if (!out.polarized) {
    out.violation = "runs not polarized: frac_below(0.5) = " +
                    std::to_string(out.low.stats.frac_below) + " and " +
                    std::to_string(out.high.stats.frac_below) +
                    " (need both in [0.25, 0.99])";
    return out;
  }
  out.tau = kendall_tau(out.low.ranking, out.high.ranking);
  return out;
}

StressResult stress_entry(const SearchConfig& cfg, const Dataset& ds,
                          double keep_fraction) {
  if (cfg.granularity != Granularity::Entry)
    throw ConfigError("stress test runs at entry granularity");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw ConfigError("keep_fraction must lie in (0, 1]");
  StressResult out;
  auto search = run_search(cfg, ds);
  out.search = search.report;
  if (out.search.failed) throw NumericError(out.search.failure);
  const std::size_t total = out.search.final_gates.size();
  const auto k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(keep_fraction * static_cast<double>(total))));
  out.decision = decide_prune(out.search, ds.schema, PruneStrategy::TopK, k);

  // Fraction pruned among entries whose category occurs in the train split.
  std::vector<std::uint8_t> kept(total, 0);
  for (auto u : out.decision.kept) kept[u] = 1;
  std::size_t base = 0;
  for (const auto& f : ds.schema.fields) {
    std::vector<std::uint8_t> seen(f.vocab, 0);
    for (auto r : ds.splits.train) seen[ds.x(r, f.column)] = 1;
    std::size_t n = 0, pruned = 0;
    for (std::size_t v = 0; v < f.vocab; ++v) {
      if (!seen[v]) continue;
      for (std::size_t c = 0; c < f.dim; ++c) {
        ++n;
        pruned += !kept[base + v * f.dim + c];
      }
    }
    out.pruned_fraction_seen.push_back(
        n ? static_cast<double>(pruned) / static_cast<double>(n) : 0.0);
    base += f.vocab * f.dim;
  }
  out.retrain = run_retrain(cfg, ds, out.decision);
  return out;
}

AlphaTuneResult auto_tune_alpha(const SearchConfig& cfg, const Dataset& ds,
                                double start, double departure,
                                std::size_t max_doublings) {
  cfg.validate();
  require_splits(ds);
  AlphaTuneResult out;
  double alpha = start;
  for (std::size_t i = 0; i <= max_doublings; ++i, alpha *= 2.0) {
    SearchConfig c = cfg;
    c.alpha = alpha;
    Rng init = make_rng(c.seed, stream::kInit);
    auto params = init_backbone<float>(ds.schema, backbone_config(c), init);
    Trainer<float> tr(ds.schema, std::move(params),
                      GateSet<float>::create(ds.schema, c.gate_config()),
                      c.adam_config(), c.seed);
    const double init_mean = gate_stats(gate_values_f64(*tr.gates())).mean;
    double max_dep = 0.0;
    train_loop(tr, ds, c.batch_size, c.seed, 1, [&](Trainer<float>& t) {
      const double m = gate_stats(gate_values_f64(*t.gates())).mean;
      max_dep = std::max(max_dep, init_mean - m);
      return max_dep <= departure;
    });
    out.probes.emplace_back(alpha, max_dep);
    if (max_dep > departure) {
      out.alpha = alpha;
      return out;
    }
  }
  throw ConfigError("alpha auto-tune: mean gate never departed from init");
}

AlphaTuneResult budget_alpha(const SearchConfig& cfg, const Dataset& ds,
                             double keep_fraction, double start,
                             std::size_t max_doublings) {
  cfg.validate();
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw ConfigError("keep_fraction must lie in (0, 1]");
  if (!(start > 0.0)) throw ConfigError("budget alpha search needs start > 0");
  AlphaTuneResult out;
  double alpha = start;
  for (std::size_t i = 0; i <= max_doublings; ++i, alpha *= 2.0) {
    SearchConfig c = cfg;
    c.alpha = alpha;
    const auto r = run_search(c, ds).report;
    if (r.failed) throw NumericError(r.failure);
    out.probes.emplace_back(alpha, r.stats.frac_above);
    if (r.stats.frac_above <= keep_fraction) {
      out.alpha = alpha;
      return out;
    }
  }
  throw ConfigError("budget alpha: gates above 0.5 never fell to the budget");
}

}  // namespace shufflegate
