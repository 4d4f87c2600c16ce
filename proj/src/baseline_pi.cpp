// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include "shufflegate/baseline_pi.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "shufflegate/error.hpp"
#include "shufflegate/metrics.hpp"
#include "shufflegate/random.hpp"

namespace shufflegate {

PiReport permutation_importance(const Trainer<float>& trainer, const Dataset& ds,
                                SplitName which, std::size_t repeats,
                                std::uint64_t seed, std::size_t batch_size) {
  if (trainer.gates()) throw ContractError("permutation importance needs a gate-free model");
  if (repeats == 0) throw ConfigError("repeats must be >= 1");
  const auto x = split_rows(ds, which);
  const auto y = split_labels(ds, which);
  if (x.rows == 0) throw ContractError("permutation importance on an empty split");
  const auto t0 = std::chrono::steady_clock::now();

  const auto& schema = trainer.schema();
  const std::size_t nf = schema.size();
  PiReport rep;
  rep.repeats = repeats;
  rep.importance.assign(nf, 0.0);

  // One clean pass per repeat; without gates they all agree.
  std::size_t passes = 0;
  double base = 0.0;
  for (std::size_t r = 0; r < repeats; ++r) {
    Rng unused = make_rng(seed, stream::kEval);
    base = auc(trainer.predict(x, unused, batch_size), y);
    ++passes;
  }
  rep.base_auc = base;

  const auto jobs = static_cast<std::int64_t>(nf * repeats);
  std::vector<double> drops(nf * repeats, 0.0);
#pragma omp parallel for schedule(dynamic) reduction(+ : passes)
  for (std::int64_t j = 0; j < jobs; ++j) {
    const auto f = static_cast<std::size_t>(j) / repeats;
    const auto r = static_cast<std::size_t>(j) % repeats;
    Rng rng = make_rng(seed * 1000003ull + static_cast<std::uint64_t>(j),
                       stream::kPermutationImportance);
    IndexMatrix xs = x;
    const std::size_t col = schema.fields[f].column;
    std::vector<std::uint32_t> values(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) values[i] = x(i, col);
    std::shuffle(values.begin(), values.end(), rng);
    for (std::size_t i = 0; i < x.rows; ++i) xs(i, col) = values[i];
    Rng local = make_rng(seed, stream::kEval);
    drops[f * repeats + r] = base - auc(trainer.predict(xs, local, batch_size), y);
    ++passes;
  }
  for (std::size_t f = 0; f < nf; ++f) {
    double s = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) s += drops[f * repeats + r];
    rep.importance[f] = s / static_cast<double>(repeats);
  }
  rep.n_eval_passes = passes;
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

double rank_agreement(const PiReport& pi, std::span<const double> gates) {
  if (pi.importance.size() != gates.size())
    throw DimensionError("rank_agreement: field sets differ");
  const auto a = ranking_desc(pi.importance);
  const auto b = ranking_desc(gates);
  return kendall_tau(a, b);
}

}  // namespace shufflegate
