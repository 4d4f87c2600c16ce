// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "shufflegate/backbone.hpp"
#include "shufflegate/error.hpp"
#include "shufflegate/gates.hpp"

using namespace shufflegate;
using TD = Tensor<double>;

namespace {

FieldSchema schema3() {
  FieldSchema s;
  s.fields = {{"a", 5, 4, 0}, {"b", 3, 4, 1}, {"c", 7, 2, 2}};
  return s;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST(GateValues, ZeroPhiIsHalf) {
  for (double tau : {0.5, 5.0, 40.0}) {
    Tape<double> tape;
    EXPECT_DOUBLE_EQ(gate_values(tape, TD::from({1}, {0.0}), tau).item(), 0.5);
  }
}

TEST(GateValues, InitialisationInvertsSigmoid) {
  const double phi = phi_for_gate(0.99, 5.0);
  EXPECT_NEAR(phi, std::log(99.0) / 5.0, 1e-15);
  EXPECT_NEAR(phi, 0.9190, 1e-4);
  Tape<double> tape;
  EXPECT_NEAR(gate_values(tape, TD::from({1}, {phi}), 5.0).item(), 0.99, 1e-15);
}

TEST(GateValues, MeanGradientMatchesFiniteDifference) {
  std::mt19937_64 rng(1);
  auto phi = sgtest::random_tensor(rng, {6});
  std::vector<TD> params{phi};
  EXPECT_LT(grad_check([&](Tape<double>& t) { return mean(t, gate_values(t, phi, 5.0)); }, params),
            1e-8);
}

TEST(ApplyGates, Endpoints) {
  std::mt19937_64 rng(2);
  auto z = sgtest::random_tensor(rng, {3, 2});
  auto zs = sgtest::random_tensor(rng, {3, 2});
  {
    Tape<double> tape;
    auto out = apply_gates(tape, z, zs, TD::scalar(1.0));
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(out.data()[i], z.data()[i]);
  }
  {
    Tape<double> tape;
    auto out = apply_gates(tape, z, zs, TD::scalar(0.0));
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(out.data()[i], zs.data()[i]);
    tape.backward(sum(tape, out));
    for (double g : z.grad()) EXPECT_EQ(g, 0.0);
  }
}

TEST(ApplyGates, HandArithmetic) {
  auto z = TD::from({1, 1}, {4.0}, true);
  auto zs = TD::from({1, 1}, {2.0}, true);
  auto g = TD::scalar(0.25, true);
  Tape<double> tape;
  auto out = apply_gates(tape, z, zs, g);
  EXPECT_DOUBLE_EQ(out.item(), 2.5);
  tape.backward(sum(tape, out));
  EXPECT_DOUBLE_EQ(g.grad()[0], 2.0);
  EXPECT_DOUBLE_EQ(z.grad()[0], 0.25);
  EXPECT_TRUE(!zs.has_grad() || zs.grad()[0] == 0.0);
}

TEST(ApplyGates, BroadcastMismatchThrows) {
  Tape<double> tape;
  EXPECT_THROW(apply_gates(tape, TD::zeros({2, 3}), TD::zeros({2, 3}), TD::zeros({2})),
               DimensionError);
}

TEST(EntryGateLookup, ValuesAndRowSelection) {
  Tape<double> tape;
  const std::vector<std::uint32_t> idx{1, 1, 0};
  auto half = entry_gate_lookup(tape, TD::zeros({3, 2}), idx, 5.0);
  for (double v : half.data()) EXPECT_EQ(v, 0.5);
  auto phi = TD::from({2, 2}, {0.1, -0.2, 0.3, 0.4});
  auto g = entry_gate_lookup(tape, phi, idx, 5.0);
  const std::vector<std::size_t> rows{1, 1, 0};
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 2; ++c)
      EXPECT_DOUBLE_EQ(g.at(r, c), sig(5.0 * phi.at(rows[r], c)));
  EXPECT_THROW(entry_gate_lookup(tape, phi, std::vector<std::uint32_t>{2}, 5.0), LookupError);
}

TEST(EntryGateLookup, GradientIsRowCountTimesSlope) {
  std::mt19937_64 rng(3);
  auto phi = sgtest::random_tensor(rng, {4, 3}, -0.5, 0.5);
  const std::vector<std::uint32_t> idx{2, 0, 2, 2, 3};
  Tape<double> tape;
  tape.backward(sum(tape, entry_gate_lookup(tape, phi, idx, 5.0)));
  const double counts[4] = {1, 0, 3, 1};
  for (std::size_t v = 0; v < 4; ++v)
    for (std::size_t c = 0; c < 3; ++c) {
      const double g = sig(5.0 * phi.at(v, c));
      EXPECT_NEAR(phi.grad()[v * 3 + c], counts[v] * 5.0 * g * (1 - g), 1e-14);
    }
  std::vector<TD> params{phi};
  EXPECT_LT(grad_check([&](Tape<double>& t) { return sum(t, entry_gate_lookup(t, phi, idx, 5.0)); },
                       params),
            1e-6);
}

TEST(GateSet, ShapesAndTotals) {
  const auto s = schema3();
  GateConfig c;
  c.granularity = Granularity::Field;
  EXPECT_EQ(GateSet<double>::create(s, c).total_gates(), 3u);
  c.granularity = Granularity::Dimension;
  EXPECT_EQ(GateSet<double>::create(s, c).total_gates(), 10u);
  c.chunk = 2;
  EXPECT_EQ(GateSet<double>::create(s, c).total_gates(), 5u);
  c.granularity = Granularity::Entry;
  EXPECT_EQ(GateSet<double>::create(s, c).total_gates(), 5u * 4 + 3u * 4 + 7u * 2);
  for (double v : GateSet<double>::create(s, c).values()) EXPECT_NEAR(v, 0.99, 1e-12);
}

TEST(GateSet, ParseGranularity) {
  EXPECT_EQ(parse_granularity("field"), Granularity::Field);
  EXPECT_EQ(parse_granularity("dim"), Granularity::Dimension);
  EXPECT_EQ(parse_granularity("entry"), Granularity::Entry);
  EXPECT_THROW(parse_granularity("row"), ConfigError);
}

TEST(SparsityPenalty, HandValues) {
  FieldSchema s;
  s.fields = {{"a", 2, 1, 0}, {"b", 2, 1, 1}};
  GateConfig c;
  c.alpha = 0.1;
  auto gs = GateSet<double>::create(s, c);
  Tape<double> tape;
  EXPECT_NEAR(sparsity_penalty(tape, gs, TD::from({2}, {1.0, 0.0})).item(), 0.05, 1e-15);
  gs.set_alpha(0.0);
  EXPECT_EQ(sparsity_penalty(tape, gs, TD::from({2}, {1.0, 0.0})).item(), 0.0);
}

// Total phi gradient = task gradient + alpha*tau*g(1-g)/|S| for every gate.
class GradientDecomposition : public ::testing::TestWithParam<Granularity> {};

TEST_P(GradientDecomposition, PenaltyTermIsClosedForm) {
  const auto schema = schema3();
  Rng init = make_rng(4, stream::kInit);
  auto params = init_backbone<double>(schema, BackboneConfig{{6}}, init);
  GateConfig c;
  c.granularity = GetParam();
  c.alpha = 0.37;
  auto gs = GateSet<double>::create(schema, c);
  {
    std::mt19937_64 r(5);
    for (auto& p : gs.phi())
      for (auto& v : p.data()) v = std::uniform_real_distribution<double>(-0.8, 0.8)(r);
  }
  IndexMatrix x{9, 3, {}};
  for (std::size_t i = 0; i < 9; ++i)
    x.data.insert(x.data.end(), {std::uint32_t(i % 5), std::uint32_t(i % 3), std::uint32_t(i % 7)});
  const std::vector<double> y{1, 0, 1, 1, 0, 0, 1, 0, 1};

  auto phi_grad = [&](double alpha) {
    gs.set_alpha(alpha);
    for (auto& p : gs.phi()) p.zero_grad();
    for (auto& p : params.all()) p.zero_grad();
    Rng rng = make_rng(6, stream::kShuffle);
    Tape<double> tape;
    auto fwd = forward(tape, params, schema, x, &gs, rng);
    auto loss = add(tape, bce_mean(tape, fwd.logits, std::span<const double>(y)),
                     sparsity_penalty(tape, gs, fwd.gates));
    tape.backward(loss);
    if (gs.granularity() == Granularity::Entry) add_entry_penalty_grad(gs);
    std::vector<double> out;
    for (auto& p : gs.phi())
      for (std::size_t i = 0; i < p.size(); ++i) out.push_back(p.has_grad() ? p.grad()[i] : 0.0);
    return out;
  };
  const auto on = phi_grad(0.37);
  const auto off = phi_grad(0.0);
  const auto g = gs.values();
  const double S = static_cast<double>(gs.total_gates());
  ASSERT_EQ(on.size(), g.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    EXPECT_NEAR(on[k] - off[k], 0.37 * 5.0 * g[k] * (1 - g[k]) / S, 1e-12) << "gate " << k;
}

INSTANTIATE_TEST_SUITE_P(AllGranularities, GradientDecomposition,
                         ::testing::Values(Granularity::Field, Granularity::Dimension,
                                           Granularity::Entry));

TEST(GateStats, Examples) {
  const std::vector<double> init(10, 0.99);
  auto s = gate_stats(init);
  EXPECT_NEAR(s.mean, 0.99, 1e-15);
  EXPECT_EQ(s.frac_below, 0.0);
  const std::vector<double> two{0.99, 0.001};
  s = gate_stats(two);
  EXPECT_EQ(s.frac_below, 0.5);
  EXPECT_NEAR(s.min_kept - s.max_pruned, 0.99 - 0.001, 1e-15);
}

TEST(GateToy, SignalPreservedWhenShuffleCostExceedsAlpha) {
  for (auto [dJ, alpha] : {std::pair{0.2, 0.1}, {0.15, 0.1}, {0.5, 0.01}}) {
    auto run = sgtest::gate_toy(dJ, alpha, 0.1, 5000);
    EXPECT_TRUE(run.reached) << dJ << " " << alpha;
    EXPECT_GT(run.gate, 0.99);
  }
}

TEST(GateToy, RedundantDrivenToZeroWhenAlphaExceedsShuffleCost) {
  for (auto [dJ, alpha] : {std::pair{0.05, 0.1}, {0.0, 0.1}, {0.1, 0.3}}) {
    auto run = sgtest::gate_toy(dJ, alpha, 0.1, 5000);
    EXPECT_TRUE(run.reached) << dJ << " " << alpha;
    EXPECT_LT(run.gate, 0.01);
  }
}

TEST(GateToy, NoiseFieldSuppressedInTraining) {
  // One field independent of the label: any alpha > 0 pushes its gate below
  // 0.05 within a bounded number of Adam steps.
  FieldSchema schema;
  schema.fields = {{"noise", 10, 4, 0}};
  Rng data = make_rng(7, stream::kSynthetic);
  Rng init = make_rng(7, stream::kInit);
  GateConfig c;
  c.alpha = 0.05;
  Trainer<float> tr(schema, init_backbone<float>(schema, BackboneConfig{{8}}, init),
                    GateSet<float>::create(schema, c), AdamConfig{}, 7);
  std::size_t step = 0;
  for (; step < 5000 && tr.gates()->values()[0] >= 0.05f; ++step) {
    IndexMatrix x{128, 1, std::vector<std::uint32_t>(128)};
    std::vector<float> y(128);
    for (std::size_t i = 0; i < 128; ++i) {
      x.data[i] = static_cast<std::uint32_t>(data() % 10);
      y[i] = static_cast<float>(data() & 1u);
    }
    tr.train_step(x, y);
  }
  EXPECT_LT(tr.gates()->values()[0], 0.05f);
  EXPECT_LT(step, 5000u);
}
