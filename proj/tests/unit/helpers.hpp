// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <vector>

#include "shufflegate/data.hpp"
#include "shufflegate/diffcore.hpp"

namespace sgtest {

inline shufflegate::Tensor<double> random_tensor(std::mt19937_64& rng,
                                                 shufflegate::Shape shape,
                                                 double lo = -1.0, double hi = 1.0,
                                                 bool requires_grad = true) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(shufflegate::shape_size(shape));
  for (auto& x : v) x = u(rng);
  return shufflegate::Tensor<double>::from(std::move(shape), std::move(v), requires_grad);
}

// Small synthetic dataset that trains in well under a second.
inline shufflegate::Dataset small_synthetic(std::uint64_t seed, std::size_t n = 4000,
                                            std::size_t vocab = 12) {
  shufflegate::SyntheticSpec spec;
  spec.n_informative = 2;
  spec.n_redundant = 1;
  spec.n_noise = 2;
  spec.vocab = vocab;
  spec.n_samples = n;
  spec.seed = seed;
  spec.emb_dim = 4;
  auto ds = shufflegate::generate_synthetic(spec);
  shufflegate::split(ds, seed);
  return ds;
}

}  // namespace sgtest

#include "shufflegate/gates.hpp"

namespace sgtest {

struct ToyRun {
  double gate = 0.0;
  std::size_t steps = 0;  // steps taken before reaching the target side
  bool reached = false;
};

// Gradient descent on J(g) + alpha*g with J(g) = J1 + dJ*(1-g) and
// g = sigmoid(tau*phi), differentiated through the library's gate ops.
// Stops once g < low or g > high.
inline ToyRun gate_toy(double dJ, double alpha, double lr, std::size_t max_steps,
                          double low = 0.01, double high = 0.99, double tau = 5.0,
                          double init_gate = 0.5) {
  using namespace shufflegate;
  auto phi = Tensor<double>::from({1}, {phi_for_gate(init_gate, tau)}, true);
  const double J1 = 0.3;
  ToyRun run;
  for (std::size_t s = 0; s <= max_steps; ++s) {
    Tape<double> tape;
    auto g = gate_values(tape, phi, tau);
    run.gate = g.item();
    run.steps = s;
    if (run.gate < low || run.gate > high) {
      run.reached = true;
      return run;
    }
    // J1 + dJ*(1-g) + alpha*g
    auto loss = affine(tape, sum(tape, g), alpha - dJ, J1 + dJ);
    phi.zero_grad();
    tape.backward(loss);
    phi.data()[0] -= lr * phi.grad()[0];
  }
  return run;
}

}  // namespace sgtest
