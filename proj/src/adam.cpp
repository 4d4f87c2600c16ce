// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include "shufflegate/adam.hpp"

#include <cmath>

#include "shufflegate/error.hpp"

namespace shufflegate {

template <typename T>
std::size_t Adam<T>::add(Tensor<T> param) {
  const std::size_t n = param.size();
  slots_.push_back({std::move(param), std::vector<T>(n, T(0)),
                    std::vector<T>(n, T(0)), 0});
  return slots_.size() - 1;
}

template <typename T>
void Adam<T>::step(std::size_t slot, const std::vector<std::uint8_t>* mask) {
  auto& s = slots_.at(slot);
  auto values = s.param.data();
  if (mask && mask->size() != values.size())
    throw DimensionError("Adam: mask size does not match parameter");
  ++s.t;
  if (!s.param.has_grad()) {
    // Nothing reached this parameter: the gradient is zero but the moments
    // still decay.
    s.param.mutable_grad();
  }
  auto grad = s.param.grad();
  const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(cfg_.beta1, static_cast<double>(s.t)));
  const T c2 = static_cast<T>(1.0 - std::pow(cfg_.beta2, static_cast<double>(s.t)));
  const T lr = static_cast<T>(cfg_.lr), eps = static_cast<T>(cfg_.eps);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask && !(*mask)[i]) {
      values[i] = T(0);
      continue;
    }
    const T g = grad[i];
    s.m[i] = b1 * s.m[i] + (T(1) - b1) * g;
    s.v[i] = b2 * s.v[i] + (T(1) - b2) * g * g;
    const T mhat = s.m[i] / c1;
    const T vhat = s.v[i] / c2;
    values[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace shufflegate
