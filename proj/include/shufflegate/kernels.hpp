// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense inner loops used by the tape ops. Every kernel exists twice: a plain
// serial reference and an OpenMP version. The parallel versions split work
// over output elements only, so each output is accumulated in the same order
// as the serial loop and the two agree bit for bit at any thread count.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace shufflegate::kernels {

namespace serial {

// out[B x n] = a[B x m] * w[m x n]
template <typename T>
void matmul(std::span<const T> a, std::span<const T> w, std::span<T> out,
            std::size_t rows, std::size_t inner, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    T* o = out.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) o[j] = T(0);
    const T* ai = a.data() + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const T aik = ai[k];
      const T* wk = w.data() + k * cols;
      for (std::size_t j = 0; j < cols; ++j) o[j] += aik * wk[j];
    }
  }
}

// grad_a[B x m] += grad_out[B x n] * w^T
template <typename T>
void matmul_grad_input(std::span<const T> grad_out, std::span<const T> w,
                       std::span<T> grad_a, std::size_t rows,
                       std::size_t inner, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const T* gi = grad_out.data() + i * cols;
    T* ga = grad_a.data() + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const T* wk = w.data() + k * cols;
      T acc = T(0);
      for (std::size_t j = 0; j < cols; ++j) acc += gi[j] * wk[j];
      ga[k] += acc;
    }
  }
}

// grad_w[m x n] += a^T * grad_out
template <typename T>
void matmul_grad_weight(std::span<const T> a, std::span<const T> grad_out,
                        std::span<T> grad_w, std::size_t rows,
                        std::size_t inner, std::size_t cols) {
  for (std::size_t k = 0; k < inner; ++k) {
    T* gw = grad_w.data() + k * cols;
    for (std::size_t i = 0; i < rows; ++i) {
      const T aik = a[i * inner + k];
      const T* gi = grad_out.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) gw[j] += aik * gi[j];
    }
  }
}

// out[i, :] = table[index[i], :]
template <typename T>
void gather_rows(std::span<const T> table, std::span<const std::uint32_t> index,
                 std::span<T> out, std::size_t width) {
  for (std::size_t i = 0; i < index.size(); ++i) {
    const T* src = table.data() + static_cast<std::size_t>(index[i]) * width;
    T* dst = out.data() + i * width;
    for (std::size_t j = 0; j < width; ++j) dst[j] = src[j];
  }
}

// table_grad[index[i], :] += grad_out[i, :], repeated indices accumulate in
// batch order.
template <typename T>
void scatter_add_rows(std::span<const T> grad_out,
                      std::span<const std::uint32_t> index,
                      std::span<T> table_grad, std::size_t width) {
  for (std::size_t i = 0; i < index.size(); ++i) {
    T* dst = table_grad.data() + static_cast<std::size_t>(index[i]) * width;
    const T* src = grad_out.data() + i * width;
    for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
  }
}

// out[r, c] = in[perm[unit_of(c)][r], c] where unit u covers columns
// [unit_begin[u], unit_begin[u+1]). perms is units x rows, row-major.
template <typename T>
void permute_rows_by_unit(std::span<const T> in,
                          std::span<const std::uint32_t> perms,
                          std::span<const std::size_t> unit_begin,
                          std::span<T> out, std::size_t rows,
                          std::size_t cols) {
  const std::size_t units = unit_begin.size() - 1;
  for (std::size_t u = 0; u < units; ++u) {
    const std::uint32_t* p = perms.data() + u * rows;
    for (std::size_t r = 0; r < rows; ++r) {
      const T* src = in.data() + static_cast<std::size_t>(p[r]) * cols;
      T* dst = out.data() + r * cols;
      for (std::size_t c = unit_begin[u]; c < unit_begin[u + 1]; ++c)
        dst[c] = src[c];
    }
  }
}

}  // namespace serial

namespace omp {

template <typename T>
void matmul(std::span<const T> a, std::span<const T> w, std::span<T> out,
            std::size_t rows, std::size_t inner, std::size_t cols) {
  const T* const ap = a.data();
  const T* const wp = w.data();
  T* const op = out.data();
  const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static) firstprivate(ap, wp, op, inner, cols)
  for (std::int64_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    T* __restrict o = op + i * cols;
    for (std::size_t j = 0; j < cols; ++j) o[j] = T(0);
    const T* ai = ap + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const T aik = ai[k];
      const T* __restrict wk = wp + k * cols;
      for (std::size_t j = 0; j < cols; ++j) o[j] += aik * wk[j];
    }
  }
}

template <typename T>
void matmul_grad_input(std::span<const T> grad_out, std::span<const T> w,
                       std::span<T> grad_a, std::size_t rows,
                       std::size_t inner, std::size_t cols) {
  const T* const gp = grad_out.data();
  const T* const wp = w.data();
  T* const ap = grad_a.data();
  const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static) firstprivate(gp, wp, ap, inner, cols)
  for (std::int64_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const T* __restrict gi = gp + i * cols;
    T* __restrict ga = ap + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const T* __restrict wk = wp + k * cols;
      T acc = T(0);
      for (std::size_t j = 0; j < cols; ++j) acc += gi[j] * wk[j];
      ga[k] += acc;
    }
  }
}

template <typename T>
void matmul_grad_weight(std::span<const T> a, std::span<const T> grad_out,
                        std::span<T> grad_w, std::size_t rows,
                        std::size_t inner, std::size_t cols) {
  const T* const ap = a.data();
  const T* const gp = grad_out.data();
  T* const wp = grad_w.data();
  const auto n = static_cast<std::int64_t>(inner);
#pragma omp parallel for schedule(static) firstprivate(ap, gp, wp, rows, inner, cols)
  for (std::int64_t kk = 0; kk < n; ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    T* __restrict gw = wp + k * cols;
    for (std::size_t i = 0; i < rows; ++i) {
      const T aik = ap[i * inner + k];
      const T* __restrict gi = gp + i * cols;
      for (std::size_t j = 0; j < cols; ++j) gw[j] += aik * gi[j];
    }
  }
}

template <typename T>
void gather_rows(std::span<const T> table, std::span<const std::uint32_t> index,
                 std::span<T> out, std::size_t width) {
  const auto n = static_cast<std::int64_t>(index.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const T* src = table.data() + static_cast<std::size_t>(index[i]) * width;
    T* dst = out.data() + i * width;
    for (std::size_t j = 0; j < width; ++j) dst[j] = src[j];
  }
}

// Parallel over table columns: each destination element still sees the
// batch rows in order, so accumulation matches the serial kernel.
template <typename T>
void scatter_add_rows(std::span<const T> grad_out,
                      std::span<const std::uint32_t> index,
                      std::span<T> table_grad, std::size_t width) {
  const auto w = static_cast<std::int64_t>(width);
#pragma omp parallel for schedule(static)
  for (std::int64_t jj = 0; jj < w; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    for (std::size_t i = 0; i < index.size(); ++i)
      table_grad[static_cast<std::size_t>(index[i]) * width + j] +=
          grad_out[i * width + j];
  }
}

template <typename T>
void permute_rows_by_unit(std::span<const T> in,
                          std::span<const std::uint32_t> perms,
                          std::span<const std::size_t> unit_begin,
                          std::span<T> out, std::size_t rows,
                          std::size_t cols) {
  const auto units = static_cast<std::int64_t>(unit_begin.size() - 1);
#pragma omp parallel for schedule(static)
  for (std::int64_t uu = 0; uu < units; ++uu) {
    const auto u = static_cast<std::size_t>(uu);
    const std::uint32_t* p = perms.data() + u * rows;
    for (std::size_t r = 0; r < rows; ++r) {
      const T* src = in.data() + static_cast<std::size_t>(p[r]) * cols;
      T* dst = out.data() + r * cols;
      for (std::size_t c = unit_begin[u]; c < unit_begin[u + 1]; ++c)
        dst[c] = src[c];
    }
  }
}

}  // namespace omp

}  // namespace shufflegate::kernels
