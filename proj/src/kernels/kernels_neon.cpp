// Copyright 2026 The apromfl-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <arm_neon.h>

#include "apromfl/kernels.hpp"

namespace apromfl::kernels::detail {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        const float64x2_t d1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
        acc0 = vfmaq_f64(acc0, d0, d0);
        acc1 = vfmaq_f64(acc1, d1, d1);
    }
    double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

void gemv(const double* w, std::size_t rows, std::size_t cols, const double* x,
          const double* bias, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double sum = dot(w + r * cols, x, cols);
        y[r] = bias != nullptr ? sum + bias[r] : sum;
    }
}

void gemv_transposed_accumulate(const double* w, std::size_t rows, std::size_t cols,
                                const double* g, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        axpy(g[r], w + r * cols, out, cols);
    }
}

void outer_accumulate(double* w, std::size_t rows, std::size_t cols, const double* g,
                      const double* x) {
    for (std::size_t r = 0; r < rows; ++r) {
        axpy(g[r], x, w + r * cols, cols);
    }
}

constexpr KernelTable kNeon{
    Backend::Neon, dot, squared_distance, axpy, gemv, gemv_transposed_accumulate,
    outer_accumulate,
};

}  // namespace

const KernelTable& neon_table() noexcept { return kNeon; }

}  // namespace apromfl::kernels::detail
