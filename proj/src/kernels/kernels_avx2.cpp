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

// Compiled with -mavx2 -mfma only; never called unless the CPU reports both.

#include <immintrin.h>

#include "apromfl/kernels.hpp"

namespace apromfl::kernels::detail {
namespace {

inline double horizontal_sum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    if (i + 4 <= n) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        i += 4;
    }
    double sum = horizontal_sum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    if (i + 4 <= n) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        i += 4;
    }
    double sum = horizontal_sum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
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

constexpr KernelTable kAvx2{
    Backend::Avx2, dot, squared_distance, axpy, gemv, gemv_transposed_accumulate,
    outer_accumulate,
};

}  // namespace

const KernelTable& avx2_table() noexcept { return kAvx2; }

}  // namespace apromfl::kernels::detail
