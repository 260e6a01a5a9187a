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

#include "apromfl/kernels.hpp"

namespace apromfl::kernels {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

void gemv(const double* w, std::size_t rows, std::size_t cols, const double* x,
          const double* bias, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = w + r * cols;
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            sum += row[c] * x[c];
        }
        y[r] = bias != nullptr ? sum + bias[r] : sum;
    }
}

void gemv_transposed_accumulate(const double* w, std::size_t rows, std::size_t cols,
                                const double* g, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = w + r * cols;
        const double gr = g[r];
        for (std::size_t c = 0; c < cols; ++c) {
            out[c] += row[c] * gr;
        }
    }
}

void outer_accumulate(double* w, std::size_t rows, std::size_t cols, const double* g,
                      const double* x) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = w + r * cols;
        const double gr = g[r];
        for (std::size_t c = 0; c < cols; ++c) {
            row[c] += gr * x[c];
        }
    }
}

constexpr KernelTable kScalar{
    Backend::Scalar, dot, squared_distance, axpy, gemv, gemv_transposed_accumulate,
    outer_accumulate,
};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace apromfl::kernels
