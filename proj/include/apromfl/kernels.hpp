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

#pragma once

// Double-precision inner-loop kernels. Every kernel has a scalar reference
// implementation; AVX2 (x86-64) and NEON (aarch64) variants are selected at
// runtime and must agree with the reference up to summation reordering.

#include <cstddef>
#include <string_view>

namespace apromfl::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct KernelTable {
    Backend backend;

    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*squared_distance)(const double* a, const double* b, std::size_t n);

    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

    // y = W x + bias, W row-major rows x cols; bias may be null.
    void (*gemv)(const double* w, std::size_t rows, std::size_t cols, const double* x,
                 const double* bias, double* y);

    // out += W^T g
    void (*gemv_transposed_accumulate)(const double* w, std::size_t rows, std::size_t cols,
                                       const double* g, double* out);

    // W += g x^T
    void (*outer_accumulate)(double* w, std::size_t rows, std::size_t cols, const double* g,
                             const double* x);
};

const KernelTable& scalar_table() noexcept;

/// True when the variant was compiled in and the running CPU supports it.
bool supported(Backend backend) noexcept;

/// Table for a specific backend; throws apromfl::Error when unsupported.
const KernelTable& table(Backend backend);

/// Currently selected table. Chosen at startup from the best supported backend,
/// or from the APROMFL_SIMD environment variable (scalar|avx2|neon|auto).
const KernelTable& active() noexcept;

void set_backend(Backend backend);

std::string_view backend_name(Backend backend) noexcept;

/// Parses "scalar" / "avx2" / "neon"; "auto" picks the best supported.
Backend parse_backend(std::string_view name);

Backend best_backend() noexcept;

namespace detail {
#if defined(APROMFL_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(APROMFL_HAVE_NEON)
const KernelTable& neon_table() noexcept;
#endif
}  // namespace detail

}  // namespace apromfl::kernels
