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

#include <atomic>
#include <cstdlib>
#include <string>

#include "apromfl/error.hpp"
#include "apromfl/kernels.hpp"

namespace apromfl::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(APROMFL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* initial_table() noexcept {
    Backend backend = best_backend();
    if (const char* env = std::getenv("APROMFL_SIMD"); env != nullptr) {
        try {
            const Backend requested = parse_backend(env);
            if (supported(requested)) {
                backend = requested;
            }
        } catch (const Error&) {
            // unknown name: keep the detected backend
        }
    }
    return &table(backend);
}

std::atomic<const KernelTable*>& current() noexcept {
    static std::atomic<const KernelTable*> selected{initial_table()};
    return selected;
}

}  // namespace

bool supported(Backend backend) noexcept {
    switch (backend) {
        case Backend::Scalar:
            return true;
        case Backend::Avx2:
            return cpu_has_avx2();
        case Backend::Neon:
#if defined(APROMFL_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Backend best_backend() noexcept {
    if (supported(Backend::Avx2)) {
        return Backend::Avx2;
    }
    if (supported(Backend::Neon)) {
        return Backend::Neon;
    }
    return Backend::Scalar;
}

const KernelTable& table(Backend backend) {
    if (!supported(backend)) {
        throw Error("kernel backend not supported on this build/CPU: " +
                    std::string(backend_name(backend)));
    }
    switch (backend) {
#if defined(APROMFL_HAVE_AVX2)
        case Backend::Avx2:
            return detail::avx2_table();
#endif
#if defined(APROMFL_HAVE_NEON)
        case Backend::Neon:
            return detail::neon_table();
#endif
        default:
            return scalar_table();
    }
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

void set_backend(Backend backend) { current().store(&table(backend), std::memory_order_release); }

std::string_view backend_name(Backend backend) noexcept {
    switch (backend) {
        case Backend::Scalar:
            return "scalar";
        case Backend::Avx2:
            return "avx2";
        case Backend::Neon:
            return "neon";
    }
    return "unknown";
}

Backend parse_backend(std::string_view name) {
    if (name == "scalar") {
        return Backend::Scalar;
    }
    if (name == "avx2") {
        return Backend::Avx2;
    }
    if (name == "neon") {
        return Backend::Neon;
    }
    if (name == "auto") {
        return best_backend();
    }
    throw Error("unknown kernel backend: " + std::string(name));
}

}  // namespace apromfl::kernels
