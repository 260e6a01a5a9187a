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

#include "apromfl/rng.hpp"

#include <cmath>
#include <numbers>

#include "apromfl/error.hpp"

namespace apromfl {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

SeededRng SeededRng::substream(std::uint64_t task_id) const {
    return SeededRng(splitmix64(seed_ ^ splitmix64(task_id + 0x632BE59BD9B4E019ULL)));
}

std::uint64_t SeededRng::next_u64() { return engine_(); }

double SeededRng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::size_t SeededRng::uniform_index(std::size_t n) {
    if (n == 0) {
        throw Error("SeededRng::uniform_index: n must be positive");
    }
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    // Reject the tail so every residue is equally likely.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t draw = next_u64();
    while (draw >= limit) {
        draw = next_u64();
    }
    return static_cast<std::size_t>(draw % bound);
}

double SeededRng::normal() {
    if (spare_normal_) {
        const double value = *spare_normal_;
        spare_normal_.reset();
        return value;
    }
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    return radius * std::cos(angle);
}

double SeededRng::gamma(double shape) {
    if (!(shape > 0.0) || !std::isfinite(shape)) {
        throw Error("SeededRng::gamma: shape must be positive and finite");
    }
    if (shape < 1.0) {
        // Gamma(a) = Gamma(a + 1) * U^(1/a)
        double u = uniform();
        while (u <= 0.0) {
            u = uniform();
        }
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) {
            return d * v;
        }
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
            return d * v;
        }
    }
}

}  // namespace apromfl
