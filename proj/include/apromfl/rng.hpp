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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <utility>

namespace apromfl {

/// Reproducible random source.
///
/// Engine: std::mt19937_64 (its output sequence is fixed by the standard),
/// seeded through SplitMix64. All distributions are implemented here rather
/// than through <random> distribution classes, whose algorithms differ between
/// standard library vendors. Substreams are derived from (seed, task id) alone,
/// so they do not depend on how much of the parent stream was consumed.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }

    /// Independent stream for a parallel task or a named purpose.
    SeededRng substream(std::uint64_t task_id) const;

    std::uint64_t next_u64();

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();

    /// Uniform integer in [0, n); n must be positive.
    std::size_t uniform_index(std::size_t n);

    /// Standard normal via Box-Muller.
    double normal();

    /// Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
    double gamma(double shape);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = uniform_index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::optional<double> spare_normal_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace apromfl
