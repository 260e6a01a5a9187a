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

#include "apromfl/linalg.hpp"

namespace apromfl {

/// Probabilities floor used inside KL so that q_i = 0 never divides.
inline constexpr double kKlFloor = 1e-12;

/// Non-negative vector summing to one (within 1e-9).
class Distribution {
public:
    /// Validates and takes ownership; throws on negative entries or bad total.
    explicit Distribution(Vector probs);

    const Vector& probs() const noexcept { return probs_; }
    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t i) const noexcept { return probs_[i]; }

private:
    Vector probs_;
};

/// dot(a,b) / (|a| |b|). Throws on dimension mismatch or a zero-norm input.
double cosine_similarity(const Vector& a, const Vector& b);

/// Temperature softmax with max subtraction; tau must be positive.
Distribution softmax_temp(const Vector& v, double tau);

/// sum_i p_i ln(p_i / max(q_i, kKlFloor)), with 0 ln 0 = 0.
double kl_divergence(const Distribution& p, const Distribution& q);

/// Shannon entropy in nats.
double entropy(const Distribution& p);

}  // namespace apromfl
