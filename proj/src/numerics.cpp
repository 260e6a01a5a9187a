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

#include "apromfl/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "apromfl/error.hpp"

namespace apromfl {

Distribution::Distribution(Vector probs) : probs_(std::move(probs)) {
    if (probs_.empty()) {
        throw Error("Distribution: empty");
    }
    probs_.require_finite("Distribution");
    double total = 0.0;
    for (double p : probs_) {
        if (p < 0.0) {
            throw Error("Distribution: negative probability");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw Error("Distribution: probabilities do not sum to one");
    }
}

double cosine_similarity(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw DimensionError("cosine_similarity: dimension mismatch");
    }
    const double na2 = squared_norm(a);
    const double nb2 = squared_norm(b);
    if (na2 == 0.0 || nb2 == 0.0) {
        throw Error("cosine_similarity: zero-norm input");
    }
    // sqrt of the product keeps cos(a, a) exactly 1.
    double denom = std::sqrt(na2 * nb2);
    if (!std::isfinite(denom) || denom == 0.0) {
        denom = std::sqrt(na2) * std::sqrt(nb2);
    }
    return std::clamp(dot(a, b) / denom, -1.0, 1.0);
}

Distribution softmax_temp(const Vector& v, double tau) {
    if (!(tau > 0.0)) {
        throw Error("softmax_temp: tau must be positive");
    }
    if (v.empty()) {
        throw Error("softmax_temp: empty input");
    }
    const double peak = *std::max_element(v.begin(), v.end());
    Vector out(v.size());
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp((v[i] - peak) / tau);
        total += out[i];
    }
    out *= 1.0 / total;
    return Distribution(std::move(out));
}

double kl_divergence(const Distribution& p, const Distribution& q) {
    if (p.size() != q.size()) {
        throw DimensionError("kl_divergence: dimension mismatch");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = p[i];
        if (pi > 0.0) {
            sum += pi * std::log(pi / std::max(q[i], kKlFloor));
        }
    }
    // Rounding can leave a tiny negative residue for p == q.
    return std::max(sum, 0.0);
}

double entropy(const Distribution& p) {
    double h = 0.0;
    for (double pi : p.probs()) {
        if (pi > 0.0) {
            h -= pi * std::log(pi);
        }
    }
    return h;
}

}  // namespace apromfl
