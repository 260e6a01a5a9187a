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


#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "apromfl/error.hpp"
#include "apromfl/kmeans.hpp"
#include "oracles.hpp"

using namespace apromfl;

namespace {

std::vector<Vector> blobs(std::size_t per, std::size_t k, double spread, SeededRng& rng) {
    std::vector<Vector> pts;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < per; ++i) {
            pts.push_back(Vector{10.0 * static_cast<double>(c) + spread * rng.normal(),
                                 spread * rng.normal()});
        }
    }
    return pts;
}

}  // namespace

TEST_CASE("kmeans recovers well separated clusters") {
    SeededRng rng(1);
    const auto pts = blobs(4, 3, 0.1, rng);
    SeededRng krng(2);
    const KMeansResult r = kmeans(pts, 3, krng);
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t i = 1; i < 4; ++i) {
            CHECK(r.assignments[c * 4 + i] == r.assignments[c * 4]);
        }
    }
    CHECK(r.assignments[0] != r.assignments[4]);
    CHECK(r.assignments[4] != r.assignments[8]);
    CHECK(r.sse() == doctest::Approx(oracle::exhaustive_kmeans_sse(pts, 3)).epsilon(1e-12));
}

TEST_CASE("kmeans edge cases") {
    SeededRng rng(3);
    const std::vector<Vector> pts{Vector{0.0}, Vector{1.0}, Vector{5.0}};
    SUBCASE("k equals n gives zero SSE") {
        const KMeansResult r = kmeans(pts, 3, rng);
        CHECK(r.sse() == 0.0);
    }
    SUBCASE("k of one gives the mean") {
        const KMeansResult r = kmeans(pts, 1, rng);
        CHECK(r.centroids[0][0] == doctest::Approx(2.0));
    }
    SUBCASE("identical points never leave an empty cluster") {
        const std::vector<Vector> same(5, Vector{1.0, 1.0});
        const KMeansResult r = kmeans(same, 3, rng);
        std::vector<int> counts(3, 0);
        for (std::size_t a : r.assignments) {
            ++counts[a];
        }
        for (int c : counts) {
            CHECK(c > 0);
        }
        CHECK(r.sse() == 0.0);
    }
    CHECK_THROWS(kmeans(pts, 0, rng));
    CHECK_THROWS(kmeans(pts, 4, rng));
    const std::vector<Vector> ragged{Vector{0.0}, Vector{1.0, 2.0}};
    CHECK_THROWS_AS(kmeans(ragged, 1, rng), DimensionError);
}

TEST_CASE("restarts never do worse than a single run") {
    SeededRng data(6);
    for (int t = 0; t < 30; ++t) {
        const auto pts = oracle::random_vectors(12, 2, data);
        SeededRng a(static_cast<std::uint64_t>(t));
        SeededRng b(static_cast<std::uint64_t>(t));
        // The first restart consumes the same draws as a single run.
        const KMeansResult single = kmeans(pts, 3, a, kDefaultKMeansIterations, 1);
        const KMeansResult many = kmeans(pts, 3, b, kDefaultKMeansIterations, 8);
        CHECK(many.sse() <= single.sse());
    }
    SeededRng rng(1);
    const std::vector<Vector> pts{Vector{0.0}, Vector{1.0}};
    CHECK_THROWS(kmeans(pts, 1, rng, 10, 0));
}

TEST_CASE("kmeans is deterministic for a seed") {
    SeededRng data(5);
    const auto pts = oracle::random_vectors(40, 3, data);
    SeededRng a(9);
    SeededRng b(9);
    const KMeansResult ra = kmeans(pts, 4, a);
    const KMeansResult rb = kmeans(pts, 4, b);
    CHECK(ra.assignments == rb.assignments);
    CHECK(ra.sse_history == rb.sse_history);
}

TEST_CASE("kmeans properties on random instances") {
    SeededRng rng(17);
    int optimal = 0;
    const int trials = 120;
    for (int t = 0; t < trials; ++t) {
        const std::size_t n = 4 + rng.uniform_index(5);
        const std::size_t k = 1 + rng.uniform_index(3);
        const std::size_t d = 1 + rng.uniform_index(3);
        const auto pts = oracle::random_vectors(n, d, rng);
        SeededRng krng = rng.substream(static_cast<std::uint64_t>(t));
        const KMeansResult r = kmeans(pts, k, krng);
        // SSE never increases across iterations.
        for (std::size_t i = 1; i < r.sse_history.size(); ++i) {
            CHECK(r.sse_history[i] <= r.sse_history[i - 1] + 1e-12);
        }
        // Reported SSE matches an independent evaluation of the partition.
        CHECK(std::abs(r.sse() - oracle::partition_sse(pts, r.assignments)) < 1e-9);
        std::vector<int> counts(k, 0);
        for (std::size_t a : r.assignments) {
            ++counts[a];
        }
        CHECK(std::count(counts.begin(), counts.end(), 0) == 0);
        const double best = oracle::exhaustive_kmeans_sse(pts, k);
        CHECK(r.sse() >= best - 1e-9);
        if (r.sse() <= best + 1e-9) {
            ++optimal;
        }
    }
    MESSAGE("optimal in " << optimal << " of " << trials);
    CHECK(optimal >= trials * 95 / 100);
}
