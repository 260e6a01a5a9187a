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

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "apromfl/error.hpp"
#include "apromfl/linalg.hpp"
#include "apromfl/numerics.hpp"
#include "apromfl/rng.hpp"
#include "oracles.hpp"

using namespace apromfl;

TEST_CASE("vector construction rejects non-finite values") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(Vector(std::vector<double>{1.0, nan}), NumericalError);
    CHECK_THROWS_AS(Vector(std::vector<double>{inf}), NumericalError);
    CHECK_THROWS_AS(Vector(3, nan), NumericalError);
    CHECK_NOTHROW(Vector(std::vector<double>{0.0, -1.0}));
}

TEST_CASE("linalg basics") {
    const Vector a{1.0, 2.0, 3.0};
    const Vector b{4.0, -5.0, 6.0};
    CHECK(dot(a, b) == 12.0);
    CHECK(squared_norm(a) == 14.0);
    CHECK(squared_distance(a, b) == 9.0 + 49.0 + 9.0);
    Vector y = b;
    axpy(2.0, a, y);
    CHECK(y == Vector{6.0, -1.0, 12.0});
    CHECK_THROWS_AS(dot(a, Vector{1.0}), DimensionError);

    const Matrix m(2, 3, {1, 0, 2, 0, 1, -1});
    CHECK(m.multiply(a) == Vector{7.0, -1.0});
    CHECK(m.multiply(a, Vector{1.0, 1.0}) == Vector{8.0, 0.0});
    const std::vector<Vector> pts{Vector{0.0, 2.0}, Vector{2.0, 4.0}};
    CHECK(mean_of(pts) == Vector{1.0, 3.0});
    CHECK_THROWS(mean_of(std::span<const Vector>{}));
}

TEST_CASE("cosine similarity examples") {
    CHECK(cosine_similarity(Vector{1, 0}, Vector{0, 1}) == doctest::Approx(0.0));
    CHECK(cosine_similarity(Vector{1, 1}, Vector{2, 2}) == doctest::Approx(1.0));
    CHECK(cosine_similarity(Vector{1, 0}, Vector{-3, 0}) == doctest::Approx(-1.0));
    CHECK_THROWS(cosine_similarity(Vector{0, 0}, Vector{1, 0}));
    CHECK_THROWS_AS(cosine_similarity(Vector{1, 0}, Vector{1, 0, 0}), DimensionError);
}

TEST_CASE("cosine similarity properties") {
    SeededRng rng(7);
    for (int t = 0; t < 200; ++t) {
        const std::size_t d = 1 + rng.uniform_index(12);
        const Vector a = oracle::random_vector(d, rng);
        const Vector b = oracle::random_vector(d, rng);
        const double c = cosine_similarity(a, b);
        CHECK(c >= -1.0);
        CHECK(c <= 1.0);
        CHECK(c == cosine_similarity(b, a));
        CHECK(cosine_similarity(a, a) == 1.0);
        CHECK(std::abs(c - oracle::cosine(a, b)) < 1e-12);
        // Scale invariance.
        const double s = 0.01 + 100.0 * rng.uniform();
        CHECK(cosine_similarity(s * a, b) == doctest::Approx(c).epsilon(1e-12));
    }
}

TEST_CASE("softmax examples") {
    const Distribution u = softmax_temp(Vector{3.0, 3.0, 3.0, 3.0}, 0.7);
    for (double p : u.probs()) {
        CHECK(p == doctest::Approx(0.25));
    }
    const Distribution d = softmax_temp(Vector{0.0, std::log(3.0)}, 1.0);
    CHECK(d[0] == doctest::Approx(0.25));
    CHECK(d[1] == doctest::Approx(0.75));
    // Very low temperature concentrates on the maximum without overflow.
    const Distribution sharp = softmax_temp(Vector{1.0, 2.0, 1000.0}, 1e-3);
    CHECK(sharp[2] == doctest::Approx(1.0));
    CHECK_THROWS(softmax_temp(Vector{1.0}, 0.0));
    CHECK_THROWS(softmax_temp(Vector{}, 1.0));
}

TEST_CASE("softmax properties") {
    SeededRng rng(11);
    for (int t = 0; t < 200; ++t) {
        const std::size_t d = 1 + rng.uniform_index(10);
        const Vector v = oracle::random_vector(d, rng, 5.0);
        const double tau = 0.05 + 3.0 * rng.uniform();
        const Distribution p = softmax_temp(v, tau);
        const double total = std::accumulate(p.probs().begin(), p.probs().end(), 0.0);
        CHECK(std::abs(total - 1.0) < 1e-12);
        // Shift invariance.
        Vector shifted = v;
        for (double& x : shifted) {
            x += 17.0;
        }
        const Distribution ps = softmax_temp(shifted, tau);
        for (std::size_t i = 0; i < d; ++i) {
            CHECK(p[i] > 0.0);
            CHECK(std::abs(p[i] - ps[i]) < 1e-12);
            for (std::size_t j = 0; j < d; ++j) {
                if (v[i] > v[j]) {
                    CHECK(p[i] >= p[j]);
                }
            }
        }
    }
}

TEST_CASE("distribution validation") {
    CHECK_THROWS(Distribution(Vector{0.5, 0.6}));
    CHECK_THROWS(Distribution(Vector{1.5, -0.5}));
    CHECK_THROWS(Distribution(Vector{}));
    CHECK_NOTHROW(Distribution(Vector{0.25, 0.75}));
}

TEST_CASE("kl divergence examples") {
    const Distribution p(Vector{0.5, 0.5});
    const Distribution q(Vector{0.25, 0.75});
    CHECK(kl_divergence(p, p) == 0.0);
    const double expected = 0.5 * std::log(0.5 / 0.25) + 0.5 * std::log(0.5 / 0.75);
    CHECK(kl_divergence(p, q) == doctest::Approx(expected).epsilon(1e-14));
    // Zero-probability entries of p contribute nothing; zeros in q are floored.
    const Distribution one(Vector{1.0, 0.0});
    const Distribution other(Vector{0.0, 1.0});
    CHECK(kl_divergence(one, other) == doctest::Approx(-std::log(kKlFloor)));
    CHECK(std::isfinite(kl_divergence(one, other)));
    CHECK_THROWS_AS(kl_divergence(p, Distribution(Vector{1.0})), DimensionError);
}

TEST_CASE("kl divergence properties") {
    SeededRng rng(13);
    for (int t = 0; t < 300; ++t) {
        const std::size_t d = 1 + rng.uniform_index(8);
        const Distribution p = softmax_temp(oracle::random_vector(d, rng, 3.0), 1.0);
        const Distribution q = softmax_temp(oracle::random_vector(d, rng, 3.0), 1.0);
        CHECK(kl_divergence(p, q) >= 0.0);
        CHECK(kl_divergence(p, p) == doctest::Approx(0.0));
    }
}

TEST_CASE("entropy") {
    CHECK(entropy(Distribution(Vector{1.0, 0.0})) == 0.0);
    CHECK(entropy(Distribution(Vector{0.25, 0.25, 0.25, 0.25})) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("rng is deterministic and substreams are independent of draw order") {
    SeededRng a(42);
    SeededRng b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    SeededRng fresh(42);
    const SeededRng s1 = fresh.substream(5);
    fresh.next_u64();
    fresh.normal();
    SeededRng s2 = fresh.substream(5);
    SeededRng s1c = s1;
    CHECK(s1c.next_u64() == s2.next_u64());
    SeededRng other = SeededRng(42).substream(6);
    SeededRng again = SeededRng(42).substream(5);
    CHECK(other.next_u64() != again.next_u64());
    CHECK(SeededRng(1).next_u64() != SeededRng(2).next_u64());
}

TEST_CASE("rng distributions") {
    SeededRng rng(3);
    const int n = 200000;
    double sum = 0.0;
    double sum_sq = 0.0;
    double usum = 0.0;
    double gsum = 0.0;
    double small_gsum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sum_sq += z * z;
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        usum += u;
        gsum += rng.gamma(2.5);
        const double g = rng.gamma(0.1);
        CHECK(g >= 0.0);
        small_gsum += g;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sum_sq / n - 1.0) < 0.02);
    CHECK(std::abs(usum / n - 0.5) < 0.005);
    CHECK(std::abs(gsum / n - 2.5) < 0.03);
    CHECK(std::abs(small_gsum / n - 0.1) < 0.01);
    CHECK_THROWS(rng.gamma(0.0));
    CHECK_THROWS(rng.uniform_index(0));
}

TEST_CASE("shuffle is a permutation") {
    SeededRng rng(9);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    rng.shuffle(std::span<int>(v));
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) {
        CHECK(sorted[static_cast<std::size_t>(i)] == i);
    }
    CHECK(!std::is_sorted(v.begin(), v.end()));
}
