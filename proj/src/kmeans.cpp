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

#include "apromfl/kmeans.hpp"

#include <limits>

#include "apromfl/error.hpp"

namespace apromfl {
namespace {

std::vector<Vector> seed_plus_plus(std::span<const Vector> points, std::size_t k, SeededRng& rng) {
    const std::size_t n = points.size();
    std::vector<Vector> centers;
    centers.reserve(k);
    centers.push_back(points[rng.uniform_index(n)]);

    std::vector<double> nearest(n);
    for (std::size_t i = 0; i < n; ++i) {
        nearest[i] = squared_distance(points[i], centers.front());
    }
    while (centers.size() < k) {
        double total = 0.0;
        for (double d : nearest) {
            total += d;
        }
        std::size_t chosen = n - 1;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double running = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                running += nearest[i];
                if (target < running) {
                    chosen = i;
                    break;
                }
            }
        } else {
            // Every point coincides with a center already; repair handles it.
            chosen = rng.uniform_index(n);
        }
        centers.push_back(points[chosen]);
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(points[i], centers.back()));
        }
    }
    return centers;
}

std::vector<std::size_t> assign_nearest(std::span<const Vector> points,
                                        std::span<const Vector> centroids) {
    std::vector<std::size_t> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            const double d = squared_distance(points[i], centroids[c]);
            if (d < best) {
                best = d;
                out[i] = c;
            }
        }
    }
    return out;
}

// Moves the point farthest from its centroid (taken from a cluster with at
// least two members) into each empty cluster.
void repair_empty(std::span<const Vector> points, std::vector<std::size_t>& assignments,
                  std::vector<Vector>& centroids) {
    const std::size_t k = centroids.size();
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t a : assignments) {
        ++counts[a];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] != 0) {
            continue;
        }
        std::size_t far = points.size();
        double far_dist = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (counts[assignments[i]] < 2) {
                continue;
            }
            const double d = squared_distance(points[i], centroids[assignments[i]]);
            if (d > far_dist) {
                far_dist = d;
                far = i;
            }
        }
        --counts[assignments[far]];
        assignments[far] = c;
        counts[c] = 1;
        centroids[c] = points[far];
    }
}

std::vector<Vector> cluster_means(std::span<const Vector> points,
                                  std::span<const std::size_t> assignments, std::size_t k) {
    const std::size_t dim = points.front().size();
    std::vector<Vector> sums(k, Vector(dim));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        sums[assignments[i]] += points[i];
        ++counts[assignments[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        sums[c] *= 1.0 / static_cast<double>(counts[c]);
    }
    return sums;
}

}  // namespace

double within_cluster_sse(std::span<const Vector> points, std::span<const std::size_t> assignments,
                          std::span<const Vector> centroids) {
    double sse = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        sse += squared_distance(points[i], centroids[assignments[i]]);
    }
    return sse;
}

namespace {

KMeansResult lloyd_run(std::span<const Vector> points, std::size_t k, SeededRng& rng,
                       std::size_t max_iters) {
    KMeansResult result;
    result.centroids = seed_plus_plus(points, k, rng);
    result.assignments = assign_nearest(points, result.centroids);
    result.sse_history.push_back(within_cluster_sse(points, result.assignments, result.centroids));

    bool converged = false;
    while (result.iterations < max_iters) {
        repair_empty(points, result.assignments, result.centroids);
        result.centroids = cluster_means(points, result.assignments, k);
        std::vector<std::size_t> next = assign_nearest(points, result.centroids);
        result.sse_history.push_back(within_cluster_sse(points, next, result.centroids));
        ++result.iterations;
        converged = next == result.assignments;
        result.assignments = std::move(next);
        if (converged) {
            break;
        }
    }
    if (!converged) {
        repair_empty(points, result.assignments, result.centroids);
        result.centroids = cluster_means(points, result.assignments, k);
        result.sse_history.push_back(
            within_cluster_sse(points, result.assignments, result.centroids));
    }
    return result;
}

}  // namespace

KMeansResult kmeans(std::span<const Vector> points, std::size_t k, SeededRng& rng,
                    std::size_t max_iters, std::size_t restarts) {
    if (k == 0) {
        throw Error("kmeans: k must be at least 1");
    }
    if (points.size() < k) {
        throw Error("kmeans: fewer points than clusters");
    }
    const std::size_t dim = points.front().size();
    for (const Vector& p : points) {
        if (p.size() != dim) {
            throw DimensionError("kmeans: points differ in dimension");
        }
    }
    if (restarts == 0) {
        throw Error("kmeans: restarts must be at least 1");
    }
    // Best of several seeded runs; ties keep the earliest run.
    KMeansResult best = lloyd_run(points, k, rng, max_iters);
    for (std::size_t r = 1; r < restarts; ++r) {
        KMeansResult next = lloyd_run(points, k, rng, max_iters);
        if (next.sse() < best.sse()) {
            best = std::move(next);
        }
    }
    return best;
}

}  // namespace apromfl
