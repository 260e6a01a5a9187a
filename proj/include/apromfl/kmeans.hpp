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
#include <span>
#include <vector>

#include "apromfl/linalg.hpp"
#include "apromfl/rng.hpp"

namespace apromfl {

struct KMeansResult {
    std::vector<std::size_t> assignments;
    std::vector<Vector> centroids;
    // Within-cluster SSE after initialization, then after every Lloyd
    // iteration (and after the final repair when the cap was hit).
    std::vector<double> sse_history;
    std::size_t iterations = 0;

    double sse() const { return sse_history.back(); }
};

inline constexpr std::size_t kDefaultKMeansIterations = 100;
inline constexpr std::size_t kDefaultKMeansRestarts = 10;

/// k-means++ seeding followed by Lloyd iterations until the assignment is a
/// fixpoint or `max_iters` is reached. Clusters that become empty are reseeded
/// with the point farthest from its own centroid, so every cluster in the
/// result has at least one member. Ties in nearest-centroid search go to the
/// lower cluster index. The whole procedure runs `restarts` times from the
/// same rng stream and the lowest-SSE run is returned (earliest on ties).
KMeansResult kmeans(std::span<const Vector> points, std::size_t k, SeededRng& rng,
                    std::size_t max_iters = kDefaultKMeansIterations,
                    std::size_t restarts = kDefaultKMeansRestarts);

double within_cluster_sse(std::span<const Vector> points, std::span<const std::size_t> assignments,
                          std::span<const Vector> centroids);

}  // namespace apromfl
