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
#include <utility>
#include <vector>

#include "apromfl/losses.hpp"
#include "apromfl/prototype_types.hpp"
#include "apromfl/rng.hpp"

namespace apromfl {

/// One prototype per class present in `labels`: the mean embedding of that
/// class, in increasing class order.
std::vector<UnimodalPrototype> label_guided_prototypes(std::span<const Vector> embs,
                                                       std::span<const std::size_t> labels,
                                                       Modality modality = Modality::Image,
                                                       std::size_t client_id = 0);

/// Elementwise mean of an image and a text embedding.
Vector fuse(const Vector& e_img, const Vector& e_txt);

struct LocalPairs {
    std::vector<PrototypePair> pairs;
    ClusterAssignment clusters;
};

/// k-means on fused embeddings; each cluster contributes the pair
/// (mean image embedding, mean text embedding) of its members.
LocalPairs clustering_prototype_pairs(std::span<const Vector> img_embs,
                                      std::span<const Vector> txt_embs, std::size_t k,
                                      SeededRng& rng);

/// Similarity weights of the top-O candidates: negatives clamped to zero,
/// normalized to sum one, uniform when the clamped sum is below 1e-12.
struct CompletionWeights {
    std::vector<std::size_t> selected;  // pair indices, best first
    std::vector<double> similarities;
    std::vector<double> weights;
};

CompletionWeights completion_weights(const UnimodalPrototype& uni,
                                     std::span<const PrototypePair> mm_pairs, std::size_t top_o);

/// Fills in the missing modality of a unimodal prototype as the weighted sum
/// of the paired prototypes of its top-O most similar multimodal pairs.
PrototypePair semantic_complete(const UnimodalPrototype& uni, std::span<const PrototypePair> mm_pairs,
                                std::size_t top_o);

/// Clusters fused pair representations into exactly K global pairs.
GlobalPrototypeSet build_global_prototypes(std::span<const PrototypePair> all_pairs, std::size_t k,
                                           SeededRng& rng);

}  // namespace apromfl
