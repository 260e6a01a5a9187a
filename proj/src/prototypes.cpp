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

#include "apromfl/prototypes.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "apromfl/error.hpp"
#include "apromfl/kmeans.hpp"
#include "apromfl/numerics.hpp"

namespace apromfl {
namespace {

// Per-cluster mean of image and text vectors.
std::vector<PrototypePair> cluster_pair_means(std::span<const Vector> img,
                                              std::span<const Vector> txt,
                                              std::span<const std::size_t> assignments,
                                              std::size_t k, PairOrigin origin) {
    std::vector<Vector> img_sum(k, Vector(img.front().size()));
    std::vector<Vector> txt_sum(k, Vector(txt.front().size()));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        img_sum[assignments[i]] += img[i];
        txt_sum[assignments[i]] += txt[i];
        ++counts[assignments[i]];
    }
    std::vector<PrototypePair> pairs;
    pairs.reserve(k);
    for (std::size_t c = 0; c < k; ++c) {
        const double inv = 1.0 / static_cast<double>(counts[c]);
        pairs.push_back({inv * img_sum[c], inv * txt_sum[c], origin});
    }
    return pairs;
}

}  // namespace

std::vector<UnimodalPrototype> label_guided_prototypes(std::span<const Vector> embs,
                                                       std::span<const std::size_t> labels,
                                                       Modality modality, std::size_t client_id) {
    if (embs.empty()) {
        throw Error("label_guided_prototypes: empty input");
    }
    if (embs.size() != labels.size()) {
        throw DimensionError("label_guided_prototypes: embeddings and labels differ in length");
    }
    std::map<std::size_t, std::pair<Vector, std::size_t>> groups;
    for (std::size_t i = 0; i < embs.size(); ++i) {
        auto [it, inserted] = groups.try_emplace(labels[i], Vector(embs[i].size()), 0);
        it->second.first += embs[i];
        ++it->second.second;
    }
    std::vector<UnimodalPrototype> out;
    out.reserve(groups.size());
    for (auto& [label, group] : groups) {
        Vector mean = std::move(group.first);
        mean *= 1.0 / static_cast<double>(group.second);
        out.push_back({modality, std::move(mean), label, client_id});
    }
    return out;
}

Vector fuse(const Vector& e_img, const Vector& e_txt) {
    if (e_img.size() != e_txt.size()) {
        throw DimensionError("fuse: dimension mismatch");
    }
    Vector out = e_img + e_txt;
    out *= 0.5;
    return out;
}

LocalPairs clustering_prototype_pairs(std::span<const Vector> img_embs,
                                      std::span<const Vector> txt_embs, std::size_t k,
                                      SeededRng& rng) {
    if (img_embs.size() != txt_embs.size()) {
        throw DimensionError("clustering_prototype_pairs: image and text counts differ");
    }
    std::vector<Vector> fused;
    fused.reserve(img_embs.size());
    for (std::size_t i = 0; i < img_embs.size(); ++i) {
        fused.push_back(fuse(img_embs[i], txt_embs[i]));
    }
    const KMeansResult km = kmeans(fused, k, rng);
    LocalPairs out;
    out.pairs = cluster_pair_means(img_embs, txt_embs, km.assignments, k,
                                   PairOrigin::MultimodalClient);
    out.clusters = ClusterAssignment::from_labels(km.assignments);
    return out;
}

CompletionWeights completion_weights(const UnimodalPrototype& uni,
                                     std::span<const PrototypePair> mm_pairs, std::size_t top_o) {
    if (top_o == 0) {
        throw Error("semantic_complete: O must be at least 1");
    }
    if (top_o > mm_pairs.size()) {
        throw Error("semantic_complete: O = " + std::to_string(top_o) + " exceeds the " +
                    std::to_string(mm_pairs.size()) + " available multimodal pairs");
    }
    const bool image_side = uni.modality == Modality::Image;
    std::vector<double> sims(mm_pairs.size());
    for (std::size_t p = 0; p < mm_pairs.size(); ++p) {
        sims[p] = cosine_similarity(uni.vector,
                                    image_side ? mm_pairs[p].image_vec : mm_pairs[p].text_vec);
    }
    std::vector<std::size_t> order(mm_pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });

    CompletionWeights out;
    out.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_o));
    double total = 0.0;
    for (std::size_t idx : out.selected) {
        out.similarities.push_back(sims[idx]);
        const double w = std::max(sims[idx], 0.0);
        out.weights.push_back(w);
        total += w;
    }
    if (total < 1e-12) {
        std::fill(out.weights.begin(), out.weights.end(), 1.0 / static_cast<double>(top_o));
    } else {
        for (double& w : out.weights) {
            w /= total;
        }
    }
    return out;
}

PrototypePair semantic_complete(const UnimodalPrototype& uni, std::span<const PrototypePair> mm_pairs,
                                std::size_t top_o) {
    const CompletionWeights cw = completion_weights(uni, mm_pairs, top_o);
    const bool image_side = uni.modality == Modality::Image;
    const std::size_t dim = image_side ? mm_pairs.front().text_vec.size()
                                       : mm_pairs.front().image_vec.size();
    Vector completed(dim);
    for (std::size_t o = 0; o < cw.selected.size(); ++o) {
        const PrototypePair& pair = mm_pairs[cw.selected[o]];
        axpy(cw.weights[o], image_side ? pair.text_vec : pair.image_vec, completed);
    }
    if (image_side) {
        return {uni.vector, std::move(completed), PairOrigin::CompletedFromUnimodal};
    }
    return {std::move(completed), uni.vector, PairOrigin::CompletedFromUnimodal};
}

GlobalPrototypeSet build_global_prototypes(std::span<const PrototypePair> all_pairs, std::size_t k,
                                           SeededRng& rng) {
    if (all_pairs.size() < k) {
        throw Error("build_global_prototypes: " + std::to_string(all_pairs.size()) +
                    " pairs cannot form " + std::to_string(k) + " clusters");
    }
    std::vector<Vector> img;
    std::vector<Vector> txt;
    std::vector<Vector> fused;
    for (const PrototypePair& p : all_pairs) {
        img.push_back(p.image_vec);
        txt.push_back(p.text_vec);
        fused.push_back(fuse(p.image_vec, p.text_vec));
    }
    const KMeansResult km = kmeans(fused, k, rng);
    GlobalPrototypeSet out;
    out.pairs = cluster_pair_means(img, txt, km.assignments, k, PairOrigin::Global);
    return out;
}

}  // namespace apromfl
