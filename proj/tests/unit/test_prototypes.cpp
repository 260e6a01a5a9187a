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
#include <numeric>
#include <vector>

#include "apromfl/error.hpp"
#include "apromfl/kmeans.hpp"
#include "apromfl/prototypes.hpp"
#include "oracles.hpp"

using namespace apromfl;

namespace {

std::vector<PrototypePair> random_pairs(std::size_t n, std::size_t d, SeededRng& rng) {
    std::vector<PrototypePair> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({oracle::random_vector(d, rng), oracle::random_vector(d, rng), PairOrigin::MultimodalClient});
    }
    return out;
}

}  // namespace

TEST_CASE("label guided prototypes are class means") {
    const std::vector<Vector> embs{Vector{1.0, 0.0}, Vector{3.0, 2.0}, Vector{-1.0, 5.0}};
    const std::vector<std::size_t> labels{4, 4, 1};
    const auto protos = label_guided_prototypes(embs, labels, Modality::Text, 7);
    REQUIRE(protos.size() == 2);
    CHECK(protos[0].class_id == 1);
    CHECK(protos[0].vector == Vector{-1.0, 5.0});
    CHECK(protos[1].class_id == 4);
    CHECK(protos[1].vector == Vector{2.0, 1.0});
    CHECK(protos[1].modality == Modality::Text);
    CHECK(protos[1].client_id == 7);
    CHECK_THROWS(label_guided_prototypes(std::vector<Vector>{}, std::vector<std::size_t>{}));
    CHECK_THROWS_AS(label_guided_prototypes(embs, std::span<const std::size_t>(labels).first(2)), DimensionError);
}

TEST_CASE("label guided prototypes match the oracle and ignore sample order") {
    SeededRng rng(1);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + rng.uniform_index(30);
        const auto embs = oracle::random_vectors(n, 4, rng);
        std::vector<std::size_t> labels(n);
        for (auto& l : labels) {
            l = rng.uniform_index(5);
        }
        const auto protos = label_guided_prototypes(embs, labels);
        const auto ref = oracle::class_means(embs, labels);
        REQUIRE(protos.size() == ref.size());
        for (std::size_t c = 0; c < ref.size(); ++c) {
            CHECK(protos[c].class_id == ref[c].first);
            for (std::size_t d = 0; d < 4; ++d) {
                CHECK(std::abs(protos[c].vector[d] - ref[c].second[d]) < 1e-10);
            }
        }
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(std::span<std::size_t>(perm));
        std::vector<Vector> pe;
        std::vector<std::size_t> pl;
        for (std::size_t i : perm) {
            pe.push_back(embs[i]);
            pl.push_back(labels[i]);
        }
        const auto permuted = label_guided_prototypes(pe, pl);
        for (std::size_t c = 0; c < ref.size(); ++c) {
            for (std::size_t d = 0; d < 4; ++d) {
                CHECK(std::abs(permuted[c].vector[d] - protos[c].vector[d]) < 1e-12);
            }
        }
    }
}

TEST_CASE("fuse averages the two views") {
    CHECK(fuse(Vector{1.0, 2.0}, Vector{3.0, -2.0}) == Vector{2.0, 0.0});
    CHECK_THROWS_AS(fuse(Vector{1.0}, Vector{1.0, 2.0}), DimensionError);
}

TEST_CASE("clustering prototype pairs") {
    // Two tight groups of fused embeddings.
    const std::vector<Vector> img{Vector{0.0, 0.0}, Vector{0.2, 0.0}, Vector{10.0, 0.0}, Vector{10.2, 0.0}};
    const std::vector<Vector> txt{Vector{0.0, 1.0}, Vector{0.0, 1.2}, Vector{0.0, 9.0}, Vector{0.0, 9.2}};
    SeededRng rng(2);
    const LocalPairs lp = clustering_prototype_pairs(img, txt, 2, rng);
    REQUIRE(lp.pairs.size() == 2);
    CHECK(lp.clusters.num_clusters() == 2);
    CHECK(lp.clusters.pseudo_labels[0] == lp.clusters.pseudo_labels[1]);
    CHECK(lp.clusters.pseudo_labels[2] == lp.clusters.pseudo_labels[3]);
    const std::size_t low = lp.clusters.pseudo_labels[0];
    CHECK(lp.pairs[low].image_vec[0] == doctest::Approx(0.1));
    CHECK(lp.pairs[low].text_vec[1] == doctest::Approx(1.1));
    CHECK(lp.pairs[1 - low].image_vec[0] == doctest::Approx(10.1));
    for (const auto& p : lp.pairs) {
        CHECK(p.origin == PairOrigin::MultimodalClient);
    }
    // One cluster gives the overall means.
    SeededRng rng1(3);
    const LocalPairs one = clustering_prototype_pairs(img, txt, 1, rng1);
    CHECK(one.pairs[0].image_vec[0] == doctest::Approx(5.1));
    CHECK(one.pairs[0].text_vec[1] == doctest::Approx(5.1));
    CHECK_THROWS(clustering_prototype_pairs(img, txt, 5, rng));
}

TEST_CASE("semantic completion examples") {
    const std::vector<PrototypePair> pairs{
        {Vector{1.0, 0.0}, Vector{5.0, 5.0}, PairOrigin::MultimodalClient},
        {Vector{0.0, 1.0}, Vector{-5.0, 1.0}, PairOrigin::MultimodalClient},
        {Vector{-1.0, 0.0}, Vector{9.0, 9.0}, PairOrigin::MultimodalClient}};
    const UnimodalPrototype img{Modality::Image, Vector{2.0, 0.0}, 0, 0};
    SUBCASE("O = 1 copies the nearest partner") {
        const PrototypePair p = semantic_complete(img, pairs, 1);
        CHECK(p.image_vec == img.vector);
        CHECK(p.text_vec == Vector{5.0, 5.0});
        CHECK(p.origin == PairOrigin::CompletedFromUnimodal);
    }
    SUBCASE("negative similarity gets zero weight") {
        const CompletionWeights w = completion_weights(img, pairs, 3);
        CHECK(w.selected == std::vector<std::size_t>{0, 1, 2});
        CHECK(w.weights[0] == doctest::Approx(1.0));
        CHECK(w.weights[1] == doctest::Approx(0.0));
        CHECK(w.weights[2] == 0.0);
    }
    SUBCASE("text prototypes complete the image side") {
        const UnimodalPrototype txt{Modality::Text, Vector{1.0, 1.0}, 3, 4};
        const PrototypePair p = semantic_complete(txt, pairs, 1);
        CHECK(p.text_vec == txt.vector);
        CHECK(p.image_vec == Vector{1.0, 0.0});
    }
    SUBCASE("all non-positive similarities fall back to uniform weights") {
        const UnimodalPrototype opp{Modality::Image, Vector{0.0, -1.0}, 0, 0};
        const CompletionWeights w = completion_weights(opp, std::span<const PrototypePair>(pairs).first(2), 2);
        CHECK(w.weights[0] == doctest::Approx(0.5));
        CHECK(w.weights[1] == doctest::Approx(0.5));
    }
    CHECK_THROWS(semantic_complete(img, pairs, 0));
    CHECK_THROWS(semantic_complete(img, pairs, 4));
}

TEST_CASE("semantic completion matches the oracle and its invariances") {
    SeededRng rng(5);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + rng.uniform_index(8);
        const std::size_t d = 2 + rng.uniform_index(3);
        const auto pairs = random_pairs(n, d, rng);
        const std::size_t o = 1 + rng.uniform_index(n);
        const Modality m = (t % 2 == 0) ? Modality::Image : Modality::Text;
        const UnimodalPrototype uni{m, oracle::random_vector(d, rng), 0, 0};
        const PrototypePair got = semantic_complete(uni, pairs, o);
        const Vector& completed = m == Modality::Image ? got.text_vec : got.image_vec;
        const Vector ref = oracle::completed_partner(uni, pairs, o);
        for (std::size_t i = 0; i < d; ++i) {
            CHECK(std::abs(completed[i] - ref[i]) < 1e-10);
        }
        const CompletionWeights w = completion_weights(uni, pairs, o);
        double total = 0.0;
        for (double x : w.weights) {
            CHECK(x >= 0.0);
            total += x;
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
        CHECK(std::is_sorted(w.similarities.rbegin(), w.similarities.rend()));
        // Rescaling the unimodal prototype does not change the completion.
        UnimodalPrototype scaled = uni;
        scaled.vector *= 4.0;
        const PrototypePair sp = semantic_complete(scaled, pairs, o);
        const Vector& sc = m == Modality::Image ? sp.text_vec : sp.image_vec;
        for (std::size_t i = 0; i < d; ++i) {
            CHECK(std::abs(sc[i] - completed[i]) < 1e-10);
        }
    }
}

TEST_CASE("global prototypes") {
    SeededRng rng(6);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 2 + rng.uniform_index(20);
        const auto pairs = random_pairs(n, 3, rng);
        const std::size_t k = 1 + rng.uniform_index(n);
        SeededRng krng = rng.substream(static_cast<std::uint64_t>(t));
        const GlobalPrototypeSet g = build_global_prototypes(pairs, k, krng);
        CHECK(g.size() == k);
        CHECK_NOTHROW(validate(g, k));
        CHECK(g.image_vectors().size() == k);
        for (const auto& p : g.pairs) {
            CHECK(p.origin == PairOrigin::Global);
        }
        // With k equal to the number of pairs every pair is its own prototype.
        if (k == n) {
            for (const auto& p : pairs) {
                CHECK(std::any_of(g.pairs.begin(), g.pairs.end(), [&](const PrototypePair& q) {
                    return squared_distance(q.image_vec, p.image_vec) < 1e-20 &&
                           squared_distance(q.text_vec, p.text_vec) < 1e-20;
                }));
            }
        }
    }
    // The mean of all prototypes is preserved for k = 1.
    const auto pairs = random_pairs(6, 3, rng);
    const GlobalPrototypeSet one = build_global_prototypes(pairs, 1, rng);
    std::vector<Vector> imgs;
    for (const auto& p : pairs) {
        imgs.push_back(p.image_vec);
    }
    const Vector mean = mean_of(imgs);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(one.pairs[0].image_vec[i] == doctest::Approx(mean[i]));
    }
    CHECK_THROWS(build_global_prototypes(pairs, 7, rng));
}

TEST_CASE("prototype validation") {
    GlobalPrototypeSet g;
    g.pairs.push_back({Vector{1.0}, Vector{1.0}, PairOrigin::Global});
    CHECK_NOTHROW(validate(g, 1));
    CHECK_THROWS(validate(g, 2));
    g.pairs[0].origin = PairOrigin::MultimodalClient;
    CHECK_THROWS(validate(g, 1));
    CHECK_THROWS(validate(UnimodalPrototype{Modality::Image, Vector{0.0, 0.0}, 0, 0}));
    CHECK_THROWS_AS(validate(PrototypePair{Vector{1.0}, Vector{1.0, 1.0}, PairOrigin::Global}), DimensionError);
}
