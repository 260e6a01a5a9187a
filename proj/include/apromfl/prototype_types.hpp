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
#include <string_view>
#include <vector>

#include "apromfl/linalg.hpp"

namespace apromfl {

enum class Modality { Image, Text };

std::string_view modality_name(Modality m) noexcept;

/// Class-mean embedding from a labeled (unimodal) client.
struct UnimodalPrototype {
    Modality modality = Modality::Image;
    Vector vector;
    std::size_t class_id = 0;
    std::size_t client_id = 0;

    friend bool operator==(const UnimodalPrototype&, const UnimodalPrototype&) = default;
};

enum class PairOrigin { MultimodalClient, CompletedFromUnimodal, Global };

/// Matched image/text prototype vectors in the shared embedding space.
struct PrototypePair {
    Vector image_vec;
    Vector text_vec;
    PairOrigin origin = PairOrigin::MultimodalClient;

    friend bool operator==(const PrototypePair&, const PrototypePair&) = default;
};

/// The K server-side pairs broadcast to clients.
struct GlobalPrototypeSet {
    std::vector<PrototypePair> pairs;
    std::size_t round = 0;

    std::size_t size() const noexcept { return pairs.size(); }
    std::vector<Vector> image_vectors() const;
    std::vector<Vector> text_vectors() const;

    friend bool operator==(const GlobalPrototypeSet&, const GlobalPrototypeSet&) = default;
};

/// Throws when a vector is non-finite or has zero norm, or dims disagree.
void validate(const UnimodalPrototype& p);
void validate(const PrototypePair& p);
void validate(const GlobalPrototypeSet& set, std::size_t expected_k);

}  // namespace apromfl
