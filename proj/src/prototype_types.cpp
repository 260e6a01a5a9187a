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

#include <cmath>

#include "apromfl/error.hpp"
#include "apromfl/prototype_types.hpp"

namespace apromfl {
namespace {

void check_vector(const Vector& v, const char* what) {
    v.require_finite(what);
    if (v.empty() || !(norm(v) > 0.0)) {
        throw Error(std::string(what) + ": zero-norm prototype vector");
    }
}

}  // namespace

std::string_view modality_name(Modality m) noexcept {
    return m == Modality::Image ? "image" : "text";
}

std::vector<Vector> GlobalPrototypeSet::image_vectors() const {
    std::vector<Vector> out;
    out.reserve(pairs.size());
    for (const PrototypePair& p : pairs) {
        out.push_back(p.image_vec);
    }
    return out;
}

std::vector<Vector> GlobalPrototypeSet::text_vectors() const {
    std::vector<Vector> out;
    out.reserve(pairs.size());
    for (const PrototypePair& p : pairs) {
        out.push_back(p.text_vec);
    }
    return out;
}

void validate(const UnimodalPrototype& p) { check_vector(p.vector, "UnimodalPrototype"); }

void validate(const PrototypePair& p) {
    check_vector(p.image_vec, "PrototypePair image");
    check_vector(p.text_vec, "PrototypePair text");
    if (p.image_vec.size() != p.text_vec.size()) {
        throw DimensionError("PrototypePair: image and text dims differ");
    }
}

void validate(const GlobalPrototypeSet& set, std::size_t expected_k) {
    if (set.pairs.size() != expected_k) {
        throw Error("GlobalPrototypeSet: expected " + std::to_string(expected_k) + " pairs, got " +
                    std::to_string(set.pairs.size()));
    }
    for (const PrototypePair& p : set.pairs) {
        validate(p);
        if (p.origin != PairOrigin::Global) {
            throw Error("GlobalPrototypeSet: pair not marked global");
        }
    }
}

}  // namespace apromfl
