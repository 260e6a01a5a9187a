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
#include <map>
#include <span>
#include <vector>

#include "apromfl/linalg.hpp"

namespace apromfl {

/// Fraction of samples whose label ranks within the k highest logits. A class
/// ranks ahead of the label when its logit is larger, or equal with a lower index.
double acc_at_k(std::span<const Vector> logits, std::span<const std::size_t> labels, std::size_t k);

/// Fraction of queries whose ground-truth gallery item ranks within the top k
/// by cosine similarity; equal similarities rank by lower gallery index.
double recall_at_k(std::span<const Vector> queries, std::span<const Vector> gallery,
                   std::span<const std::size_t> ground_truth, std::size_t k);

/// Rank (0 = best) of `target` under the tie rule shared by both metrics.
std::size_t rank_of(std::span<const double> scores, std::size_t target);

struct EvalReport {
    std::map<std::size_t, double> acc_at;
    std::map<std::size_t, double> recall_i2t_at;
    std::map<std::size_t, double> recall_t2i_at;
    double r1_sum = 0.0;
    double r5_sum = 0.0;
    std::size_t n_eval = 0;

    bool is_classification() const noexcept { return !acc_at.empty(); }
    bool is_retrieval() const noexcept { return !recall_i2t_at.empty(); }
    void validate() const;
};

EvalReport classification_report(std::span<const Vector> logits,
                                 std::span<const std::size_t> labels,
                                 std::span<const std::size_t> ks);

/// Pairs are aligned by index; reports k = 1 and 5 (clamped to the gallery size).
EvalReport retrieval_report(std::span<const Vector> image_embs, std::span<const Vector> text_embs);

}  // namespace apromfl
