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

#include "apromfl/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "apromfl/error.hpp"
#include "apromfl/numerics.hpp"

namespace apromfl {

std::size_t rank_of(std::span<const double> scores, std::size_t target) {
    const double t = scores[target];
    std::size_t rank = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        if (scores[j] > t || (scores[j] == t && j < target)) {
            ++rank;
        }
    }
    return rank;
}

double acc_at_k(std::span<const Vector> logits, std::span<const std::size_t> labels, std::size_t k) {
    if (logits.empty()) {
        throw DimensionError("acc_at_k: empty input");
    }
    if (logits.size() != labels.size()) {
        throw DimensionError("acc_at_k: logits and labels differ in length");
    }
    if (k < 1) {
        throw DimensionError("acc_at_k: k must be at least 1");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (labels[i] >= logits[i].size()) {
            throw DimensionError("acc_at_k: label out of range");
        }
        if (rank_of(logits[i].span(), labels[i]) < k) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(logits.size());
}

double recall_at_k(std::span<const Vector> queries, std::span<const Vector> gallery,
                   std::span<const std::size_t> ground_truth, std::size_t k) {
    if (gallery.empty() || queries.empty()) {
        throw DimensionError("recall_at_k: empty queries or gallery");
    }
    if (ground_truth.size() != queries.size()) {
        throw DimensionError("recall_at_k: ground truth length differs from queries");
    }
    if (k < 1) {
        throw DimensionError("recall_at_k: k must be at least 1");
    }
    std::vector<double> scores(gallery.size());
    std::size_t hits = 0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
        if (ground_truth[q] >= gallery.size()) {
            throw DimensionError("recall_at_k: ground truth index out of range");
        }
        const bool query_zero = squared_norm(queries[q]) == 0.0;
        for (std::size_t g = 0; g < gallery.size(); ++g) {
            // Zero embeddings have no direction and score 0 against everything.
            scores[g] = query_zero || squared_norm(gallery[g]) == 0.0
                            ? 0.0
                            : cosine_similarity(queries[q], gallery[g]);
        }
        if (rank_of(scores, ground_truth[q]) < k) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(queries.size());
}

void EvalReport::validate() const {
    auto check = [](const std::map<std::size_t, double>& m, const char* what) {
        for (const auto& [k, v] : m) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw NumericalError(std::string(what) + " outside [0, 1]");
            }
        }
    };
    check(acc_at, "accuracy");
    check(recall_i2t_at, "i2t recall");
    check(recall_t2i_at, "t2i recall");
}

EvalReport classification_report(std::span<const Vector> logits,
                                 std::span<const std::size_t> labels,
                                 std::span<const std::size_t> ks) {
    EvalReport r;
    r.n_eval = logits.size();
    for (std::size_t k : ks) {
        r.acc_at[k] = acc_at_k(logits, labels, k);
    }
    return r;
}

EvalReport retrieval_report(std::span<const Vector> image_embs, std::span<const Vector> text_embs) {
    if (image_embs.size() != text_embs.size()) {
        throw DimensionError("retrieval_report: unpaired embeddings");
    }
    EvalReport r;
    r.n_eval = image_embs.size();
    std::vector<std::size_t> identity(image_embs.size());
    std::iota(identity.begin(), identity.end(), 0);
    for (std::size_t k : {std::size_t{1}, std::size_t{5}}) {
        const std::size_t kk = std::min(k, text_embs.size());
        r.recall_i2t_at[k] = recall_at_k(image_embs, text_embs, identity, kk);
        r.recall_t2i_at[k] = recall_at_k(text_embs, image_embs, identity, kk);
    }
    r.r1_sum = r.recall_i2t_at[1] + r.recall_t2i_at[1];
    r.r5_sum = r.recall_i2t_at[5] + r.recall_t2i_at[5];
    return r;
}

}  // namespace apromfl
