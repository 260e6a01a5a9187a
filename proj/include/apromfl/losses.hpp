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
#include <optional>
#include <span>
#include <vector>

#include "apromfl/linalg.hpp"
#include "apromfl/nn.hpp"
#include "apromfl/numerics.hpp"
#include "apromfl/prototype_types.hpp"

namespace apromfl {

/// Read-only per-round snapshot of what the server broadcast to one client.
/// Empty in the first round and for methods without knowledge transfer.
struct TransferContext {
    std::optional<GlobalPrototypeSet> global_prototypes;
    std::optional<MappingModule> global_image_module;
    std::optional<MappingModule> global_text_module;
    double tau = 0.5;          // assignment temperature
    double nu_max = 10.0;      // clamp for the model-transfer factor
    double distill_tau = 1.0;  // temperature turning embeddings into distributions

    bool has_prototypes() const noexcept { return global_prototypes.has_value(); }
    bool empty() const noexcept {
        return !global_prototypes && !global_image_module && !global_text_module;
    }
    void validate() const;
};

/// Pseudo-label partition of a batch. Labels are compacted to 0..k-1 in
/// increasing order of the original label value, so every member set is
/// non-empty.
struct ClusterAssignment {
    std::vector<std::size_t> pseudo_labels;
    std::vector<std::vector<std::size_t>> members;

    static ClusterAssignment from_labels(std::span<const std::size_t> labels);
    std::size_t num_clusters() const noexcept { return members.size(); }
    const std::vector<std::size_t>& cluster_of(std::size_t i) const {
        return members[pseudo_labels[i]];
    }
};

struct LossGrad {
    double value = 0.0;
    Vector grad;
};

struct PairLossGrad {
    double value = 0.0;
    std::vector<Vector> grad_image;
    std::vector<Vector> grad_text;
};

/// -ln softmax(logits)[label]; gradient softmax - onehot.
LossGrad cross_entropy(const Vector& logits, std::size_t label);

/// Symmetric InfoNCE over the N x N cosine-similarity matrix / tau, with the
/// matched pair on the diagonal. N >= 2.
PairLossGrad retrieval_task_loss(std::span<const Vector> img_embs, std::span<const Vector> txt_embs,
                                 double tau);

/// Same-modality contrastive term for anchor `i`. The denominator sums over
/// every sample in the batch, the anchor included.
double intra_modal_loss(std::span<const Vector> embs, const ClusterAssignment& clusters,
                        std::size_t i, double tau);

/// Image anchor `i` against text embeddings of its cluster; denominator over
/// all text embeddings.
double inter_modal_loss(std::span<const Vector> img_embs, std::span<const Vector> txt_embs,
                        const ClusterAssignment& clusters, std::size_t i, double tau);

/// Same values as above plus gradients w.r.t. every embedding (grad_image
/// holds the single-modality gradient for the intra-modal case).
PairLossGrad intra_modal_loss_grad(std::span<const Vector> embs, const ClusterAssignment& clusters,
                                   std::size_t i, double tau);
PairLossGrad inter_modal_loss_grad(std::span<const Vector> img_embs,
                                   std::span<const Vector> txt_embs,
                                   const ClusterAssignment& clusters, std::size_t i, double tau);

struct ClusteringLoss {
    double value = 0.0;
    double task = 0.0;
    double intra_image = 0.0;
    double intra_text = 0.0;
    double inter = 0.0;
    std::vector<Vector> grad_image;
    std::vector<Vector> grad_text;
};

/// Retrieval task loss plus, for every sample, the image and text intra-modal
/// terms and the inter-modal term (summed, not averaged). `anchor_weight`
/// scales the per-sample sum; 1 gives the plain objective.
ClusteringLoss clustering_total_loss(std::span<const Vector> img_embs,
                                     std::span<const Vector> txt_embs,
                                     const ClusterAssignment& clusters, double tau,
                                     double anchor_weight = 1.0);

struct ModuleLossGrad {
    double value = 0.0;
    GradientTape grad;
};

/// lambda * |theta - theta_p|^2 with gradient 2 lambda (theta - theta_p);
/// theta_p is treated as a constant.
ModuleLossGrad lmr_loss(const DenseNet& theta, const DenseNet& theta_p, double lambda);

/// Softmax over cos(e, p_k) / tau.
Distribution assignment_probs(const Vector& e, std::span<const Vector> protos, double tau);

struct GptLoss {
    double value = 0.0;
    Distribution q_image{Vector{1.0}};
    Distribution q_text{Vector{1.0}};
    Vector grad_image_side;
    Vector grad_text_side;
};

/// Jensen-Shannon divergence between the assignment of `e_image_side` to the
/// global image prototypes and of `e_text_side` to the global text prototypes.
/// Unimodal clients pass the same embedding for both sides.
GptLoss gpt_loss(const Vector& e_image_side, const Vector& e_text_side,
                 std::span<const Vector> image_protos, std::span<const Vector> text_protos,
                 double tau);
GptLoss gpt_loss(const Vector& e_image_side, const Vector& e_text_side,
                 const GlobalPrototypeSet& globals, double tau);

/// Unimodal form: one embedding assigned to both prototype sets; the returned
/// gradient is the sum of both sides.
LossGrad gpt_loss(const Vector& e, const GlobalPrototypeSet& globals, double tau);

/// Jensen-Shannon divergence with the same floor as kl_divergence.
double js_divergence(const Distribution& p, const Distribution& q);

struct GmtLoss {
    double value = 0.0;
    double nu = 0.0;
    Vector grad;
};

inline constexpr double kTaskLossFloor = 1e-8;

/// nu = clamp(task_loss_local / max(task_loss_global, 1e-8), 0, nu_max);
/// value = nu * KL(softmax(local/distill_tau) || softmax(global/distill_tau)).
/// The gradient flows into `local_emb` only.
GmtLoss gmt_loss(const Vector& local_emb, const Vector& global_emb, double task_loss_local,
                 double task_loss_global, const TransferContext& ctx);

double transfer_factor(double task_loss_local, double task_loss_global, double nu_max);

}  // namespace apromfl
