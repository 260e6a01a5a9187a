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

#include "apromfl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "apromfl/error.hpp"

namespace apromfl {
namespace {

struct Normalized {
    std::vector<Vector> units;
    std::vector<double> norms;
};

Normalized normalize_all(std::span<const Vector> embs, const char* what) {
    Normalized out;
    out.units.reserve(embs.size());
    out.norms.reserve(embs.size());
    for (const Vector& e : embs) {
        const double n = norm(e);
        if (!std::isfinite(n)) {
            throw NumericalError(std::string(what) + ": embedding with non-finite norm");
        }
        // A zero embedding has no direction: similarity 0 and no gradient.
        out.units.push_back(n > 0.0 ? (1.0 / n) * e : Vector(e.size()));
        out.norms.push_back(n);
    }
    return out;
}

// Maps dL/du to dL/de for u = e / |e|.
Vector through_normalization(const Vector& grad_u, const Vector& unit, double n) {
    if (n == 0.0) {
        return Vector(grad_u.size());
    }
    Vector g = grad_u;
    axpy(-dot(grad_u, unit), unit, g);
    g *= 1.0 / n;
    return g;
}

double log_sum_exp(std::span<const double> xs) {
    const double peak = *std::max_element(xs.begin(), xs.end());
    double total = 0.0;
    for (double x : xs) {
        total += std::exp(x - peak);
    }
    return peak + std::log(total);
}

void require_tau(double tau, const char* what) {
    if (!(tau > 0.0)) {
        throw Error(std::string(what) + ": tau must be positive");
    }
}

// Contrastive term of one anchor against a set of candidates (all in unit
// form). Adds the gradient w.r.t. the anchor and every candidate.
double anchor_term(const Vector& anchor, std::span<const Vector> candidates,
                   const std::vector<std::size_t>& positives, double tau, Vector* grad_anchor,
                   std::vector<Vector>* grad_candidates) {
    const std::size_t n = candidates.size();
    std::vector<double> s(n);
    for (std::size_t t = 0; t < n; ++t) {
        s[t] = dot(anchor, candidates[t]) / tau;
    }
    const double lse = log_sum_exp(s);
    double pos_mean = 0.0;
    for (std::size_t j : positives) {
        pos_mean += s[j];
    }
    pos_mean /= static_cast<double>(positives.size());
    const double value = lse - pos_mean;

    if (grad_anchor != nullptr) {
        std::vector<double> coeff(n);
        for (std::size_t t = 0; t < n; ++t) {
            coeff[t] = std::exp(s[t] - lse);
        }
        const double share = 1.0 / static_cast<double>(positives.size());
        for (std::size_t j : positives) {
            coeff[j] -= share;
        }
        for (std::size_t t = 0; t < n; ++t) {
            const double c = coeff[t] / tau;
            axpy(c, candidates[t], *grad_anchor);
            axpy(c, anchor, (*grad_candidates)[t]);
        }
    }
    return value;
}

void check_anchor(std::size_t n, const ClusterAssignment& clusters, std::size_t i) {
    if (i >= n) {
        throw Error("contrastive loss: anchor index out of range");
    }
    if (clusters.pseudo_labels.size() != n) {
        throw DimensionError("contrastive loss: cluster assignment does not cover the batch");
    }
}

// dL/dz for z -> softmax(z / temp) = p, given dL/dp.
Vector softmax_backward(const Distribution& p, const Vector& grad_p, double temp) {
    double mean = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        mean += p[k] * grad_p[k];
    }
    Vector out(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        out[k] = p[k] * (grad_p[k] - mean) / temp;
    }
    return out;
}

struct AssignmentPass {
    Distribution q{Vector{1.0}};
    Vector unit;
    double norm = 0.0;
    std::vector<Vector> proto_units;
};

AssignmentPass assign(const Vector& e, std::span<const Vector> protos, double tau) {
    require_tau(tau, "assignment_probs");
    if (protos.empty()) {
        throw Error("assignment_probs: no prototypes");
    }
    AssignmentPass pass;
    pass.norm = norm(e);
    if (!std::isfinite(pass.norm)) {
        throw NumericalError("assignment_probs: non-finite embedding");
    }
    // A zero embedding is equally close to every prototype.
    pass.unit = pass.norm > 0.0 ? (1.0 / pass.norm) * e : Vector(e.size());
    Vector scores(protos.size());
    for (std::size_t k = 0; k < protos.size(); ++k) {
        if (protos[k].size() != e.size()) {
            throw DimensionError("assignment_probs: prototype dimension mismatch");
        }
        const double pn = norm(protos[k]);
        if (!(pn > 0.0)) {
            throw Error("assignment_probs: zero-norm prototype");
        }
        pass.proto_units.push_back((1.0 / pn) * protos[k]);
        scores[k] = dot(pass.unit, pass.proto_units.back());
    }
    pass.q = softmax_temp(scores, tau);
    return pass;
}

Vector assignment_backward(const AssignmentPass& pass, const Vector& grad_q, double tau) {
    const Vector grad_scores = softmax_backward(pass.q, grad_q, tau);
    Vector grad_u(pass.unit.size());
    for (std::size_t k = 0; k < pass.proto_units.size(); ++k) {
        axpy(grad_scores[k], pass.proto_units[k], grad_u);
    }
    return through_normalization(grad_u, pass.unit, pass.norm);
}

}  // namespace

void TransferContext::validate() const {
    if (!(tau > 0.0)) {
        throw Error("TransferContext: tau must be positive");
    }
    if (!(distill_tau > 0.0)) {
        throw Error("TransferContext: distill_tau must be positive");
    }
    if (!(nu_max >= 1.0)) {
        throw Error("TransferContext: nu_max must be at least 1");
    }
}

ClusterAssignment ClusterAssignment::from_labels(std::span<const std::size_t> labels) {
    std::map<std::size_t, std::size_t> compact;
    for (std::size_t label : labels) {
        compact.emplace(label, 0);
    }
    std::size_t next = 0;
    for (auto& [label, id] : compact) {
        id = next++;
    }
    ClusterAssignment out;
    out.members.resize(compact.size());
    out.pseudo_labels.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::size_t id = compact.at(labels[i]);
        out.pseudo_labels.push_back(id);
        out.members[id].push_back(i);
    }
    return out;
}

LossGrad cross_entropy(const Vector& logits, std::size_t label) {
    if (label >= logits.size()) {
        throw Error("cross_entropy: label " + std::to_string(label) + " out of range");
    }
    const double lse = log_sum_exp(logits.span());
    LossGrad out;
    out.value = lse - logits[label];
    out.grad = Vector(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out.grad[k] = std::exp(logits[k] - lse);
    }
    out.grad[label] -= 1.0;
    return out;
}

PairLossGrad retrieval_task_loss(std::span<const Vector> img_embs, std::span<const Vector> txt_embs,
                                 double tau) {
    require_tau(tau, "retrieval_task_loss");
    const std::size_t n = img_embs.size();
    if (txt_embs.size() != n) {
        throw DimensionError("retrieval_task_loss: image and text counts differ");
    }
    if (n < 2) {
        throw Error("retrieval_task_loss: need at least two pairs");
    }
    const Normalized img = normalize_all(img_embs, "retrieval_task_loss");
    const Normalized txt = normalize_all(txt_embs, "retrieval_task_loss");

    Matrix logits(n, n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            logits(a, b) = dot(img.units[a], txt.units[b]) / tau;
        }
    }
    // Per-logit gradient, accumulated from both directions.
    Matrix g(n, n);
    const double half_over_n = 0.5 / static_cast<double>(n);
    double i2t = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        const double lse = log_sum_exp(logits.row(a));
        i2t += lse - logits(a, a);
        for (std::size_t b = 0; b < n; ++b) {
            g(a, b) += half_over_n * std::exp(logits(a, b) - lse);
        }
        g(a, a) -= half_over_n;
    }
    double t2i = 0.0;
    std::vector<double> column(n);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t a = 0; a < n; ++a) {
            column[a] = logits(a, b);
        }
        const double lse = log_sum_exp(column);
        t2i += lse - logits(b, b);
        for (std::size_t a = 0; a < n; ++a) {
            g(a, b) += half_over_n * std::exp(column[a] - lse);
        }
        g(b, b) -= half_over_n;
    }

    PairLossGrad out;
    out.value = 0.5 * (i2t + t2i) / static_cast<double>(n);
    std::vector<Vector> gu_img(n, Vector(img.units.front().size()));
    std::vector<Vector> gu_txt(n, Vector(txt.units.front().size()));
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            const double c = g(a, b) / tau;
            axpy(c, txt.units[b], gu_img[a]);
            axpy(c, img.units[a], gu_txt[b]);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        out.grad_image.push_back(through_normalization(gu_img[i], img.units[i], img.norms[i]));
        out.grad_text.push_back(through_normalization(gu_txt[i], txt.units[i], txt.norms[i]));
    }
    return out;
}

double intra_modal_loss(std::span<const Vector> embs, const ClusterAssignment& clusters,
                        std::size_t i, double tau) {
    require_tau(tau, "intra_modal_loss");
    check_anchor(embs.size(), clusters, i);
    const Normalized u = normalize_all(embs, "intra_modal_loss");
    return anchor_term(u.units[i], u.units, clusters.cluster_of(i), tau, nullptr, nullptr);
}

double inter_modal_loss(std::span<const Vector> img_embs, std::span<const Vector> txt_embs,
                        const ClusterAssignment& clusters, std::size_t i, double tau) {
    require_tau(tau, "inter_modal_loss");
    if (img_embs.size() != txt_embs.size()) {
        throw DimensionError("inter_modal_loss: image and text counts differ");
    }
    check_anchor(img_embs.size(), clusters, i);
    const Normalized img = normalize_all(img_embs, "inter_modal_loss");
    const Normalized txt = normalize_all(txt_embs, "inter_modal_loss");
    return anchor_term(img.units[i], txt.units, clusters.cluster_of(i), tau, nullptr, nullptr);
}

PairLossGrad intra_modal_loss_grad(std::span<const Vector> embs, const ClusterAssignment& clusters,
                                   std::size_t i, double tau) {
    require_tau(tau, "intra_modal_loss");
    check_anchor(embs.size(), clusters, i);
    const Normalized u = normalize_all(embs, "intra_modal_loss");
    std::vector<Vector> gu(embs.size(), Vector(u.units.front().size()));
    PairLossGrad out;
    out.value = anchor_term(u.units[i], u.units, clusters.cluster_of(i), tau, &gu[i], &gu);
    for (std::size_t t = 0; t < embs.size(); ++t) {
        out.grad_image.push_back(through_normalization(gu[t], u.units[t], u.norms[t]));
    }
    return out;
}

PairLossGrad inter_modal_loss_grad(std::span<const Vector> img_embs,
                                   std::span<const Vector> txt_embs,
                                   const ClusterAssignment& clusters, std::size_t i, double tau) {
    require_tau(tau, "inter_modal_loss");
    if (img_embs.size() != txt_embs.size()) {
        throw DimensionError("inter_modal_loss: image and text counts differ");
    }
    check_anchor(img_embs.size(), clusters, i);
    const Normalized img = normalize_all(img_embs, "inter_modal_loss");
    const Normalized txt = normalize_all(txt_embs, "inter_modal_loss");
    std::vector<Vector> gi(img_embs.size(), Vector(img.units.front().size()));
    std::vector<Vector> gt(txt_embs.size(), Vector(txt.units.front().size()));
    PairLossGrad out;
    out.value = anchor_term(img.units[i], txt.units, clusters.cluster_of(i), tau, &gi[i], &gt);
    for (std::size_t t = 0; t < img_embs.size(); ++t) {
        out.grad_image.push_back(through_normalization(gi[t], img.units[t], img.norms[t]));
        out.grad_text.push_back(through_normalization(gt[t], txt.units[t], txt.norms[t]));
    }
    return out;
}

ClusteringLoss clustering_total_loss(std::span<const Vector> img_embs,
                                     std::span<const Vector> txt_embs,
                                     const ClusterAssignment& clusters, double tau,
                                     double anchor_weight) {
    require_tau(tau, "clustering_total_loss");
    const std::size_t n = img_embs.size();
    if (txt_embs.size() != n) {
        throw DimensionError("clustering_total_loss: image and text counts differ");
    }
    if (clusters.pseudo_labels.size() != n) {
        throw DimensionError("clustering_total_loss: cluster assignment does not cover the batch");
    }
    ClusteringLoss out;
    PairLossGrad task = retrieval_task_loss(img_embs, txt_embs, tau);
    out.task = task.value;

    const Normalized img = normalize_all(img_embs, "clustering_total_loss");
    const Normalized txt = normalize_all(txt_embs, "clustering_total_loss");
    const std::size_t dim_i = img.units.front().size();
    const std::size_t dim_t = txt.units.front().size();
    std::vector<Vector> gu_img(n, Vector(dim_i));
    std::vector<Vector> gu_txt(n, Vector(dim_t));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& positives = clusters.cluster_of(i);
        out.intra_image += anchor_term(img.units[i], img.units, positives, tau, &gu_img[i], &gu_img);
        out.intra_text += anchor_term(txt.units[i], txt.units, positives, tau, &gu_txt[i], &gu_txt);
        out.inter += anchor_term(img.units[i], txt.units, positives, tau, &gu_img[i], &gu_txt);
    }
    out.value = out.task + anchor_weight * (out.intra_image + out.intra_text + out.inter);
    out.grad_image = std::move(task.grad_image);
    out.grad_text = std::move(task.grad_text);
    for (std::size_t i = 0; i < n; ++i) {
        gu_img[i] *= anchor_weight;
        gu_txt[i] *= anchor_weight;
        out.grad_image[i] += through_normalization(gu_img[i], img.units[i], img.norms[i]);
        out.grad_text[i] += through_normalization(gu_txt[i], txt.units[i], txt.norms[i]);
    }
    return out;
}

ModuleLossGrad lmr_loss(const DenseNet& theta, const DenseNet& theta_p, double lambda) {
    if (lambda < 0.0) {
        throw Error("lmr_loss: lambda must be non-negative");
    }
    if (!theta.same_architecture(theta_p)) {
        throw DimensionError("lmr_loss: architecture mismatch");
    }
    ModuleLossGrad out;
    out.value = lambda * module_distance_sq(theta, theta_p);
    out.grad = GradientTape::zeros_like(theta);
    if (lambda > 0.0) {
        Vector diff = theta.flatten() - theta_p.flatten();
        out.grad.accumulate_flat(diff, 2.0 * lambda);
    }
    return out;
}

Distribution assignment_probs(const Vector& e, std::span<const Vector> protos, double tau) {
    return assign(e, protos, tau).q;
}

double js_divergence(const Distribution& p, const Distribution& q) {
    if (p.size() != q.size()) {
        throw DimensionError("js_divergence: dimension mismatch");
    }
    Vector mid(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        mid[k] = 0.5 * (p[k] + q[k]);
    }
    const Distribution m(std::move(mid));
    const double value = 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(q, m);
    return std::clamp(value, 0.0, std::log(2.0));
}

GptLoss gpt_loss(const Vector& e_image_side, const Vector& e_text_side,
                 std::span<const Vector> image_protos, std::span<const Vector> text_protos,
                 double tau) {
    if (image_protos.size() != text_protos.size()) {
        throw DimensionError("gpt_loss: image and text prototype counts differ");
    }
    const AssignmentPass pi = assign(e_image_side, image_protos, tau);
    const AssignmentPass pt = assign(e_text_side, text_protos, tau);
    const std::size_t k = image_protos.size();

    GptLoss out;
    out.value = js_divergence(pi.q, pt.q);
    Vector gq_img(k);
    Vector gq_txt(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double m = 0.5 * (pi.q[i] + pt.q[i]);
        if (pi.q[i] > 0.0) {
            gq_img[i] = 0.5 * std::log(pi.q[i] / m);
        }
        if (pt.q[i] > 0.0) {
            gq_txt[i] = 0.5 * std::log(pt.q[i] / m);
        }
    }
    out.grad_image_side = assignment_backward(pi, gq_img, tau);
    out.grad_text_side = assignment_backward(pt, gq_txt, tau);
    out.q_image = pi.q;
    out.q_text = pt.q;
    return out;
}

GptLoss gpt_loss(const Vector& e_image_side, const Vector& e_text_side,
                 const GlobalPrototypeSet& globals, double tau) {
    const std::vector<Vector> img = globals.image_vectors();
    const std::vector<Vector> txt = globals.text_vectors();
    return gpt_loss(e_image_side, e_text_side, img, txt, tau);
}

LossGrad gpt_loss(const Vector& e, const GlobalPrototypeSet& globals, double tau) {
    GptLoss both = gpt_loss(e, e, globals, tau);
    return {both.value, both.grad_image_side + both.grad_text_side};
}

double transfer_factor(double task_loss_local, double task_loss_global, double nu_max) {
    const double nu =
        std::clamp(task_loss_local / std::max(task_loss_global, kTaskLossFloor), 0.0, nu_max);
    if (!std::isfinite(nu)) {
        throw NumericalError("gmt_loss: non-finite transfer factor");
    }
    return nu;
}

GmtLoss gmt_loss(const Vector& local_emb, const Vector& global_emb, double task_loss_local,
                 double task_loss_global, const TransferContext& ctx) {
    ctx.validate();
    if (local_emb.size() != global_emb.size()) {
        throw DimensionError("gmt_loss: embedding dimension mismatch");
    }
    if (!std::isfinite(task_loss_local) || !std::isfinite(task_loss_global)) {
        throw NumericalError("gmt_loss: non-finite task loss");
    }
    GmtLoss out;
    out.nu = transfer_factor(task_loss_local, task_loss_global, ctx.nu_max);
    const Distribution p = softmax_temp(local_emb, ctx.distill_tau);
    const Distribution q = softmax_temp(global_emb, ctx.distill_tau);
    out.value = out.nu * kl_divergence(p, q);
    Vector grad_p(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] > 0.0) {
            grad_p[k] = std::log(p[k] / std::max(q[k], kKlFloor)) + 1.0;
        }
    }
    out.grad = softmax_backward(p, grad_p, ctx.distill_tau);
    out.grad *= out.nu;
    return out;
}

}  // namespace apromfl
