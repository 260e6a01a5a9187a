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

#include "apromfl/federation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <string>
#include <thread>

#include "apromfl/error.hpp"

namespace apromfl {
namespace {

enum OptimizerSlot : std::size_t {
    kImage = 0,
    kText = 1,
    kHead = 2,
    kClusterImage = 3,
    kClusterText = 4,
};

constexpr std::uint64_t kStreamPartition = 10;
constexpr std::uint64_t kStreamHoldout = 11;
constexpr std::uint64_t kStreamInit = 20;
constexpr std::uint64_t kStreamEncoder = 21;
constexpr std::uint64_t kStreamServer = 500;
constexpr std::uint64_t kStreamClientBase = 1000;

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    auto run_one = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t workers = std::min(threads, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            run_one(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                    run_one(i);
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    // Report the lowest failing index so diagnostics do not depend on scheduling.
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::vector<Vector> embed_all(const MappingModule& module, std::span<const Vector> xs) {
    std::vector<Vector> out;
    out.reserve(xs.size());
    for (const auto& x : xs) {
        out.push_back(module.forward(x));
    }
    return out;
}

std::vector<std::size_t> iota_order(std::size_t n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    return order;
}

void finish_means(ClientLosses& l) {
    if (l.steps > 0) {
        const double inv = 1.0 / static_cast<double>(l.steps);
        l.task *= inv;
        l.gpt *= inv;
        l.gmt *= inv;
        l.lmr *= inv;
        l.nu *= inv;
    }
    if (l.cluster_steps > 0) {
        l.cluster /= static_cast<double>(l.cluster_steps);
    }
}

void require_finite_loss(double v, const char* what, std::size_t client) {
    if (!std::isfinite(v)) {
        throw NumericalError(std::string(what) + " became non-finite on client " +
                             std::to_string(client));
    }
}

std::vector<std::size_t> gather(std::span<const std::size_t> batch,
                                std::span<const std::size_t> labels) {
    std::vector<std::size_t> out;
    out.reserve(batch.size());
    for (std::size_t i : batch) {
        out.push_back(labels[i]);
    }
    return out;
}

// Trains the private clustering model and returns the pairs built from its
// refreshed embeddings.
std::vector<PrototypePair> refresh_clustering_model(ClientState& state, const TransferContext& ctx,
                                                    const TrainingParams& params, SeededRng& rng,
                                                    ClientLosses& losses) {
    const PairedData& data = state.train.paired();
    const std::size_t n = data.size();
    const std::size_t k = std::min(params.K, n);
    MappingModule& ci = *state.cluster_image;
    MappingModule& ct = *state.cluster_text;

    const LocalPairs initial = clustering_prototype_pairs(embed_all(ci, data.images),
                                                          embed_all(ct, data.texts), k, rng);
    const std::vector<std::size_t>& pseudo = initial.clusters.pseudo_labels;

    auto order = iota_order(n);
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (auto batch : make_batches(order, params.batch_size)) {
            const std::size_t b = batch.size();
            std::vector<ForwardTrace> ti(b);
            std::vector<ForwardTrace> tt(b);
            std::vector<Vector> ei(b);
            std::vector<Vector> et(b);
            for (std::size_t j = 0; j < b; ++j) {
                ei[j] = ci.forward(data.images[batch[j]], ti[j]);
                et[j] = ct.forward(data.texts[batch[j]], tt[j]);
            }
            const auto clusters = ClusterAssignment::from_labels(gather(batch, pseudo));
            const ClusteringLoss cl =
                clustering_total_loss(ei, et, clusters, ctx.tau, 1.0 / static_cast<double>(b));
            require_finite_loss(cl.value, "clustering loss", state.id);
            auto tape_i = GradientTape::zeros_like(ci);
            auto tape_t = GradientTape::zeros_like(ct);
            for (std::size_t j = 0; j < b; ++j) {
                ci.backward(ti[j], cl.grad_image[j], tape_i);
                ct.backward(tt[j], cl.grad_text[j], tape_t);
            }
            state.optimizers[kClusterImage].step(ci, tape_i);
            state.optimizers[kClusterText].step(ct, tape_t);
            losses.cluster += cl.value;
            ++losses.cluster_steps;
        }
    }
    return clustering_prototype_pairs(embed_all(ci, data.images), embed_all(ct, data.texts), k, rng)
        .pairs;
}

void encode_in_place(std::vector<Vector>& xs, const Encoder& enc) {
    for (auto& x : xs) {
        x = enc.encode(x);
    }
}

void encode_dataset(ClientDataset& ds, const Encoder& image_enc, const Encoder& text_enc) {
    if (ds.kind == ClientKind::Multimodal) {
        auto& p = std::get<PairedData>(ds.data);
        encode_in_place(p.images, image_enc);
        encode_in_place(p.texts, text_enc);
    } else {
        auto& u = std::get<UnimodalData>(ds.data);
        encode_in_place(u.features, u.modality == Modality::Image ? image_enc : text_enc);
    }
}

TransferContext base_context(const ExperimentConfig& cfg) {
    TransferContext ctx;
    ctx.tau = cfg.tau;
    ctx.nu_max = cfg.nu_max;
    ctx.distill_tau = cfg.distill_tau;
    ctx.validate();
    return ctx;
}

std::vector<ClientRoundRecord> evaluate_all(const std::vector<ClientState>& clients,
                                            std::size_t acc_k, std::size_t threads) {
    std::vector<ClientRoundRecord> out(clients.size());
    parallel_for(clients.size(), threads, [&](std::size_t c) {
        out[c].client_id = clients[c].id;
        out[c].kind = clients[c].kind;
        out[c].report = evaluate_client(clients[c], acc_k);
    });
    return out;
}

// Holds out max(1, round(fraction * n)) samples, leaving at least two for training.
std::size_t holdout_count(std::size_t n, double fraction) {
    const auto want = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    return std::clamp<std::size_t>(want, 1, n - 2);
}

}  // namespace

const MappingModule& ClientState::own_module() const {
    if (kind == ClientKind::Image) {
        return *image_module;
    }
    if (kind == ClientKind::Text) {
        return *text_module;
    }
    throw Error("own_module: multimodal clients hold two modules");
}

TrainingParams TrainingParams::from(const ExperimentConfig& cfg) {
    TrainingParams p;
    p.epochs = cfg.local_epochs;
    p.batch_size = cfg.batch_size;
    p.lr = cfg.lr;
    p.beta1 = cfg.beta1;
    p.beta2 = cfg.beta2;
    p.lambda = cfg.lambda;
    p.K = cfg.K;
    p.kmeans_iters = cfg.kmeans_iters;
    p.clustering_model = cfg.method != Method::FedIoT;
    return p;
}

std::vector<std::span<const std::size_t>> make_batches(std::span<const std::size_t> order,
                                                       std::size_t batch_size) {
    if (batch_size < 1) {
        throw Error("make_batches: batch size must be positive");
    }
    std::vector<std::span<const std::size_t>> out;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t len = std::min(batch_size, order.size() - start);
        if (len == 1 && !out.empty()) {
            const auto prev = out.back();
            out.back() = order.subspan(start - prev.size(), prev.size() + 1);
        } else {
            out.push_back(order.subspan(start, len));
        }
    }
    return out;
}

ClientRoundResult unimodal_client_round(ClientState& state, const TransferContext& ctx,
                                        const TrainingParams& params, SeededRng& rng) {
    if (state.kind == ClientKind::Multimodal) {
        throw Error("unimodal_client_round: client " + std::to_string(state.id) + " is multimodal");
    }
    const UnimodalData& data = state.train.unimodal();
    const bool is_image = state.kind == ClientKind::Image;
    MappingModule& module = is_image ? *state.image_module : *state.text_module;
    SgdOptimizer& module_opt = state.optimizers[is_image ? kImage : kText];
    ClassifierHead& head = *state.head;
    const std::optional<MappingModule>& teacher =
        is_image ? ctx.global_image_module : ctx.global_text_module;
    const bool use_gpt = ctx.has_prototypes() && params.beta1 > 0.0;
    const bool use_gmt = teacher.has_value() && params.beta2 > 0.0;

    ClientLosses losses;
    auto order = iota_order(data.size());
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (auto batch : make_batches(order, params.batch_size)) {
            const std::size_t b = batch.size();
            const double inv = 1.0 / static_cast<double>(b);
            std::vector<ForwardTrace> traces(b);
            std::vector<ForwardTrace> head_traces(b);
            std::vector<Vector> embs(b);
            std::vector<LossGrad> ces(b);
            double task = 0.0;
            for (std::size_t j = 0; j < b; ++j) {
                const std::size_t i = batch[j];
                embs[j] = module.forward(data.features[i], traces[j]);
                ces[j] = cross_entropy(head.forward(embs[j], head_traces[j]), data.labels[i]);
                task += ces[j].value;
            }
            task *= inv;

            std::vector<Vector> teacher_embs;
            double task_global = 0.0;
            if (use_gmt) {
                teacher_embs.reserve(b);
                for (std::size_t j = 0; j < b; ++j) {
                    teacher_embs.push_back(teacher->forward(data.features[batch[j]]));
                    task_global += cross_entropy(head.forward(teacher_embs[j]), data.labels[batch[j]]).value;
                }
                task_global *= inv;
            }

            auto tape_m = GradientTape::zeros_like(module);
            auto tape_h = GradientTape::zeros_like(head);
            double gpt = 0.0;
            double gmt = 0.0;
            double nu = 0.0;
            for (std::size_t j = 0; j < b; ++j) {
                Vector ce_grad = ces[j].grad;
                ce_grad *= inv;
                Vector upstream = head.backward(head_traces[j], ce_grad, tape_h);
                if (use_gpt) {
                    const LossGrad g = gpt_loss(embs[j], *ctx.global_prototypes, ctx.tau);
                    gpt += g.value;
                    axpy(params.beta1 * inv, g.grad, upstream);
                }
                if (use_gmt) {
                    const GmtLoss m = gmt_loss(embs[j], teacher_embs[j], task, task_global, ctx);
                    gmt += m.value;
                    nu = m.nu;
                    axpy(params.beta2 * inv, m.grad, upstream);
                }
                module.backward(traces[j], upstream, tape_m);
            }
            gpt *= inv;
            gmt *= inv;
            require_finite_loss(task + gpt + gmt, "unimodal objective", state.id);
            module_opt.step(module, tape_m);
            state.optimizers[kHead].step(head, tape_h);

            losses.task += task;
            losses.gpt += gpt;
            losses.gmt += gmt;
            losses.nu += nu;
            ++losses.steps;
        }
    }
    finish_means(losses);

    ClientRoundResult result;
    result.losses = losses;
    auto& msg = result.message;
    msg.client_id = state.id;
    msg.kind = state.kind;
    msg.prototypes = label_guided_prototypes(embed_all(module, data.features), data.labels,
                                             is_image ? Modality::Image : Modality::Text, state.id);
    if (is_image) {
        msg.image_module = module;
    } else {
        msg.text_module = module;
    }
    msg.task_loss = losses.task;
    return result;
}

ClientRoundResult multimodal_client_round(ClientState& state, const TransferContext& ctx,
                                          const TrainingParams& params, SeededRng& rng) {
    if (state.kind != ClientKind::Multimodal) {
        throw Error("multimodal_client_round: client " + std::to_string(state.id) +
                    " is unimodal");
    }
    const PairedData& data = state.train.paired();
    MappingModule& mi = *state.image_module;
    MappingModule& mt = *state.text_module;
    const bool use_gpt = ctx.has_prototypes() && params.beta1 > 0.0;
    const bool use_gmt =
        ctx.global_image_module.has_value() && ctx.global_text_module.has_value() && params.beta2 > 0.0;
    const bool use_lmr = params.clustering_model && params.lambda > 0.0;

    ClientLosses losses;
    ClientRoundResult result;
    if (params.clustering_model) {
        result.message.pairs = refresh_clustering_model(state, ctx, params, rng, losses);
    }

    auto order = iota_order(data.size());
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (auto batch : make_batches(order, params.batch_size)) {
            const std::size_t b = batch.size();
            const double inv = 1.0 / static_cast<double>(b);
            std::vector<ForwardTrace> ti(b);
            std::vector<ForwardTrace> tt(b);
            std::vector<Vector> ei(b);
            std::vector<Vector> et(b);
            for (std::size_t j = 0; j < b; ++j) {
                ei[j] = mi.forward(data.images[batch[j]], ti[j]);
                et[j] = mt.forward(data.texts[batch[j]], tt[j]);
            }
            PairLossGrad task = retrieval_task_loss(ei, et, ctx.tau);
            std::vector<Vector>& up_i = task.grad_image;
            std::vector<Vector>& up_t = task.grad_text;

            double gpt = 0.0;
            double gmt = 0.0;
            double nu = 0.0;
            if (use_gmt) {
                std::vector<Vector> gi(b);
                std::vector<Vector> gt(b);
                for (std::size_t j = 0; j < b; ++j) {
                    gi[j] = ctx.global_image_module->forward(data.images[batch[j]]);
                    gt[j] = ctx.global_text_module->forward(data.texts[batch[j]]);
                }
                const double task_global = retrieval_task_loss(gi, gt, ctx.tau).value;
                for (std::size_t j = 0; j < b; ++j) {
                    const GmtLoss a = gmt_loss(ei[j], gi[j], task.value, task_global, ctx);
                    const GmtLoss c = gmt_loss(et[j], gt[j], task.value, task_global, ctx);
                    gmt += a.value + c.value;
                    nu = a.nu;
                    axpy(params.beta2 * inv, a.grad, up_i[j]);
                    axpy(params.beta2 * inv, c.grad, up_t[j]);
                }
            }
            if (use_gpt) {
                for (std::size_t j = 0; j < b; ++j) {
                    const GptLoss g = gpt_loss(ei[j], et[j], *ctx.global_prototypes, ctx.tau);
                    gpt += g.value;
                    axpy(params.beta1 * inv, g.grad_image_side, up_i[j]);
                    axpy(params.beta1 * inv, g.grad_text_side, up_t[j]);
                }
            }
            gpt *= inv;
            gmt *= inv;

            auto tape_i = GradientTape::zeros_like(mi);
            auto tape_t = GradientTape::zeros_like(mt);
            for (std::size_t j = 0; j < b; ++j) {
                mi.backward(ti[j], up_i[j], tape_i);
                mt.backward(tt[j], up_t[j], tape_t);
            }
            double lmr = 0.0;
            if (use_lmr) {
                const ModuleLossGrad li = lmr_loss(mi, *state.cluster_image, params.lambda);
                const ModuleLossGrad lt = lmr_loss(mt, *state.cluster_text, params.lambda);
                tape_i.accumulate(li.grad);
                tape_t.accumulate(lt.grad);
                lmr = li.value + lt.value;
            }
            require_finite_loss(task.value + gpt + gmt + lmr, "multimodal objective", state.id);
            state.optimizers[kImage].step(mi, tape_i);
            state.optimizers[kText].step(mt, tape_t);

            losses.task += task.value;
            losses.gpt += gpt;
            losses.gmt += gmt;
            losses.lmr += lmr;
            losses.nu += nu;
            ++losses.steps;
        }
    }
    finish_means(losses);

    result.losses = losses;
    auto& msg = result.message;
    msg.client_id = state.id;
    msg.kind = state.kind;
    msg.image_module = mi;
    msg.text_module = mt;
    msg.task_loss = losses.task;
    return result;
}

ClientRoundResult client_round(ClientState& state, const TransferContext& ctx,
                               const TrainingParams& params, SeededRng& rng) {
    ClientRoundResult r = state.kind == ClientKind::Multimodal
                              ? multimodal_client_round(state, ctx, params, rng)
                              : unimodal_client_round(state, ctx, params, rng);
    if (!params.clustering_model && state.kind != ClientKind::Multimodal) {
        r.message.head = state.head;
    }
    return r;
}

RelationshipGraph relationship_weights(std::span<const MappingModule> modules) {
    if (modules.empty()) {
        throw Error("relationship_weights: no modules");
    }
    const std::size_t n = modules.size();
    std::vector<Vector> flat;
    flat.reserve(n);
    for (const auto& m : modules) {
        if (!m.same_architecture(modules.front())) {
            throw DimensionError("relationship_weights: architecture mismatch");
        }
        flat.push_back(m.flatten());
    }
    RelationshipGraph g;
    g.sim = Matrix(n, n);
    g.weights = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        g.sim(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            if (squared_norm(flat[i]) > 0.0 && squared_norm(flat[j]) > 0.0) {
                s = cosine_similarity(flat[i], flat[j]);
            }
            g.sim(i, j) = s;
            g.sim(j, i) = s;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row += std::max(g.sim(i, j), 0.0);
        }
        for (std::size_t j = 0; j < n; ++j) {
            g.weights(i, j) = std::max(g.sim(i, j), 0.0) / row;
        }
    }
    return g;
}

std::vector<DenseNet> weighted_sum(const Matrix& weights, std::span<const DenseNet> models) {
    if (models.empty() || weights.cols() != models.size()) {
        throw DimensionError("weighted_sum: weight columns must match the model count");
    }
    std::vector<Vector> flat;
    flat.reserve(models.size());
    for (const auto& m : models) {
        if (!m.same_architecture(models.front())) {
            throw DimensionError("weighted_sum: architecture mismatch");
        }
        flat.push_back(m.flatten());
    }
    std::vector<DenseNet> out;
    out.reserve(weights.rows());
    for (std::size_t i = 0; i < weights.rows(); ++i) {
        Vector acc(flat.front().size());
        for (std::size_t j = 0; j < models.size(); ++j) {
            axpy(weights(i, j), flat[j], acc);
        }
        out.push_back(models.front().unflatten_same(acc));
    }
    return out;
}

namespace {

std::vector<DenseNet> as_nets(std::span<const MappingModule> modules) {
    return {modules.begin(), modules.end()};
}

Matrix uniform_weights(std::size_t rows, std::size_t n) {
    return Matrix(rows, n, 1.0 / static_cast<double>(n));
}

}  // namespace

std::vector<MappingModule> aggregate_modules(const RelationshipGraph& graph,
                                             std::span<const MappingModule> modules) {
    if (graph.weights.rows() != modules.size()) {
        throw DimensionError("aggregate_modules: graph does not match the module list");
    }
    const auto nets = as_nets(modules);
    std::vector<MappingModule> out;
    for (auto& net : weighted_sum(graph.weights, nets)) {
        out.emplace_back(std::move(net));
    }
    return out;
}

MappingModule fediot_aggregate(std::span<const MappingModule> modules) {
    if (modules.empty()) {
        throw Error("fediot_aggregate: no modules");
    }
    const auto nets = as_nets(modules);
    return MappingModule(weighted_sum(uniform_weights(1, modules.size()), nets).front());
}

ServerOutput apromfl_server(std::span<const RoundMessage> messages, const ExperimentConfig& cfg,
                            std::size_t round, SeededRng& rng) {
    for (std::size_t i = 1; i < messages.size(); ++i) {
        if (messages[i - 1].client_id >= messages[i].client_id) {
            throw Error("apromfl_server: messages must be in ascending client order");
        }
    }
    ServerOutput out;
    std::vector<PrototypePair> mm_pairs;
    std::vector<UnimodalPrototype> uni;
    for (const auto& m : messages) {
        mm_pairs.insert(mm_pairs.end(), m.pairs.begin(), m.pairs.end());
        uni.insert(uni.end(), m.prototypes.begin(), m.prototypes.end());
    }
    if (!mm_pairs.empty()) {
        // Completion needs paired knowledge; without multimodal pairs no global set exists.
        const std::size_t top_o = std::min(cfg.O, mm_pairs.size());
        std::vector<PrototypePair> all = mm_pairs;
        for (const auto& p : uni) {
            all.push_back(semantic_complete(p, mm_pairs, top_o));
        }
        out.completed_pairs = uni.size();
        GlobalPrototypeSet globals =
            build_global_prototypes(all, std::min(cfg.K, all.size()), rng);
        globals.round = round;
        out.globals = std::move(globals);
    }

    std::size_t max_id = 0;
    for (const auto& m : messages) {
        max_id = std::max(max_id, m.client_id);
    }
    out.contexts.assign(messages.empty() ? 0 : max_id + 1, base_context(cfg));
    for (auto& ctx : out.contexts) {
        ctx.global_prototypes = out.globals;
    }

    auto aggregate = [&](Modality modality) {
        RelationshipGraph graph;
        std::vector<MappingModule> modules;
        for (const auto& m : messages) {
            const auto& mod = modality == Modality::Image ? m.image_module : m.text_module;
            if (mod) {
                graph.client_ids.push_back(m.client_id);
                modules.push_back(*mod);
            }
        }
        if (modules.empty()) {
            graph.modality = modality;
            return graph;
        }
        RelationshipGraph built = relationship_weights(modules);
        built.modality = modality;
        built.client_ids = std::move(graph.client_ids);
        const auto aggregated = aggregate_modules(built, modules);
        for (std::size_t i = 0; i < aggregated.size(); ++i) {
            auto& ctx = out.contexts[built.client_ids[i]];
            (modality == Modality::Image ? ctx.global_image_module : ctx.global_text_module) =
                aggregated[i];
        }
        return built;
    };
    out.image_graph = aggregate(Modality::Image);
    out.text_graph = aggregate(Modality::Text);
    return out;
}

void fediot_server(std::span<const RoundMessage> messages, std::vector<ClientState>& clients) {
    std::vector<MappingModule> image_modules;
    std::vector<MappingModule> text_modules;
    std::vector<DenseNet> image_heads;
    std::vector<DenseNet> text_heads;
    for (const auto& m : messages) {
        if (m.image_module) {
            image_modules.push_back(*m.image_module);
        }
        if (m.text_module) {
            text_modules.push_back(*m.text_module);
        }
        if (m.head) {
            (m.kind == ClientKind::Image ? image_heads : text_heads).push_back(*m.head);
        }
    }
    std::optional<MappingModule> image_avg;
    std::optional<MappingModule> text_avg;
    std::optional<ClassifierHead> image_head;
    std::optional<ClassifierHead> text_head;
    if (!image_modules.empty()) {
        image_avg = fediot_aggregate(image_modules);
    }
    if (!text_modules.empty()) {
        text_avg = fediot_aggregate(text_modules);
    }
    if (!image_heads.empty()) {
        image_head = ClassifierHead(weighted_sum(uniform_weights(1, image_heads.size()), image_heads).front());
    }
    if (!text_heads.empty()) {
        text_head = ClassifierHead(weighted_sum(uniform_weights(1, text_heads.size()), text_heads).front());
    }
    for (auto& c : clients) {
        if (c.image_module && image_avg) {
            c.image_module = image_avg;
        }
        if (c.text_module && text_avg) {
            c.text_module = text_avg;
        }
        if (c.head) {
            const auto& h = c.kind == ClientKind::Image ? image_head : text_head;
            if (h) {
                c.head = h;
            }
        }
    }
}

void adopt_aggregated(std::vector<ClientState>& clients, std::span<const TransferContext> contexts) {
    for (auto& c : clients) {
        if (c.id >= contexts.size()) {
            continue;
        }
        const TransferContext& ctx = contexts[c.id];
        if (c.image_module && ctx.global_image_module) {
            c.image_module = ctx.global_image_module;
        }
        if (c.text_module && ctx.global_text_module) {
            c.text_module = ctx.global_text_module;
        }
    }
}

EvalReport evaluate_client(const ClientState& state, std::size_t acc_k) {
    if (state.kind == ClientKind::Multimodal) {
        const PairedData& data = state.eval.paired();
        return retrieval_report(embed_all(*state.image_module, data.images),
                                embed_all(*state.text_module, data.texts));
    }
    const UnimodalData& data = state.eval.unimodal();
    const MappingModule& module = state.own_module();
    std::vector<Vector> logits;
    logits.reserve(data.size());
    for (const auto& x : data.features) {
        logits.push_back(state.head->forward(module.forward(x)));
    }
    std::vector<std::size_t> ks{1};
    if (acc_k != 1) {
        ks.push_back(acc_k);
    }
    return classification_report(logits, data.labels, ks);
}

Federation setup_federation(const ExperimentConfig& cfg) {
    cfg.validate();
    const SyntheticSpec spec = cfg.synthetic_spec();
    const std::vector<Sample> samples = generate(spec);
    std::vector<std::size_t> labels;
    labels.reserve(samples.size());
    for (const auto& s : samples) {
        labels.push_back(s.label);
    }
    const SeededRng root(cfg.seed);
    const RoleCounts roles = cfg.roles();
    const std::size_t n_clients = roles.total();

    // Global split: a stratified holdout taken before partitioning.
    std::vector<std::size_t> pool;
    std::vector<std::size_t> global_eval;
    if (cfg.eval_split == EvalSplit::Global) {
        SeededRng holdout_rng = root.substream(kStreamHoldout);
        for (std::size_t c = 0; c < spec.num_classes; ++c) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                if (labels[i] == c) {
                    members.push_back(i);
                }
            }
            holdout_rng.shuffle(std::span<std::size_t>(members));
            const std::size_t h = holdout_count(members.size(), cfg.holdout_fraction);
            global_eval.insert(global_eval.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(h));
            pool.insert(pool.end(), members.begin() + static_cast<std::ptrdiff_t>(h), members.end());
        }
        std::sort(global_eval.begin(), global_eval.end());
        std::sort(pool.begin(), pool.end());
    } else {
        pool = iota_order(labels.size());
    }

    std::vector<std::vector<std::size_t>> client_indices(n_clients);
    std::vector<std::vector<std::size_t>> kind_classes(3);
    SeededRng part_rng = root.substream(kStreamPartition);
    if (cfg.disjoint_types) {
        kind_classes = disjoint_class_groups(spec.num_classes, roles);
        const std::size_t per_kind[3] = {roles.multimodal, roles.image, roles.text};
        std::size_t first_id = 0;
        for (std::size_t k = 0; k < 3; ++k) {
            if (per_kind[k] == 0) {
                continue;
            }
            std::vector<std::size_t> sub;
            for (std::size_t i : pool) {
                if (std::find(kind_classes[k].begin(), kind_classes[k].end(), labels[i]) !=
                    kind_classes[k].end()) {
                    sub.push_back(i);
                }
            }
            SeededRng kind_rng = part_rng.substream(k);
            const PartitionPlan plan = dirichlet_partition(labels, sub, per_kind[k], cfg.alpha,
                                                           kind_rng, cfg.min_client_samples);
            for (std::size_t c = 0; c < per_kind[k]; ++c) {
                client_indices[first_id + c] = plan.client_indices(c);
            }
            first_id += per_kind[k];
        }
    } else {
        const PartitionPlan plan = dirichlet_partition(labels, pool, n_clients, cfg.alpha, part_rng,
                                                       cfg.min_client_samples);
        for (std::size_t c = 0; c < n_clients; ++c) {
            client_indices[c] = plan.client_indices(c);
        }
    }

    const std::size_t image_in = cfg.encoder == EncoderKind::Projection ? cfg.encoder_dim : spec.image_dim;
    const std::size_t text_in = cfg.encoder == EncoderKind::Projection ? cfg.encoder_dim : spec.text_dim;
    const SeededRng enc_rng = root.substream(kStreamEncoder);
    const Encoder image_enc = cfg.encoder == EncoderKind::Projection
                                  ? Encoder::projection(enc_rng.substream(0).seed(), spec.image_dim, cfg.encoder_dim)
                                  : Encoder::identity(spec.image_dim);
    const Encoder text_enc = cfg.encoder == EncoderKind::Projection
                                 ? Encoder::projection(enc_rng.substream(1).seed(), spec.text_dim, cfg.encoder_dim)
                                 : Encoder::identity(spec.text_dim);

    // One initialization per modality shared by every client.
    const SeededRng init = root.substream(kStreamInit);
    SeededRng image_init = init.substream(0);
    SeededRng text_init = init.substream(1);
    SeededRng image_head_init = init.substream(2);
    SeededRng text_head_init = init.substream(3);
    const MappingModule image_module(
        DenseNet::random(mapping_dims(image_in, cfg.hidden_dim, cfg.embed_dim, cfg.mapping_layers), image_init));
    const MappingModule text_module(
        DenseNet::random(mapping_dims(text_in, cfg.hidden_dim, cfg.embed_dim, cfg.mapping_layers), text_init));
    const ClassifierHead image_head = ClassifierHead::random(cfg.embed_dim, spec.num_classes, image_head_init);
    const ClassifierHead text_head = ClassifierHead::random(cfg.embed_dim, spec.num_classes, text_head_init);

    Federation fed;
    fed.config = cfg;
    SeededRng split_rng = root.substream(kStreamHoldout).substream(1);
    for (std::size_t c = 0; c < n_clients; ++c) {
        ClientState st;
        st.id = c;
        st.kind = roles.kind_of(c);
        std::vector<std::size_t> idx = client_indices[c];
        std::vector<std::size_t> eval_idx;
        if (cfg.eval_split == EvalSplit::Local) {
            SeededRng r = split_rng.substream(c);
            r.shuffle(std::span<std::size_t>(idx));
            const std::size_t h = holdout_count(idx.size(), cfg.holdout_fraction);
            eval_idx.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(h));
            idx.erase(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(h));
        } else if (cfg.disjoint_types) {
            const std::size_t kind = static_cast<std::size_t>(st.kind);
            for (std::size_t i : global_eval) {
                if (std::find(kind_classes[kind].begin(), kind_classes[kind].end(), labels[i]) !=
                    kind_classes[kind].end()) {
                    eval_idx.push_back(i);
                }
            }
        } else {
            eval_idx = global_eval;
        }
        st.train = make_client_dataset(samples, idx, c, st.kind);
        st.eval = make_client_dataset(samples, eval_idx, c, st.kind);
        encode_dataset(st.train, image_enc, text_enc);
        encode_dataset(st.eval, image_enc, text_enc);
        if (st.kind != ClientKind::Text) {
            st.image_module = image_module;
        }
        if (st.kind != ClientKind::Image) {
            st.text_module = text_module;
        }
        if (st.kind == ClientKind::Image) {
            st.head = image_head;
        } else if (st.kind == ClientKind::Text) {
            st.head = text_head;
        } else {
            st.cluster_image = image_module;
            st.cluster_text = text_module;
        }
        st.optimizers.assign(5, SgdOptimizer(cfg.lr, cfg.momentum));
        fed.clients.push_back(std::move(st));
    }
    return fed;
}

TrainingResult run_training(const ExperimentConfig& cfg, const RoundCallback& on_round) {
    return run_training(setup_federation(cfg), on_round);
}

TrainingResult run_training(Federation federation, const RoundCallback& on_round) {
    const ExperimentConfig& cfg = federation.config;
    cfg.validate();
    std::vector<ClientState>& clients = federation.clients;
    const std::size_t n = clients.size();
    const TrainingParams params = TrainingParams::from(cfg);
    const SeededRng root(cfg.seed);

    TrainingResult result;
    std::vector<TransferContext> contexts(n, base_context(cfg));

    RoundRecord initial;
    initial.round = 0;
    initial.clients = evaluate_all(clients, cfg.acc_k, cfg.threads);
    if (on_round) {
        on_round(initial);
    }
    result.rounds.push_back(std::move(initial));

    for (std::size_t t = 1; t <= cfg.rounds; ++t) {
        const auto start = std::chrono::steady_clock::now();
        std::vector<ClientRoundResult> outcomes(n);
        parallel_for(n, cfg.threads, [&](std::size_t c) {
            SeededRng rng = root.substream(kStreamClientBase + c).substream(t);
            outcomes[c] = client_round(clients[c], contexts[c], params, rng);
        });

        RoundRecord record;
        record.round = t;
        // Each method is scored on the model it deploys: personalized models
        // right after local training, or the FedIoT global model after averaging.
        const bool eval_before_server = cfg.method != Method::FedIoT;
        if (eval_before_server) {
            record.clients = evaluate_all(clients, cfg.acc_k, cfg.threads);
        }
        if (cfg.method != Method::Local) {
            std::vector<RoundMessage> messages;
            messages.reserve(n);
            for (auto& o : outcomes) {
                messages.push_back(o.message);
            }
            if (cfg.method == Method::AproMFL) {
                SeededRng server_rng = root.substream(kStreamServer).substream(t);
                ServerOutput server = apromfl_server(messages, cfg, t, server_rng);
                contexts = std::move(server.contexts);
                if (t < cfg.rounds) {
                    // After the last round the evaluated local models are final.
                    adopt_aggregated(clients, contexts);
                }
                result.last_globals = server.globals;
                record.global_prototypes = result.last_globals ? result.last_globals->size() : 0;
            } else {
                fediot_server(messages, clients);
            }
        }

        if (!eval_before_server) {
            record.clients = evaluate_all(clients, cfg.acc_k, cfg.threads);
        }
        for (std::size_t c = 0; c < n; ++c) {
            record.clients[c].losses = outcomes[c].losses;
        }
        record.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (on_round) {
            on_round(record);
        }
        result.rounds.push_back(std::move(record));
    }
    result.clients = std::move(clients);
    return result;
}

}  // namespace apromfl
