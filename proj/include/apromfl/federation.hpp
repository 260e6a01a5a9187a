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

// Client state machines, the per-round server phase, relationship-graph
// aggregation, and the end-to-end training loop for all three methods.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "apromfl/config.hpp"
#include "apromfl/data.hpp"
#include "apromfl/losses.hpp"
#include "apromfl/metrics.hpp"
#include "apromfl/nn.hpp"
#include "apromfl/prototypes.hpp"

namespace apromfl {

struct ClientState {
    std::size_t id = 0;
    ClientKind kind = ClientKind::Image;
    // Encoded features; encoders are frozen so this is computed once.
    ClientDataset train;
    ClientDataset eval;

    std::optional<MappingModule> image_module;
    std::optional<MappingModule> text_module;
    std::optional<ClassifierHead> head;
    // Multimodal only and never placed in a RoundMessage.
    std::optional<MappingModule> cluster_image;
    std::optional<MappingModule> cluster_text;

    std::vector<SgdOptimizer> optimizers;  // image, text, head, cluster image, cluster text

    const MappingModule& own_module() const;
};

/// Everything a client uploads. There is no field able to hold the private
/// clustering model or raw samples.
struct RoundMessage {
    std::size_t client_id = 0;
    ClientKind kind = ClientKind::Image;
    std::vector<UnimodalPrototype> prototypes;  // unimodal clients
    std::vector<PrototypePair> pairs;           // multimodal clients
    std::optional<MappingModule> image_module;
    std::optional<MappingModule> text_module;
    std::optional<ClassifierHead> head;  // uploaded only under FedIoT
    double task_loss = 0.0;
};

/// Round means over minibatch steps of each objective term.
struct ClientLosses {
    double task = 0.0;
    double gpt = 0.0;
    double gmt = 0.0;
    double lmr = 0.0;
    double cluster = 0.0;
    double nu = 0.0;
    std::size_t steps = 0;
    std::size_t cluster_steps = 0;

    friend bool operator==(const ClientLosses&, const ClientLosses&) = default;
};

struct TrainingParams {
    std::size_t epochs = 5;
    std::size_t batch_size = 32;
    double lr = 0.05;
    double beta1 = 1.0;
    double beta2 = 1.0;
    double lambda = 0.1;
    std::size_t K = 10;
    std::size_t kmeans_iters = 100;
    // Multimodal clients keep a private clustering model (off for FedIoT).
    bool clustering_model = true;

    static TrainingParams from(const ExperimentConfig& cfg);
};

struct ClientRoundResult {
    RoundMessage message;
    ClientLosses losses;
};

ClientRoundResult unimodal_client_round(ClientState& state, const TransferContext& ctx,
                                        const TrainingParams& params, SeededRng& rng);
ClientRoundResult multimodal_client_round(ClientState& state, const TransferContext& ctx,
                                          const TrainingParams& params, SeededRng& rng);
ClientRoundResult client_round(ClientState& state, const TransferContext& ctx,
                               const TrainingParams& params, SeededRng& rng);

/// Consecutive minibatches of `order`; a trailing singleton joins the batch before it.
std::vector<std::span<const std::size_t>> make_batches(std::span<const std::size_t> order,
                                                       std::size_t batch_size);

struct RelationshipGraph {
    Modality modality = Modality::Image;
    std::vector<std::size_t> client_ids;
    Matrix sim;
    Matrix weights;
};

RelationshipGraph relationship_weights(std::span<const MappingModule> modules);
std::vector<MappingModule> aggregate_modules(const RelationshipGraph& graph,
                                             std::span<const MappingModule> modules);
MappingModule fediot_aggregate(std::span<const MappingModule> modules);

/// Row i of the result is sum_j weights(i, j) * flatten(models[j]), reshaped.
std::vector<DenseNet> weighted_sum(const Matrix& weights, std::span<const DenseNet> models);

struct ServerOutput {
    std::optional<GlobalPrototypeSet> globals;
    RelationshipGraph image_graph;
    RelationshipGraph text_graph;
    // Indexed by client id; what each client receives for the next round.
    std::vector<TransferContext> contexts;
    std::size_t completed_pairs = 0;
};

/// Server phase for AproMFL. Messages must be sorted by client id.
ServerOutput apromfl_server(std::span<const RoundMessage> messages, const ExperimentConfig& cfg,
                            std::size_t round, SeededRng& rng);
/// Each client continues from its personalized aggregate; the same module stays
/// in its context as the frozen teacher for the model-transfer loss.
void adopt_aggregated(std::vector<ClientState>& clients, std::span<const TransferContext> contexts);
/// FedIoT: uniform averages per modality (mapping modules and heads) written into every client.
void fediot_server(std::span<const RoundMessage> messages, std::vector<ClientState>& clients);

EvalReport evaluate_client(const ClientState& state, std::size_t acc_k);

struct ClientRoundRecord {
    std::size_t client_id = 0;
    ClientKind kind = ClientKind::Image;
    ClientLosses losses;
    EvalReport report;
};

struct RoundRecord {
    std::size_t round = 0;  // 0 is the untrained snapshot
    std::vector<ClientRoundRecord> clients;
    std::size_t global_prototypes = 0;
    double wall_seconds = 0.0;  // informational only, never in summaries
};

struct Federation {
    ExperimentConfig config;
    std::vector<ClientState> clients;
};

/// Generates data, partitions it, assigns roles, and initializes every client
/// (common initialization per modality). Identical across methods for one seed.
Federation setup_federation(const ExperimentConfig& cfg);

struct TrainingResult {
    std::vector<RoundRecord> rounds;  // rounds[0] is the untrained snapshot
    std::vector<ClientState> clients;
    std::optional<GlobalPrototypeSet> last_globals;
};

using RoundCallback = std::function<void(const RoundRecord&)>;

TrainingResult run_training(const ExperimentConfig& cfg, const RoundCallback& on_round = {});
TrainingResult run_training(Federation federation, const RoundCallback& on_round = {});

}  // namespace apromfl
