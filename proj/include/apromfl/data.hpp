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

// Synthetic paired image/text data drawn from a shared latent class structure,
// Dirichlet label-skew partitioning, and per-client role assignment.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <variant>
#include <vector>

#include "apromfl/linalg.hpp"
#include "apromfl/prototype_types.hpp"
#include "apromfl/rng.hpp"

namespace apromfl {

struct SyntheticSpec {
    std::size_t num_classes = 10;
    std::size_t latent_dim = 16;
    std::size_t image_dim = 32;
    std::size_t text_dim = 24;
    std::size_t samples_per_class = 400;
    double view_noise_sigma = 0.3;
    double class_sep = 1.0;
    double latent_noise = 1.0;  // std-dev of the per-sample latent offset
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

struct Sample {
    Vector image_view;
    Vector text_view;
    std::size_t label = 0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

/// Everything the generator drew, for tests that need the hidden structure.
struct SyntheticDraw {
    std::vector<Vector> class_means;
    Matrix image_map;  // image_dim x latent_dim
    Matrix text_map;   // text_dim x latent_dim
    std::vector<Vector> latents;
    std::vector<Sample> samples;
};

SyntheticDraw generate_detailed(const SyntheticSpec& spec);
std::vector<Sample> generate(const SyntheticSpec& spec);

/// Views for a given latent; `noise_rng` null means noiseless.
Sample make_sample(const SyntheticDraw& draw, const Vector& latent, std::size_t label, double sigma,
                   SeededRng* noise_rng);

struct PartitionPlan {
    double alpha = 1.0;
    // client_shares[client][class] = sample indices
    std::vector<std::vector<std::vector<std::size_t>>> client_shares;

    std::size_t num_clients() const noexcept { return client_shares.size(); }
    std::size_t client_size(std::size_t client) const;
    /// Indices of one client in class order.
    std::vector<std::size_t> client_indices(std::size_t client) const;
    /// Throws unless shares are disjoint, cover exactly `pool`, and every client is non-empty.
    void check_partition(std::span<const std::size_t> pool) const;
};

/// Splits `pool` (indices into `labels`) across clients class by class with
/// Dirichlet(alpha) proportions. Clients ending with fewer than `min_per_client`
/// samples take one sample at a time from the currently largest client.
PartitionPlan dirichlet_partition(std::span<const std::size_t> labels,
                                  std::span<const std::size_t> pool, std::size_t num_clients,
                                  double alpha, SeededRng& rng, std::size_t min_per_client = 1);
PartitionPlan dirichlet_partition(std::span<const std::size_t> labels, std::size_t num_clients,
                                  double alpha, SeededRng& rng, std::size_t min_per_client = 1);

/// Mean over clients of the Shannon entropy of each client's class histogram.
double mean_client_class_entropy(const PartitionPlan& plan);

enum class ClientKind { Multimodal, Image, Text };

std::string_view client_kind_name(ClientKind k) noexcept;

struct RoleCounts {
    std::size_t multimodal = 3;
    std::size_t image = 3;
    std::size_t text = 3;

    std::size_t total() const noexcept { return multimodal + image + text; }
    /// Client ids are assigned multimodal first, then image, then text.
    ClientKind kind_of(std::size_t client_id) const;
};

struct UnimodalData {
    Modality modality = Modality::Image;
    std::vector<Vector> features;
    std::vector<std::size_t> labels;

    std::size_t size() const noexcept { return features.size(); }
};

/// Paired views only; there is deliberately no label field.
struct PairedData {
    std::vector<Vector> images;
    std::vector<Vector> texts;

    std::size_t size() const noexcept { return images.size(); }
};

struct ClientDataset {
    std::size_t client_id = 0;
    ClientKind kind = ClientKind::Image;
    std::variant<UnimodalData, PairedData> data;

    std::size_t size() const noexcept;
    const UnimodalData& unimodal() const { return std::get<UnimodalData>(data); }
    const PairedData& paired() const { return std::get<PairedData>(data); }
};

ClientDataset make_client_dataset(std::span<const Sample> samples,
                                  std::span<const std::size_t> indices, std::size_t client_id,
                                  ClientKind kind);

std::vector<ClientDataset> assign_roles(std::span<const Sample> samples, const PartitionPlan& plan,
                                        const RoleCounts& counts);

/// Class subsets per client kind when client types see disjoint classes:
/// class c goes to the (c mod n)-th kind among the kinds with at least one client.
std::vector<std::vector<std::size_t>> disjoint_class_groups(std::size_t num_classes,
                                                            const RoleCounts& counts);

inline constexpr std::uint32_t kDatasetVersion = 1;

void write_dataset(std::ostream& out, const SyntheticSpec& spec, std::span<const Sample> samples);
struct LoadedDataset {
    SyntheticSpec spec;
    std::vector<Sample> samples;
};
LoadedDataset read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const SyntheticSpec& spec,
                  std::span<const Sample> samples);
LoadedDataset load_dataset(const std::filesystem::path& path);

}  // namespace apromfl
