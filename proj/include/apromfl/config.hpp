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

// Experiment configuration: a flat `key = value` text file. Unknown keys are
// rejected; every value is validated and the error names the offending key.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "apromfl/data.hpp"

namespace apromfl {

enum class Method { AproMFL, Local, FedIoT };
enum class EvalSplit { Local, Global };
enum class EncoderKind { Identity, Projection };

std::string_view method_name(Method m) noexcept;
Method parse_method(std::string_view text);

struct ExperimentConfig {
    Method method = Method::AproMFL;
    std::uint64_t seed = 0;

    std::size_t multimodal_clients = 3;
    std::size_t image_clients = 3;
    std::size_t text_clients = 3;

    std::size_t K = 10;  // global prototype pairs
    std::size_t O = 10;  // modality completion parameter
    double tau = 0.5;
    double lambda = 0.001;
    double beta1 = 1.0;
    double beta2 = 1.0;
    double nu_max = 10.0;
    double distill_tau = 1.0;

    std::size_t rounds = 30;
    std::size_t local_epochs = 5;
    double lr = 0.05;
    double momentum = 0.0;
    std::size_t batch_size = 32;

    double alpha = 0.1;
    std::size_t min_client_samples = 40;
    double holdout_fraction = 0.2;
    EvalSplit eval_split = EvalSplit::Local;
    bool disjoint_types = false;

    std::size_t mapping_layers = 3;
    std::size_t hidden_dim = 64;
    std::size_t embed_dim = 32;
    EncoderKind encoder = EncoderKind::Identity;
    std::size_t encoder_dim = 32;  // projection output width

    std::size_t acc_k = 5;
    std::size_t kmeans_iters = 100;
    std::size_t threads = 1;

    // synthetic.seed is not configurable; the generator is seeded from `seed`.
    SyntheticSpec synthetic;

    RoleCounts roles() const noexcept { return {multimodal_clients, image_clients, text_clients}; }
    SyntheticSpec synthetic_spec() const;
    void validate() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Applies one `key = value` assignment; throws ConfigError on unknown keys or bad values.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);
std::string get_config_value(const ExperimentConfig& cfg, std::string_view key);
const std::vector<std::string>& config_keys();

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every key in a fixed order with shortest round-trip number formatting.
std::string serialize_config(const ExperimentConfig& cfg);

std::string format_double(double v);

}  // namespace apromfl
