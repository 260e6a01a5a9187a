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

// Experiment runner: executes a configured training run and persists the
// config snapshot, the per-round log, final per-client reports, a summary row,
// model checkpoints and the last global prototype set.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "apromfl/config.hpp"
#include "apromfl/federation.hpp"

namespace apromfl {

inline constexpr const char* kRoundSchema = "apromfl.round/1";

/// Means over unimodal clients (accuracy) and multimodal clients (recall).
struct Summary {
    Method method = Method::AproMFL;
    std::uint64_t seed = 0;
    std::size_t rounds = 0;
    std::size_t acc_k = 5;
    std::size_t n_unimodal = 0;
    std::size_t n_multimodal = 0;
    double mean_acc1 = 0.0;
    double mean_acck = 0.0;
    double mean_r1_i2t = 0.0;
    double mean_r1_t2i = 0.0;
    double mean_r5_i2t = 0.0;
    double mean_r5_t2i = 0.0;
    double mean_r1_sum = 0.0;
    double mean_r5_sum = 0.0;
};

Summary summarize(std::span<const ClientRoundRecord> clients, const ExperimentConfig& cfg);

std::string summary_csv_header();
std::string summary_csv_row(const Summary& s);
/// One JSON object per line; `wall_seconds` is the only non-deterministic field.
std::string round_record_json(const RoundRecord& record, const ExperimentConfig& cfg);
std::string final_reports_csv(std::span<const ClientRoundRecord> clients, std::size_t acc_k);

struct RunOutput {
    TrainingResult result;
    Summary summary;
};

/// Runs training; when `out_dir` is non-empty, writes every artifact there.
RunOutput run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

enum class SweepAxis { K, O, Alpha, Clients, MappingLayers };

SweepAxis parse_axis(std::string_view name);
std::string_view axis_name(SweepAxis axis) noexcept;
/// Clients sets the multimodal, image and text counts to the same value.
void apply_axis(ExperimentConfig& cfg, SweepAxis axis, std::string_view value);

struct SweepRow {
    std::string value;
    bool ok = false;
    std::string error;
    Summary summary;
};

/// One run per value with the seed held fixed; a failed value is recorded and
/// the sweep continues. Writes <out>/<axis>_<value>/ and <out>/comparison.csv.
std::vector<SweepRow> sweep(const ExperimentConfig& base, SweepAxis axis,
                            std::span<const std::string> values, const std::filesystem::path& out_dir);
std::string comparison_csv(SweepAxis axis, std::span<const SweepRow> rows);

}  // namespace apromfl
