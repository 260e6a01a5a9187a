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

// Versioned binary containers for model checkpoints and prototype exchange
// records. All readers validate what they load.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "apromfl/nn.hpp"
#include "apromfl/prototype_types.hpp"

namespace apromfl {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kPrototypeRecordVersion = 1;

enum class ModelKind : std::uint32_t { Mapping = 1, Classifier = 2 };

struct Checkpoint {
    ModelKind kind = ModelKind::Mapping;
    DenseNet model;
};

void write_checkpoint(std::ostream& out, const DenseNet& model, ModelKind kind);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const DenseNet& model, ModelKind kind);
Checkpoint load_checkpoint(const std::filesystem::path& path);

enum class PrototypeRecordKind : std::uint32_t { Unimodal = 1, Pairs = 2, Global = 3 };

void write_prototypes(std::ostream& out, std::span<const UnimodalPrototype> protos);
void write_prototypes(std::ostream& out, std::span<const PrototypePair> pairs);
void write_prototypes(std::ostream& out, const GlobalPrototypeSet& globals);

/// Reads the record header and reports which payload follows.
PrototypeRecordKind peek_prototype_record(std::istream& in);
std::vector<UnimodalPrototype> read_unimodal_prototypes(std::istream& in);
std::vector<PrototypePair> read_prototype_pairs(std::istream& in);
GlobalPrototypeSet read_global_prototypes(std::istream& in);

}  // namespace apromfl
