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

#include "apromfl/serialization.hpp"

#include <fstream>

#include "apromfl/binary_io.hpp"
#include "apromfl/error.hpp"

namespace apromfl {
namespace {

constexpr std::string_view kCheckpointMagic = "APMFCKPT";
constexpr std::string_view kPrototypeMagic = "APMFPROT";

void check_version(std::uint32_t got, std::uint32_t want, const char* what) {
    if (got != want) {
        throw FormatError(std::string(what) + ": unsupported version " + std::to_string(got));
    }
}

void write_header(io::BinaryWriter& w, PrototypeRecordKind kind, std::uint64_t count) {
    w.magic(kPrototypeMagic);
    w.u32(kPrototypeRecordVersion);
    w.u32(static_cast<std::uint32_t>(kind));
    w.u64(count);
}

std::uint64_t read_header(io::BinaryReader& r, PrototypeRecordKind expected) {
    r.expect_magic(kPrototypeMagic);
    check_version(r.u32(), kPrototypeRecordVersion, "prototype record");
    const auto kind = r.u32();
    if (kind != static_cast<std::uint32_t>(expected)) {
        throw FormatError("prototype record holds kind " + std::to_string(kind) + ", expected " +
                          std::to_string(static_cast<std::uint32_t>(expected)));
    }
    return r.count();
}

Modality modality_from(std::uint32_t v) {
    if (v > 1) {
        throw FormatError("bad modality tag " + std::to_string(v));
    }
    return v == 0 ? Modality::Image : Modality::Text;
}

PairOrigin origin_from(std::uint32_t v) {
    if (v > 2) {
        throw FormatError("bad pair origin tag " + std::to_string(v));
    }
    return static_cast<PairOrigin>(v);
}

void write_pair(io::BinaryWriter& w, const PrototypePair& p) {
    w.u32(static_cast<std::uint32_t>(p.origin));
    w.vector(p.image_vec);
    w.vector(p.text_vec);
}

PrototypePair read_pair(io::BinaryReader& r) {
    PrototypePair p;
    p.origin = origin_from(r.u32());
    p.image_vec = r.vector();
    p.text_vec = r.vector();
    validate(p);
    return p;
}

}  // namespace

void write_checkpoint(std::ostream& out, const DenseNet& model, ModelKind kind) {
    io::BinaryWriter w(out);
    w.magic(kCheckpointMagic);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(kind));
    const auto dims = model.dims();
    w.u64(dims.size());
    for (std::size_t d : dims) {
        w.u64(d);
    }
    w.vector(model.flatten());
}

Checkpoint read_checkpoint(std::istream& in) {
    io::BinaryReader r(in);
    r.expect_magic(kCheckpointMagic);
    check_version(r.u32(), kCheckpointVersion, "checkpoint");
    const auto kind = r.u32();
    if (kind != 1 && kind != 2) {
        throw FormatError("checkpoint: bad model kind " + std::to_string(kind));
    }
    const auto ndims = r.count(64);
    if (ndims < 2) {
        throw FormatError("checkpoint: architecture needs at least two dims");
    }
    std::vector<DenseLayer> layers;
    std::vector<std::size_t> dims(ndims);
    for (auto& d : dims) {
        d = r.count(1U << 20);
        if (d == 0) {
            throw FormatError("checkpoint: zero layer width");
        }
    }
    std::size_t expected = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        expected += dims[l + 1] * dims[l] + dims[l + 1];
    }
    const Vector flat = r.vector();
    if (flat.size() != expected) {
        throw FormatError("checkpoint: parameter count does not match architecture");
    }
    std::size_t pos = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t in_dim = dims[l];
        const std::size_t out_dim = dims[l + 1];
        std::vector<double> w(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                              flat.begin() + static_cast<std::ptrdiff_t>(pos + in_dim * out_dim));
        pos += in_dim * out_dim;
        std::vector<double> b(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                              flat.begin() + static_cast<std::ptrdiff_t>(pos + out_dim));
        pos += out_dim;
        layers.push_back(DenseLayer{Matrix(out_dim, in_dim, std::move(w)), Vector(std::move(b))});
    }
    Checkpoint ck;
    ck.kind = static_cast<ModelKind>(kind);
    ck.model = DenseNet(std::move(layers));
    if (ck.kind == ModelKind::Classifier && ck.model.num_layers() != 1) {
        throw FormatError("checkpoint: classifier must have a single layer");
    }
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const DenseNet& model, ModelKind kind) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    write_checkpoint(out, model, kind);
    if (!out) {
        throw Error("write failed for " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    return read_checkpoint(in);
}

void write_prototypes(std::ostream& out, std::span<const UnimodalPrototype> protos) {
    io::BinaryWriter w(out);
    write_header(w, PrototypeRecordKind::Unimodal, protos.size());
    for (const auto& p : protos) {
        w.u32(p.modality == Modality::Image ? 0 : 1);
        w.u64(p.class_id);
        w.u64(p.client_id);
        w.vector(p.vector);
    }
}

void write_prototypes(std::ostream& out, std::span<const PrototypePair> pairs) {
    io::BinaryWriter w(out);
    write_header(w, PrototypeRecordKind::Pairs, pairs.size());
    for (const auto& p : pairs) {
        write_pair(w, p);
    }
}

void write_prototypes(std::ostream& out, const GlobalPrototypeSet& globals) {
    io::BinaryWriter w(out);
    write_header(w, PrototypeRecordKind::Global, globals.pairs.size());
    w.u64(globals.round);
    for (const auto& p : globals.pairs) {
        write_pair(w, p);
    }
}

PrototypeRecordKind peek_prototype_record(std::istream& in) {
    const auto start = in.tellg();
    io::BinaryReader r(in);
    r.expect_magic(kPrototypeMagic);
    check_version(r.u32(), kPrototypeRecordVersion, "prototype record");
    const auto kind = r.u32();
    in.seekg(start);
    if (kind < 1 || kind > 3) {
        throw FormatError("bad prototype record kind " + std::to_string(kind));
    }
    return static_cast<PrototypeRecordKind>(kind);
}

std::vector<UnimodalPrototype> read_unimodal_prototypes(std::istream& in) {
    io::BinaryReader r(in);
    const auto n = read_header(r, PrototypeRecordKind::Unimodal);
    std::vector<UnimodalPrototype> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        UnimodalPrototype p;
        p.modality = modality_from(r.u32());
        p.class_id = r.u64();
        p.client_id = r.u64();
        p.vector = r.vector();
        validate(p);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<PrototypePair> read_prototype_pairs(std::istream& in) {
    io::BinaryReader r(in);
    const auto n = read_header(r, PrototypeRecordKind::Pairs);
    std::vector<PrototypePair> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        out.push_back(read_pair(r));
    }
    return out;
}

GlobalPrototypeSet read_global_prototypes(std::istream& in) {
    io::BinaryReader r(in);
    const auto n = read_header(r, PrototypeRecordKind::Global);
    GlobalPrototypeSet set;
    set.round = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        set.pairs.push_back(read_pair(r));
    }
    validate(set, set.pairs.size());
    return set;
}

}  // namespace apromfl
