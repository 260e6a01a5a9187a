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

#include "apromfl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <string>

#include "apromfl/binary_io.hpp"
#include "apromfl/error.hpp"

namespace apromfl {
namespace {

constexpr std::string_view kDatasetMagic = "APMFDATA";

Vector gaussian_vector(std::size_t dim, double scale, SeededRng& rng) {
    Vector v(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        v[i] = scale * rng.normal();
    }
    return v;
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double scale, SeededRng& rng) {
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            m(r, c) = scale * rng.normal();
        }
    }
    return m;
}

Vector view_of(const Matrix& map, const Vector& latent, double sigma, SeededRng* noise_rng) {
    Vector v = map.multiply(latent);
    for (double& x : v) {
        x = std::tanh(x);
    }
    if (noise_rng != nullptr && sigma > 0.0) {
        for (double& x : v) {
            x += sigma * noise_rng->normal();
        }
    }
    return v;
}

// Largest-remainder rounding of n * props; ties go to the lower index.
std::vector<std::size_t> apportion(std::size_t n, std::span<const double> props) {
    const std::size_t m = props.size();
    std::vector<std::size_t> counts(m);
    std::vector<double> remainder(m);
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < m; ++j) {
        const double exact = props[j] * static_cast<double>(n);
        counts[j] = static_cast<std::size_t>(std::floor(exact));
        remainder[j] = exact - static_cast<double>(counts[j]);
        assigned += counts[j];
    }
    // Floating error can push the floor sum past n by a hair; trim from the back.
    for (std::size_t j = m; assigned > n && j > 0; --j) {
        const std::size_t take = std::min(counts[j - 1], assigned - n);
        counts[j - 1] -= take;
        assigned -= take;
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t r = 0; assigned < n; r = (r + 1) % m) {
        ++counts[order[r]];
        ++assigned;
    }
    return counts;
}

}  // namespace

void SyntheticSpec::validate() const {
    if (num_classes < 1) {
        throw ConfigError("synthetic.num_classes", "must be at least 1");
    }
    if (latent_dim < 1 || image_dim < 1 || text_dim < 1) {
        throw ConfigError("synthetic dims", "latent, image and text dims must be at least 1");
    }
    if (samples_per_class < 1) {
        throw ConfigError("synthetic.samples_per_class", "must be at least 1");
    }
    if (!(view_noise_sigma >= 0.0) || !std::isfinite(view_noise_sigma)) {
        throw ConfigError("synthetic.view_noise_sigma", "must be finite and >= 0");
    }
    if (!(class_sep > 0.0) || !std::isfinite(class_sep)) {
        throw ConfigError("synthetic.class_sep", "must be finite and > 0");
    }
    if (!(latent_noise >= 0.0) || !std::isfinite(latent_noise)) {
        throw ConfigError("synthetic.latent_noise", "must be finite and >= 0");
    }
}

Sample make_sample(const SyntheticDraw& draw, const Vector& latent, std::size_t label, double sigma,
                   SeededRng* noise_rng) {
    Sample s;
    s.image_view = view_of(draw.image_map, latent, sigma, noise_rng);
    s.text_view = view_of(draw.text_map, latent, sigma, noise_rng);
    s.label = label;
    return s;
}

SyntheticDraw generate_detailed(const SyntheticSpec& spec) {
    spec.validate();
    const SeededRng root(spec.seed);
    SeededRng mean_rng = root.substream(1);
    SeededRng map_rng = root.substream(2);
    SeededRng sample_rng = root.substream(3);

    SyntheticDraw draw;
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        draw.class_means.push_back(gaussian_vector(spec.latent_dim, spec.class_sep, mean_rng));
    }
    const double map_scale = 1.0 / std::sqrt(static_cast<double>(spec.latent_dim));
    draw.image_map = gaussian_matrix(spec.image_dim, spec.latent_dim, map_scale, map_rng);
    draw.text_map = gaussian_matrix(spec.text_dim, spec.latent_dim, map_scale, map_rng);

    const std::size_t total = spec.num_classes * spec.samples_per_class;
    draw.latents.reserve(total);
    draw.samples.reserve(total);
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
            Vector z = draw.class_means[c];
            for (double& x : z) {
                x += spec.latent_noise * sample_rng.normal();
            }
            draw.samples.push_back(make_sample(draw, z, c, spec.view_noise_sigma, &sample_rng));
            draw.latents.push_back(std::move(z));
        }
    }
    return draw;
}

std::vector<Sample> generate(const SyntheticSpec& spec) { return generate_detailed(spec).samples; }

std::size_t PartitionPlan::client_size(std::size_t client) const {
    std::size_t n = 0;
    for (const auto& share : client_shares.at(client)) {
        n += share.size();
    }
    return n;
}

std::vector<std::size_t> PartitionPlan::client_indices(std::size_t client) const {
    std::vector<std::size_t> out;
    for (const auto& share : client_shares.at(client)) {
        out.insert(out.end(), share.begin(), share.end());
    }
    return out;
}

void PartitionPlan::check_partition(std::span<const std::size_t> pool) const {
    std::vector<std::size_t> seen;
    for (std::size_t c = 0; c < num_clients(); ++c) {
        const auto idx = client_indices(c);
        if (idx.empty()) {
            throw Error("partition: client " + std::to_string(c) + " is empty");
        }
        seen.insert(seen.end(), idx.begin(), idx.end());
    }
    std::vector<std::size_t> expected(pool.begin(), pool.end());
    std::sort(seen.begin(), seen.end());
    std::sort(expected.begin(), expected.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
        throw Error("partition: a sample is assigned to two clients");
    }
    if (seen != expected) {
        throw Error("partition: assigned samples do not cover the pool");
    }
}

PartitionPlan dirichlet_partition(std::span<const std::size_t> labels,
                                  std::span<const std::size_t> pool, std::size_t num_clients,
                                  double alpha, SeededRng& rng, std::size_t min_per_client) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ConfigError("alpha", "Dirichlet concentration must be finite and > 0");
    }
    if (num_clients < 1) {
        throw ConfigError("clients", "need at least one client");
    }
    min_per_client = std::max<std::size_t>(min_per_client, 1);
    if (pool.size() < num_clients * min_per_client) {
        throw Error("partition: " + std::to_string(pool.size()) + " samples cannot give " +
                    std::to_string(num_clients) + " clients " + std::to_string(min_per_client) +
                    " each");
    }
    std::size_t num_classes = 0;
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t idx : pool) {
        if (idx >= labels.size()) {
            throw DimensionError("partition: pool index out of range");
        }
        by_class[labels[idx]].push_back(idx);
        num_classes = std::max(num_classes, labels[idx] + 1);
    }

    PartitionPlan plan;
    plan.alpha = alpha;
    plan.client_shares.assign(num_clients, std::vector<std::vector<std::size_t>>(num_classes));
    std::vector<double> props(num_clients);
    for (auto& [cls, members] : by_class) {
        rng.shuffle(std::span<std::size_t>(members));
        double sum = 0.0;
        for (double& p : props) {
            p = rng.gamma(alpha);
            sum += p;
        }
        if (!(sum > 0.0)) {
            // Every gamma draw underflowed; give the class to one client.
            std::fill(props.begin(), props.end(), 0.0);
            props[rng.uniform_index(num_clients)] = 1.0;
        } else {
            for (double& p : props) {
                p /= sum;
            }
        }
        const auto counts = apportion(members.size(), props);
        std::size_t pos = 0;
        for (std::size_t j = 0; j < num_clients; ++j) {
            auto& share = plan.client_shares[j][cls];
            share.assign(members.begin() + static_cast<std::ptrdiff_t>(pos),
                         members.begin() + static_cast<std::ptrdiff_t>(pos + counts[j]));
            pos += counts[j];
        }
    }

    std::vector<std::size_t> sizes(num_clients);
    for (std::size_t j = 0; j < num_clients; ++j) {
        sizes[j] = plan.client_size(j);
    }
    for (;;) {
        const auto short_it = std::find_if(sizes.begin(), sizes.end(),
                                           [&](std::size_t s) { return s < min_per_client; });
        if (short_it == sizes.end()) {
            break;
        }
        const auto target = static_cast<std::size_t>(short_it - sizes.begin());
        const auto donor = static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) -
                                                    sizes.begin());
        auto& donor_shares = plan.client_shares[donor];
        const auto cls = static_cast<std::size_t>(
            std::max_element(donor_shares.begin(), donor_shares.end(),
                             [](const auto& a, const auto& b) { return a.size() < b.size(); }) -
            donor_shares.begin());
        plan.client_shares[target][cls].push_back(donor_shares[cls].back());
        donor_shares[cls].pop_back();
        --sizes[donor];
        ++sizes[target];
    }
    plan.check_partition(pool);
    return plan;
}

PartitionPlan dirichlet_partition(std::span<const std::size_t> labels, std::size_t num_clients,
                                  double alpha, SeededRng& rng, std::size_t min_per_client) {
    std::vector<std::size_t> pool(labels.size());
    std::iota(pool.begin(), pool.end(), 0);
    return dirichlet_partition(labels, pool, num_clients, alpha, rng, min_per_client);
}

double mean_client_class_entropy(const PartitionPlan& plan) {
    if (plan.num_clients() == 0) {
        throw DimensionError("entropy of an empty partition");
    }
    double total = 0.0;
    for (std::size_t c = 0; c < plan.num_clients(); ++c) {
        const double n = static_cast<double>(plan.client_size(c));
        double h = 0.0;
        for (const auto& share : plan.client_shares[c]) {
            if (!share.empty()) {
                const double p = static_cast<double>(share.size()) / n;
                h -= p * std::log(p);
            }
        }
        total += h;
    }
    return total / static_cast<double>(plan.num_clients());
}

std::string_view client_kind_name(ClientKind k) noexcept {
    switch (k) {
        case ClientKind::Multimodal:
            return "multimodal";
        case ClientKind::Image:
            return "image";
        case ClientKind::Text:
            return "text";
    }
    return "unknown";
}

ClientKind RoleCounts::kind_of(std::size_t client_id) const {
    if (client_id < multimodal) {
        return ClientKind::Multimodal;
    }
    if (client_id < multimodal + image) {
        return ClientKind::Image;
    }
    if (client_id < total()) {
        return ClientKind::Text;
    }
    throw DimensionError("client id " + std::to_string(client_id) + " out of range");
}

std::size_t ClientDataset::size() const noexcept {
    return std::visit([](const auto& d) { return d.size(); }, data);
}

ClientDataset make_client_dataset(std::span<const Sample> samples,
                                  std::span<const std::size_t> indices, std::size_t client_id,
                                  ClientKind kind) {
    ClientDataset ds;
    ds.client_id = client_id;
    ds.kind = kind;
    if (kind == ClientKind::Multimodal) {
        PairedData paired;
        for (std::size_t i : indices) {
            paired.images.push_back(samples[i].image_view);
            paired.texts.push_back(samples[i].text_view);
        }
        ds.data = std::move(paired);
    } else {
        UnimodalData uni;
        uni.modality = kind == ClientKind::Image ? Modality::Image : Modality::Text;
        for (std::size_t i : indices) {
            uni.features.push_back(kind == ClientKind::Image ? samples[i].image_view
                                                             : samples[i].text_view);
            uni.labels.push_back(samples[i].label);
        }
        ds.data = std::move(uni);
    }
    return ds;
}

std::vector<ClientDataset> assign_roles(std::span<const Sample> samples, const PartitionPlan& plan,
                                        const RoleCounts& counts) {
    if (counts.total() != plan.num_clients()) {
        throw DimensionError("role counts sum to " + std::to_string(counts.total()) +
                             " but the plan has " + std::to_string(plan.num_clients()) + " clients");
    }
    std::vector<ClientDataset> out;
    out.reserve(plan.num_clients());
    for (std::size_t c = 0; c < plan.num_clients(); ++c) {
        const auto idx = plan.client_indices(c);
        out.push_back(make_client_dataset(samples, idx, c, counts.kind_of(c)));
    }
    return out;
}

std::vector<std::vector<std::size_t>> disjoint_class_groups(std::size_t num_classes,
                                                            const RoleCounts& counts) {
    std::vector<std::size_t> present;
    const std::size_t per_kind[3] = {counts.multimodal, counts.image, counts.text};
    for (std::size_t k = 0; k < 3; ++k) {
        if (per_kind[k] > 0) {
            present.push_back(k);
        }
    }
    if (present.empty()) {
        throw ConfigError("clients", "need at least one client");
    }
    if (num_classes < present.size()) {
        throw ConfigError("synthetic.num_classes",
                          "disjoint client types need at least one class per present type");
    }
    std::vector<std::vector<std::size_t>> groups(3);
    for (std::size_t c = 0; c < num_classes; ++c) {
        groups[present[c % present.size()]].push_back(c);
    }
    return groups;
}

void write_dataset(std::ostream& out, const SyntheticSpec& spec, std::span<const Sample> samples) {
    io::BinaryWriter w(out);
    w.magic(kDatasetMagic);
    w.u32(kDatasetVersion);
    w.u64(spec.num_classes);
    w.u64(spec.latent_dim);
    w.u64(spec.image_dim);
    w.u64(spec.text_dim);
    w.u64(spec.samples_per_class);
    w.f64(spec.view_noise_sigma);
    w.f64(spec.class_sep);
    w.f64(spec.latent_noise);
    w.u64(spec.seed);
    w.u64(samples.size());
    for (const auto& s : samples) {
        w.u64(s.label);
        w.vector(s.image_view);
        w.vector(s.text_view);
    }
}

LoadedDataset read_dataset(std::istream& in) {
    io::BinaryReader r(in);
    r.expect_magic(kDatasetMagic);
    const auto version = r.u32();
    if (version != kDatasetVersion) {
        throw FormatError("dataset: unsupported version " + std::to_string(version));
    }
    LoadedDataset ds;
    auto& spec = ds.spec;
    spec.num_classes = r.u64();
    spec.latent_dim = r.u64();
    spec.image_dim = r.u64();
    spec.text_dim = r.u64();
    spec.samples_per_class = r.u64();
    spec.view_noise_sigma = r.f64();
    spec.class_sep = r.f64();
    spec.latent_noise = r.f64();
    spec.seed = r.u64();
    try {
        spec.validate();
    } catch (const ConfigError& e) {
        throw FormatError(std::string("dataset: invalid spec: ") + e.what());
    }
    const auto n = r.count();
    ds.samples.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Sample s;
        s.label = r.u64();
        s.image_view = r.vector();
        s.text_view = r.vector();
        if (s.label >= spec.num_classes || s.image_view.size() != spec.image_dim ||
            s.text_view.size() != spec.text_dim) {
            throw FormatError("dataset: sample " + std::to_string(i) + " does not match the spec");
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

void save_dataset(const std::filesystem::path& path, const SyntheticSpec& spec,
                  std::span<const Sample> samples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    write_dataset(out, spec, samples);
    if (!out) {
        throw Error("write failed for " + path.string());
    }
}

LoadedDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    return read_dataset(in);
}

}  // namespace apromfl
