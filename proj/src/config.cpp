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

#include "apromfl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "apromfl/error.hpp"

namespace apromfl {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::uint64_t parse_u64(std::string_view key, std::string_view text) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw ConfigError(std::string(key), "expected a non-negative integer, got '" +
                                                std::string(text) + "'");
    }
    return v;
}

double parse_f64(std::string_view key, std::string_view text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty() || !std::isfinite(v)) {
        throw ConfigError(std::string(key), "expected a finite number, got '" + std::string(text) +
                                                "'");
    }
    return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
    if (text == "true") {
        return true;
    }
    if (text == "false") {
        return false;
    }
    throw ConfigError(std::string(key), "expected true or false, got '" + std::string(text) + "'");
}

struct Field {
    std::string key;
    std::function<void(ExperimentConfig&, std::string_view)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field size_field(std::string key, T ExperimentConfig::*member) {
    return {key,
            [key, member](ExperimentConfig& c, std::string_view v) {
                c.*member = static_cast<T>(parse_u64(key, v));
            },
            [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
}

Field double_field(std::string key, double ExperimentConfig::*member) {
    return {key,
            [key, member](ExperimentConfig& c, std::string_view v) { c.*member = parse_f64(key, v); },
            [member](const ExperimentConfig& c) { return format_double(c.*member); }};
}

template <typename T>
Field synth_size_field(std::string key, T SyntheticSpec::*member) {
    return {key,
            [key, member](ExperimentConfig& c, std::string_view v) {
                c.synthetic.*member = static_cast<T>(parse_u64(key, v));
            },
            [member](const ExperimentConfig& c) { return std::to_string(c.synthetic.*member); }};
}

Field synth_double_field(std::string key, double SyntheticSpec::*member) {
    return {key,
            [key, member](ExperimentConfig& c, std::string_view v) {
                c.synthetic.*member = parse_f64(key, v);
            },
            [member](const ExperimentConfig& c) { return format_double(c.synthetic.*member); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back({"method",
                     [](ExperimentConfig& c, std::string_view v) { c.method = parse_method(v); },
                     [](const ExperimentConfig& c) { return std::string(method_name(c.method)); }});
        f.push_back(size_field("seed", &ExperimentConfig::seed));
        f.push_back(size_field("multimodal_clients", &ExperimentConfig::multimodal_clients));
        f.push_back(size_field("image_clients", &ExperimentConfig::image_clients));
        f.push_back(size_field("text_clients", &ExperimentConfig::text_clients));
        f.push_back(size_field("K", &ExperimentConfig::K));
        f.push_back(size_field("O", &ExperimentConfig::O));
        f.push_back(double_field("tau", &ExperimentConfig::tau));
        f.push_back(double_field("lambda", &ExperimentConfig::lambda));
        f.push_back(double_field("beta1", &ExperimentConfig::beta1));
        f.push_back(double_field("beta2", &ExperimentConfig::beta2));
        f.push_back(double_field("nu_max", &ExperimentConfig::nu_max));
        f.push_back(double_field("distill_tau", &ExperimentConfig::distill_tau));
        f.push_back(size_field("rounds", &ExperimentConfig::rounds));
        f.push_back(size_field("local_epochs", &ExperimentConfig::local_epochs));
        f.push_back(double_field("lr", &ExperimentConfig::lr));
        f.push_back(double_field("momentum", &ExperimentConfig::momentum));
        f.push_back(size_field("batch_size", &ExperimentConfig::batch_size));
        f.push_back(double_field("alpha", &ExperimentConfig::alpha));
        f.push_back(size_field("min_client_samples", &ExperimentConfig::min_client_samples));
        f.push_back(double_field("holdout_fraction", &ExperimentConfig::holdout_fraction));
        f.push_back({"eval_split",
                     [](ExperimentConfig& c, std::string_view v) {
                         if (v == "local") {
                             c.eval_split = EvalSplit::Local;
                         } else if (v == "global") {
                             c.eval_split = EvalSplit::Global;
                         } else {
                             throw ConfigError("eval_split", "expected local or global");
                         }
                     },
                     [](const ExperimentConfig& c) {
                         return std::string(c.eval_split == EvalSplit::Local ? "local" : "global");
                     }});
        f.push_back({"disjoint_types",
                     [](ExperimentConfig& c, std::string_view v) {
                         c.disjoint_types = parse_bool("disjoint_types", v);
                     },
                     [](const ExperimentConfig& c) {
                         return std::string(c.disjoint_types ? "true" : "false");
                     }});
        f.push_back(size_field("mapping_layers", &ExperimentConfig::mapping_layers));
        f.push_back(size_field("hidden_dim", &ExperimentConfig::hidden_dim));
        f.push_back(size_field("embed_dim", &ExperimentConfig::embed_dim));
        f.push_back({"encoder",
                     [](ExperimentConfig& c, std::string_view v) {
                         if (v == "identity") {
                             c.encoder = EncoderKind::Identity;
                         } else if (v == "projection") {
                             c.encoder = EncoderKind::Projection;
                         } else {
                             throw ConfigError("encoder", "expected identity or projection");
                         }
                     },
                     [](const ExperimentConfig& c) {
                         return std::string(c.encoder == EncoderKind::Identity ? "identity"
                                                                               : "projection");
                     }});
        f.push_back(size_field("encoder_dim", &ExperimentConfig::encoder_dim));
        f.push_back(size_field("acc_k", &ExperimentConfig::acc_k));
        f.push_back(size_field("kmeans_iters", &ExperimentConfig::kmeans_iters));
        f.push_back(size_field("threads", &ExperimentConfig::threads));
        f.push_back(synth_size_field("synthetic.num_classes", &SyntheticSpec::num_classes));
        f.push_back(synth_size_field("synthetic.latent_dim", &SyntheticSpec::latent_dim));
        f.push_back(synth_size_field("synthetic.image_dim", &SyntheticSpec::image_dim));
        f.push_back(synth_size_field("synthetic.text_dim", &SyntheticSpec::text_dim));
        f.push_back(synth_size_field("synthetic.samples_per_class", &SyntheticSpec::samples_per_class));
        f.push_back(synth_double_field("synthetic.view_noise_sigma", &SyntheticSpec::view_noise_sigma));
        f.push_back(synth_double_field("synthetic.class_sep", &SyntheticSpec::class_sep));
        f.push_back(synth_double_field("synthetic.latent_noise", &SyntheticSpec::latent_noise));
        return f;
    }();
    return table;
}

const Field& field_for(std::string_view key) {
    for (const auto& f : fields()) {
        if (f.key == key) {
            return f;
        }
    }
    throw ConfigError(std::string(key), "unknown configuration key");
}

void require(bool ok, const char* field, const char* message) {
    if (!ok) {
        throw ConfigError(field, message);
    }
}

}  // namespace

std::string_view method_name(Method m) noexcept {
    switch (m) {
        case Method::AproMFL:
            return "apromfl";
        case Method::Local:
            return "local";
        case Method::FedIoT:
            return "fediot";
    }
    return "unknown";
}

Method parse_method(std::string_view text) {
    if (text == "apromfl") {
        return Method::AproMFL;
    }
    if (text == "local") {
        return Method::Local;
    }
    if (text == "fediot") {
        return Method::FedIoT;
    }
    throw ConfigError("method", "expected apromfl, local or fediot, got '" + std::string(text) + "'");
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) {
        throw Error("format_double: conversion failed");
    }
    return std::string(buf, ptr);
}

SyntheticSpec ExperimentConfig::synthetic_spec() const {
    SyntheticSpec s = synthetic;
    s.seed = seed;
    return s;
}

void ExperimentConfig::validate() const {
    require(multimodal_clients + image_clients + text_clients >= 1, "clients",
            "need at least one client in total");
    require(K >= 1, "K", "must be at least 1");
    require(O >= 1, "O", "must be at least 1");
    require(tau > 0.0, "tau", "must be > 0");
    require(lambda >= 0.0, "lambda", "must be >= 0");
    require(beta1 >= 0.0, "beta1", "must be >= 0");
    require(beta2 >= 0.0, "beta2", "must be >= 0");
    require(nu_max >= 1.0, "nu_max", "must be >= 1");
    require(distill_tau > 0.0, "distill_tau", "must be > 0");
    require(lr > 0.0, "lr", "must be > 0");
    require(momentum >= 0.0 && momentum < 1.0, "momentum", "must lie in [0, 1)");
    require(batch_size >= 2, "batch_size", "must be at least 2");
    require(alpha > 0.0, "alpha", "must be > 0");
    require(min_client_samples >= 4, "min_client_samples", "must be at least 4");
    require(holdout_fraction > 0.0 && holdout_fraction < 1.0, "holdout_fraction",
            "must lie in (0, 1)");
    require(mapping_layers == 1 || mapping_layers == 3, "mapping_layers", "must be 1 or 3");
    require(hidden_dim >= 1, "hidden_dim", "must be at least 1");
    require(embed_dim >= 1, "embed_dim", "must be at least 1");
    require(encoder_dim >= 1, "encoder_dim", "must be at least 1");
    require(acc_k >= 1, "acc_k", "must be at least 1");
    require(kmeans_iters >= 1, "kmeans_iters", "must be at least 1");
    require(threads >= 1, "threads", "must be at least 1");
    synthetic_spec().validate();
    const std::size_t clients = multimodal_clients + image_clients + text_clients;
    require(synthetic.num_classes * synthetic.samples_per_class >= clients * min_client_samples,
            "synthetic.samples_per_class", "too few samples for every client's minimum share");
}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    field_for(key).set(cfg, trim(value));
}

std::string get_config_value(const ExperimentConfig& cfg, std::string_view key) {
    return field_for(key).get(cfg);
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& f : fields()) {
            k.push_back(f.key);
        }
        return k;
    }();
    return keys;
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (!seen.insert(std::string(key)).second) {
            throw ConfigError(std::string(key), "key given twice");
        }
        set_config_value(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open config " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& f : fields()) {
        out += f.key;
        out += " = ";
        out += f.get(cfg);
        out += '\n';
    }
    return out;
}

}  // namespace apromfl
