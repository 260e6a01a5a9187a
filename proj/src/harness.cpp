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

#include "apromfl/harness.hpp"

#include <fstream>

#include <json.hpp>

#include "apromfl/error.hpp"
#include "apromfl/serialization.hpp"

namespace apromfl {
namespace {

using nlohmann::json;

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out << text;
    if (!out) {
        throw Error("write failed for " + path.string());
    }
}

double at_or_zero(const std::map<std::size_t, double>& m, std::size_t k) {
    const auto it = m.find(k);
    return it == m.end() ? 0.0 : it->second;
}

json report_json(const EvalReport& r) {
    json j;
    j["n_eval"] = r.n_eval;
    for (const auto& [k, v] : r.acc_at) {
        j["acc@" + std::to_string(k)] = v;
    }
    for (const auto& [k, v] : r.recall_i2t_at) {
        j["r@" + std::to_string(k) + "_i2t"] = v;
    }
    for (const auto& [k, v] : r.recall_t2i_at) {
        j["r@" + std::to_string(k) + "_t2i"] = v;
    }
    if (r.is_retrieval()) {
        j["r1_sum"] = r.r1_sum;
        j["r5_sum"] = r.r5_sum;
    }
    return j;
}

json losses_json(const ClientLosses& l) {
    return json{{"task", l.task}, {"gpt", l.gpt},     {"gmt", l.gmt},
                {"lmr", l.lmr},   {"cluster", l.cluster}, {"nu", l.nu},
                {"steps", l.steps}};
}

}  // namespace

Summary summarize(std::span<const ClientRoundRecord> clients, const ExperimentConfig& cfg) {
    Summary s;
    s.method = cfg.method;
    s.seed = cfg.seed;
    s.rounds = cfg.rounds;
    s.acc_k = cfg.acc_k;
    for (const auto& c : clients) {
        const EvalReport& r = c.report;
        if (c.kind == ClientKind::Multimodal) {
            ++s.n_multimodal;
            s.mean_r1_i2t += at_or_zero(r.recall_i2t_at, 1);
            s.mean_r1_t2i += at_or_zero(r.recall_t2i_at, 1);
            s.mean_r5_i2t += at_or_zero(r.recall_i2t_at, 5);
            s.mean_r5_t2i += at_or_zero(r.recall_t2i_at, 5);
            s.mean_r1_sum += r.r1_sum;
            s.mean_r5_sum += r.r5_sum;
        } else {
            ++s.n_unimodal;
            s.mean_acc1 += at_or_zero(r.acc_at, 1);
            s.mean_acck += at_or_zero(r.acc_at, cfg.acc_k);
        }
    }
    if (s.n_unimodal > 0) {
        const double inv = 1.0 / static_cast<double>(s.n_unimodal);
        s.mean_acc1 *= inv;
        s.mean_acck *= inv;
    }
    if (s.n_multimodal > 0) {
        const double inv = 1.0 / static_cast<double>(s.n_multimodal);
        s.mean_r1_i2t *= inv;
        s.mean_r1_t2i *= inv;
        s.mean_r5_i2t *= inv;
        s.mean_r5_t2i *= inv;
        s.mean_r1_sum *= inv;
        s.mean_r5_sum *= inv;
    }
    return s;
}

std::string summary_csv_header() {
    return "method,seed,rounds,acc_k,n_unimodal,n_multimodal,mean_acc1,mean_acck,mean_r1_i2t,"
           "mean_r1_t2i,mean_r5_i2t,mean_r5_t2i,mean_r1_sum,mean_r5_sum\n";
}

std::string summary_csv_row(const Summary& s) {
    std::string row;
    row += std::string(method_name(s.method)) + ',' + std::to_string(s.seed) + ',' +
           std::to_string(s.rounds) + ',' + std::to_string(s.acc_k) + ',' +
           std::to_string(s.n_unimodal) + ',' + std::to_string(s.n_multimodal);
    for (double v : {s.mean_acc1, s.mean_acck, s.mean_r1_i2t, s.mean_r1_t2i, s.mean_r5_i2t,
                     s.mean_r5_t2i, s.mean_r1_sum, s.mean_r5_sum}) {
        row += ',' + format_double(v);
    }
    return row + '\n';
}

std::string round_record_json(const RoundRecord& record, const ExperimentConfig& cfg) {
    json j;
    j["schema"] = kRoundSchema;
    j["method"] = std::string(method_name(cfg.method));
    j["seed"] = cfg.seed;
    j["round"] = record.round;
    j["global_prototypes"] = record.global_prototypes;
    ClientLosses mean;
    std::size_t trained = 0;
    json clients = json::array();
    for (const auto& c : record.clients) {
        clients.push_back({{"id", c.client_id},
                           {"kind", std::string(client_kind_name(c.kind))},
                           {"losses", losses_json(c.losses)},
                           {"eval", report_json(c.report)}});
        if (c.losses.steps > 0) {
            mean.task += c.losses.task;
            mean.gpt += c.losses.gpt;
            mean.gmt += c.losses.gmt;
            mean.lmr += c.losses.lmr;
            mean.cluster += c.losses.cluster;
            mean.nu += c.losses.nu;
            ++trained;
        }
    }
    if (trained > 0) {
        const double inv = 1.0 / static_cast<double>(trained);
        mean.task *= inv;
        mean.gpt *= inv;
        mean.gmt *= inv;
        mean.lmr *= inv;
        mean.cluster *= inv;
        mean.nu *= inv;
    }
    j["mean_losses"] = {{"task", mean.task}, {"gpt", mean.gpt}, {"gmt", mean.gmt},
                        {"lmr", mean.lmr},   {"cluster", mean.cluster}, {"nu", mean.nu}};
    const Summary s = summarize(record.clients, cfg);
    j["aggregate"] = {{"mean_acc1", s.mean_acc1},     {"mean_acck", s.mean_acck},
                      {"mean_r1_sum", s.mean_r1_sum}, {"mean_r5_sum", s.mean_r5_sum}};
    j["clients"] = std::move(clients);
    j["wall_seconds"] = record.wall_seconds;
    return j.dump() + '\n';
}

std::string final_reports_csv(std::span<const ClientRoundRecord> clients, std::size_t acc_k) {
    std::string out = "client_id,kind,n_eval,acc1,acck,r1_i2t,r1_t2i,r5_i2t,r5_t2i,r1_sum,r5_sum\n";
    for (const auto& c : clients) {
        const EvalReport& r = c.report;
        out += std::to_string(c.client_id) + ',' + std::string(client_kind_name(c.kind)) + ',' +
               std::to_string(r.n_eval);
        for (double v : {at_or_zero(r.acc_at, 1), at_or_zero(r.acc_at, acc_k),
                         at_or_zero(r.recall_i2t_at, 1), at_or_zero(r.recall_t2i_at, 1),
                         at_or_zero(r.recall_i2t_at, 5), at_or_zero(r.recall_t2i_at, 5), r.r1_sum,
                         r.r5_sum}) {
            out += ',' + format_double(v);
        }
        out += '\n';
    }
    return out;
}

RunOutput run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    cfg.validate();
    std::ofstream rounds;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_text(out_dir / "config.txt", serialize_config(cfg));
        rounds.open(out_dir / "rounds.jsonl", std::ios::binary | std::ios::trunc);
        if (!rounds) {
            throw Error("cannot open " + (out_dir / "rounds.jsonl").string());
        }
    }
    RunOutput out;
    out.result = run_training(cfg, [&](const RoundRecord& r) {
        if (rounds.is_open()) {
            rounds << round_record_json(r, cfg);
            rounds.flush();
        }
    });
    const auto& final_clients = out.result.rounds.back().clients;
    out.summary = summarize(final_clients, cfg);
    if (!out_dir.empty()) {
        write_text(out_dir / "final_reports.csv", final_reports_csv(final_clients, cfg.acc_k));
        write_text(out_dir / "summary.csv", summary_csv_header() + summary_csv_row(out.summary));
        const auto models = out_dir / "models";
        std::filesystem::create_directories(models);
        for (const auto& c : out.result.clients) {
            const std::string stem = "client_" + std::to_string(c.id);
            if (c.image_module) {
                save_checkpoint(models / (stem + "_image.ckpt"), *c.image_module, ModelKind::Mapping);
            }
            if (c.text_module) {
                save_checkpoint(models / (stem + "_text.ckpt"), *c.text_module, ModelKind::Mapping);
            }
            if (c.head) {
                save_checkpoint(models / (stem + "_head.ckpt"), *c.head, ModelKind::Classifier);
            }
        }
        if (out.result.last_globals) {
            std::ofstream protos(out_dir / "global_prototypes.bin", std::ios::binary | std::ios::trunc);
            write_prototypes(protos, *out.result.last_globals);
        }
    }
    return out;
}

SweepAxis parse_axis(std::string_view name) {
    if (name == "K") {
        return SweepAxis::K;
    }
    if (name == "O") {
        return SweepAxis::O;
    }
    if (name == "alpha") {
        return SweepAxis::Alpha;
    }
    if (name == "clients") {
        return SweepAxis::Clients;
    }
    if (name == "mapping_layers") {
        return SweepAxis::MappingLayers;
    }
    throw ConfigError("axis", "expected K, O, alpha, clients or mapping_layers, got '" +
                                  std::string(name) + "'");
}

std::string_view axis_name(SweepAxis axis) noexcept {
    switch (axis) {
        case SweepAxis::K:
            return "K";
        case SweepAxis::O:
            return "O";
        case SweepAxis::Alpha:
            return "alpha";
        case SweepAxis::Clients:
            return "clients";
        case SweepAxis::MappingLayers:
            return "mapping_layers";
    }
    return "unknown";
}

void apply_axis(ExperimentConfig& cfg, SweepAxis axis, std::string_view value) {
    switch (axis) {
        case SweepAxis::Clients:
            set_config_value(cfg, "multimodal_clients", value);
            set_config_value(cfg, "image_clients", value);
            set_config_value(cfg, "text_clients", value);
            break;
        default:
            set_config_value(cfg, axis_name(axis), value);
            break;
    }
    cfg.validate();
}

std::vector<SweepRow> sweep(const ExperimentConfig& base, SweepAxis axis,
                            std::span<const std::string> values, const std::filesystem::path& out_dir) {
    std::vector<SweepRow> rows;
    for (const auto& v : values) {
        SweepRow row;
        row.value = v;
        try {
            ExperimentConfig cfg = base;
            apply_axis(cfg, axis, v);
            const auto dir = out_dir.empty() ? out_dir
                                             : out_dir / (std::string(axis_name(axis)) + "_" + v);
            row.summary = run_experiment(cfg, dir).summary;
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_text(out_dir / "comparison.csv", comparison_csv(axis, rows));
    }
    return rows;
}

std::string comparison_csv(SweepAxis axis, std::span<const SweepRow> rows) {
    std::string out = std::string(axis_name(axis)) +
                      ",status,mean_acc1,mean_acck,mean_r1_sum,mean_r5_sum,error\n";
    for (const auto& r : rows) {
        out += r.value + ',' + (r.ok ? "ok" : "failed");
        for (double v : {r.summary.mean_acc1, r.summary.mean_acck, r.summary.mean_r1_sum,
                         r.summary.mean_r5_sum}) {
            out += ',' + (r.ok ? format_double(v) : std::string());
        }
        std::string err = r.error;
        for (char& ch : err) {
            if (ch == ',' || ch == '\n') {
                ch = ';';
            }
        }
        out += ',' + err + '\n';
    }
    return out;
}

}  // namespace apromfl
