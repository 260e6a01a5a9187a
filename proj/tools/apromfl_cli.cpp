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

// Command-line front end: `run`, `sweep` and `dataset` subcommands.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "apromfl/config.hpp"
#include "apromfl/data.hpp"
#include "apromfl/error.hpp"
#include "apromfl/harness.hpp"
#include "apromfl/kernels.hpp"

namespace {

using namespace apromfl;

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> method;
    std::optional<std::size_t> threads;
    std::string out;
};

ExperimentConfig resolve(const Common& c) {
    ExperimentConfig cfg = load_config(c.config_path);
    if (c.seed) {
        cfg.seed = *c.seed;
    }
    if (c.method) {
        cfg.method = parse_method(*c.method);
    }
    if (c.threads) {
        cfg.threads = *c.threads;
    }
    cfg.validate();
    return cfg;
}

void print_summary(const Summary& s) {
    std::cout << summary_csv_header() << summary_csv_row(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixed-modality federated learning simulator"};
    app.require_subcommand(1);
    std::string simd = "auto";
    app.add_option("--simd", simd, "Kernel backend: auto, scalar, avx2 or neon");

    Common run_opts;
    auto* run = app.add_subcommand("run", "Train one configuration and write its results");
    run->add_option("--config", run_opts.config_path, "Config file")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", run_opts.seed, "Override the config seed");
    run->add_option("--method", run_opts.method, "apromfl, local or fediot");
    run->add_option("--threads", run_opts.threads, "Client worker threads");
    run->add_option("--out", run_opts.out, "Output directory");

    Common sweep_opts;
    std::string axis;
    std::vector<std::string> values;
    auto* sw = app.add_subcommand("sweep", "Run one configuration per axis value");
    sw->add_option("--config", sweep_opts.config_path, "Config file")->required()->check(CLI::ExistingFile);
    sw->add_option("--axis", axis, "K, O, alpha, clients or mapping_layers")->required();
    sw->add_option("--values", values, "Comma-separated axis values")->required()->delimiter(',');
    sw->add_option("--seed", sweep_opts.seed, "Override the config seed");
    sw->add_option("--method", sweep_opts.method, "apromfl, local or fediot");
    sw->add_option("--threads", sweep_opts.threads, "Client worker threads");
    sw->add_option("--out", sweep_opts.out, "Output directory");

    Common data_opts;
    auto* ds = app.add_subcommand("dataset", "Write the synthetic dataset of a config to a file");
    ds->add_option("--config", data_opts.config_path, "Config file")->required()->check(CLI::ExistingFile);
    ds->add_option("--seed", data_opts.seed, "Override the config seed");
    ds->add_option("--out", data_opts.out, "Output file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        kernels::set_backend(kernels::parse_backend(simd));
        if (run->parsed()) {
            const ExperimentConfig cfg = resolve(run_opts);
            const std::string out = run_opts.out.empty()
                                        ? "runs/" + std::string(method_name(cfg.method)) + "_seed" +
                                              std::to_string(cfg.seed)
                                        : run_opts.out;
            const RunOutput result = run_experiment(cfg, out);
            print_summary(result.summary);
            std::cerr << "results written to " << out << '\n';
            return 0;
        }
        if (sw->parsed()) {
            const ExperimentConfig cfg = resolve(sweep_opts);
            const SweepAxis ax = parse_axis(axis);
            const std::string out = sweep_opts.out.empty() ? "runs/sweep_" + axis : sweep_opts.out;
            const auto rows = sweep(cfg, ax, values, out);
            std::cout << comparison_csv(ax, rows);
            std::cerr << "results written to " << out << '\n';
            for (const auto& r : rows) {
                if (!r.ok) {
                    return 1;
                }
            }
            return 0;
        }
        if (ds->parsed()) {
            const ExperimentConfig cfg = resolve(data_opts);
            const SyntheticSpec spec = cfg.synthetic_spec();
            save_dataset(data_opts.out, spec, generate(spec));
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
