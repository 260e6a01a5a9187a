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


#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "apromfl/config.hpp"
#include "apromfl/error.hpp"

using namespace apromfl;

namespace {

std::string field_of(const std::string& text) {
    try {
        parse_config(text).validate();
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "";
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
    const ExperimentConfig cfg = parse_config("");
    CHECK(cfg == ExperimentConfig{});
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.method == Method::AproMFL);
    CHECK(cfg.rounds == 30);
    CHECK(cfg.alpha == 0.1);
    CHECK(cfg.lambda == 0.001);
    CHECK(cfg.min_client_samples == 40);
    CHECK(cfg.synthetic.samples_per_class == 400);
}

TEST_CASE("parsing values, comments and whitespace") {
    const ExperimentConfig cfg = parse_config(
        "# comment line\n"
        "  method = fediot   \n"
        "\n"
        "K=20\n"
        "alpha = 0.5  # trailing comment\n"
        "disjoint_types = true\n"
        "eval_split = global\n"
        "synthetic.samples_per_class = 50\n");
    CHECK(cfg.method == Method::FedIoT);
    CHECK(cfg.K == 20);
    CHECK(cfg.alpha == 0.5);
    CHECK(cfg.disjoint_types);
    CHECK(cfg.eval_split == EvalSplit::Global);
    CHECK(cfg.synthetic.samples_per_class == 50);
}

TEST_CASE("parse errors name the offending field or line") {
    CHECK(field_of("nonsense = 1\n") == "nonsense");
    CHECK(field_of("K = 3\nK = 4\n") == "K");
    CHECK(field_of("K = -3\n") == "K");
    CHECK(field_of("K = 2.5\n") == "K");
    CHECK(field_of("tau = abc\n") == "tau");
    CHECK(field_of("tau = nan\n") == "tau");
    CHECK(field_of("method = sgd\n") == "method");
    CHECK(field_of("disjoint_types = maybe\n") == "disjoint_types");
    CHECK(field_of("rounds 30\n") == "line 1");
    CHECK(field_of("# ok\nK = 1\nbad line\n") == "line 3");
}

TEST_CASE("validation names the invalid field") {
    CHECK(field_of("alpha = 0\n") == "alpha");
    CHECK(field_of("K = 0\n") == "K");
    CHECK(field_of("O = 0\n") == "O");
    CHECK(field_of("tau = 0\n") == "tau");
    CHECK(field_of("lambda = -1\n") == "lambda");
    CHECK(field_of("mapping_layers = 2\n") == "mapping_layers");
    CHECK(field_of("momentum = 1\n") == "momentum");
    CHECK(field_of("batch_size = 1\n") == "batch_size");
    CHECK(field_of("holdout_fraction = 1\n") == "holdout_fraction");
    CHECK(field_of("min_client_samples = 2\n") == "min_client_samples");
    CHECK(field_of("multimodal_clients = 0\nimage_clients = 0\ntext_clients = 0\n") == "clients");
    CHECK(field_of("synthetic.class_sep = 0\n") == "synthetic.class_sep");
    CHECK(field_of("synthetic.samples_per_class = 2\n") == "synthetic.samples_per_class");
    CHECK(field_of("threads = 0\n") == "threads");
}

TEST_CASE("serialization round trips every key") {
    ExperimentConfig cfg;
    cfg.method = Method::Local;
    cfg.seed = 123456789012345ULL;
    cfg.tau = 0.1;
    cfg.lr = 1.0 / 3.0;
    cfg.alpha = 1e-3;
    cfg.encoder = EncoderKind::Projection;
    cfg.synthetic.view_noise_sigma = 0.123456789;
    const std::string text = serialize_config(cfg);
    CHECK(parse_config(text) == cfg);
    CHECK(serialize_config(parse_config(text)) == text);
    for (const std::string& key : config_keys()) {
        CHECK(text.find(key + " = ") != std::string::npos);
        ExperimentConfig copy;
        set_config_value(copy, key, get_config_value(cfg, key));
        CHECK(get_config_value(copy, key) == get_config_value(cfg, key));
    }
    CHECK_THROWS_AS(get_config_value(cfg, "nope"), ConfigError);
}

TEST_CASE("shortest round-trip double formatting") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("synthetic spec follows the experiment seed") {
    ExperimentConfig cfg;
    cfg.seed = 77;
    CHECK(cfg.synthetic_spec().seed == 77);
    CHECK_THROWS_AS(parse_config("synthetic.seed = 3\n"), ConfigError);
}

TEST_CASE("loading from a file") {
    const auto path = std::filesystem::temp_directory_path() / "apromfl_test.cfg";
    {
        std::ofstream out(path);
        out << "rounds = 7\nmethod = local\n";
    }
    const ExperimentConfig cfg = load_config(path);
    CHECK(cfg.rounds == 7);
    CHECK(cfg.method == Method::Local);
    std::filesystem::remove(path);
    CHECK_THROWS(load_config(path));
}
