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

#include <cmath>
#include <vector>

#include "apromfl/error.hpp"
#include "apromfl/nn.hpp"
#include "oracles.hpp"

using namespace apromfl;

namespace {

// Scalar probe: L = g . f(x).
double probe(const DenseNet& net, const Vector& x, const Vector& g) { return dot(net.forward(x), g); }

}  // namespace

TEST_CASE("forward on a hand-built network") {
    // Layer 1: ReLU([1 -1; 2 0] x + [0; -1]); layer 2: [1 1] h + 0.5.
    DenseNet net({DenseLayer{Matrix(2, 2, {1, -1, 2, 0}), Vector{0.0, -1.0}},
                  DenseLayer{Matrix(1, 2, {1, 1}), Vector{0.5}}});
    CHECK(net.forward(Vector{1.0, 3.0}) == Vector{0.5 + 0.0 + 1.0});
    CHECK(net.forward(Vector{3.0, 1.0}) == Vector{0.5 + 2.0 + 5.0});
    CHECK(net.in_dim() == 2);
    CHECK(net.out_dim() == 1);
    CHECK(net.num_params() == 6 + 3);
    CHECK_THROWS_AS(net.forward(Vector{1.0}), DimensionError);
}

TEST_CASE("network construction validates layers") {
    CHECK_THROWS(DenseNet(std::vector<DenseLayer>{}));
    CHECK_THROWS_AS(DenseNet({DenseLayer{Matrix(2, 2, 0.0), Vector{0.0}}}), DimensionError);
    CHECK_THROWS_AS(DenseNet({DenseLayer{Matrix(2, 3, 0.0), Vector(2)},
                              DenseLayer{Matrix(1, 3, 0.0), Vector(1)}}),
                    DimensionError);
    CHECK_THROWS(ClassifierHead(DenseNet({DenseLayer{Matrix(2, 2, 0.0), Vector(2)},
                                          DenseLayer{Matrix(2, 2, 0.0), Vector(2)}})));
}

TEST_CASE("forward matches the independent implementation") {
    SeededRng rng(21);
    for (int t = 0; t < 100; ++t) {
        const std::size_t layers = (t % 2 == 0) ? 1 : 3;
        const auto dims = mapping_dims(1 + rng.uniform_index(6), 1 + rng.uniform_index(6),
                                       1 + rng.uniform_index(5), layers);
        const DenseNet net = oracle::random_net(dims, rng);
        const Vector x = oracle::random_vector(dims.front(), rng);
        const Vector ours = net.forward(x);
        const Vector ref = oracle::forward(net, x);
        ForwardTrace trace;
        const Vector traced = net.forward(x, trace);
        CHECK(traced == ours);
        for (std::size_t i = 0; i < ours.size(); ++i) {
            CHECK(std::abs(ours[i] - ref[i]) < 1e-10);
        }
    }
}

TEST_CASE("backward matches finite differences") {
    SeededRng rng(33);
    int checked = 0;
    for (int t = 0; t < 60; ++t) {
        const std::size_t layers = (t % 2 == 0) ? 1 : 3;
        const auto dims = mapping_dims(2 + rng.uniform_index(4), 3 + rng.uniform_index(4),
                                       1 + rng.uniform_index(4), layers);
        const DenseNet net = oracle::random_net(dims, rng);
        const Vector x = oracle::random_vector(dims.front(), rng);
        if (oracle::min_hidden_preactivation(net, x) < 1e-3) {
            continue;  // too close to a ReLU kink for central differences
        }
        const Vector g = oracle::random_vector(net.out_dim(), rng);
        ForwardTrace trace;
        net.forward(x, trace);
        GradientTape tape = GradientTape::zeros_like(net);
        const Vector dx = net.backward(trace, g, tape);

        const Vector numeric_params = oracle::numeric_gradient(
            [&](const Vector& flat) { return probe(net.unflatten_same(flat), x, g); }, net.flatten());
        CHECK(oracle::max_relative_error(tape.flatten(), numeric_params) < 1e-6);
        const Vector numeric_input =
            oracle::numeric_gradient([&](const Vector& xi) { return probe(net, xi, g); }, x);
        CHECK(oracle::max_relative_error(dx, numeric_input) < 1e-6);
        ++checked;
    }
    CHECK(checked >= 30);
}

TEST_CASE("single linear layer gradient has closed form") {
    const DenseNet net({DenseLayer{Matrix(2, 3, {1, 2, 3, 4, 5, 6}), Vector{0.0, 0.0}}});
    const Vector x{1.0, -1.0, 2.0};
    const Vector g{0.5, -2.0};
    ForwardTrace trace;
    net.forward(x, trace);
    GradientTape tape = GradientTape::zeros_like(net);
    const Vector dx = net.backward(trace, g, tape);
    // dW = g x^T, db = g, dx = W^T g.
    const DenseLayer& d = tape.layers()[0];
    CHECK(d.weights(0, 0) == 0.5);
    CHECK(d.weights(1, 2) == -4.0);
    CHECK(d.bias == g);
    CHECK(dx == Vector{0.5 - 8.0, 1.0 - 10.0, 1.5 - 12.0});
}

TEST_CASE("backward accumulates and zero upstream gives zero gradient") {
    SeededRng rng(4);
    const std::vector<std::size_t> dims{3, 4, 4, 2};
    const DenseNet net = oracle::random_net(dims, rng);
    const Vector x = oracle::random_vector(3, rng);
    ForwardTrace trace;
    net.forward(x, trace);
    GradientTape tape = GradientTape::zeros_like(net);
    net.backward(trace, Vector(2), tape);
    for (double v : tape.flatten()) {
        CHECK(v == 0.0);
    }
    const Vector g{1.0, -1.0};
    net.backward(trace, g, tape);
    const Vector once = tape.flatten();
    net.backward(trace, g, tape);
    const Vector twice = tape.flatten();
    for (std::size_t i = 0; i < once.size(); ++i) {
        CHECK(twice[i] == doctest::Approx(2.0 * once[i]));
    }
    ForwardTrace empty;
    CHECK_THROWS(net.backward(empty, g, tape));
    CHECK_THROWS_AS(net.backward(trace, Vector{1.0}, tape), DimensionError);
}

TEST_CASE("flatten and unflatten round trip") {
    SeededRng rng(8);
    const std::vector<std::size_t> dims{5, 7, 7, 3};
    const DenseNet net = DenseNet::random(dims, rng);
    CHECK(net.flatten().size() == net.num_params());
    CHECK(net.unflatten_same(net.flatten()) == net);
    CHECK_THROWS_AS(net.unflatten_same(Vector(3)), DimensionError);
    CHECK(net.dims() == dims);
}

TEST_CASE("random initialization is deterministic with zero biases") {
    const std::vector<std::size_t> dims{4, 8, 8, 2};
    SeededRng a(10);
    SeededRng b(10);
    const DenseNet na = DenseNet::random(dims, a);
    CHECK(na == DenseNet::random(dims, b));
    for (const DenseLayer& layer : na.layers()) {
        for (double v : layer.bias) {
            CHECK(v == 0.0);
        }
    }
}

TEST_CASE("sgd step") {
    const DenseNet net({DenseLayer{Matrix(1, 2, {1.0, 2.0}), Vector{0.5}}});
    GradientTape g = GradientTape::zeros_like(net);
    g.accumulate_flat(Vector{1.0, -1.0, 2.0});
    const DenseNet next = sgd_step(net, g, 0.1);
    CHECK(next.flatten()[0] == doctest::Approx(0.9));
    CHECK(next.flatten()[1] == doctest::Approx(2.1));
    CHECK(next.flatten()[2] == doctest::Approx(0.3));
    // Zero gradient or the original model is untouched.
    CHECK(sgd_step(net, GradientTape::zeros_like(net), 0.1) == net);
    CHECK_THROWS(sgd_step(net, g, 0.0));
    CHECK_THROWS(sgd_step(net, g, -1.0));
}

TEST_CASE("momentum accumulates velocity") {
    DenseNet net({DenseLayer{Matrix(1, 1, {0.0}), Vector{0.0}}});
    GradientTape g = GradientTape::zeros_like(net);
    g.accumulate_flat(Vector{1.0, 0.0});
    SgdOptimizer opt(0.1, 0.5);
    opt.step(net, g);
    CHECK(net.flatten()[0] == doctest::Approx(-0.1));
    opt.step(net, g);
    CHECK(net.flatten()[0] == doctest::Approx(-0.1 - 0.15));
    CHECK_THROWS(SgdOptimizer(0.1, 1.0));
    CHECK_THROWS(SgdOptimizer(0.0));
}

TEST_CASE("module distance") {
    const DenseNet a({DenseLayer{Matrix(1, 2, {1.0, 2.0}), Vector{0.0}}});
    const DenseNet b({DenseLayer{Matrix(1, 2, {1.0, 4.0}), Vector{1.0}}});
    CHECK(module_distance_sq(a, a) == 0.0);
    CHECK(module_distance_sq(a, b) == 5.0);
    const DenseNet c({DenseLayer{Matrix(1, 3, 0.0), Vector{0.0}}});
    CHECK_THROWS_AS(module_distance_sq(a, c), DimensionError);
}

TEST_CASE("encoders") {
    const Encoder id = Encoder::identity(3);
    const Vector x{1.0, -2.0, 3.0};
    CHECK(encode(id, x) == x);
    const Encoder p1 = Encoder::projection(5, 3, 2);
    const Encoder p2 = Encoder::projection(5, 3, 2);
    CHECK(encode(p1, x) == encode(p2, x));
    CHECK(encode(p1, x).size() == 2);
    CHECK(encode(p1, x) != encode(Encoder::projection(6, 3, 2), x));
    // Linear map: encode(2x) = 2 encode(x).
    const Vector e1 = encode(p1, x);
    const Vector e2 = encode(p1, 2.0 * x);
    CHECK(e2[0] == doctest::Approx(2.0 * e1[0]));
    CHECK_THROWS_AS(encode(id, Vector{1.0}), DimensionError);
    CHECK_THROWS(Encoder::projection(1, 0, 2));
}

TEST_CASE("mapping dims") {
    CHECK(mapping_dims(4, 8, 2, 1) == std::vector<std::size_t>{4, 2});
    CHECK(mapping_dims(4, 8, 2, 3) == std::vector<std::size_t>{4, 8, 8, 2});
    CHECK_THROWS(mapping_dims(4, 8, 2, 2));
    SeededRng rng(1);
    const MappingModule m(DenseNet::random(mapping_dims(4, 8, 2, 3), rng));
    CHECK(forward_map(m, Vector(4, 1.0)).size() == 2);
}
