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
#include "apromfl/losses.hpp"
#include "oracles.hpp"

using namespace apromfl;

namespace {

// Flattens a list of equally sized vectors into one.
Vector concat(const std::vector<Vector>& parts) {
    std::vector<double> out;
    for (const Vector& p : parts) {
        out.insert(out.end(), p.begin(), p.end());
    }
    return Vector(std::move(out));
}

std::vector<Vector> split(const Vector& flat, std::size_t n) {
    const std::size_t d = flat.size() / n;
    std::vector<Vector> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.emplace_back(std::vector<double>(flat.begin() + static_cast<long>(i * d),
                                             flat.begin() + static_cast<long>((i + 1) * d)));
    }
    return out;
}

std::vector<std::size_t> random_labels(std::size_t n, std::size_t k, SeededRng& rng) {
    std::vector<std::size_t> labels(n);
    for (auto& l : labels) {
        l = rng.uniform_index(k);
    }
    return labels;
}

GlobalPrototypeSet random_globals(std::size_t k, std::size_t d, SeededRng& rng) {
    GlobalPrototypeSet g;
    for (std::size_t i = 0; i < k; ++i) {
        g.pairs.push_back({oracle::random_vector(d, rng), oracle::random_vector(d, rng), PairOrigin::Global});
    }
    return g;
}

}  // namespace

TEST_CASE("cross entropy examples") {
    const LossGrad u = cross_entropy(Vector{0.0, 0.0, 0.0, 0.0}, 2);
    CHECK(u.value == doctest::Approx(std::log(4.0)));
    CHECK(u.grad[2] == doctest::Approx(-0.75));
    CHECK(u.grad[0] == doctest::Approx(0.25));
    const LossGrad confident = cross_entropy(Vector{50.0, 0.0}, 0);
    CHECK(confident.value < 1e-20);
    CHECK(std::isfinite(cross_entropy(Vector{1000.0, -1000.0}, 1).value));
    CHECK_THROWS(cross_entropy(Vector{1.0, 2.0}, 2));
}

TEST_CASE("cross entropy gradient matches finite differences") {
    SeededRng rng(1);
    for (int t = 0; t < 50; ++t) {
        const std::size_t c = 2 + rng.uniform_index(8);
        const Vector z = oracle::random_vector(c, rng, 2.0);
        const std::size_t y = rng.uniform_index(c);
        const Vector num = oracle::numeric_gradient([&](const Vector& v) { return cross_entropy(v, y).value; }, z);
        CHECK(oracle::max_relative_error(cross_entropy(z, y).grad, num) < 1e-6);
    }
}

TEST_CASE("retrieval loss on a perfect alignment") {
    // Orthogonal matched pairs: loss = log(1 + (n-1) e^{-1/tau}).
    const std::vector<Vector> img{Vector{1, 0, 0}, Vector{0, 1, 0}, Vector{0, 0, 1}};
    const double tau = 0.5;
    const PairLossGrad r = retrieval_task_loss(img, img, tau);
    CHECK(r.value == doctest::Approx(std::log(1.0 + 2.0 * std::exp(-1.0 / tau))));
    CHECK_THROWS(retrieval_task_loss(std::span<const Vector>(img).first(1),
                                     std::span<const Vector>(img).first(1), tau));
    CHECK_THROWS_AS(retrieval_task_loss(img, std::span<const Vector>(img).first(2), tau), DimensionError);
}

TEST_CASE("retrieval loss matches the oracle and finite differences") {
    SeededRng rng(2);
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 2 + rng.uniform_index(5);
        const std::size_t d = 2 + rng.uniform_index(4);
        const auto img = oracle::random_vectors(n, d, rng);
        const auto txt = oracle::random_vectors(n, d, rng);
        const double tau = 0.1 + rng.uniform();
        const PairLossGrad r = retrieval_task_loss(img, txt, tau);
        CHECK(std::abs(r.value - oracle::symmetric_info_nce(img, txt, tau)) < 1e-10);
        const Vector ni = oracle::numeric_gradient(
            [&](const Vector& f) { return oracle::symmetric_info_nce(split(f, n), txt, tau); }, concat(img));
        const Vector nt = oracle::numeric_gradient(
            [&](const Vector& f) { return oracle::symmetric_info_nce(img, split(f, n), tau); }, concat(txt));
        CHECK(oracle::max_relative_error(concat(r.grad_image), ni) < 1e-5);
        CHECK(oracle::max_relative_error(concat(r.grad_text), nt) < 1e-5);
        // Embedding scale does not change a cosine-based loss.
        std::vector<Vector> scaled = img;
        for (auto& v : scaled) {
            v *= 3.0;
        }
        CHECK(retrieval_task_loss(scaled, txt, tau).value == doctest::Approx(r.value).epsilon(1e-12));
    }
}

TEST_CASE("contrastive terms match the oracle and finite differences") {
    SeededRng rng(3);
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 2 + rng.uniform_index(6);
        const std::size_t d = 2 + rng.uniform_index(4);
        const auto img = oracle::random_vectors(n, d, rng);
        const auto txt = oracle::random_vectors(n, d, rng);
        const auto labels = random_labels(n, 1 + rng.uniform_index(3), rng);
        const ClusterAssignment cl = ClusterAssignment::from_labels(labels);
        const double tau = 0.2 + rng.uniform();
        const std::size_t i = rng.uniform_index(n);

        const double intra = intra_modal_loss(img, cl, i, tau);
        CHECK(std::abs(intra - oracle::contrastive_anchor(img[i], img, cl.cluster_of(i), tau)) < 1e-10);
        const double inter = inter_modal_loss(img, txt, cl, i, tau);
        CHECK(std::abs(inter - oracle::contrastive_anchor(img[i], txt, cl.cluster_of(i), tau)) < 1e-10);

        const PairLossGrad gi = intra_modal_loss_grad(img, cl, i, tau);
        CHECK(gi.value == doctest::Approx(intra));
        const Vector ni = oracle::numeric_gradient(
            [&](const Vector& f) { return intra_modal_loss(split(f, n), cl, i, tau); }, concat(img));
        CHECK(oracle::max_relative_error(concat(gi.grad_image), ni) < 1e-5);

        const PairLossGrad ge = inter_modal_loss_grad(img, txt, cl, i, tau);
        const Vector nei = oracle::numeric_gradient(
            [&](const Vector& f) { return inter_modal_loss(split(f, n), txt, cl, i, tau); }, concat(img));
        const Vector net = oracle::numeric_gradient(
            [&](const Vector& f) { return inter_modal_loss(img, split(f, n), cl, i, tau); }, concat(txt));
        CHECK(oracle::max_relative_error(concat(ge.grad_image), nei) < 1e-5);
        CHECK(oracle::max_relative_error(concat(ge.grad_text), net) < 1e-5);
    }
}

TEST_CASE("contrastive term on equal similarities") {
    // The anchor is one of its own candidates; with all similarities equal the
    // log-sum-exp exceeds each positive logit by log(n).
    const std::vector<Vector> same(4, Vector{1.0, 1.0});
    const ClusterAssignment one = ClusterAssignment::from_labels(std::vector<std::size_t>{0, 0, 1, 1});
    CHECK(intra_modal_loss(same, one, 0, 0.5) == doctest::Approx(std::log(4.0)));
    CHECK_THROWS(intra_modal_loss(same, one, 4, 0.5));
    const ClusterAssignment short_cl = ClusterAssignment::from_labels(std::vector<std::size_t>{0, 0});
    CHECK_THROWS_AS(intra_modal_loss(same, short_cl, 0, 0.5), DimensionError);
}

TEST_CASE("clustering total loss is the sum of its components") {
    SeededRng rng(4);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 3 + rng.uniform_index(4);
        const std::size_t d = 3;
        const auto img = oracle::random_vectors(n, d, rng);
        const auto txt = oracle::random_vectors(n, d, rng);
        const ClusterAssignment cl = ClusterAssignment::from_labels(random_labels(n, 2, rng));
        const double tau = 0.5;
        const double w = (t % 2 == 0) ? 1.0 : 1.0 / static_cast<double>(n);
        const ClusteringLoss total = clustering_total_loss(img, txt, cl, tau, w);
        double intra_i = 0.0, intra_t = 0.0, inter = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            intra_i += intra_modal_loss(img, cl, i, tau);
            intra_t += intra_modal_loss(txt, cl, i, tau);
            inter += inter_modal_loss(img, txt, cl, i, tau);
        }
        CHECK(total.intra_image == doctest::Approx(intra_i));
        CHECK(total.intra_text == doctest::Approx(intra_t));
        CHECK(total.inter == doctest::Approx(inter));
        CHECK(total.task == doctest::Approx(retrieval_task_loss(img, txt, tau).value));
        CHECK(total.value == doctest::Approx(total.task + w * (intra_i + intra_t + inter)));
        auto f_img = [&](const Vector& f) { return clustering_total_loss(split(f, n), txt, cl, tau, w).value; };
        auto f_txt = [&](const Vector& f) { return clustering_total_loss(img, split(f, n), cl, tau, w).value; };
        CHECK(oracle::max_relative_error(concat(total.grad_image), oracle::numeric_gradient(f_img, concat(img))) < 1e-5);
        CHECK(oracle::max_relative_error(concat(total.grad_text), oracle::numeric_gradient(f_txt, concat(txt))) < 1e-5);
    }
}

TEST_CASE("cluster assignment compacts labels") {
    const ClusterAssignment cl = ClusterAssignment::from_labels(std::vector<std::size_t>{7, 3, 7, 9});
    CHECK(cl.num_clusters() == 3);
    CHECK(cl.pseudo_labels == std::vector<std::size_t>{1, 0, 1, 2});
    CHECK(cl.cluster_of(0) == std::vector<std::size_t>{0, 2});
}

TEST_CASE("zero embeddings get zero similarity and no gradient") {
    const std::vector<Vector> img{Vector{0.0, 0.0}, Vector{1.0, 0.0}, Vector{0.0, 1.0}};
    const std::vector<Vector> txt{Vector{1.0, 0.0}, Vector{0.0, 0.0}, Vector{0.0, 1.0}};
    const PairLossGrad r = retrieval_task_loss(img, txt, 0.5);
    CHECK(std::isfinite(r.value));
    CHECK(r.grad_image[0] == Vector{0.0, 0.0});
    CHECK(r.grad_text[1] == Vector{0.0, 0.0});
    const ClusterAssignment cl = ClusterAssignment::from_labels(std::vector<std::size_t>{0, 0, 1});
    const ClusteringLoss c = clustering_total_loss(img, txt, cl, 0.5);
    CHECK(std::isfinite(c.value));
    CHECK(c.grad_image[0] == Vector{0.0, 0.0});
    const std::vector<Vector> protos{Vector{1.0, 0.0}, Vector{0.0, 1.0}};
    const Distribution q = assignment_probs(Vector{0.0, 0.0}, protos, 0.5);
    CHECK(q[0] == doctest::Approx(0.5));
    const GptLoss g = gpt_loss(Vector{0.0, 0.0}, Vector{1.0, 0.0}, protos, protos, 0.5);
    CHECK(g.grad_image_side == Vector{0.0, 0.0});
}

TEST_CASE("model regularizer") {
    const DenseNet a({DenseLayer{Matrix(1, 2, {1.0, 2.0}), Vector{0.0}}});
    const DenseNet b({DenseLayer{Matrix(1, 2, {0.0, 2.0}), Vector{1.0}}});
    const ModuleLossGrad r = lmr_loss(a, b, 0.5);
    CHECK(r.value == doctest::Approx(1.0));
    CHECK(r.grad.flatten() == Vector{1.0, 0.0, -1.0});
    CHECK(lmr_loss(a, a, 3.0).value == 0.0);
    CHECK(lmr_loss(a, b, 0.0).value == 0.0);
    CHECK_THROWS(lmr_loss(a, b, -1.0));
    SeededRng rng(5);
    const std::vector<std::size_t> dims{3, 4, 4, 2};
    const DenseNet x = oracle::random_net(dims, rng);
    const DenseNet y = oracle::random_net(dims, rng);
    const Vector num = oracle::numeric_gradient(
        [&](const Vector& f) { return lmr_loss(x.unflatten_same(f), y, 0.3).value; }, x.flatten());
    CHECK(oracle::max_relative_error(lmr_loss(x, y, 0.3).grad.flatten(), num) < 1e-6);
}

TEST_CASE("assignment probabilities") {
    const std::vector<Vector> protos{Vector{1.0, 0.0}, Vector{0.0, 1.0}};
    const Distribution q = assignment_probs(Vector{2.0, 2.0}, protos, 0.5);
    CHECK(q[0] == doctest::Approx(0.5));
    const Distribution sharp = assignment_probs(Vector{1.0, 0.0}, protos, 0.01);
    CHECK(sharp[0] > 0.999);
    // Scaling the embedding or a prototype leaves the distribution unchanged.
    const std::vector<Vector> scaled{Vector{5.0, 0.0}, Vector{0.0, 0.1}};
    const Distribution a = assignment_probs(Vector{0.3, 0.7}, protos, 0.5);
    const Distribution b = assignment_probs(Vector{3.0, 7.0}, scaled, 0.5);
    CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-12));
    CHECK_THROWS(assignment_probs(Vector{1.0, 0.0}, std::vector<Vector>{}, 0.5));
    CHECK_THROWS_AS(assignment_probs(Vector{1.0, 0.0, 0.0}, protos, 0.5), DimensionError);
}

TEST_CASE("prototype alignment loss examples") {
    const std::vector<Vector> protos{Vector{1.0, 0.0}, Vector{0.0, 1.0}};
    // Identical assignment distributions give zero.
    CHECK(gpt_loss(Vector{1.0, 0.2}, Vector{1.0, 0.2}, protos, protos, 0.5).value == doctest::Approx(0.0));
    // Fully disjoint assignments approach ln 2.
    const GptLoss far = gpt_loss(Vector{1.0, 0.0}, Vector{0.0, 1.0}, protos, protos, 0.01);
    CHECK(far.value == doctest::Approx(std::log(2.0)).epsilon(1e-6));
    CHECK_THROWS_AS(gpt_loss(Vector{1.0, 0.0}, Vector{1.0, 0.0}, protos,
                             std::span<const Vector>(protos).first(1), 0.5),
                    DimensionError);
}

TEST_CASE("prototype alignment loss bounds and gradients") {
    SeededRng rng(6);
    for (int t = 0; t < 100; ++t) {
        const std::size_t k = 1 + rng.uniform_index(6);
        const std::size_t d = 2 + rng.uniform_index(4);
        const GlobalPrototypeSet g = random_globals(k, d, rng);
        const Vector ei = oracle::random_vector(d, rng);
        const Vector et = oracle::random_vector(d, rng);
        const double tau = 0.1 + rng.uniform();
        const GptLoss l = gpt_loss(ei, et, g, tau);
        CHECK(l.value >= 0.0);
        CHECK(l.value <= std::log(2.0));
        CHECK(js_divergence(l.q_image, l.q_text) == l.value);
        CHECK(js_divergence(l.q_text, l.q_image) == doctest::Approx(l.value));
        if (t < 30) {
            const Vector ni = oracle::numeric_gradient([&](const Vector& v) { return gpt_loss(v, et, g, tau).value; }, ei);
            const Vector nt = oracle::numeric_gradient([&](const Vector& v) { return gpt_loss(ei, v, g, tau).value; }, et);
            CHECK(oracle::max_relative_error(l.grad_image_side, ni) < 1e-5);
            CHECK(oracle::max_relative_error(l.grad_text_side, nt) < 1e-5);
        }
        // The one-embedding form is zero when both prototype sides coincide.
        GlobalPrototypeSet mirrored = g;
        for (auto& p : mirrored.pairs) {
            p.text_vec = p.image_vec;
        }
        CHECK(gpt_loss(ei, mirrored, tau).value == doctest::Approx(0.0));
        CHECK(gpt_loss(ei, g, tau).value == doctest::Approx(gpt_loss(ei, ei, g, tau).value));
    }
}

TEST_CASE("transfer factor") {
    CHECK(transfer_factor(2.0, 1.0, 10.0) == 2.0);
    CHECK(transfer_factor(1.0, 0.0, 10.0) == 10.0);
    CHECK(transfer_factor(0.0, 1.0, 10.0) == 0.0);
    CHECK(transfer_factor(5.0, 1.0, 3.0) == 3.0);
}

TEST_CASE("model transfer loss") {
    TransferContext ctx;
    ctx.distill_tau = 1.0;
    const Vector e{0.3, -0.2, 1.0};
    const GmtLoss same = gmt_loss(e, e, 1.0, 1.0, ctx);
    CHECK(same.value == doctest::Approx(0.0));
    CHECK(same.nu == 1.0);
    SeededRng rng(7);
    for (int t = 0; t < 50; ++t) {
        const std::size_t d = 2 + rng.uniform_index(5);
        const Vector a = oracle::random_vector(d, rng);
        const Vector b = oracle::random_vector(d, rng);
        ctx.distill_tau = 0.5 + rng.uniform();
        const double ll = 0.1 + rng.uniform();
        const double lg = 0.1 + rng.uniform();
        const GmtLoss g = gmt_loss(a, b, ll, lg, ctx);
        CHECK(g.value >= 0.0);
        CHECK(g.nu == doctest::Approx(std::min(ll / lg, ctx.nu_max)));
        const Distribution p = softmax_temp(a, ctx.distill_tau);
        const Distribution q = softmax_temp(b, ctx.distill_tau);
        CHECK(g.value == doctest::Approx(g.nu * kl_divergence(p, q)));
        const Vector num =
            oracle::numeric_gradient([&](const Vector& v) { return gmt_loss(v, b, ll, lg, ctx).value; }, a);
        CHECK(oracle::max_relative_error(g.grad, num) < 1e-5);
    }
    CHECK_THROWS_AS(gmt_loss(e, Vector{1.0}, 1.0, 1.0, ctx), DimensionError);
    CHECK_THROWS(gmt_loss(e, e, std::nan(""), 1.0, ctx));
    ctx.nu_max = 0.5;
    CHECK_THROWS(gmt_loss(e, e, 1.0, 1.0, ctx));
}
