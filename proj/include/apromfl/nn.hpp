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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "apromfl/linalg.hpp"
#include "apromfl/rng.hpp"

namespace apromfl {

struct DenseLayer {
    Matrix weights;  // out x in
    Vector bias;     // out

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

class DenseNet;

/// Activations recorded by a forward pass, consumed by backward().
class ForwardTrace {
public:
    bool recorded() const noexcept { return !inputs_.empty(); }
    void clear() noexcept {
        inputs_.clear();
        pre_activations_.clear();
    }

private:
    friend class DenseNet;
    std::vector<Vector> inputs_;           // input to each layer
    std::vector<Vector> pre_activations_;  // W x + b of each layer
};

/// Per-parameter gradient buffers laid out exactly like the owning model.
class GradientTape {
public:
    GradientTape() = default;
    static GradientTape zeros_like(const DenseNet& model);

    std::vector<DenseLayer>& layers() noexcept { return layers_; }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

    void zero() noexcept;
    bool is_finite() const noexcept;
    Vector flatten() const;
    /// this += scale * other (same layout).
    void accumulate(const GradientTape& other, double scale = 1.0);
    /// Adds `scale * flat` with `flat` in canonical parameter order.
    void accumulate_flat(const Vector& flat, double scale = 1.0);

private:
    std::vector<DenseLayer> layers_;
};

/// Fully connected stack; ReLU after every layer except the last.
class DenseNet {
public:
    DenseNet() = default;
    explicit DenseNet(std::vector<DenseLayer> layers);

    /// He-normal weights for hidden layers, 1/fan_in variance for the last
    /// layer, zero biases. `dims` = {in, hidden..., out}.
    static DenseNet random(std::span<const std::size_t> dims, SeededRng& rng);

    std::size_t in_dim() const noexcept;
    std::size_t out_dim() const noexcept;
    std::size_t num_layers() const noexcept { return layers_.size(); }
    std::size_t num_params() const noexcept;
    std::vector<std::size_t> dims() const;
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& mutable_layers() noexcept { return layers_; }

    bool same_architecture(const DenseNet& other) const noexcept;
    bool is_finite() const noexcept;

    Vector forward(const Vector& x) const;
    Vector forward(const Vector& x, ForwardTrace& trace) const;

    /// Accumulates dL/dparams into `tape` for the recorded input, given
    /// `upstream` = dL/d(output). Returns dL/d(input).
    Vector backward(const ForwardTrace& trace, const Vector& upstream, GradientTape& tape) const;

    /// Canonical parameter order: per layer, weights row-major then bias.
    Vector flatten() const;
    DenseNet unflatten_same(const Vector& flat) const;

    /// this -= lr * grads; throws NumericalError on non-finite gradients.
    void apply_gradient(const GradientTape& grads, double lr);

    friend bool operator==(const DenseNet&, const DenseNet&) = default;

private:
    void check_layers() const;
    std::vector<DenseLayer> layers_;
};

/// Maps encoder features into the shared embedding space; the only model part
/// that is exchanged and aggregated.
class MappingModule : public DenseNet {
public:
    MappingModule() = default;
    explicit MappingModule(DenseNet net) : DenseNet(std::move(net)) {}
    explicit MappingModule(std::vector<DenseLayer> layers) : DenseNet(std::move(layers)) {}

    MappingModule unflatten(const Vector& flat) const { return MappingModule(unflatten_same(flat)); }
};

/// Linear classifier over embeddings.
class ClassifierHead : public DenseNet {
public:
    ClassifierHead() = default;
    explicit ClassifierHead(DenseNet net);
    ClassifierHead(Matrix weights, Vector bias);

    static ClassifierHead random(std::size_t embed_dim, std::size_t num_classes, SeededRng& rng);

    std::size_t num_classes() const noexcept { return out_dim(); }
    ClassifierHead unflatten(const Vector& flat) const { return ClassifierHead(unflatten_same(flat)); }
};

/// Frozen feature extractor standing in for a pretrained encoder.
class Encoder {
public:
    enum class Kind { Identity, Projection };

    static Encoder identity(std::size_t dim);
    /// Fixed Gaussian projection, entries N(0, 1/in_dim), derived from `seed`.
    static Encoder projection(std::uint64_t seed, std::size_t in_dim, std::size_t out_dim);

    Kind kind() const noexcept { return kind_; }
    std::size_t in_dim() const noexcept { return in_dim_; }
    std::size_t out_dim() const noexcept { return out_dim_; }

    Vector encode(const Vector& x) const;

private:
    Encoder(Kind kind, std::size_t in_dim, std::size_t out_dim, Matrix projection);

    Kind kind_ = Kind::Identity;
    std::size_t in_dim_ = 0;
    std::size_t out_dim_ = 0;
    Matrix projection_;
};

/// Mapping module layer widths for `layers` in {1, 3}.
std::vector<std::size_t> mapping_dims(std::size_t in_dim, std::size_t hidden_dim,
                                      std::size_t out_dim, std::size_t layers);

Vector encode(const Encoder& encoder, const Vector& x);
Vector forward_map(const MappingModule& module, const Vector& x);

/// Plain SGD step: returns theta - lr * grad.
template <typename Model>
Model sgd_step(const Model& model, const GradientTape& grads, double lr) {
    Model next = model;
    next.apply_gradient(grads, lr);
    return next;
}

/// SGD with optional heavy-ball momentum. With momentum 0 each step is
/// bit-identical to sgd_step.
class SgdOptimizer {
public:
    explicit SgdOptimizer(double lr, double momentum = 0.0);

    void step(DenseNet& model, const GradientTape& grads);
    double lr() const noexcept { return lr_; }

private:
    double lr_;
    double momentum_;
    GradientTape velocity_;
};

/// Sum of squared parameter differences; architectures must match.
double module_distance_sq(const DenseNet& a, const DenseNet& b);

}  // namespace apromfl
