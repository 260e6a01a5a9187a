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

#include "apromfl/nn.hpp"

#include <cmath>
#include <string>

#include "apromfl/error.hpp"
#include "apromfl/kernels.hpp"

namespace apromfl {

// GradientTape

GradientTape GradientTape::zeros_like(const DenseNet& model) {
    GradientTape tape;
    tape.layers_.reserve(model.num_layers());
    for (const DenseLayer& layer : model.layers()) {
        tape.layers_.push_back(
            {Matrix(layer.weights.rows(), layer.weights.cols()), Vector(layer.bias.size())});
    }
    return tape;
}

void GradientTape::zero() noexcept {
    for (DenseLayer& layer : layers_) {
        layer.weights = Matrix(layer.weights.rows(), layer.weights.cols());
        layer.bias = Vector(layer.bias.size());
    }
}

bool GradientTape::is_finite() const noexcept {
    for (const DenseLayer& layer : layers_) {
        if (!layer.weights.is_finite() || !layer.bias.is_finite()) {
            return false;
        }
    }
    return true;
}

Vector GradientTape::flatten() const {
    std::vector<double> flat;
    for (const DenseLayer& layer : layers_) {
        flat.insert(flat.end(), layer.weights.values().begin(), layer.weights.values().end());
        flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    }
    return Vector(std::move(flat));
}

void GradientTape::accumulate(const GradientTape& other, double scale) {
    if (other.layers_.size() != layers_.size()) {
        throw DimensionError("GradientTape::accumulate: layout mismatch");
    }
    const auto& k = kernels::active();
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        DenseLayer& dst = layers_[l];
        const DenseLayer& src = other.layers_[l];
        if (dst.weights.rows() != src.weights.rows() || dst.weights.cols() != src.weights.cols()) {
            throw DimensionError("GradientTape::accumulate: layout mismatch");
        }
        k.axpy(scale, src.weights.data(), dst.weights.data(), dst.weights.size());
        k.axpy(scale, src.bias.data(), dst.bias.data(), dst.bias.size());
    }
}

void GradientTape::accumulate_flat(const Vector& flat, double scale) {
    const auto& k = kernels::active();
    std::size_t offset = 0;
    for (DenseLayer& layer : layers_) {
        const std::size_t need = layer.weights.size() + layer.bias.size();
        if (offset + need > flat.size()) {
            throw DimensionError("GradientTape::accumulate_flat: too few values");
        }
        k.axpy(scale, flat.data() + offset, layer.weights.data(), layer.weights.size());
        offset += layer.weights.size();
        k.axpy(scale, flat.data() + offset, layer.bias.data(), layer.bias.size());
        offset += layer.bias.size();
    }
    if (offset != flat.size()) {
        throw DimensionError("GradientTape::accumulate_flat: too many values");
    }
}

// DenseNet

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { check_layers(); }

void DenseNet::check_layers() const {
    if (layers_.empty()) {
        throw Error("DenseNet: at least one layer required");
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const DenseLayer& layer = layers_[l];
        if (layer.weights.rows() == 0 || layer.weights.cols() == 0) {
            throw DimensionError("DenseNet: empty layer");
        }
        if (layer.bias.size() != layer.weights.rows()) {
            throw DimensionError("DenseNet: bias size differs from layer output");
        }
        if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows()) {
            throw DimensionError("DenseNet: layer " + std::to_string(l) +
                                 " input does not match previous output");
        }
        if (!layer.weights.is_finite() || !layer.bias.is_finite()) {
            throw NumericalError("DenseNet: non-finite parameter");
        }
    }
}

DenseNet DenseNet::random(std::span<const std::size_t> dims, SeededRng& rng) {
    if (dims.size() < 2) {
        throw Error("DenseNet::random: need at least input and output dims");
    }
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t in = dims[l];
        const std::size_t out = dims[l + 1];
        const bool last = l + 2 == dims.size();
        const double stddev = std::sqrt((last ? 1.0 : 2.0) / static_cast<double>(in));
        Matrix w(out, in);
        for (std::size_t i = 0; i < w.size(); ++i) {
            w.data()[i] = stddev * rng.normal();
        }
        layers.push_back({std::move(w), Vector(out)});
    }
    return DenseNet(std::move(layers));
}

std::size_t DenseNet::in_dim() const noexcept {
    return layers_.empty() ? 0 : layers_.front().weights.cols();
}

std::size_t DenseNet::out_dim() const noexcept {
    return layers_.empty() ? 0 : layers_.back().weights.rows();
}

std::size_t DenseNet::num_params() const noexcept {
    std::size_t n = 0;
    for (const DenseLayer& layer : layers_) {
        n += layer.weights.size() + layer.bias.size();
    }
    return n;
}

std::vector<std::size_t> DenseNet::dims() const {
    std::vector<std::size_t> out;
    if (layers_.empty()) {
        return out;
    }
    out.push_back(in_dim());
    for (const DenseLayer& layer : layers_) {
        out.push_back(layer.weights.rows());
    }
    return out;
}

bool DenseNet::same_architecture(const DenseNet& other) const noexcept {
    return dims() == other.dims();
}

bool DenseNet::is_finite() const noexcept {
    for (const DenseLayer& layer : layers_) {
        if (!layer.weights.is_finite() || !layer.bias.is_finite()) {
            return false;
        }
    }
    return true;
}

Vector DenseNet::forward(const Vector& x) const {
    if (x.size() != in_dim()) {
        throw DimensionError("DenseNet::forward: input has dim " + std::to_string(x.size()) +
                             ", expected " + std::to_string(in_dim()));
    }
    Vector act = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Vector z = layers_[l].weights.multiply(act, layers_[l].bias);
        if (l + 1 < layers_.size()) {
            for (double& v : z) {
                v = v > 0.0 ? v : 0.0;
            }
        }
        act = std::move(z);
    }
    return act;
}

Vector DenseNet::forward(const Vector& x, ForwardTrace& trace) const {
    if (x.size() != in_dim()) {
        throw DimensionError("DenseNet::forward: input has dim " + std::to_string(x.size()) +
                             ", expected " + std::to_string(in_dim()));
    }
    trace.clear();
    trace.inputs_.reserve(layers_.size());
    trace.pre_activations_.reserve(layers_.size());
    Vector act = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Vector z = layers_[l].weights.multiply(act, layers_[l].bias);
        trace.inputs_.push_back(std::move(act));
        trace.pre_activations_.push_back(z);
        if (l + 1 < layers_.size()) {
            for (double& v : z) {
                v = v > 0.0 ? v : 0.0;
            }
        }
        act = std::move(z);
    }
    return act;
}

Vector DenseNet::backward(const ForwardTrace& trace, const Vector& upstream,
                          GradientTape& tape) const {
    if (!trace.recorded() || trace.inputs_.size() != layers_.size() ||
        trace.inputs_.front().size() != in_dim()) {
        throw Error("backward: no forward pass recorded for this model");
    }
    if (upstream.size() != out_dim()) {
        throw DimensionError("backward: upstream gradient has wrong dimension");
    }
    if (tape.layers().size() != layers_.size()) {
        tape = GradientTape::zeros_like(*this);
    }
    const auto& k = kernels::active();
    Vector grad_z = upstream;
    Vector grad_in;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const DenseLayer& layer = layers_[l];
        DenseLayer& g = tape.layers()[l];
        const std::size_t rows = layer.weights.rows();
        const std::size_t cols = layer.weights.cols();
        k.outer_accumulate(g.weights.data(), rows, cols, grad_z.data(), trace.inputs_[l].data());
        k.axpy(1.0, grad_z.data(), g.bias.data(), rows);

        grad_in = Vector(cols);
        k.gemv_transposed_accumulate(layer.weights.data(), rows, cols, grad_z.data(),
                                     grad_in.data());
        if (l > 0) {
            const Vector& pre = trace.pre_activations_[l - 1];
            for (std::size_t i = 0; i < cols; ++i) {
                if (!(pre[i] > 0.0)) {
                    grad_in[i] = 0.0;
                }
            }
            grad_z = grad_in;
        }
    }
    return grad_in;
}

Vector DenseNet::flatten() const {
    Vector out(num_params());
    std::size_t offset = 0;
    for (const DenseLayer& layer : layers_) {
        std::copy(layer.weights.values().begin(), layer.weights.values().end(),
                  out.begin() + static_cast<std::ptrdiff_t>(offset));
        offset += layer.weights.size();
        std::copy(layer.bias.begin(), layer.bias.end(),
                  out.begin() + static_cast<std::ptrdiff_t>(offset));
        offset += layer.bias.size();
    }
    return out;
}

DenseNet DenseNet::unflatten_same(const Vector& flat) const {
    if (flat.size() != num_params()) {
        throw DimensionError("unflatten: expected " + std::to_string(num_params()) +
                             " parameters, got " + std::to_string(flat.size()));
    }
    std::vector<DenseLayer> layers;
    layers.reserve(layers_.size());
    std::size_t offset = 0;
    for (const DenseLayer& layer : layers_) {
        const std::size_t rows = layer.weights.rows();
        const std::size_t cols = layer.weights.cols();
        const auto w_begin = flat.begin() + static_cast<std::ptrdiff_t>(offset);
        std::vector<double> w(w_begin, w_begin + static_cast<std::ptrdiff_t>(rows * cols));
        offset += rows * cols;
        const auto b_begin = flat.begin() + static_cast<std::ptrdiff_t>(offset);
        std::vector<double> b(b_begin, b_begin + static_cast<std::ptrdiff_t>(rows));
        offset += rows;
        layers.push_back({Matrix(rows, cols, std::move(w)), Vector(std::move(b))});
    }
    return DenseNet(std::move(layers));
}

void DenseNet::apply_gradient(const GradientTape& grads, double lr) {
    if (!(lr > 0.0)) {
        throw Error("sgd: learning rate must be positive");
    }
    if (grads.layers().size() != layers_.size()) {
        throw DimensionError("sgd: gradient layout does not match model");
    }
    if (!grads.is_finite()) {
        throw NumericalError("sgd: non-finite gradient");
    }
    const auto& k = kernels::active();
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        DenseLayer& layer = layers_[l];
        const DenseLayer& g = grads.layers()[l];
        if (g.weights.size() != layer.weights.size() || g.bias.size() != layer.bias.size()) {
            throw DimensionError("sgd: gradient layout does not match model");
        }
        k.axpy(-lr, g.weights.data(), layer.weights.data(), layer.weights.size());
        k.axpy(-lr, g.bias.data(), layer.bias.data(), layer.bias.size());
    }
    if (!is_finite()) {
        throw NumericalError("sgd: update produced non-finite parameters");
    }
}

// ClassifierHead

ClassifierHead::ClassifierHead(DenseNet net) : DenseNet(std::move(net)) {
    if (num_layers() != 1) {
        throw Error("ClassifierHead: must be a single linear layer");
    }
}

ClassifierHead::ClassifierHead(Matrix weights, Vector bias)
    : ClassifierHead(DenseNet({DenseLayer{std::move(weights), std::move(bias)}})) {}

ClassifierHead ClassifierHead::random(std::size_t embed_dim, std::size_t num_classes,
                                      SeededRng& rng) {
    const std::size_t dims[] = {embed_dim, num_classes};
    return ClassifierHead(DenseNet::random(dims, rng));
}

// Encoder

Encoder::Encoder(Kind kind, std::size_t in_dim, std::size_t out_dim, Matrix projection)
    : kind_(kind), in_dim_(in_dim), out_dim_(out_dim), projection_(std::move(projection)) {}

Encoder Encoder::identity(std::size_t dim) { return Encoder(Kind::Identity, dim, dim, Matrix()); }

Encoder Encoder::projection(std::uint64_t seed, std::size_t in_dim, std::size_t out_dim) {
    if (in_dim == 0 || out_dim == 0) {
        throw Error("Encoder::projection: dims must be positive");
    }
    SeededRng rng(seed);
    Matrix p(out_dim, in_dim);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (std::size_t i = 0; i < p.size(); ++i) {
        p.data()[i] = stddev * rng.normal();
    }
    return Encoder(Kind::Projection, in_dim, out_dim, std::move(p));
}

Vector Encoder::encode(const Vector& x) const {
    if (x.size() != in_dim_) {
        throw DimensionError("Encoder::encode: input has dim " + std::to_string(x.size()) +
                             ", expected " + std::to_string(in_dim_));
    }
    if (kind_ == Kind::Identity) {
        return x;
    }
    return projection_.multiply(x);
}

// Free functions

std::vector<std::size_t> mapping_dims(std::size_t in_dim, std::size_t hidden_dim,
                                      std::size_t out_dim, std::size_t layers) {
    if (layers == 1) {
        return {in_dim, out_dim};
    }
    if (layers == 3) {
        return {in_dim, hidden_dim, hidden_dim, out_dim};
    }
    throw Error("mapping_dims: layers must be 1 or 3");
}

Vector encode(const Encoder& encoder, const Vector& x) { return encoder.encode(x); }

Vector forward_map(const MappingModule& module, const Vector& x) { return module.forward(x); }

SgdOptimizer::SgdOptimizer(double lr, double momentum) : lr_(lr), momentum_(momentum) {
    if (!(lr > 0.0)) {
        throw Error("SgdOptimizer: learning rate must be positive");
    }
    if (momentum < 0.0 || momentum >= 1.0) {
        throw Error("SgdOptimizer: momentum must be in [0, 1)");
    }
}

void SgdOptimizer::step(DenseNet& model, const GradientTape& grads) {
    if (momentum_ == 0.0) {
        model.apply_gradient(grads, lr_);
        return;
    }
    if (!grads.is_finite()) {
        throw NumericalError("sgd: non-finite gradient");
    }
    if (velocity_.layers().size() != model.num_layers()) {
        velocity_ = GradientTape::zeros_like(model);
    }
    for (DenseLayer& layer : velocity_.layers()) {
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
            layer.weights.data()[i] *= momentum_;
        }
        layer.bias *= momentum_;
    }
    velocity_.accumulate(grads);
    model.apply_gradient(velocity_, lr_);
}

double module_distance_sq(const DenseNet& a, const DenseNet& b) {
    if (!a.same_architecture(b)) {
        throw DimensionError("module_distance_sq: architecture mismatch");
    }
    double sum = 0.0;
    const auto& k = kernels::active();
    for (std::size_t l = 0; l < a.num_layers(); ++l) {
        const DenseLayer& la = a.layers()[l];
        const DenseLayer& lb = b.layers()[l];
        sum += k.squared_distance(la.weights.data(), lb.weights.data(), la.weights.size());
        sum += k.squared_distance(la.bias.data(), lb.bias.data(), la.bias.size());
    }
    return sum;
}

}  // namespace apromfl
