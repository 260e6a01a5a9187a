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

#include "apromfl/linalg.hpp"

#include <cmath>
#include <string>

#include "apromfl/error.hpp"
#include "apromfl/kernels.hpp"

namespace apromfl {
namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* op) {
    if (a != b) {
        throw DimensionError(std::string(op) + ": dimension mismatch (" + std::to_string(a) +
                             " vs " + std::to_string(b) + ")");
    }
}

bool all_finite(const std::vector<double>& values) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

}  // namespace

Vector::Vector(std::size_t dim, double fill) : values_(dim, fill) {
    if (!std::isfinite(fill)) {
        throw NumericalError("Vector: non-finite fill value");
    }
}

Vector::Vector(std::initializer_list<double> values) : values_(values) { require_finite("Vector"); }

Vector::Vector(std::vector<double> values) : values_(std::move(values)) { require_finite("Vector"); }

bool Vector::is_finite() const noexcept { return all_finite(values_); }

void Vector::require_finite(const char* what) const {
    if (!is_finite()) {
        throw NumericalError(std::string(what) + ": non-finite entry");
    }
}

Vector& Vector::operator+=(const Vector& other) {
    require_same_dim(size(), other.size(), "Vector::operator+=");
    kernels::active().axpy(1.0, other.data(), data(), size());
    return *this;
}

Vector& Vector::operator-=(const Vector& other) {
    require_same_dim(size(), other.size(), "Vector::operator-=");
    kernels::active().axpy(-1.0, other.data(), data(), size());
    return *this;
}

Vector& Vector::operator*=(double scale) noexcept {
    for (double& v : values_) {
        v *= scale;
    }
    return *this;
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator*(double scale, Vector v) { return v *= scale; }

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
        throw DimensionError("Matrix: rows*cols != number of values");
    }
    if (!all_finite(values_)) {
        throw NumericalError("Matrix: non-finite entry");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

bool Matrix::is_finite() const noexcept { return all_finite(values_); }

Vector Matrix::multiply(const Vector& x, const Vector& bias) const {
    require_same_dim(cols_, x.size(), "Matrix::multiply");
    if (!bias.empty()) {
        require_same_dim(rows_, bias.size(), "Matrix::multiply bias");
    }
    Vector y(rows_);
    kernels::active().gemv(data(), rows_, cols_, x.data(), bias.empty() ? nullptr : bias.data(),
                           y.data());
    return y;
}

double dot(const Vector& a, const Vector& b) {
    require_same_dim(a.size(), b.size(), "dot");
    return kernels::active().dot(a.data(), b.data(), a.size());
}

double squared_norm(const Vector& v) { return kernels::active().dot(v.data(), v.data(), v.size()); }

double norm(const Vector& v) { return std::sqrt(squared_norm(v)); }

double squared_distance(const Vector& a, const Vector& b) {
    require_same_dim(a.size(), b.size(), "squared_distance");
    return kernels::active().squared_distance(a.data(), b.data(), a.size());
}

void axpy(double alpha, const Vector& x, Vector& y) {
    require_same_dim(x.size(), y.size(), "axpy");
    kernels::active().axpy(alpha, x.data(), y.data(), x.size());
}

Vector mean_of(std::span<const Vector> vectors) {
    if (vectors.empty()) {
        throw Error("mean_of: empty input");
    }
    Vector sum(vectors.front().size());
    for (const Vector& v : vectors) {
        sum += v;
    }
    sum *= 1.0 / static_cast<double>(vectors.size());
    return sum;
}

}  // namespace apromfl
