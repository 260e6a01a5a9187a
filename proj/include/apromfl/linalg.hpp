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
#include <initializer_list>
#include <span>
#include <vector>

namespace apromfl {

/// Dense real vector with a dimension fixed at construction.
///
/// Construction from external values rejects NaN/Inf. Element access through
/// operator[] is unchecked; code that writes computed values goes through
/// `require_finite()` at module boundaries (loss values, gradients, updates).
class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t dim, double fill = 0.0);
    Vector(std::initializer_list<double> values);
    explicit Vector(std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    const double* data() const noexcept { return values_.data(); }
    double* data() noexcept { return values_.data(); }
    std::span<const double> span() const noexcept { return values_; }
    std::span<double> span() noexcept { return values_; }

    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }
    auto begin() noexcept { return values_.begin(); }
    auto end() noexcept { return values_.end(); }

    const std::vector<double>& values() const noexcept { return values_; }

    bool is_finite() const noexcept;
    /// Throws NumericalError naming `what` when any entry is NaN/Inf.
    void require_finite(const char* what) const;

    Vector& operator+=(const Vector& other);
    Vector& operator-=(const Vector& other);
    Vector& operator*=(double scale) noexcept;

    friend bool operator==(const Vector&, const Vector&) = default;

private:
    std::vector<double> values_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator*(double scale, Vector v);

/// Row-major dense matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }

    double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const noexcept {
        return {values_.data() + r * cols_, cols_};
    }
    std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }

    const double* data() const noexcept { return values_.data(); }
    double* data() noexcept { return values_.data(); }
    const std::vector<double>& values() const noexcept { return values_; }

    bool is_finite() const noexcept;

    /// y = M x (+ bias when non-empty).
    Vector multiply(const Vector& x, const Vector& bias = {}) const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

double dot(const Vector& a, const Vector& b);
double squared_norm(const Vector& v);
double norm(const Vector& v);
double squared_distance(const Vector& a, const Vector& b);
void axpy(double alpha, const Vector& x, Vector& y);

/// Elementwise mean of a non-empty list of equal-dimension vectors.
Vector mean_of(std::span<const Vector> vectors);

}  // namespace apromfl
