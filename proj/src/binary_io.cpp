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

#include "apromfl/binary_io.hpp"

#include <array>
#include <bit>
#include <vector>

#include "apromfl/error.hpp"

namespace apromfl::io {

void BinaryWriter::magic(std::string_view tag) { out_.write(tag.data(), static_cast<std::streamsize>(tag.size())); }

void BinaryWriter::u32(std::uint32_t v) {
    std::array<char, 4> bytes{};
    for (std::size_t i = 0; i < 4; ++i) {
        bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFFU);
    }
    out_.write(bytes.data(), 4);
}

void BinaryWriter::u64(std::uint64_t v) {
    std::array<char, 8> bytes{};
    for (std::size_t i = 0; i < 8; ++i) {
        bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFFU);
    }
    out_.write(bytes.data(), 8);
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::string(std::string_view s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryWriter::vector(const Vector& v) {
    u64(v.size());
    for (double x : v) {
        f64(x);
    }
}

void BinaryWriter::matrix(const Matrix& m) {
    u64(m.rows());
    u64(m.cols());
    for (double x : m.values()) {
        f64(x);
    }
}

void BinaryReader::read(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
        throw FormatError("unexpected end of data");
    }
}

void BinaryReader::expect_magic(std::string_view tag) {
    std::string got(tag.size(), '\0');
    read(got.data(), got.size());
    if (got != tag) {
        throw FormatError("bad magic: expected '" + std::string(tag) + "'");
    }
}

std::uint32_t BinaryReader::u32() {
    std::array<char, 4> bytes{};
    read(bytes.data(), 4);
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
    }
    return v;
}

std::uint64_t BinaryReader::u64() {
    std::array<char, 8> bytes{};
    read(bytes.data(), 8);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
    }
    return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::uint64_t BinaryReader::count(std::uint64_t limit) {
    const std::uint64_t n = u64();
    if (n > limit) {
        throw FormatError("implausible element count " + std::to_string(n));
    }
    return n;
}

std::string BinaryReader::string() {
    const std::uint64_t n = count(1ULL << 20);
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
}

Vector BinaryReader::vector() {
    const std::uint64_t n = count();
    std::vector<double> values(n);
    for (double& x : values) {
        x = f64();
    }
    return Vector(std::move(values));
}

Matrix BinaryReader::matrix() {
    const std::uint64_t rows = count();
    const std::uint64_t cols = count();
    std::vector<double> values(rows * cols);
    for (double& x : values) {
        x = f64();
    }
    return Matrix(rows, cols, std::move(values));
}

bool BinaryReader::at_end() { return in_.peek() == std::char_traits<char>::eof(); }

}  // namespace apromfl::io
