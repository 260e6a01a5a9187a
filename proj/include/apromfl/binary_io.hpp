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

// Little-endian binary encoding shared by every on-disk container. Doubles are
// stored as their IEEE-754 bit pattern, so round trips are bit-exact.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "apromfl/linalg.hpp"

namespace apromfl::io {

class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& out) : out_(out) {}

    void magic(std::string_view tag);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void string(std::string_view s);
    void vector(const Vector& v);
    void matrix(const Matrix& m);

private:
    std::ostream& out_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::istream& in) : in_(in) {}

    /// Throws FormatError when the next bytes are not `tag`.
    void expect_magic(std::string_view tag);
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::string string();
    Vector vector();
    Matrix matrix();
    /// Reads a count and rejects values above `limit` (corrupt headers).
    std::uint64_t count(std::uint64_t limit = (1ULL << 32));
    bool at_end();

private:
    void read(char* dst, std::size_t n);
    std::istream& in_;
};

}  // namespace apromfl::io
