// Copyright 2026 The gridmirror Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gridmirror/crc32.hpp"

#include <array>

namespace gm {
namespace {

constexpr std::uint32_t kPolynomial = 0xEDB88320u;

// Slicing-by-4 tables; tables[0] is the classic byte-at-a-time table.
constexpr auto make_tables() {
    std::array<std::array<std::uint32_t, 256>, 4> tables{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1u) ? (c >> 1) ^ kPolynomial : c >> 1;
        tables[0][i] = c;
    }
    for (std::uint32_t i = 0; i < 256; ++i) {
        for (std::size_t t = 1; t < 4; ++t) {
            const std::uint32_t prev = tables[t - 1][i];
            tables[t][i] = (prev >> 8) ^ tables[0][prev & 0xFFu];
        }
    }
    return tables;
}

constexpr auto kTables = make_tables();

std::uint32_t advance(std::uint32_t state, const std::uint8_t* p, std::size_t n) noexcept {
    while (n >= 4) {
        state ^= static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                 (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
        state = kTables[3][state & 0xFFu] ^ kTables[2][(state >> 8) & 0xFFu] ^
                kTables[1][(state >> 16) & 0xFFu] ^ kTables[0][state >> 24];
        p += 4;
        n -= 4;
    }
    while (n-- > 0) state = (state >> 8) ^ kTables[0][(state ^ *p++) & 0xFFu];
    return state;
}

}  // namespace

void Crc32::update(std::span<const std::uint8_t> data) noexcept {
    state_ = advance(state_, data.data(), data.size());
}

void Crc32::update(std::string_view data) noexcept {
    state_ = advance(state_, reinterpret_cast<const std::uint8_t*>(data.data()), data.size());
}

std::uint32_t crc32(std::span<const std::uint8_t> data) noexcept {
    Crc32 c;
    c.update(data);
    return c.value();
}

std::uint32_t crc32(std::string_view data) noexcept {
    Crc32 c;
    c.update(data);
    return c.value();
}

}  // namespace gm
