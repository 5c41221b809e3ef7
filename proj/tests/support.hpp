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

#pragma once

#include <cstdint>
#include <random>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "gridmirror/sim.hpp"

namespace gmtest {

using gm::json;

/// Bit-at-a-time CRC-32 (reflected polynomial 0xEDB88320), written
/// independently of the table-driven production code.
inline std::uint32_t crc32_bitwise(const std::uint8_t* data, std::size_t n) {
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < n; ++i) {
        crc ^= data[i];
        for (int k = 0; k < 8; ++k) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
    }
    return ~crc;
}

inline std::uint32_t crc32_bitwise(const std::vector<std::uint8_t>& v) { return crc32_bitwise(v.data(), v.size()); }

/// Strict-naming oracle: split both sides on '/' and compare trailing segments.
inline bool suffix_oracle(const std::string& path, const std::string& lfn) {
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : s) {
            if (c == '/') {
                if (!cur.empty()) out.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!cur.empty()) out.push_back(cur);
        return out;
    };
    const auto p = split(path);
    const auto l = split(lfn);
    if (l.empty() || l.size() > p.size()) return false;
    return std::equal(l.rbegin(), l.rend(), p.rbegin());
}

inline bool glob_oracle(const std::string& pattern, const std::string& text) {
    std::string re;
    for (char c : pattern) {
        if (c == '*') re += ".*";
        else if (c == '?') re += '.';
        else if (std::isalnum(static_cast<unsigned char>(c))) re += c;
        else { re += '\\'; re += c; }
    }
    return std::regex_match(text, std::regex(re));
}

inline std::vector<std::uint8_t> random_bytes(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint8_t> out(n);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng() >> 56);
    return out;
}

inline json site_json(const std::string& name, std::vector<std::string> vos = {"cms"}, json daemon = json::object()) {
    json roots = json::object();
    for (const auto& vo : vos) roots[vo] = "/storage/" + vo;
    daemon["port"] = 9403;
    daemon["vos"] = vos;
    if (!daemon.contains("base_backoff_ms")) daemon["base_backoff_ms"] = 1000;
    return json{{"name", name},
                {"host", name + ".grid"},
                {"se", {{"port", 9402}, {"vo_roots", roots}, {"disk_capacity", 1ull << 34}, {"mss_stage_latency_ms", 250}}},
                {"daemon", daemon}};
}

inline gm::sim::Topology topology(std::vector<json> sites, json extra = json::object()) {
    extra["sites"] = std::move(sites);
    if (!extra.contains("seed")) extra["seed"] = 7;
    return gm::sim::Topology::from_json(extra);
}

inline gm::sim::Step step(gm::TimeMs at, std::string actor, std::string action, json args = json::object()) {
    return gm::sim::Step{at, std::move(actor), std::move(action), std::move(args)};
}

/// Executes a step at the current virtual time and returns its result;
/// errors propagate as gm::Error.
inline json exec(gm::sim::Harness& h, std::string actor, std::string action, json args = json::object()) {
    return h.execute(gm::sim::Step{h.clock().now(), std::move(actor), std::move(action), std::move(args)});
}

}  // namespace gmtest
