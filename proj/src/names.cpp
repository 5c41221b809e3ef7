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

#include "gridmirror/names.hpp"

#include <charconv>

#include "gridmirror/error.hpp"

namespace gm {
namespace {

bool is_name_char(char c) noexcept {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' || c == '_' ||
           c == '-';
}

bool is_host_char(char c) noexcept {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' || c == '-';
}

// Calls fn(segment) for each '/'-separated segment.
template <typename Fn>
bool all_segments(std::string_view path, Fn fn) {
    std::size_t start = 0;
    while (true) {
        const std::size_t slash = path.find('/', start);
        const std::string_view seg = path.substr(start, slash == std::string_view::npos ? slash : slash - start);
        if (!fn(seg)) return false;
        if (slash == std::string_view::npos) return true;
        start = slash + 1;
    }
}

}  // namespace

LogicalFileName::LogicalFileName(std::string value) : value_(std::move(value)) {
    if (!is_valid(value_)) throw Error(errc::kInvalidName, "invalid logical file name '" + value_ + "'");
}

bool LogicalFileName::is_valid(std::string_view value) noexcept {
    if (value.empty() || value.size() > kMaxLength) return false;
    if (value.front() == '/') return false;
    for (char c : value) {
        if (!is_name_char(c) && c != '/') return false;
    }
    if (value.find("//") != std::string_view::npos) return false;
    return all_segments(value, [](std::string_view seg) { return seg != ".."; });
}

PhysicalFileName PhysicalFileName::parse(std::string_view text) {
    auto bad = [&](const char* why) {
        return Error(errc::kInvalidName, "invalid physical file name '" + std::string(text) + "': " + why);
    };
    constexpr std::string_view prefix = "gmft://";
    if (!text.starts_with(prefix)) throw bad("scheme must be gmft");
    std::string_view rest = text.substr(prefix.size());
    const std::size_t colon = rest.find(':');
    const std::size_t slash = rest.find('/');
    if (colon == std::string_view::npos || slash == std::string_view::npos || colon > slash)
        throw bad("expected host:port/path");
    PhysicalFileName pfn;
    pfn.host = std::string(rest.substr(0, colon));
    if (pfn.host.empty()) throw bad("empty host");
    for (char c : pfn.host) {
        if (!is_host_char(c)) throw bad("bad host character");
    }
    const std::string_view port_text = rest.substr(colon + 1, slash - colon - 1);
    unsigned port = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port == 0 || port > 65535 ||
        port_text.front() == '0')
        throw bad("port must be 1-65535");
    pfn.port = static_cast<std::uint16_t>(port);
    pfn.path = std::string(rest.substr(slash));
    if (!is_valid_absolute_path(pfn.path)) throw bad("path must be absolute without '..' or empty segments");
    return pfn;
}

std::string PhysicalFileName::str() const {
    return std::string(kScheme) + "://" + host + ":" + std::to_string(port) + path;
}

bool is_valid_vo(std::string_view vo) noexcept {
    if (vo.empty() || vo.size() > 32) return false;
    for (char c : vo) {
        if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-')) return false;
    }
    return true;
}

bool is_valid_relative_path(std::string_view path) noexcept {
    if (path.empty() || path.size() > 1024) return false;
    return all_segments(path, [](std::string_view seg) {
        if (seg.empty() || seg == "." || seg == "..") return false;
        for (char c : seg) {
            if (!is_name_char(c)) return false;
        }
        return true;
    });
}

bool is_valid_absolute_path(std::string_view path) noexcept {
    if (path.size() < 2 || path.front() != '/') return false;
    return all_segments(path.substr(1), [](std::string_view seg) {
        if (seg.empty() || seg == "..") return false;
        for (char c : seg) {
            if (static_cast<unsigned char>(c) < 0x21 || c == 0x7F) return false;
        }
        return true;
    });
}

bool path_has_lfn_suffix(std::string_view pfn_path, std::string_view lfn) noexcept {
    if (pfn_path.starts_with('/')) pfn_path.remove_prefix(1);
    if (!pfn_path.ends_with(lfn)) return false;
    if (pfn_path.size() == lfn.size()) return true;
    return pfn_path[pfn_path.size() - lfn.size() - 1] == '/';
}

bool roots_overlap(const std::map<std::string, std::string>& vo_roots) noexcept {
    for (auto a = vo_roots.begin(); a != vo_roots.end(); ++a) {
        for (auto b = vo_roots.begin(); b != vo_roots.end(); ++b) {
            if (a != b && b->second.starts_with(a->second)) return true;
        }
    }
    return false;
}

std::string join_path(std::string_view root, std::string_view relative) {
    std::string out(root);
    if (!out.ends_with('/')) out += '/';
    out += relative;
    return out;
}

std::string lfn_tail(std::string_view lfn, std::string_view vo) {
    if (lfn.size() > vo.size() && lfn.starts_with(vo) && lfn[vo.size()] == '/')
        return std::string(lfn.substr(vo.size() + 1));
    return std::string(lfn);
}

}  // namespace gm
