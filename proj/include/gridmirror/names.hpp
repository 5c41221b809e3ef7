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

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace gm {

/// Grid-wide name of a set of identical replicas, e.g. "cms/higgs/run42.dat".
class LogicalFileName {
public:
    static constexpr std::size_t kMaxLength = 256;

    /// Throws Error(InvalidName).
    explicit LogicalFileName(std::string value);

    static bool is_valid(std::string_view value) noexcept;

    const std::string& str() const noexcept { return value_; }
    auto operator<=>(const LogicalFileName&) const = default;

private:
    std::string value_;
};

/// Address of one concrete replica: gmft://host:port/absolute/path
struct PhysicalFileName {
    static constexpr std::string_view kScheme = "gmft";

    std::string host;
    std::uint16_t port = 0;
    std::string path;

    /// Accepts only the canonical text form. Throws Error(InvalidName).
    static PhysicalFileName parse(std::string_view text);

    std::string str() const;

    auto operator<=>(const PhysicalFileName&) const = default;
};

/// Virtual organisation name: [a-z0-9-]{1,32}.
bool is_valid_vo(std::string_view vo) noexcept;

/// Relative path inside a VO root: non-empty segments of [A-Za-z0-9._-],
/// no "." or ".." segments, no leading or trailing '/'.
bool is_valid_relative_path(std::string_view path) noexcept;

/// Absolute path with non-empty segments and no ".." segment.
bool is_valid_absolute_path(std::string_view path) noexcept;

/// Strict naming rule: the path (leading '/' ignored) equals the LFN or ends
/// with "/" + LFN.
bool path_has_lfn_suffix(std::string_view pfn_path, std::string_view lfn) noexcept;

/// True when some root is a string prefix of another (equal roots overlap).
bool roots_overlap(const std::map<std::string, std::string>& vo_roots) noexcept;

/// Join a VO root and a relative path.
std::string join_path(std::string_view root, std::string_view relative);

/// Relative part of an LFN below its VO: "cms/a/b" with vo "cms" -> "a/b".
/// LFNs without the VO prefix map to themselves.
std::string lfn_tail(std::string_view lfn, std::string_view vo);

}  // namespace gm
