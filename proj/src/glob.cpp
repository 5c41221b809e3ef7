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

#include "gridmirror/glob.hpp"

#include <string>

#include "gridmirror/error.hpp"

namespace gm {

bool glob_match(std::string_view pattern, std::string_view text) noexcept {
    // Iterative matcher with single-star backtracking; linear in practice.
    std::size_t p = 0, t = 0;
    std::size_t star = std::string_view::npos, mark = 0;
    while (t < text.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
            ++p;
            ++t;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = t;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            t = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

void validate_glob(std::string_view pattern) {
    if (pattern.empty() || pattern.size() > 1024)
        throw Error(errc::kInvalidPattern, "pattern must be 1-1024 bytes");
    for (char c : pattern) {
        if (c == '[' || c == ']' || c == '{' || c == '}' || c == '\\')
            throw Error(errc::kInvalidPattern, "only '*' and '?' are supported: '" + std::string(pattern) + "'");
    }
}

std::string_view glob_literal_prefix(std::string_view pattern) noexcept {
    return pattern.substr(0, pattern.find_first_of("*?"));
}

}  // namespace gm
