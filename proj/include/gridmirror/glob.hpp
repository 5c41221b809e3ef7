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

#include <string_view>

namespace gm {

/// '*' matches any run of characters (including '/'), '?' exactly one.
bool glob_match(std::string_view pattern, std::string_view text) noexcept;

/// Throws Error(InvalidPattern) for empty patterns or ones using anything
/// beyond '*' and '?' as metacharacters.
void validate_glob(std::string_view pattern);

/// Literal prefix before the first metacharacter.
std::string_view glob_literal_prefix(std::string_view pattern) noexcept;

}  // namespace gm
