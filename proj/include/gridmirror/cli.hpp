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

#include <iosfwd>
#include <string>
#include <vector>

namespace gm::cli {

/// Entry point shared by the gridmirror binary and the gm-* aliases.
/// args[0] is the program name; a basename of gm-<family> selects the family,
/// otherwise args[1] does. Exit codes: 0 ok, 1 operation error (code name on
/// the first stderr line), 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// gridmirror-sim entry point.
int run_sim(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gm::cli
