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

#include "gridmirror/clock.hpp"

#include <chrono>
#include <thread>

namespace gm {

TimeMs SystemClock::now() const {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

void SystemClock::sleep_until(TimeMs t) {
    const TimeMs delta = t - now();
    if (delta > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delta));
}

void ManualClock::advance_to(TimeMs t) {
    TimeMs cur = now_.load();
    while (t > cur && !now_.compare_exchange_weak(cur, t)) {
    }
}

}  // namespace gm
