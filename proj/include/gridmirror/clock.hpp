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

#include <atomic>
#include <cstdint>

namespace gm {

/// Milliseconds. Wall-clock epoch for SystemClock, simulation time for
/// ManualClock.
using TimeMs = std::int64_t;

/// Every module takes time from a Clock so the harness can run on virtual
/// time.
class Clock {
public:
    virtual ~Clock() = default;
    virtual TimeMs now() const = 0;
    virtual void sleep_until(TimeMs t) = 0;
    void sleep_for(TimeMs ms) { sleep_until(now() + ms); }
};

class SystemClock final : public Clock {
public:
    TimeMs now() const override;
    void sleep_until(TimeMs t) override;
};

/// Virtual clock: sleeping advances time instantly. Time never moves back.
class ManualClock final : public Clock {
public:
    explicit ManualClock(TimeMs start = 0) : now_(start) {}
    TimeMs now() const override { return now_.load(); }
    void sleep_until(TimeMs t) override { advance_to(t); }
    void advance_to(TimeMs t);
    void advance(TimeMs ms) { advance_to(now() + ms); }

private:
    std::atomic<TimeMs> now_;
};

}  // namespace gm
