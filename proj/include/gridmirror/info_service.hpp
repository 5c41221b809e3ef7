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

#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "gridmirror/clock.hpp"
#include "gridmirror/wire.hpp"

namespace gm {

struct SeAdvertisement {
    std::string host;
    std::uint16_t port = 0;
    std::map<std::string, std::string> vo_roots;
    TimeMs last_heartbeat = 0;
};

struct ResolvedRoot {
    std::uint16_t port = 0;
    std::string root;
};

/// Registry of (SE host, VO) -> storage root. Last writer wins.
class InfoService {
public:
    /// stale_after_ms <= 0 disables staleness.
    InfoService(const Clock& clock, TimeMs stale_after_ms) : clock_(&clock), stale_after_ms_(stale_after_ms) {}

    void advertise(std::string_view host, std::uint16_t port, const std::map<std::string, std::string>& vo_roots);
    ResolvedRoot resolve(std::string_view host, std::string_view vo) const;
    /// Fresh SEs supporting `vo`, sorted by host.
    std::vector<std::string> list_ses(std::string_view vo) const;

private:
    const Clock* clock_;
    TimeMs stale_after_ms_;
    mutable std::mutex mutex_;
    std::map<std::string, SeAdvertisement, std::less<>> ads_;
};

/// Ops: advertise, resolve, list_ses.
class InfoServiceEndpoint final : public Service {
public:
    InfoServiceEndpoint(InfoService& info, std::string token);
    json handle(const json& request) override { return dispatcher_.dispatch(request); }

private:
    InfoService& info_;
    Dispatcher dispatcher_;
};

class InfoClient {
public:
    InfoClient(Transport& transport, Address address, std::string token)
        : rpc_(transport, std::move(address), std::move(token)) {}

    void advertise(std::string_view host, std::uint16_t port, const std::map<std::string, std::string>& vo_roots) const;
    ResolvedRoot resolve(std::string_view host, std::string_view vo) const;
    std::vector<std::string> list_ses(std::string_view vo) const;

private:
    RpcClient rpc_;
};

}  // namespace gm
