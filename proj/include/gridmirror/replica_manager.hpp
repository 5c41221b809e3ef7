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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridmirror/catalog.hpp"
#include "gridmirror/storage_element.hpp"
#include "gridmirror/wire.hpp"

namespace gm {

struct ClientConfig {
    Address catalog;
    Address info;
    std::string token;
    bool rollback = true;
    std::string vo;
};

struct ReplicaInfo {
    PhysicalFileName pfn;
    std::optional<TierSet> tiers;  // nullopt when the SE could not be reached
    std::optional<std::uint32_t> crc32;
};

json to_json(const ReplicaInfo& info);

/// Point-to-point client: copy-and-register as one action, third-party
/// replication by SE host name only, delete-and-unregister. No server.
class ReplicaManager {
public:
    ReplicaManager(ClientConfig config, Transport& transport);

    /// Uploads local bytes to `dest_se_host` and registers them under `lfn`.
    ReplicaEntry copy_and_register(std::span<const std::uint8_t> content, std::string_view dest_se_host,
                                   std::string_view lfn);
    /// Third-party copies an existing PFN to `dest_se_host` and registers it.
    ReplicaEntry copy_and_register(const PhysicalFileName& source, std::string_view dest_se_host,
                                   std::string_view lfn);

    ReplicaEntry replicate_file(std::string_view lfn, std::string_view dest_se_host,
                                std::optional<std::string> source_se_host = std::nullopt);
    void delete_replica(std::string_view lfn, std::string_view se_host);
    std::vector<ReplicaInfo> list_replicas(std::string_view lfn);

    const ClientConfig& config() const noexcept { return config_; }

private:
    struct Destination {
        Address se;
        std::string relative_path;
        PhysicalFileName pfn;
    };
    struct Located {
        Address se;
        std::string relative_path;
    };

    Destination resolve_destination(std::string_view op, std::string_view lfn, std::string_view dest_se_host);
    Located locate(const PhysicalFileName& pfn);
    ReplicaEntry register_copy(std::string_view op, std::string_view lfn, const Destination& dest,
                               const TransferReceipt& receipt, bool known_logical, std::string_view source_host);
    [[noreturn]] void fail(std::string code, std::string_view op, std::string_view lfn,
                           std::string_view hosts, const Error& cause, json extra = json::object()) const;

    ClientConfig config_;
    Transport& transport_;
    CatalogClient catalog_;
};

}  // namespace gm
