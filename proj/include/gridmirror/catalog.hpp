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
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "gridmirror/clock.hpp"
#include "gridmirror/names.hpp"
#include "gridmirror/wire.hpp"

namespace gm {

enum class NamingMode { Free, Strict };

NamingMode parse_naming_mode(std::string_view text);
std::string_view to_string(NamingMode mode) noexcept;

using Attributes = std::map<std::string, std::string>;

struct LogicalFileRecord {
    std::string lfn;
    std::optional<std::uint64_t> size;
    std::optional<std::uint32_t> crc32;
    TimeMs created_at = 0;
    Attributes extra;

    bool operator==(const LogicalFileRecord&) const = default;
};

struct ReplicaEntry {
    std::string lfn;
    PhysicalFileName pfn;
    std::string se_host;
    TimeMs registered_at = 0;

    bool operator==(const ReplicaEntry&) const = default;
};

json to_json(const LogicalFileRecord& record);
LogicalFileRecord record_from_json(const json& j);
json to_json(const ReplicaEntry& entry);
ReplicaEntry replica_from_json(const json& j);

/// Centralised replica location catalogue: LFN -> {PFN} plus extensible
/// logical-file attributes. Thread-safe; every operation is linearizable.
class Catalog {
public:
    static constexpr std::size_t kMaxAttributes = 64;
    static constexpr std::size_t kMaxAttributeValue = 256;
    static constexpr std::uint8_t kSnapshotVersion = 1;

    Catalog(NamingMode mode, const Clock& clock) : mode_(mode), clock_(&clock) {}

    LogicalFileRecord register_logical(std::string_view lfn, std::optional<std::uint64_t> size,
                                       std::optional<std::uint32_t> crc32, const Attributes& extra = {});
    LogicalFileRecord get_logical(std::string_view lfn) const;
    ReplicaEntry add_replica(std::string_view lfn, const PhysicalFileName& pfn);
    bool remove_replica(std::string_view lfn, const PhysicalFileName& pfn);
    /// Sorted by canonical text form.
    std::vector<PhysicalFileName> lookup(std::string_view lfn) const;
    std::vector<ReplicaEntry> replicas(std::string_view lfn) const;
    std::vector<std::string> list_lfns(std::string_view pattern, std::size_t limit) const;
    LogicalFileRecord set_attribute(std::string_view lfn, std::string_view key, std::string_view value);

    /// Writes a consistent point-in-time image. Throws Error(IoFailure).
    void snapshot_save(const std::filesystem::path& path) const;
    /// Replaces the whole state. Throws Error(IoFailure | CorruptSnapshot);
    /// the current state is untouched on failure.
    void snapshot_load(const std::filesystem::path& path);

    std::vector<std::uint8_t> encode_snapshot() const;
    void decode_snapshot(std::span<const std::uint8_t> bytes);

    NamingMode naming_mode() const noexcept { return mode_; }
    std::size_t size() const;

private:
    struct Entry {
        LogicalFileRecord record;
        std::map<std::string, ReplicaEntry> replicas;  // keyed by canonical PFN
    };
    using EntryMap = std::map<std::string, Entry, std::less<>>;

    Entry& find_entry(std::string_view lfn);
    const Entry& find_entry(std::string_view lfn) const;

    NamingMode mode_;
    const Clock* clock_;
    mutable std::shared_mutex mutex_;
    EntryMap entries_;
};

/// Wire front end. Ops: register_logical, get_logical, add_replica,
/// remove_replica, lookup, replicas, list_lfns, set_attribute,
/// snapshot_save, snapshot_load.
class CatalogService final : public Service {
public:
    CatalogService(Catalog& catalog, std::string token,
                   std::optional<std::filesystem::path> default_snapshot = std::nullopt);
    json handle(const json& request) override { return dispatcher_.dispatch(request); }

private:
    Catalog& catalog_;
    std::optional<std::filesystem::path> default_snapshot_;
    Dispatcher dispatcher_;
};

class CatalogClient {
public:
    CatalogClient(Transport& transport, Address address, std::string token)
        : rpc_(transport, std::move(address), std::move(token)) {}

    LogicalFileRecord register_logical(std::string_view lfn, std::optional<std::uint64_t> size,
                                       std::optional<std::uint32_t> crc32, const Attributes& extra = {}) const;
    LogicalFileRecord get_logical(std::string_view lfn) const;
    ReplicaEntry add_replica(std::string_view lfn, const PhysicalFileName& pfn) const;
    bool remove_replica(std::string_view lfn, const PhysicalFileName& pfn) const;
    std::vector<PhysicalFileName> lookup(std::string_view lfn) const;
    std::vector<std::string> list_lfns(std::string_view pattern, std::size_t limit) const;
    LogicalFileRecord set_attribute(std::string_view lfn, std::string_view key, std::string_view value) const;
    void snapshot_save(const std::string& path = {}) const;

    const RpcClient& rpc() const noexcept { return rpc_; }

private:
    RpcClient rpc_;
};

}  // namespace gm
