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

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridmirror/blob_store.hpp"
#include "gridmirror/clock.hpp"
#include "gridmirror/wire.hpp"

namespace gm {

struct TierSet {
    bool disk = false;
    bool mss = false;

    bool empty() const noexcept { return !disk && !mss; }
    bool operator==(const TierSet&) const = default;
};

/// ["Disk"], ["Mss"] or ["Disk", "Mss"].
json to_json(TierSet tiers);
TierSet tiers_from_json(const json& j);

struct StorageObject {
    std::string path;  // relative to the VO root
    std::uint64_t size = 0;
    std::uint32_t crc32 = 0;
    TierSet tiers;

    bool operator==(const StorageObject&) const = default;
};

json to_json(const StorageObject& object);
StorageObject object_from_json(const json& j);

struct TransferReceipt {
    std::uint64_t bytes = 0;
    std::uint32_t crc32 = 0;
};

json to_json(const TransferReceipt& receipt);
TransferReceipt receipt_from_json(const json& j);

struct SeConfig {
    std::string host;
    std::uint16_t port = 0;
    std::map<std::string, std::string> vo_roots;
    std::uint64_t disk_capacity = 0;
    TimeMs mss_stage_latency_ms = 0;
    std::string token;

    /// Throws Error(InvalidConfig).
    void validate() const;
    static SeConfig from_json(const json& j);
    json to_json() const;
};

struct SeStats {
    std::uint64_t transfers_out = 0;
    std::uint64_t transfers_in = 0;
    std::uint64_t checksum_failures = 0;
    std::uint64_t frames_rejected = 0;
};

/// Two-tier store (disk cache + simulated MSS) with per-VO namespaces and a
/// CRC-verified data plane. Operations on distinct paths run in parallel;
/// operations on the same path are serialized.
class StorageElement {
public:
    StorageElement(SeConfig config, std::unique_ptr<BlobStore> disk, std::unique_ptr<BlobStore> mss,
                   Clock& clock, Transport& transport);

    /// Rebuilds the object table from the blob stores (partials are dropped).
    void recover();

    StorageObject put_file(std::string_view vo, std::string_view path, std::span<const std::uint8_t> content);
    std::vector<std::uint8_t> get_file(std::string_view vo, std::string_view path);
    StorageObject stat(std::string_view vo, std::string_view path);
    StorageObject stage_to_mss(std::string_view vo, std::string_view path);
    StorageObject stage_from_mss(std::string_view vo, std::string_view path);
    StorageObject evict_to_mss(std::string_view vo, std::string_view path);
    /// Removes the object from both tiers.
    void remove(std::string_view vo, std::string_view path);
    StorageObject checksum(std::string_view vo, std::string_view path);
    std::vector<StorageObject> list_dir(std::string_view vo, std::string_view dir);

    /// Pushes a Disk-resident object to another SE over the data plane.
    /// `token` authenticates against the destination.
    TransferReceipt send_file(std::string_view vo, std::string_view path, const Address& dest,
                              std::string_view dest_vo, std::string_view dest_path, std::string_view token);

    /// Reserves path + capacity for an incoming frame; returns the frame path
    /// the sender must use.
    std::string open_transfer(std::string_view vo, std::string_view path, std::uint64_t size);
    std::uint8_t receive_frame(std::span<const std::uint8_t> frame);

    std::uint64_t disk_used() const;
    SeStats stats() const;
    const SeConfig& config() const noexcept { return config_; }

private:
    struct Object {
        std::string vo;
        std::string path;
        std::uint64_t size = 0;
        std::uint32_t crc32 = 0;
        TierSet tiers;
    };
    struct Reservation {
        std::string vo;
        std::string path;
        std::uint64_t size = 0;
        TimeMs opened_at = 0;
    };

    class PathLock;

    std::string key_for(std::string_view vo, std::string_view path) const;
    StorageObject to_object(const Object& object) const;
    void release_reservation_locked(const std::string& key);
    void expire_reservations_locked();

    SeConfig config_;
    std::unique_ptr<BlobStore> disk_;
    std::unique_ptr<BlobStore> mss_;
    Clock& clock_;
    Transport& transport_;

    mutable std::mutex mutex_;
    std::condition_variable path_released_;
    std::set<std::string> busy_paths_;
    std::map<std::string, Object> objects_;
    std::map<std::string, Reservation> reservations_;  // keyed by storage key
    std::uint64_t disk_used_ = 0;
    std::uint64_t reserved_ = 0;
    std::uint64_t partial_counter_ = 0;
    SeStats stats_;
};

/// Control-plane ops: put, get, stat, stage_to_mss, stage_from_mss,
/// evict_to_mss, delete, checksum, list_dir, send_file, open_transfer, stats.
/// Frames are handed to receive_frame.
class SeService final : public Service {
public:
    explicit SeService(StorageElement& se);
    json handle(const json& request) override { return dispatcher_.dispatch(request); }
    std::uint8_t handle_frame(std::span<const std::uint8_t> frame) override;

private:
    StorageElement& se_;
    Dispatcher dispatcher_;
    std::string token_;
};

class SeClient {
public:
    SeClient(Transport& transport, Address address, std::string token)
        : rpc_(transport, std::move(address), std::move(token)) {}

    StorageObject put(std::string_view vo, std::string_view path, std::span<const std::uint8_t> content) const;
    std::vector<std::uint8_t> get(std::string_view vo, std::string_view path) const;
    StorageObject stat(std::string_view vo, std::string_view path) const;
    StorageObject stage_to_mss(std::string_view vo, std::string_view path) const;
    StorageObject stage_from_mss(std::string_view vo, std::string_view path) const;
    StorageObject evict_to_mss(std::string_view vo, std::string_view path) const;
    void remove(std::string_view vo, std::string_view path) const;
    StorageObject checksum(std::string_view vo, std::string_view path) const;
    std::vector<StorageObject> list_dir(std::string_view vo, std::string_view dir = {}) const;
    SeStats stats() const;

    /// Client-side upload over the data plane (open_transfer + frame).
    TransferReceipt upload(std::string_view vo, std::string_view path, std::span<const std::uint8_t> content) const;

    const RpcClient& rpc() const noexcept { return rpc_; }

private:
    RpcClient rpc_;
};

/// Instructs `source` to push a file to `dest`; the caller never carries the
/// bytes. Transport failures towards the source become SourceUnreachable.
TransferReceipt third_party_transfer(Transport& transport, std::string_view token, const Address& source,
                                     std::string_view source_vo, std::string_view source_path,
                                     const Address& dest, std::string_view dest_vo, std::string_view dest_path);

}  // namespace gm
