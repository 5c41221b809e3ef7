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

#include "gridmirror/storage_element.hpp"

#include <algorithm>

#include "gridmirror/base64.hpp"
#include "gridmirror/crc32.hpp"
#include "gridmirror/names.hpp"

namespace gm {
namespace {

// Incoming frames land here before the CRC check; never inside a VO root.
constexpr std::string_view kPartialDir = "/.partial/";

Error not_found(std::string_view vo, std::string_view path) {
    return Error(errc::kNotFound, "no object '" + std::string(path) + "' in vo " + std::string(vo));
}

}  // namespace

json to_json(TierSet tiers) {
    json out = json::array();
    if (tiers.disk) out.push_back("Disk");
    if (tiers.mss) out.push_back("Mss");
    return out;
}

TierSet tiers_from_json(const json& j) {
    TierSet t;
    for (const auto& v : j) {
        const auto s = v.get<std::string>();
        if (s == "Disk") t.disk = true;
        else if (s == "Mss") t.mss = true;
    }
    return t;
}

json to_json(const StorageObject& object) {
    return json{{"path", object.path}, {"size", object.size}, {"crc32", object.crc32}, {"tiers", to_json(object.tiers)}};
}

StorageObject object_from_json(const json& j) {
    return StorageObject{j.at("path").get<std::string>(), j.at("size").get<std::uint64_t>(),
                         j.at("crc32").get<std::uint32_t>(), tiers_from_json(j.at("tiers"))};
}

json to_json(const TransferReceipt& receipt) { return json{{"bytes", receipt.bytes}, {"crc32", receipt.crc32}}; }

TransferReceipt receipt_from_json(const json& j) {
    return TransferReceipt{j.at("bytes").get<std::uint64_t>(), j.at("crc32").get<std::uint32_t>()};
}

void SeConfig::validate() const {
    auto bad = [](const std::string& why) { return Error(errc::kInvalidConfig, "SE config: " + why); };
    if (host.empty()) throw bad("host is required");
    if (disk_capacity == 0) throw bad("disk_capacity must be > 0");
    if (vo_roots.empty()) throw bad("at least one VO root is required");
    for (const auto& [vo, root] : vo_roots) {
        if (!is_valid_vo(vo)) throw bad("invalid VO name '" + vo + "'");
        if (!is_valid_absolute_path(root)) throw bad("VO root must be an absolute path: '" + root + "'");
        if (root.starts_with(kPartialDir.substr(0, kPartialDir.size() - 1))) throw bad("VO root collides with /.partial");
    }
    if (roots_overlap(vo_roots)) throw bad("VO roots overlap");
    if (mss_stage_latency_ms < 0) throw bad("mss_stage_latency_ms must be >= 0");
}

SeConfig SeConfig::from_json(const json& j) {
    SeConfig c;
    try {
        c.host = j.at("host").get<std::string>();
        c.port = j.value("port", std::uint16_t{9402});
        c.vo_roots = j.at("vo_roots").get<std::map<std::string, std::string>>();
        c.disk_capacity = j.at("disk_capacity").get<std::uint64_t>();
        c.mss_stage_latency_ms = j.value("mss_stage_latency_ms", TimeMs{0});
        c.token = j.value("token", std::string());
    } catch (const json::exception& e) {
        throw Error(errc::kInvalidConfig, std::string("SE config: ") + e.what());
    }
    c.validate();
    return c;
}

json SeConfig::to_json() const {
    return json{{"host", host},
                {"port", port},
                {"vo_roots", vo_roots},
                {"disk_capacity", disk_capacity},
                {"mss_stage_latency_ms", mss_stage_latency_ms},
                {"token", token}};
}

/// Serializes operations on one storage key.
class StorageElement::PathLock {
public:
    PathLock(StorageElement& se, std::string key) : se_(se), key_(std::move(key)) {
        std::unique_lock lock(se_.mutex_);
        se_.path_released_.wait(lock, [&] { return !se_.busy_paths_.contains(key_); });
        se_.busy_paths_.insert(key_);
    }
    ~PathLock() {
        {
            std::lock_guard lock(se_.mutex_);
            se_.busy_paths_.erase(key_);
        }
        se_.path_released_.notify_all();
    }
    PathLock(const PathLock&) = delete;
    PathLock& operator=(const PathLock&) = delete;

private:
    StorageElement& se_;
    std::string key_;
};

StorageElement::StorageElement(SeConfig config, std::unique_ptr<BlobStore> disk, std::unique_ptr<BlobStore> mss,
                               Clock& clock, Transport& transport)
    : config_(std::move(config)), disk_(std::move(disk)), mss_(std::move(mss)), clock_(clock), transport_(transport) {
    config_.validate();
}

std::string StorageElement::key_for(std::string_view vo, std::string_view path) const {
    auto root = config_.vo_roots.find(std::string(vo));
    if (root == config_.vo_roots.end())
        throw Error(errc::kUnknownVo, "vo '" + std::string(vo) + "' is not served by " + config_.host);
    if (!is_valid_relative_path(path))
        throw Error(errc::kInvalidName, "invalid relative path '" + std::string(path) + "'");
    return join_path(root->second, path);
}

StorageObject StorageElement::to_object(const Object& o) const { return StorageObject{o.path, o.size, o.crc32, o.tiers}; }

void StorageElement::recover() {
    std::map<std::string, Object> objects;
    std::uint64_t used = 0;
    auto place = [&](const std::string& key, bool on_disk) {
        if (key.starts_with(kPartialDir)) {
            (on_disk ? disk_ : mss_)->remove(key);
            return;
        }
        for (const auto& [vo, root] : config_.vo_roots) {
            const std::string prefix = root.ends_with('/') ? root : root + "/";
            if (!key.starts_with(prefix)) continue;
            Object& o = objects[key];
            if (o.path.empty()) {
                const auto bytes = (on_disk ? disk_ : mss_)->read(key);
                o.vo = vo;
                o.path = key.substr(prefix.size());
                o.size = bytes.size();
                o.crc32 = crc32(bytes);
            }
            (on_disk ? o.tiers.disk : o.tiers.mss) = true;
            if (on_disk) used += o.size;
            return;
        }
    };
    for (const auto& key : disk_->keys()) place(key, true);
    for (const auto& key : mss_->keys()) place(key, false);
    std::lock_guard lock(mutex_);
    objects_ = std::move(objects);
    disk_used_ = used;
}

StorageObject StorageElement::put_file(std::string_view vo, std::string_view path, std::span<const std::uint8_t> content) {
    const std::string key = key_for(vo, path);
    PathLock guard(*this, key);
    const std::uint64_t size = content.size();
    {
        std::lock_guard lock(mutex_);
        if (objects_.contains(key) || reservations_.contains(key))
            throw Error(errc::kAlreadyExists, "'" + std::string(path) + "' already exists in vo " + std::string(vo));
        if (disk_used_ + reserved_ + size > config_.disk_capacity)
            throw Error(errc::kDiskFull, "need " + std::to_string(size) + " bytes, " +
                                             std::to_string(config_.disk_capacity - disk_used_ - reserved_) + " free");
        reserved_ += size;
    }
    try {
        disk_->write(key, content);
    } catch (...) {
        std::lock_guard lock(mutex_);
        reserved_ -= size;
        throw;
    }
    std::lock_guard lock(mutex_);
    reserved_ -= size;
    disk_used_ += size;
    Object& o = objects_[key];
    o = Object{std::string(vo), std::string(path), size, crc32(content), TierSet{true, false}};
    return to_object(o);
}

std::vector<std::uint8_t> StorageElement::get_file(std::string_view vo, std::string_view path) {
    const std::string key = key_for(vo, path);
    PathLock guard(*this, key);
    std::uint32_t expected = 0;
    {
        std::lock_guard lock(mutex_);
        auto it = objects_.find(key);
        if (it == objects_.end()) throw not_found(vo, path);
        if (!it->second.tiers.disk)
            throw Error(errc::kNotStaged, "'" + std::string(path) + "' is only on the MSS tier; stage it first");
        expected = it->second.crc32;
    }
    auto bytes = disk_->read(key);
    if (crc32(bytes) != expected)
        throw Error(errc::kChecksumMismatch, "disk copy of '" + std::string(path) + "' does not match its CRC");
    return bytes;
}

StorageObject StorageElement::stat(std::string_view vo, std::string_view path) {
    const std::string key = key_for(vo, path);
    std::lock_guard lock(mutex_);
    auto it = objects_.find(key);
    if (it == objects_.end()) throw not_found(vo, path);
    return to_object(it->second);
}

StorageObject StorageElement::stage_to_mss(std::string_view vo, std::string_view path) {
    const std::string key = key_for(vo, path);
    PathLock guard(*this, key);
    {
        std::lock_guard lock(mutex_);
        auto it = objects_.find(key);
        if (it == objects_.end()) throw not_found(vo, path);
        if (it->second.tiers.mss) return to_object(it->second);
        if (!it->second.tiers.disk) throw Error(errc::kNotStaged, "'" + std::string(path) + "' has no disk copy");
    }
    clock_.sleep_for(config_.mss_stage_latency_ms);
    mss_->write(key, disk_->read(key));
    std::lock_guard lock(mutex_);
    Object& o = objects_.at(key);
    o.tiers.mss = true;
    return to_object(o);
}

StorageObject StorageElement::stage_from_mss(std::string_view vo, std::string_view path) {
    const std::string key = key_for(vo, path);
    PathLock guard(*this, key);
    std::uint64_t size = 0;
    {
        std::lock_guard lock(mutex_);
        auto it = objects_.find(key);
        if (it == objects_.end()) throw not_found(vo, path);
        if (it->second.tiers.disk) return to_object(it->second);
        size = it->second.size;
        if (disk_used_ + reserved_ + size > config_.disk_capacity)
            throw Error(errc::kDiskFull, "no disk space to stage '" + std::string(path) + "' in");
        reserved_ += size;
    }
    try {
        clock_.sleep_for(config_.mss_stage_latency_ms);
        disk_->write(key, mss_->read(key));
    } catch (...) {
        std::lock_guard lock(mutex_);
        reserved_ -= size;
        throw;
    }
    std::lock_guard lock(mutex_);
    reserved_ -= size;
    disk_used_ += size;
    Object& o = objects_.at(key);
    o.tiers.disk = true;
    return to_object(o);
}

StorageObject StorageElement::evict_to_mss(std::string_view vo, std::string_view path) {
    const std::string key = key_for(vo, path);
    PathLock guard(*this, key);
    {
        std::lock_guard lock(mutex_);
        auto it = objects_.find(key);
        if (it == objects_.end()) throw not_found(vo, path);
        if (!it->second.tiers.mss)
            throw Error(errc::kNotArchived, "'" + std::string(path) + "' is not on the MSS tier; refusing to drop the disk copy");
        if (!it->second.tiers.disk) return to_object(it->second);
    }
    disk_->remove(key);
    std::lock_guard lock(mutex_);
    Object& o = objects_.at(key);
    o.tiers.disk = false;
    disk_used_ -= o.size;
    return to_object(o);
}

void StorageElement::remove(std::string_view vo, std::string_view path) {
    const std::string key = key_for(vo, path);
    PathLock guard(*this, key);
    TierSet tiers;
    {
        std::lock_guard lock(mutex_);
        auto it = objects_.find(key);
        if (it == objects_.end()) throw not_found(vo, path);
        tiers = it->second.tiers;
    }
    if (tiers.disk) disk_->remove(key);
    if (tiers.mss) mss_->remove(key);
    std::lock_guard lock(mutex_);
    auto it = objects_.find(key);
    if (it->second.tiers.disk) disk_used_ -= it->second.size;
    objects_.erase(it);
}

StorageObject StorageElement::checksum(std::string_view vo, std::string_view path) {
    const std::string key = key_for(vo, path);
    PathLock guard(*this, key);
    Object snapshot;
    {
        std::lock_guard lock(mutex_);
        auto it = objects_.find(key);
        if (it == objects_.end()) throw not_found(vo, path);
        snapshot = it->second;
    }
    if (snapshot.tiers.disk && crc32(disk_->read(key)) != snapshot.crc32)
        throw Error(errc::kChecksumMismatch, "disk copy of '" + std::string(path) + "' does not match its CRC");
    return to_object(snapshot);
}

std::vector<StorageObject> StorageElement::list_dir(std::string_view vo, std::string_view dir) {
    if (!config_.vo_roots.contains(std::string(vo)))
        throw Error(errc::kUnknownVo, "vo '" + std::string(vo) + "' is not served by " + config_.host);
    std::string prefix;
    if (!dir.empty() && dir != "/" && dir != ".") {
        std::string_view d = dir;
        while (d.ends_with('/')) d.remove_suffix(1);
        if (!is_valid_relative_path(d)) throw Error(errc::kInvalidName, "invalid directory '" + std::string(dir) + "'");
        prefix = std::string(d) + "/";
    }
    std::vector<StorageObject> out;
    std::lock_guard lock(mutex_);
    for (const auto& [_, o] : objects_) {
        if (o.vo == vo && o.path.starts_with(prefix)) out.push_back(to_object(o));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    return out;
}

TransferReceipt StorageElement::send_file(std::string_view vo, std::string_view path, const Address& dest,
                                          std::string_view dest_vo, std::string_view dest_path,
                                          std::string_view token) {
    const std::string key = key_for(vo, path);
    std::vector<std::uint8_t> bytes;
    std::uint32_t crc = 0;
    {
        PathLock guard(*this, key);
        {
            std::lock_guard lock(mutex_);
            auto it = objects_.find(key);
            if (it == objects_.end()) throw not_found(vo, path);
            if (!it->second.tiers.disk)
                throw Error(errc::kNotStaged, "'" + std::string(path) + "' is only on the MSS tier; stage it first");
            crc = it->second.crc32;
        }
        bytes = disk_->read(key);
    }
    if (crc32(bytes) != crc)
        throw Error(errc::kChecksumMismatch, "source copy of '" + std::string(path) + "' does not match its CRC");

    const std::string target = dest.str() + " " + std::string(dest_vo) + "/" + std::string(dest_path);
    RpcClient peer(transport_, dest, std::string(token));
    std::string frame_path;
    try {
        frame_path = peer.call("open_transfer", {{"vo", dest_vo}, {"path", dest_path}, {"size", bytes.size()}})
                         .at("frame_path")
                         .get<std::string>();
    } catch (const TransportError& e) {
        throw Error(errc::kTransferFailed, "cannot reach " + target + ": " + e.what(), {{"cause", e.code()}});
    } catch (const Error& e) {
        if (e.code() == errc::kDiskFull) throw Error(errc::kDestinationDiskFull, target + ": " + e.what());
        throw;
    }

    const auto frame = encode_frame(frame_path, crc, bytes);
    std::uint8_t status = kFrameRejected;
    try {
        status = transport_.send_frame(dest, frame);
    } catch (const TransportError& e) {
        throw Error(errc::kTransferFailed, "data transfer to " + target + " lost: " + e.what(), {{"cause", e.code()}});
    }
    switch (status) {
    case kFrameOk: {
        std::lock_guard lock(mutex_);
        ++stats_.transfers_out;
        return TransferReceipt{bytes.size(), crc};
    }
    case kFrameChecksumMismatch:
        throw Error(errc::kChecksumMismatch, target + " received bytes that do not match CRC " + std::to_string(crc));
    case kFrameDiskFull:
        throw Error(errc::kDestinationDiskFull, target + " has no space for " + std::to_string(bytes.size()) + " bytes");
    default:
        throw Error(errc::kTransferFailed, target + " rejected the frame");
    }
}

void StorageElement::release_reservation_locked(const std::string& key) {
    auto it = reservations_.find(key);
    if (it == reservations_.end()) return;
    reserved_ -= it->second.size;
    reservations_.erase(it);
}

std::string StorageElement::open_transfer(std::string_view vo, std::string_view path, std::uint64_t size) {
    const std::string key = key_for(vo, path);
    std::lock_guard lock(mutex_);
    if (objects_.contains(key))
        throw Error(errc::kAlreadyExists, "'" + std::string(path) + "' already exists in vo " + std::string(vo));
    release_reservation_locked(key);  // a retried sender replaces its stale reservation
    if (disk_used_ + reserved_ + size > config_.disk_capacity)
        throw Error(errc::kDiskFull, "need " + std::to_string(size) + " bytes, " +
                                         std::to_string(config_.disk_capacity - disk_used_ - reserved_) + " free");
    reserved_ += size;
    reservations_[key] = Reservation{std::string(vo), std::string(path), size, clock_.now()};
    return std::string(vo) + "/" + std::string(path);
}

std::uint8_t StorageElement::receive_frame(std::span<const std::uint8_t> bytes) {
    auto frame = decode_frame(bytes);
    auto reject = [this] {
        std::lock_guard lock(mutex_);
        ++stats_.frames_rejected;
        return kFrameRejected;
    };
    if (!frame) return reject();
    const std::size_t slash = frame->path.find('/');
    if (slash == std::string::npos) return reject();
    const std::string vo = frame->path.substr(0, slash);
    const std::string path = frame->path.substr(slash + 1);
    std::string key;
    try {
        key = key_for(vo, path);
    } catch (const Error&) {
        return reject();
    }

    PathLock guard(*this, key);
    const std::uint64_t size = frame->payload.size();
    std::string partial;
    {
        std::lock_guard lock(mutex_);
        auto r = reservations_.find(key);
        if (r == reservations_.end()) {
            ++stats_.frames_rejected;
            return kFrameRejected;
        }
        if (size > r->second.size) {
            const std::uint64_t extra = size - r->second.size;
            if (disk_used_ + reserved_ + extra > config_.disk_capacity) {
                release_reservation_locked(key);
                return kFrameDiskFull;
            }
            reserved_ += extra;
            r->second.size = size;
        }
        partial = std::string(kPartialDir) + std::to_string(++partial_counter_);
    }

    disk_->write(partial, frame->payload);
    if (crc32(frame->payload) != frame->crc32) {
        disk_->remove(partial);
        std::lock_guard lock(mutex_);
        release_reservation_locked(key);
        ++stats_.checksum_failures;
        return kFrameChecksumMismatch;
    }
    disk_->rename(partial, key);
    std::lock_guard lock(mutex_);
    release_reservation_locked(key);
    disk_used_ += size;
    objects_[key] = Object{vo, path, size, frame->crc32, TierSet{true, false}};
    ++stats_.transfers_in;
    return kFrameOk;
}

std::uint64_t StorageElement::disk_used() const {
    std::lock_guard lock(mutex_);
    return disk_used_;
}

SeStats StorageElement::stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
}

SeService::SeService(StorageElement& se) : se_(se), dispatcher_(se.config().token), token_(se.config().token) {
    auto vo = [](const json& a) { return arg_string(a, "vo"); };
    auto path = [](const json& a) { return arg_string(a, "path"); };
    dispatcher_.on("put", [this, vo, path](const json& a) {
        const auto content = base64_decode(arg_string(a, "content"));
        return to_json(se_.put_file(vo(a), path(a), content));
    });
    dispatcher_.on("get", [this, vo, path](const json& a) {
        const auto bytes = se_.get_file(vo(a), path(a));
        return json{{"content", base64_encode(bytes)}, {"size", bytes.size()}, {"crc32", crc32(bytes)}};
    });
    dispatcher_.on("stat", [this, vo, path](const json& a) { return to_json(se_.stat(vo(a), path(a))); });
    dispatcher_.on("stage_to_mss", [this, vo, path](const json& a) { return to_json(se_.stage_to_mss(vo(a), path(a))); });
    dispatcher_.on("stage_from_mss",
                   [this, vo, path](const json& a) { return to_json(se_.stage_from_mss(vo(a), path(a))); });
    dispatcher_.on("evict_to_mss", [this, vo, path](const json& a) { return to_json(se_.evict_to_mss(vo(a), path(a))); });
    dispatcher_.on("delete", [this, vo, path](const json& a) {
        se_.remove(vo(a), path(a));
        return json{{"deleted", true}};
    });
    dispatcher_.on("checksum", [this, vo, path](const json& a) { return to_json(se_.checksum(vo(a), path(a))); });
    dispatcher_.on("list_dir", [this, vo](const json& a) {
        json out = json::array();
        for (const auto& o : se_.list_dir(vo(a), arg_opt_string(a, "dir").value_or(""))) out.push_back(to_json(o));
        return out;
    });
    dispatcher_.on("send_file", [this, vo, path](const json& a) {
        const std::string source_vo = vo(a);
        const std::string source_path = path(a);
        const Address dest{arg_string(a, "dest_host"), static_cast<std::uint16_t>(arg_u64(a, "dest_port"))};
        const std::string dest_vo = arg_opt_string(a, "dest_vo").value_or(source_vo);
        const std::string dest_path = arg_opt_string(a, "dest_path").value_or(source_path);
        return to_json(se_.send_file(source_vo, source_path, dest, dest_vo, dest_path, token_));
    });
    dispatcher_.on("open_transfer", [this, vo, path](const json& a) {
        return json{{"frame_path", se_.open_transfer(vo(a), path(a), arg_u64(a, "size"))}};
    });
    dispatcher_.on("stats", [this](const json&) {
        const SeStats s = se_.stats();
        return json{{"transfers_out", s.transfers_out},
                    {"transfers_in", s.transfers_in},
                    {"checksum_failures", s.checksum_failures},
                    {"frames_rejected", s.frames_rejected},
                    {"disk_used", se_.disk_used()},
                    {"disk_capacity", se_.config().disk_capacity}};
    });
}

std::uint8_t SeService::handle_frame(std::span<const std::uint8_t> frame) { return se_.receive_frame(frame); }

StorageObject SeClient::put(std::string_view vo, std::string_view path, std::span<const std::uint8_t> content) const {
    return object_from_json(rpc_.call("put", {{"vo", vo}, {"path", path}, {"content", base64_encode(content)}}));
}

std::vector<std::uint8_t> SeClient::get(std::string_view vo, std::string_view path) const {
    return base64_decode(rpc_.call("get", {{"vo", vo}, {"path", path}}).at("content").get<std::string>());
}

StorageObject SeClient::stat(std::string_view vo, std::string_view path) const {
    return object_from_json(rpc_.call("stat", {{"vo", vo}, {"path", path}}));
}

StorageObject SeClient::stage_to_mss(std::string_view vo, std::string_view path) const {
    return object_from_json(rpc_.call("stage_to_mss", {{"vo", vo}, {"path", path}}));
}

StorageObject SeClient::stage_from_mss(std::string_view vo, std::string_view path) const {
    return object_from_json(rpc_.call("stage_from_mss", {{"vo", vo}, {"path", path}}));
}

StorageObject SeClient::evict_to_mss(std::string_view vo, std::string_view path) const {
    return object_from_json(rpc_.call("evict_to_mss", {{"vo", vo}, {"path", path}}));
}

void SeClient::remove(std::string_view vo, std::string_view path) const {
    rpc_.call("delete", {{"vo", vo}, {"path", path}});
}

StorageObject SeClient::checksum(std::string_view vo, std::string_view path) const {
    return object_from_json(rpc_.call("checksum", {{"vo", vo}, {"path", path}}));
}

std::vector<StorageObject> SeClient::list_dir(std::string_view vo, std::string_view dir) const {
    std::vector<StorageObject> out;
    for (const auto& o : rpc_.call("list_dir", {{"vo", vo}, {"dir", dir}})) out.push_back(object_from_json(o));
    return out;
}

SeStats SeClient::stats() const {
    const json s = rpc_.call("stats");
    return SeStats{s.at("transfers_out").get<std::uint64_t>(), s.at("transfers_in").get<std::uint64_t>(),
                   s.at("checksum_failures").get<std::uint64_t>(), s.at("frames_rejected").get<std::uint64_t>()};
}

TransferReceipt SeClient::upload(std::string_view vo, std::string_view path, std::span<const std::uint8_t> content) const {
    const std::string frame_path =
        rpc_.call("open_transfer", {{"vo", vo}, {"path", path}, {"size", content.size()}}).at("frame_path").get<std::string>();
    const std::uint32_t crc = crc32(content);
    const auto frame = encode_frame(frame_path, crc, content);
    const std::string target = rpc_.address().str() + " " + std::string(vo) + "/" + std::string(path);
    switch (rpc_.transport().send_frame(rpc_.address(), frame)) {
    case kFrameOk:
        return TransferReceipt{content.size(), crc};
    case kFrameChecksumMismatch:
        throw Error(errc::kChecksumMismatch, target + " received bytes that do not match CRC " + std::to_string(crc));
    case kFrameDiskFull:
        throw Error(errc::kDestinationDiskFull, target + " has no space");
    default:
        throw Error(errc::kTransferFailed, target + " rejected the frame");
    }
}

TransferReceipt third_party_transfer(Transport& transport, std::string_view token, const Address& source,
                                     std::string_view source_vo, std::string_view source_path, const Address& dest,
                                     std::string_view dest_vo, std::string_view dest_path) {
    RpcClient rpc(transport, source, std::string(token));
    try {
        return receipt_from_json(rpc.call("send_file", {{"vo", source_vo},
                                                        {"path", source_path},
                                                        {"dest_host", dest.host},
                                                        {"dest_port", dest.port},
                                                        {"dest_vo", dest_vo},
                                                        {"dest_path", dest_path}}));
    } catch (const TransportError& e) {
        throw Error(errc::kSourceUnreachable, "source SE " + source.str() + " unreachable: " + e.what());
    }
}

}  // namespace gm
