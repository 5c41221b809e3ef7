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

#include "gridmirror/catalog.hpp"

#include <mutex>

#include "gridmirror/glob.hpp"

namespace gm {
namespace {

bool is_valid_key(std::string_view key) noexcept {
    if (key.empty() || key.size() > 64) return false;
    for (char c : key) {
        if (!((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) return false;
    }
    return true;
}

void check_lfn(std::string_view lfn) {
    if (!LogicalFileName::is_valid(lfn))
        throw Error(errc::kInvalidName, "invalid logical file name '" + std::string(lfn) + "'");
}

void check_attribute(std::string_view key, std::string_view value) {
    if (!is_valid_key(key)) throw Error(errc::kInvalidKey, "attribute key must match [A-Za-z0-9_]+: '" + std::string(key) + "'");
    if (value.size() > Catalog::kMaxAttributeValue)
        throw Error(errc::kInvalidValue, "attribute value for '" + std::string(key) + "' exceeds 256 bytes");
}

std::string describe(const std::optional<std::uint64_t>& size, const std::optional<std::uint32_t>& crc) {
    return "size=" + (size ? std::to_string(*size) : std::string("none")) +
           " crc32=" + (crc ? std::to_string(*crc) : std::string("none"));
}

}  // namespace

NamingMode parse_naming_mode(std::string_view text) {
    if (text == "strict") return NamingMode::Strict;
    if (text == "free") return NamingMode::Free;
    throw Error(errc::kInvalidConfig, "naming mode must be strict|free, got '" + std::string(text) + "'");
}

std::string_view to_string(NamingMode mode) noexcept { return mode == NamingMode::Strict ? "strict" : "free"; }

json to_json(const LogicalFileRecord& record) {
    json j{{"lfn", record.lfn}, {"created_at", record.created_at}, {"extra", record.extra}};
    j["size"] = record.size ? json(*record.size) : json();
    j["crc32"] = record.crc32 ? json(*record.crc32) : json();
    return j;
}

LogicalFileRecord record_from_json(const json& j) {
    LogicalFileRecord r;
    r.lfn = j.at("lfn").get<std::string>();
    if (j.contains("size") && !j["size"].is_null()) r.size = j["size"].get<std::uint64_t>();
    if (j.contains("crc32") && !j["crc32"].is_null()) r.crc32 = j["crc32"].get<std::uint32_t>();
    r.created_at = j.value("created_at", TimeMs{0});
    if (j.contains("extra")) r.extra = j["extra"].get<Attributes>();
    return r;
}

json to_json(const ReplicaEntry& entry) {
    return json{{"lfn", entry.lfn}, {"pfn", entry.pfn.str()}, {"se_host", entry.se_host},
                {"registered_at", entry.registered_at}};
}

ReplicaEntry replica_from_json(const json& j) {
    ReplicaEntry e;
    e.lfn = j.at("lfn").get<std::string>();
    e.pfn = PhysicalFileName::parse(j.at("pfn").get<std::string>());
    e.se_host = j.at("se_host").get<std::string>();
    e.registered_at = j.value("registered_at", TimeMs{0});
    return e;
}

Catalog::Entry& Catalog::find_entry(std::string_view lfn) {
    auto it = entries_.find(lfn);
    if (it == entries_.end()) throw Error(errc::kUnknownLfn, "unknown logical file '" + std::string(lfn) + "'");
    return it->second;
}

const Catalog::Entry& Catalog::find_entry(std::string_view lfn) const {
    auto it = entries_.find(lfn);
    if (it == entries_.end()) throw Error(errc::kUnknownLfn, "unknown logical file '" + std::string(lfn) + "'");
    return it->second;
}

LogicalFileRecord Catalog::register_logical(std::string_view lfn, std::optional<std::uint64_t> size,
                                            std::optional<std::uint32_t> crc32, const Attributes& extra) {
    check_lfn(lfn);
    if (extra.size() > kMaxAttributes) throw Error(errc::kTooManyAttributes, "more than 64 attributes");
    for (const auto& [k, v] : extra) check_attribute(k, v);

    std::unique_lock lock(mutex_);
    if (auto it = entries_.find(lfn); it != entries_.end()) {
        LogicalFileRecord& existing = it->second.record;
        if (existing.size != size || existing.crc32 != crc32)
            throw Error(errc::kAlreadyExistsConflict, "'" + std::string(lfn) + "' already registered with " +
                                                          describe(existing.size, existing.crc32) + ", not " +
                                                          describe(size, crc32));
        std::size_t added = 0;
        for (const auto& [k, v] : extra) {
            auto cur = existing.extra.find(k);
            if (cur == existing.extra.end()) {
                ++added;
            } else if (cur->second != v) {
                throw Error(errc::kAlreadyExistsConflict,
                            "'" + std::string(lfn) + "' already has attribute " + k + "=" + cur->second);
            }
        }
        if (existing.extra.size() + added > kMaxAttributes)
            throw Error(errc::kTooManyAttributes, "more than 64 attributes on '" + std::string(lfn) + "'");
        existing.extra.insert(extra.begin(), extra.end());
        return existing;
    }
    Entry entry;
    entry.record = LogicalFileRecord{std::string(lfn), size, crc32, clock_->now(), extra};
    auto [it, _] = entries_.emplace(std::string(lfn), std::move(entry));
    return it->second.record;
}

LogicalFileRecord Catalog::get_logical(std::string_view lfn) const {
    std::shared_lock lock(mutex_);
    return find_entry(lfn).record;
}

ReplicaEntry Catalog::add_replica(std::string_view lfn, const PhysicalFileName& pfn) {
    check_lfn(lfn);
    // Re-validate so a hand-built PFN cannot smuggle a bad path in.
    const std::string canonical = pfn.str();
    const PhysicalFileName checked = PhysicalFileName::parse(canonical);
    if (mode_ == NamingMode::Strict && !path_has_lfn_suffix(checked.path, lfn))
        throw Error(errc::kNamingViolation,
                    "strict naming: '" + canonical + "' does not end with logical name '" + std::string(lfn) + "'");

    std::unique_lock lock(mutex_);
    Entry& entry = find_entry(lfn);
    if (auto it = entry.replicas.find(canonical); it != entry.replicas.end()) return it->second;
    ReplicaEntry replica{std::string(lfn), checked, checked.host, clock_->now()};
    entry.replicas.emplace(canonical, replica);
    return replica;
}

bool Catalog::remove_replica(std::string_view lfn, const PhysicalFileName& pfn) {
    std::unique_lock lock(mutex_);
    return find_entry(lfn).replicas.erase(pfn.str()) > 0;
}

std::vector<PhysicalFileName> Catalog::lookup(std::string_view lfn) const {
    std::shared_lock lock(mutex_);
    const Entry& entry = find_entry(lfn);
    std::vector<PhysicalFileName> out;
    out.reserve(entry.replicas.size());
    for (const auto& [_, r] : entry.replicas) out.push_back(r.pfn);
    return out;
}

std::vector<ReplicaEntry> Catalog::replicas(std::string_view lfn) const {
    std::shared_lock lock(mutex_);
    const Entry& entry = find_entry(lfn);
    std::vector<ReplicaEntry> out;
    for (const auto& [_, r] : entry.replicas) out.push_back(r);
    return out;
}

std::vector<std::string> Catalog::list_lfns(std::string_view pattern, std::size_t limit) const {
    validate_glob(pattern);
    const std::string_view prefix = glob_literal_prefix(pattern);
    std::vector<std::string> out;
    std::shared_lock lock(mutex_);
    for (auto it = entries_.lower_bound(prefix); it != entries_.end() && out.size() < limit; ++it) {
        if (!std::string_view(it->first).starts_with(prefix)) break;
        if (glob_match(pattern, it->first)) out.push_back(it->first);
    }
    return out;
}

LogicalFileRecord Catalog::set_attribute(std::string_view lfn, std::string_view key, std::string_view value) {
    check_attribute(key, value);
    std::unique_lock lock(mutex_);
    LogicalFileRecord& record = find_entry(lfn).record;
    auto it = record.extra.find(std::string(key));
    if (it == record.extra.end() && record.extra.size() >= kMaxAttributes)
        throw Error(errc::kTooManyAttributes, "'" + std::string(lfn) + "' already has 64 attributes");
    record.extra[std::string(key)] = std::string(value);
    return record;
}

std::size_t Catalog::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

CatalogService::CatalogService(Catalog& catalog, std::string token,
                               std::optional<std::filesystem::path> default_snapshot)
    : catalog_(catalog), default_snapshot_(std::move(default_snapshot)), dispatcher_(std::move(token)) {
    dispatcher_.on("register_logical", [this](const json& a) {
        std::optional<std::uint32_t> crc;
        if (auto v = arg_opt_u64(a, "crc32")) {
            if (*v > 0xFFFFFFFFull) throw Error(errc::kBadRequest, "crc32 out of range");
            crc = static_cast<std::uint32_t>(*v);
        }
        Attributes extra;
        if (a.contains("extra") && !a["extra"].is_null()) extra = a["extra"].get<Attributes>();
        return to_json(catalog_.register_logical(arg_string(a, "lfn"), arg_opt_u64(a, "size"), crc, extra));
    });
    dispatcher_.on("get_logical", [this](const json& a) { return to_json(catalog_.get_logical(arg_string(a, "lfn"))); });
    dispatcher_.on("add_replica", [this](const json& a) {
        return to_json(catalog_.add_replica(arg_string(a, "lfn"), PhysicalFileName::parse(arg_string(a, "pfn"))));
    });
    dispatcher_.on("remove_replica", [this](const json& a) {
        return json(catalog_.remove_replica(arg_string(a, "lfn"), PhysicalFileName::parse(arg_string(a, "pfn"))));
    });
    dispatcher_.on("lookup", [this](const json& a) {
        json out = json::array();
        for (const auto& pfn : catalog_.lookup(arg_string(a, "lfn"))) out.push_back(pfn.str());
        return out;
    });
    dispatcher_.on("replicas", [this](const json& a) {
        json out = json::array();
        for (const auto& r : catalog_.replicas(arg_string(a, "lfn"))) out.push_back(to_json(r));
        return out;
    });
    dispatcher_.on("list_lfns", [this](const json& a) {
        const auto limit = static_cast<std::size_t>(arg_opt_u64(a, "limit").value_or(1000));
        return json(catalog_.list_lfns(arg_opt_string(a, "pattern").value_or("*"), limit));
    });
    dispatcher_.on("set_attribute", [this](const json& a) {
        return to_json(catalog_.set_attribute(arg_string(a, "lfn"), arg_string(a, "key"), arg_string(a, "value")));
    });
    auto snapshot_path = [this](const json& a) -> std::filesystem::path {
        if (auto p = arg_opt_string(a, "path")) return *p;
        if (default_snapshot_) return *default_snapshot_;
        throw Error(errc::kBadRequest, "no snapshot path given or configured");
    };
    dispatcher_.on("snapshot_save", [this, snapshot_path](const json& a) {
        catalog_.snapshot_save(snapshot_path(a));
        return json{{"entries", catalog_.size()}};
    });
    dispatcher_.on("snapshot_load", [this, snapshot_path](const json& a) {
        catalog_.snapshot_load(snapshot_path(a));
        return json{{"entries", catalog_.size()}};
    });
}

LogicalFileRecord CatalogClient::register_logical(std::string_view lfn, std::optional<std::uint64_t> size,
                                                  std::optional<std::uint32_t> crc32, const Attributes& extra) const {
    json args{{"lfn", lfn}, {"extra", extra}};
    if (size) args["size"] = *size;
    if (crc32) args["crc32"] = *crc32;
    return record_from_json(rpc_.call("register_logical", std::move(args)));
}

LogicalFileRecord CatalogClient::get_logical(std::string_view lfn) const {
    return record_from_json(rpc_.call("get_logical", {{"lfn", lfn}}));
}

ReplicaEntry CatalogClient::add_replica(std::string_view lfn, const PhysicalFileName& pfn) const {
    return replica_from_json(rpc_.call("add_replica", {{"lfn", lfn}, {"pfn", pfn.str()}}));
}

bool CatalogClient::remove_replica(std::string_view lfn, const PhysicalFileName& pfn) const {
    return rpc_.call("remove_replica", {{"lfn", lfn}, {"pfn", pfn.str()}}).get<bool>();
}

std::vector<PhysicalFileName> CatalogClient::lookup(std::string_view lfn) const {
    std::vector<PhysicalFileName> out;
    for (const auto& p : rpc_.call("lookup", {{"lfn", lfn}})) out.push_back(PhysicalFileName::parse(p.get<std::string>()));
    return out;
}

std::vector<std::string> CatalogClient::list_lfns(std::string_view pattern, std::size_t limit) const {
    return rpc_.call("list_lfns", {{"pattern", pattern}, {"limit", limit}}).get<std::vector<std::string>>();
}

LogicalFileRecord CatalogClient::set_attribute(std::string_view lfn, std::string_view key, std::string_view value) const {
    return record_from_json(rpc_.call("set_attribute", {{"lfn", lfn}, {"key", key}, {"value", value}}));
}

void CatalogClient::snapshot_save(const std::string& path) const {
    json args = json::object();
    if (!path.empty()) args["path"] = path;
    rpc_.call("snapshot_save", std::move(args));
}

}  // namespace gm
