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

#include "gridmirror/replica_manager.hpp"

#include <algorithm>

#include "gridmirror/info_service.hpp"
#include "gridmirror/names.hpp"

namespace gm {

json to_json(const ReplicaInfo& info) {
    return json{{"pfn", info.pfn.str()},
                {"tiers", info.tiers ? to_json(*info.tiers) : json("unknown")},
                {"crc32", info.crc32 ? json(*info.crc32) : json()}};
}

ReplicaManager::ReplicaManager(ClientConfig config, Transport& transport)
    : config_(std::move(config)), transport_(transport), catalog_(transport, config_.catalog, config_.token) {
    if (!is_valid_vo(config_.vo)) throw Error(errc::kInvalidConfig, "client config: invalid VO '" + config_.vo + "'");
    if (config_.catalog.host.empty() || config_.catalog.port == 0)
        throw Error(errc::kInvalidConfig, "client config: catalogue address is required");
    if (config_.info.host.empty() || config_.info.port == 0)
        throw Error(errc::kInvalidConfig, "client config: info-service address is required");
}

void ReplicaManager::fail(std::string code, std::string_view op, std::string_view lfn, std::string_view hosts,
                          const Error& cause, json extra) const {
    std::string message = std::string(op) + " " + std::string(lfn) + " [" + std::string(hosts) +
                          "] attempt 1: " + cause.code() + ": " + cause.what();
    extra["op"] = op;
    extra["lfn"] = lfn;
    extra["hosts"] = hosts;
    extra["attempt"] = 1;
    extra["cause"] = cause.code();
    if (!cause.detail().is_null()) extra["cause_detail"] = cause.detail();
    throw Error(std::move(code), message, std::move(extra));
}

ReplicaManager::Destination ReplicaManager::resolve_destination(std::string_view op, std::string_view lfn,
                                                               std::string_view dest_se_host) {
    if (!LogicalFileName::is_valid(lfn)) throw Error(errc::kInvalidName, "invalid logical file name '" + std::string(lfn) + "'");
    try {
        const ResolvedRoot root = InfoClient(transport_, config_.info, config_.token).resolve(dest_se_host, config_.vo);
        const std::string relative = lfn_tail(lfn, config_.vo);
        if (!is_valid_relative_path(relative))
            throw Error(errc::kInvalidName, "'" + std::string(lfn) + "' has no usable path below vo " + config_.vo);
        return Destination{Address{std::string(dest_se_host), root.port}, relative,
                           PhysicalFileName{std::string(dest_se_host), root.port, join_path(root.root, relative)}};
    } catch (const Error& e) {
        fail(errc::kResolveFailed, op, lfn, dest_se_host, e);
    }
}

ReplicaManager::Located ReplicaManager::locate(const PhysicalFileName& pfn) {
    const ResolvedRoot root = InfoClient(transport_, config_.info, config_.token).resolve(pfn.host, config_.vo);
    const std::string prefix = root.root == "/" ? "/" : root.root + "/";
    if (!pfn.path.starts_with(prefix) || pfn.path.size() == prefix.size())
        throw Error(errc::kNotFound, pfn.str() + " is outside the " + config_.vo + " root " + root.root);
    return Located{Address{pfn.host, pfn.port}, pfn.path.substr(prefix.size())};
}

ReplicaEntry ReplicaManager::register_copy(std::string_view op, std::string_view lfn, const Destination& dest,
                                           const TransferReceipt& receipt, bool known_logical,
                                           std::string_view source_host) {
    const std::string hosts = source_host.empty() ? dest.se.host : std::string(source_host) + " -> " + dest.se.host;
    try {
        if (!known_logical) catalog_.register_logical(lfn, receipt.bytes, receipt.crc32);
        return catalog_.add_replica(lfn, dest.pfn);
    } catch (const Error& e) {
        // A lost reply leaves the outcome unknown: the replica may have been added anyway.
        if (e.code() != errc::kNamingViolation) {
            try {
                for (const auto& r : catalog_.rpc().call("replicas", {{"lfn", lfn}})) {
                    ReplicaEntry entry = replica_from_json(r);
                    if (entry.pfn == dest.pfn) return entry;
                }
            } catch (const Error&) {
            }
        }
        bool rolled_back = false;
        if (config_.rollback) {
            try {
                SeClient(transport_, dest.se, config_.token).remove(config_.vo, dest.relative_path);
                rolled_back = true;
            } catch (const Error& cleanup) {
                rolled_back = cleanup.code() == errc::kNotFound;
            }
        }
        const json extra{{"rolled_back", rolled_back}};
        if (e.code() == errc::kNamingViolation) fail(errc::kNamingViolation, op, lfn, hosts, e, extra);
        fail(errc::kRegistrationFailed, op, lfn, hosts, e, extra);
    }
}

namespace {

bool exists_on(const SeClient& se, std::string_view vo, std::string_view path) {
    try {
        se.stat(vo, path);
        return true;
    } catch (const Error& e) {
        if (e.code() == errc::kNotFound) return false;
        throw;
    }
}

}  // namespace

ReplicaEntry ReplicaManager::copy_and_register(std::span<const std::uint8_t> content, std::string_view dest_se_host,
                                               std::string_view lfn) {
    constexpr std::string_view op = "copy_and_register";
    const Destination dest = resolve_destination(op, lfn, dest_se_host);
    const SeClient se(transport_, dest.se, config_.token);
    bool created = false;
    TransferReceipt receipt;
    try {
        if (exists_on(se, config_.vo, dest.relative_path))
            throw Error(errc::kAlreadyExists, dest.pfn.str() + " already exists");
        created = true;
        receipt = se.upload(config_.vo, dest.relative_path, content);
    } catch (const Error& e) {
        // The destination was empty before, so anything there now is a partial result of this call.
        if (created && config_.rollback) {
            try {
                se.remove(config_.vo, dest.relative_path);
            } catch (const Error&) {
            }
        }
        fail(errc::kTransferFailed, op, lfn, dest.se.host, e);
    }
    return register_copy(op, lfn, dest, receipt, false, "");
}

ReplicaEntry ReplicaManager::copy_and_register(const PhysicalFileName& source, std::string_view dest_se_host,
                                               std::string_view lfn) {
    constexpr std::string_view op = "copy_and_register";
    const Destination dest = resolve_destination(op, lfn, dest_se_host);
    const std::string hosts = source.host + " -> " + dest.se.host;
    if (source.host == dest.se.host)
        fail(errc::kTransferFailed, op, lfn, hosts, Error(errc::kAlreadyExists, "source and destination are the same SE"));
    const SeClient se(transport_, dest.se, config_.token);
    bool created = false;
    TransferReceipt receipt;
    try {
        const Located from = locate(source);
        const SeClient origin(transport_, from.se, config_.token);
        if (!origin.stat(config_.vo, from.relative_path).tiers.disk) origin.stage_from_mss(config_.vo, from.relative_path);
        if (exists_on(se, config_.vo, dest.relative_path))
            throw Error(errc::kAlreadyExists, dest.pfn.str() + " already exists");
        created = true;
        receipt = third_party_transfer(transport_, config_.token, from.se, config_.vo, from.relative_path, dest.se,
                                       config_.vo, dest.relative_path);
    } catch (const Error& e) {
        if (created && config_.rollback) {
            try {
                se.remove(config_.vo, dest.relative_path);
            } catch (const Error&) {
            }
        }
        fail(errc::kTransferFailed, op, lfn, hosts, e);
    }
    return register_copy(op, lfn, dest, receipt, false, source.host);
}

ReplicaEntry ReplicaManager::replicate_file(std::string_view lfn, std::string_view dest_se_host,
                                            std::optional<std::string> source_se_host) {
    constexpr std::string_view op = "replicate_file";
    std::vector<ReplicaEntry> existing;
    for (const auto& r : catalog_.rpc().call("replicas", {{"lfn", lfn}})) existing.push_back(replica_from_json(r));
    for (const auto& r : existing) {
        if (r.se_host == dest_se_host) return r;
    }

    const PhysicalFileName* source = nullptr;
    for (const auto& r : existing) {
        if (source_se_host ? r.se_host == *source_se_host : true) {
            if (!source || r.se_host < source->host) source = &r.pfn;
        }
    }
    if (!source) {
        const std::string why = source_se_host ? "no replica of " + std::string(lfn) + " on " + *source_se_host
                                               : std::string(lfn) + " has no replica to copy from";
        throw Error(errc::kNoSourceAvailable, std::string(op) + ": " + why,
                    {{"op", op}, {"lfn", lfn}, {"hosts", dest_se_host}});
    }

    const Destination dest = resolve_destination(op, lfn, dest_se_host);
    const std::string hosts = source->host + " -> " + dest.se.host;
    const SeClient se(transport_, dest.se, config_.token);
    bool created = false;
    TransferReceipt receipt;
    try {
        const Located from = locate(*source);
        const SeClient origin(transport_, from.se, config_.token);
        if (!origin.stat(config_.vo, from.relative_path).tiers.disk) origin.stage_from_mss(config_.vo, from.relative_path);
        if (exists_on(se, config_.vo, dest.relative_path))
            throw Error(errc::kAlreadyExists, dest.pfn.str() + " already exists but is not registered");
        created = true;
        receipt = third_party_transfer(transport_, config_.token, from.se, config_.vo, from.relative_path, dest.se,
                                       config_.vo, dest.relative_path);
    } catch (const Error& e) {
        if (created && config_.rollback) {
            try {
                se.remove(config_.vo, dest.relative_path);
            } catch (const Error&) {
            }
        }
        fail(errc::kTransferFailed, op, lfn, hosts, e);
    }
    return register_copy(op, lfn, dest, receipt, true, source->host);
}

void ReplicaManager::delete_replica(std::string_view lfn, std::string_view se_host) {
    const auto pfns = catalog_.lookup(lfn);
    auto it = std::find_if(pfns.begin(), pfns.end(), [&](const PhysicalFileName& p) { return p.host == se_host; });
    if (it == pfns.end())
        throw Error(errc::kNotFound, "delete_replica " + std::string(lfn) + ": no replica on " + std::string(se_host));
    const Located at = locate(*it);
    try {
        SeClient(transport_, at.se, config_.token).remove(config_.vo, at.relative_path);
    } catch (const Error& e) {
        if (e.code() != errc::kNotFound) throw;
    }
    catalog_.remove_replica(lfn, *it);
}

std::vector<ReplicaInfo> ReplicaManager::list_replicas(std::string_view lfn) {
    std::vector<ReplicaInfo> out;
    for (const auto& pfn : catalog_.lookup(lfn)) {
        ReplicaInfo info{pfn, std::nullopt, std::nullopt};
        try {
            const Located at = locate(pfn);
            const SeClient se(transport_, at.se, config_.token);
            const StorageObject stat = se.stat(config_.vo, at.relative_path);
            info.tiers = stat.tiers;
            if (stat.tiers.disk) {
                try {
                    info.crc32 = se.checksum(config_.vo, at.relative_path).crc32;
                } catch (const Error& e) {
                    if (e.code() != errc::kChecksumMismatch) throw;
                }
            } else {
                info.crc32 = stat.crc32;
            }
        } catch (const Error&) {
            info.tiers.reset();
            info.crc32.reset();
        }
        out.push_back(std::move(info));
    }
    return out;
}

}  // namespace gm
