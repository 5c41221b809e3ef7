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

#include "gridmirror/info_service.hpp"

#include "gridmirror/names.hpp"

namespace gm {

void InfoService::advertise(std::string_view host, std::uint16_t port,
                            const std::map<std::string, std::string>& vo_roots) {
    if (host.empty() || port == 0) throw Error(errc::kInvalidAdvertisement, "host and port are required");
    for (const auto& [vo, root] : vo_roots) {
        if (!is_valid_vo(vo)) throw Error(errc::kInvalidAdvertisement, "invalid VO name '" + vo + "'");
        if (!is_valid_absolute_path(root))
            throw Error(errc::kInvalidAdvertisement, "root for " + vo + " must be an absolute path");
    }
    if (roots_overlap(vo_roots)) throw Error(errc::kInvalidAdvertisement, "VO roots overlap for " + std::string(host));
    std::lock_guard lock(mutex_);
    auto [it, inserted] = ads_.try_emplace(std::string(host));
    SeAdvertisement& ad = it->second;
    ad.host = std::string(host);
    ad.port = port;
    ad.vo_roots = vo_roots;
    ad.last_heartbeat = inserted ? clock_->now() : std::max(ad.last_heartbeat, clock_->now());
}

ResolvedRoot InfoService::resolve(std::string_view host, std::string_view vo) const {
    std::lock_guard lock(mutex_);
    auto it = ads_.find(host);
    if (it == ads_.end()) throw Error(errc::kUnknownSe, "no storage element advertised as '" + std::string(host) + "'");
    auto root = it->second.vo_roots.find(std::string(vo));
    if (root == it->second.vo_roots.end())
        throw Error(errc::kVoNotSupported, std::string(host) + " does not support vo '" + std::string(vo) + "'");
    return ResolvedRoot{it->second.port, root->second};
}

std::vector<std::string> InfoService::list_ses(std::string_view vo) const {
    const TimeMs now = clock_->now();
    std::vector<std::string> out;
    std::lock_guard lock(mutex_);
    for (const auto& [host, ad] : ads_) {
        if (stale_after_ms_ > 0 && now - ad.last_heartbeat > stale_after_ms_) continue;
        if (ad.vo_roots.contains(std::string(vo))) out.push_back(host);
    }
    return out;
}

InfoServiceEndpoint::InfoServiceEndpoint(InfoService& info, std::string token)
    : info_(info), dispatcher_(std::move(token)) {
    dispatcher_.on("advertise", [this](const json& a) {
        std::map<std::string, std::string> roots;
        if (a.contains("vo_roots")) roots = a["vo_roots"].get<std::map<std::string, std::string>>();
        const auto port = arg_u64(a, "port");
        if (port == 0 || port > 65535) throw Error(errc::kInvalidAdvertisement, "port must be 1-65535");
        info_.advertise(arg_string(a, "host"), static_cast<std::uint16_t>(port), roots);
        return json{{"advertised", true}};
    });
    dispatcher_.on("resolve", [this](const json& a) {
        const ResolvedRoot r = info_.resolve(arg_string(a, "host"), arg_string(a, "vo"));
        return json{{"port", r.port}, {"root", r.root}};
    });
    dispatcher_.on("list_ses", [this](const json& a) { return json(info_.list_ses(arg_string(a, "vo"))); });
}

void InfoClient::advertise(std::string_view host, std::uint16_t port,
                           const std::map<std::string, std::string>& vo_roots) const {
    rpc_.call("advertise", {{"host", host}, {"port", port}, {"vo_roots", vo_roots}});
}

ResolvedRoot InfoClient::resolve(std::string_view host, std::string_view vo) const {
    const json r = rpc_.call("resolve", {{"host", host}, {"vo", vo}});
    return ResolvedRoot{r.at("port").get<std::uint16_t>(), r.at("root").get<std::string>()};
}

std::vector<std::string> InfoClient::list_ses(std::string_view vo) const {
    return rpc_.call("list_ses", {{"vo", vo}}).get<std::vector<std::string>>();
}

}  // namespace gm
