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

#include "gridmirror/sim.hpp"

#include <algorithm>
#include <limits>
#include <regex>

#include "gridmirror/base64.hpp"
#include "gridmirror/crc32.hpp"
#include "gridmirror/names.hpp"
#include "gridmirror/replica_manager.hpp"

namespace gm::sim {

namespace {

constexpr const char* kUiNode = "ui";
constexpr const char* kCatalogNode = "catalog";
constexpr const char* kInfoNode = "info";

Error bad_topology(const std::string& why) { return Error(errc::kInvalidConfig, "topology: " + why); }

}  // namespace

Fault parse_fault(std::string_view text) {
    if (text == "ok") return Fault::Ok;
    if (text == "fail") return Fault::Fail;
    if (text == "drop_reply") return Fault::DropReply;
    if (text == "corrupt") return Fault::Corrupt;
    throw Error(errc::kBadRequest, "unknown fault '" + std::string(text) + "' (ok|fail|drop_reply|corrupt)");
}

std::string_view to_string(Fault fault) noexcept {
    switch (fault) {
    case Fault::Ok: return "ok";
    case Fault::Fail: return "fail";
    case Fault::DropReply: return "drop_reply";
    case Fault::Corrupt: return "corrupt";
    }
    return "?";
}

class SimNet::Endpoint final : public Transport {
public:
    Endpoint(SimNet& net, std::string node) : net_(net), node_(std::move(node)) {}
    json call(const Address& to, const json& request) override { return net_.deliver_call(node_, to, request); }
    std::uint8_t send_frame(const Address& to, std::span<const std::uint8_t> frame) override {
        return net_.deliver_frame(node_, to, frame);
    }

private:
    SimNet& net_;
    std::string node_;
};

SimNet::SimNet(ManualClock& clock, std::uint64_t seed) : clock_(clock), rng_(seed) {}

SimNet::~SimNet() = default;

void SimNet::attach(const std::string& node, const Address& address, Service& service) {
    std::lock_guard lock(mutex_);
    services_[address] = {node, &service};
}

Transport& SimNet::endpoint(const std::string& node) {
    std::lock_guard lock(mutex_);
    auto& slot = endpoints_[node];
    if (!slot) slot = std::make_unique<Endpoint>(*this, node);
    return *slot;
}

void SimNet::set_link(const std::string& a, const std::string& b, LinkSpec spec, bool symmetric) {
    std::lock_guard lock(mutex_);
    links_[{a, b}] = spec;
    if (symmetric) links_[{b, a}] = spec;
}

LinkSpec SimNet::link(const std::string& from, const std::string& to) const {
    std::lock_guard lock(mutex_);
    auto it = links_.find({from, to});
    return it == links_.end() ? LinkSpec{} : it->second;
}

void SimNet::inject(const std::string& from, const std::string& to, Channel channel, std::vector<Fault> schedule) {
    std::lock_guard lock(mutex_);
    auto& queue = schedules_[{from, to, channel}];
    queue.insert(queue.end(), schedule.begin(), schedule.end());
}

void SimNet::set_node_down(const std::string& node, bool down) {
    std::lock_guard lock(mutex_);
    if (down) {
        down_.insert(node);
    } else {
        down_.erase(node);
    }
}

bool SimNet::node_down(const std::string& node) const {
    std::lock_guard lock(mutex_);
    return down_.contains(node);
}

SimNet::Counters SimNet::counters() const {
    std::lock_guard lock(mutex_);
    return counters_;
}

std::pair<std::string, Service*> SimNet::route(const Address& to) const {
    auto it = services_.find(to);
    if (it == services_.end()) throw TransportError("no route to " + to.str());
    return it->second;
}

Fault SimNet::next_fault(const std::string& from, const std::string& to, Channel channel) {
    auto it = schedules_.find({from, to, channel});
    if (it != schedules_.end() && !it->second.empty()) {
        const Fault f = it->second.front();
        it->second.pop_front();
        return f;
    }
    if (channel == Channel::Control) return Fault::Ok;
    const LinkSpec spec = link(from, to);
    // Draw only for non-zero probabilities so a fault-free run consumes no randomness.
    auto draw = [this](double p) {
        if (p <= 0.0) return false;
        ++counters_.draws;
        return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p;
    };
    if (draw(spec.fail_probability)) return Fault::Fail;
    if (draw(spec.corrupt_probability)) return Fault::Corrupt;
    return Fault::Ok;
}

json SimNet::deliver_call(const std::string& from, const Address& to, const json& request) {
    std::string node;
    Service* service = nullptr;
    Fault fault = Fault::Ok;
    TimeMs latency = 0;
    {
        std::lock_guard lock(mutex_);
        ++counters_.messages;
        std::tie(node, service) = route(to);
        latency = link(from, node).latency_ms;
        clock_.advance(latency);
        if (down_.contains(from) || down_.contains(node)) {
            ++counters_.lost;
            throw TransportError(to.str() + " (" + node + ") is unreachable from " + from);
        }
        fault = next_fault(from, node, Channel::Control);
        if (fault == Fault::Fail) {
            ++counters_.lost;
            throw TransportError("request to " + to.str() + " lost");
        }
    }
    json response = service->handle(request);
    std::lock_guard lock(mutex_);
    clock_.advance(latency);
    if (fault == Fault::DropReply) {
        ++counters_.lost;
        throw TransportError("reply from " + to.str() + " lost");
    }
    return response;
}

std::uint8_t SimNet::deliver_frame(const std::string& from, const Address& to, std::span<const std::uint8_t> frame) {
    std::string node;
    Service* service = nullptr;
    Fault fault = Fault::Ok;
    TimeMs latency = 0;
    std::vector<std::uint8_t> bytes(frame.begin(), frame.end());
    {
        std::lock_guard lock(mutex_);
        ++counters_.frames;
        std::tie(node, service) = route(to);
        latency = link(from, node).latency_ms;
        clock_.advance(latency);
        if (down_.contains(from) || down_.contains(node)) {
            ++counters_.lost;
            throw TransportError(to.str() + " (" + node + ") is unreachable from " + from);
        }
        fault = next_fault(from, node, Channel::Data);
        if (fault == Fault::Fail) {
            ++counters_.lost;
            throw TransportError("frame to " + to.str() + " lost");
        }
        if (fault == Fault::Corrupt) {
            ++counters_.corrupted;
            const std::size_t offset = frame_payload_offset(bytes);
            if (offset < bytes.size()) {
                const std::size_t at = offset + static_cast<std::size_t>(rng_() % (bytes.size() - offset));
                bytes[at] ^= 0x5A;
            } else if (offset >= 4 && offset <= bytes.size()) {
                bytes[offset - 1] ^= 0x5A;  // empty payload: damage the CRC field instead
            }
        }
    }
    const std::uint8_t status = service->handle_frame(bytes);
    std::lock_guard lock(mutex_);
    clock_.advance(latency);
    if (fault == Fault::DropReply) {
        ++counters_.lost;
        throw TransportError("frame status from " + to.str() + " lost");
    }
    return status;
}

// ---------------------------------------------------------------------------
// Topology / Scenario

namespace {

LinkSpec link_from_json(const json& j) {
    LinkSpec s;
    s.latency_ms = j.value("latency_ms", TimeMs{0});
    s.fail_probability = j.value("fail_probability", 0.0);
    s.corrupt_probability = j.value("corrupt_probability", 0.0);
    return s;
}

}  // namespace

Topology Topology::from_json(const json& j) {
    Topology t;
    try {
        t.seed = j.value("seed", std::uint64_t{0});
        t.token = j.value("token", t.token);
        if (j.contains("catalog")) t.catalog = Address::parse(j["catalog"].get<std::string>());
        if (j.contains("info")) t.info = Address::parse(j["info"].get<std::string>());
        t.naming = parse_naming_mode(j.value("naming", std::string("free")));
        t.info_stale_after_ms = j.value("info_stale_after_ms", TimeMs{0});
        for (const auto& s : j.at("sites")) {
            SiteSpec site;
            site.name = s.at("name").get<std::string>();
            const std::string host = s.value("host", site.name);
            json se = s.value("se", json::object());
            se["host"] = host;
            se["token"] = t.token;
            site.se = SeConfig::from_json(se);
            json d = s.value("daemon", json::object());
            d["host"] = host;
            d["se"] = Address{host, site.se.port}.str();
            d["catalog"] = t.catalog.str();
            d["info"] = t.info.str();
            d["token"] = t.token;
            if (!d.contains("vos")) {
                json vos = json::array();
                for (const auto& [vo, _] : site.se.vo_roots) vos.push_back(vo);
                d["vos"] = vos;
            }
            d.erase("log_path");
            site.daemon = DaemonConfig::from_json(d);
            // One transfer at a time keeps a run a single deterministic timeline.
            site.daemon.transfer_concurrency = 1;
            t.sites.push_back(std::move(site));
        }
        std::set<std::pair<std::string, std::string>> listed;
        for (const auto& l : j.value("links", json::array())) {
            LinkEntry e{l.at("a").get<std::string>(), l.at("b").get<std::string>(), link_from_json(l),
                        l.value("directed", false)};
            listed.insert({e.a, e.b});
            if (!e.directed) listed.insert({e.b, e.a});
            t.links.push_back(std::move(e));
        }
        if (j.contains("default_link")) {
            // Expands to every pair of nodes not listed explicitly.
            const LinkSpec spec = link_from_json(j["default_link"]);
            std::vector<std::string> nodes{kUiNode, kCatalogNode, kInfoNode};
            for (const auto& s : t.sites) nodes.push_back(s.name);
            for (const auto& a : nodes) {
                for (const auto& b : nodes) {
                    if (a == b || listed.contains({a, b})) continue;
                    t.links.push_back(LinkEntry{a, b, spec, true});
                }
            }
        }
    } catch (const json::exception& e) {
        throw bad_topology(e.what());
    } catch (const Error& e) {
        if (e.code() == errc::kInvalidConfig) throw;
        throw bad_topology(e.what());
    }
    t.validate();
    return t;
}

void Topology::validate() const {
    if (sites.empty()) throw bad_topology("at least one site is required");
    std::set<std::string> names{kUiNode, kCatalogNode, kInfoNode};
    std::set<std::string> hosts{catalog.host, info.host};
    if (catalog.host == info.host) throw bad_topology("catalog and info need distinct hosts");
    for (const auto& s : sites) {
        if (s.name.empty()) throw bad_topology("site name is empty");
        if (!names.insert(s.name).second) throw bad_topology("duplicate or reserved site name '" + s.name + "'");
        if (!hosts.insert(s.se.host).second) throw bad_topology("duplicate host '" + s.se.host + "'");
        if (s.se.port == s.daemon.port) throw bad_topology("site '" + s.name + "' uses one port for SE and daemon");
        for (const auto& vo : s.daemon.vos) {
            if (!s.se.vo_roots.contains(vo))
                throw bad_topology("site '" + s.name + "' daemon serves vo '" + vo + "' that its SE has no root for");
        }
    }
    for (const auto& l : links) {
        if (!names.contains(l.a) || !names.contains(l.b)) throw bad_topology("link names unknown node " + l.a + "/" + l.b);
        for (double p : {l.spec.fail_probability, l.spec.corrupt_probability}) {
            if (!(p >= 0.0 && p <= 1.0)) throw bad_topology("probabilities must be in [0,1]");
        }
        if (l.spec.latency_ms < 0) throw bad_topology("latency_ms must be >= 0");
    }
}

Scenario Scenario::from_json(const json& j) {
    Scenario s;
    try {
        TimeMs last = 0;
        for (const auto& st : j.at("steps")) {
            Step step{st.value("at", TimeMs{0}), st.value("actor", std::string(kUiNode)), st.at("action").get<std::string>(),
                      st.value("args", json::object())};
            if (step.at < last) throw Error(errc::kInvalidConfig, "scenario: step times must be non-decreasing");
            last = step.at;
            s.steps.push_back(std::move(step));
        }
        s.expect = j.value("expect", json::array());
        if (!s.expect.is_array()) throw Error(errc::kInvalidConfig, "scenario: expect must be an array");
    } catch (const json::exception& e) {
        throw Error(errc::kInvalidConfig, std::string("scenario: ") + e.what());
    }
    return s;
}

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Harness

namespace {

/// Records hook invocations instead of running a shell.
class RecordingHookRunner final : public HookRunner {
public:
    explicit RecordingHookRunner(int exit_code) : exit_code_(exit_code) {}
    int run(const std::string& command) override {
        commands.push_back(command);
        return exit_code_;
    }
    std::vector<std::string> commands;

private:
    int exit_code_;
};

std::vector<std::uint8_t> content_from_args(const json& args) {
    if (args.contains("content")) {
        const std::string text = args["content"].get<std::string>();
        return {text.begin(), text.end()};
    }
    if (args.contains("random_bytes")) {
        const auto n = args["random_bytes"].get<std::uint64_t>();
        std::mt19937_64 rng(args.value("content_seed", std::uint64_t{1}));
        std::vector<std::uint8_t> out(n);
        for (auto& b : out) b = static_cast<std::uint8_t>(rng() >> 56);
        return out;
    }
    throw Error(errc::kBadRequest, "step needs 'content' or 'random_bytes'");
}

/// Independent glob for the convergence oracle.
bool oracle_glob(const std::string& pattern, const std::string& text) {
    std::string re;
    for (char c : pattern) {
        if (c == '*') {
            re += ".*";
        } else if (c == '?') {
            re += '.';
        } else if (std::isalnum(static_cast<unsigned char>(c))) {
            re += c;
        } else {
            re += '\\';
            re += c;
        }
    }
    return std::regex_match(text, std::regex(re));
}

}  // namespace

struct Harness::SiteRuntime {
    std::unique_ptr<StorageElement> se;
    std::unique_ptr<SeService> se_service;
    std::shared_ptr<RecordingHookRunner> hooks;
    std::unique_ptr<MirrorDaemon> daemon;
    std::unique_ptr<MirrorService> mirror_service;
    std::map<std::string, ImportFilter> filters;  // last filter set per vo
};

Harness::Harness(Topology topology) : topology_(std::move(topology)) {
    topology_.validate();
    net_ = std::make_unique<SimNet>(clock_, topology_.seed);
    catalog_ = std::make_unique<Catalog>(topology_.naming, clock_);
    catalog_service_ = std::make_unique<CatalogService>(*catalog_, topology_.token);
    info_ = std::make_unique<InfoService>(clock_, topology_.info_stale_after_ms);
    info_service_ = std::make_unique<InfoServiceEndpoint>(*info_, topology_.token);
    net_->attach(kCatalogNode, topology_.catalog, *catalog_service_);
    net_->attach(kInfoNode, topology_.info, *info_service_);
    for (const auto& l : topology_.links) net_->set_link(l.a, l.b, l.spec, !l.directed);

    for (const auto& spec : topology_.sites) {
        auto rt = std::make_unique<SiteRuntime>();
        Transport& transport = net_->endpoint(spec.name);
        rt->se = std::make_unique<StorageElement>(spec.se, std::make_unique<MemoryBlobStore>(),
                                                  std::make_unique<MemoryBlobStore>(), clock_, transport);
        rt->se_service = std::make_unique<SeService>(*rt->se);
        rt->hooks = std::make_shared<RecordingHookRunner>(0);
        rt->daemon = std::make_unique<MirrorDaemon>(spec.daemon, transport, clock_, rt->hooks);
        rt->mirror_service = std::make_unique<MirrorService>(*rt->daemon, topology_.token);
        net_->attach(spec.name, Address{spec.se.host, spec.se.port}, *rt->se_service);
        net_->attach(spec.name, Address{spec.daemon.host, spec.daemon.port}, *rt->mirror_service);
        info_->advertise(spec.se.host, spec.se.port, spec.se.vo_roots);
        sites_.emplace(spec.name, std::move(rt));
    }
}

Harness::~Harness() = default;

StorageElement& Harness::se(const std::string& name) {
    auto it = sites_.find(name);
    if (it == sites_.end()) throw Error(errc::kBadRequest, "unknown site '" + name + "'");
    return *it->second->se;
}

MirrorDaemon& Harness::daemon(const std::string& name) {
    auto it = sites_.find(name);
    if (it == sites_.end()) throw Error(errc::kBadRequest, "unknown site '" + name + "'");
    return *it->second->daemon;
}

const SiteSpec& Harness::site(const std::string& name) const {
    for (const auto& s : topology_.sites) {
        if (s.name == name) return s;
    }
    throw Error(errc::kBadRequest, "unknown site '" + name + "'");
}

const SiteSpec* Harness::site_by_host(std::string_view host) const {
    for (const auto& s : topology_.sites) {
        if (s.se.host == host) return &s;
    }
    return nullptr;
}

bool Harness::drain_all(TimeMs timeout_ms) {
    const TimeMs deadline = clock_.now() + timeout_ms;
    auto heartbeat = [this] {
        if (topology_.info_stale_after_ms <= 0) return;
        for (const auto& s : topology_.sites) info_->advertise(s.se.host, s.se.port, s.se.vo_roots);
    };
    while (true) {
        heartbeat();
        const TimeMs now = clock_.now();
        for (const auto& s : topology_.sites) sites_.at(s.name)->daemon->tick(now);
        bool all_idle = true;
        std::optional<TimeMs> next;
        for (const auto& s : topology_.sites) {
            const MirrorDaemon& d = *sites_.at(s.name)->daemon;
            if (!d.idle()) all_idle = false;
            if (auto due = d.next_due()) next = next ? std::min(*next, *due) : *due;
        }
        if (all_idle) return true;
        if (!next || *next > deadline) return false;
        if (*next > clock_.now()) clock_.advance_to(*next);
    }
}

json Harness::execute(const Step& step) {
    const auto dot = step.action.find('.');
    if (dot == std::string::npos) throw Error(errc::kBadRequest, "action must be <family>.<op>: " + step.action);
    const std::string family = step.action.substr(0, dot);
    const std::string op = step.action.substr(dot + 1);
    json args = step.args;
    if (step.actor != kUiNode && !sites_.contains(step.actor))
        throw Error(errc::kBadRequest, "unknown actor '" + step.actor + "'");
    Transport& transport = net_->endpoint(step.actor);
    auto target_site = [&]() -> const SiteSpec& {
        const std::string name = args.contains("site") ? args["site"].get<std::string>() : step.actor;
        args.erase("site");
        return site(name);
    };
    auto host_of = [&](const std::string& key) {
        const std::string name = args.at(key).get<std::string>();
        return site(name).se.host;
    };

    if (family == "catalog") return RpcClient(transport, topology_.catalog, topology_.token).call(op, args);
    if (family == "info") return RpcClient(transport, topology_.info, topology_.token).call(op, args);
    if (family == "se") {
        const SiteSpec& s = target_site();
        if (op == "put" && !args.contains("content_b64")) {
            const auto bytes = content_from_args(args);
            return to_json(SeClient(transport, Address{s.se.host, s.se.port}, topology_.token)
                               .put(args.at("vo").get<std::string>(), args.at("path").get<std::string>(), bytes));
        }
        if (op == "put") args["content"] = args["content_b64"];
        return RpcClient(transport, Address{s.se.host, s.se.port}, topology_.token).call(op, args);
    }
    if (family == "mirror") {
        const SiteSpec& s = target_site();
        if (op == "subscribe" && args.contains("remote")) {
            const SiteSpec& remote = site(args["remote"].get<std::string>());
            args.erase("remote");
            args["remote_host"] = remote.daemon.host;
            args["remote_port"] = remote.daemon.port;
        }
        json result = RpcClient(transport, Address{s.daemon.host, s.daemon.port}, topology_.token).call(op, args);
        if (op == "set_import_filter") {
            sites_.at(s.name)->filters[args.at("vo").get<std::string>()] =
                ImportFilter{arg_strings(args, "include"), arg_strings(args, "exclude")};
        }
        return result;
    }
    if (family == "rm") {
        ClientConfig cfg{topology_.catalog, topology_.info, topology_.token, args.value("rollback", true),
                         args.at("vo").get<std::string>()};
        ReplicaManager rm(cfg, transport);
        const std::string lfn = args.at("lfn").get<std::string>();
        if (op == "copy_and_register") {
            if (args.contains("source")) {
                return to_json(rm.copy_and_register(PhysicalFileName::parse(args["source"].get<std::string>()),
                                                    host_of("dest"), lfn));
            }
            return to_json(rm.copy_and_register(content_from_args(args), host_of("dest"), lfn));
        }
        if (op == "replicate") {
            std::optional<std::string> source;
            if (args.contains("source")) source = host_of("source");
            return to_json(rm.replicate_file(lfn, host_of("dest"), source));
        }
        if (op == "delete") {
            rm.delete_replica(lfn, host_of("site"));
            return json{{"deleted", true}};
        }
        if (op == "list_replicas") {
            json out = json::array();
            for (const auto& r : rm.list_replicas(lfn)) out.push_back(to_json(r));
            return out;
        }
        throw Error(errc::kBadRequest, "unknown rm op '" + op + "'");
    }
    if (family == "harness") {
        if (op == "drain") return json{{"drained", drain_all(args.value("timeout_ms", TimeMs{7LL * 24 * 3600 * 1000}))}};
        if (op == "advance") {
            clock_.advance(args.at("ms").get<TimeMs>());
            return json{{"now", clock_.now()}};
        }
        if (op == "inject") {
            std::vector<Fault> schedule;
            for (const auto& f : args.at("schedule")) schedule.push_back(parse_fault(f.get<std::string>()));
            const std::string channel = args.value("channel", std::string("data"));
            if (channel != "data" && channel != "control") throw Error(errc::kBadRequest, "channel must be data|control");
            net_->inject(args.at("from").get<std::string>(), args.at("to").get<std::string>(),
                         channel == "data" ? Channel::Data : Channel::Control, std::move(schedule));
            return json{{"injected", true}};
        }
        if (op == "set_down") {
            net_->set_node_down(args.at("node").get<std::string>(), args.value("down", true));
            return json{{"down", args.value("down", true)}};
        }
        if (op == "set_link") {
            net_->set_link(args.at("a").get<std::string>(), args.at("b").get<std::string>(), link_from_json(args),
                           !args.value("directed", false));
            return json{{"ok", true}};
        }
        throw Error(errc::kBadRequest, "unknown harness op '" + op + "'");
    }
    throw Error(errc::kBadRequest, "unknown action family '" + family + "'");
}

ConvergenceResult Harness::converged() const {
    ConvergenceResult result;
    auto miss = [&](std::string what) {
        result.converged = false;
        result.diff.push_back(std::move(what));
    };
    std::map<std::string, std::set<std::string>> expected_hosts;  // lfn -> SE hosts
    struct Expected {
        std::string site;
        std::string vo;
        std::string path;
        std::uint32_t crc;
    };
    std::vector<Expected> copies;

    for (const auto& exporter : topology_.sites) {
        const SiteRuntime& ex = *sites_.at(exporter.name);
        for (const auto& vo : exporter.daemon.vos) {
            std::vector<FileCatalogEntry> exported;
            for (const auto& e : ex.daemon->entries(vo)) {
                if (e.state == EntryState::Exported) exported.push_back(e);
            }
            for (const auto& e : exported) expected_hosts[e.lfn].insert(exporter.se.host);
            for (const auto& sub : ex.daemon->subscribers(vo)) {
                const SiteSpec* importer = site_by_host(sub.subscriber_host);
                if (!importer) continue;
                const SiteRuntime& im = *sites_.at(importer->name);
                const auto f = im.filters.find(vo);
                std::set<std::string> own;
                for (const auto& e : im.daemon->entries(vo)) {
                    if (e.state == EntryState::Local || e.state == EntryState::Exported) own.insert(e.lfn);
                }
                for (const auto& e : exported) {
                    if (own.contains(e.lfn)) continue;
                    if (f != im.filters.end()) {
                        const auto& inc = f->second.include_globs;
                        const auto& exc = f->second.exclude_globs;
                        const bool in = inc.empty() || std::any_of(inc.begin(), inc.end(), [&](const auto& g) {
                                            return oracle_glob(g, e.lfn);
                                        });
                        const bool out = std::any_of(exc.begin(), exc.end(), [&](const auto& g) { return oracle_glob(g, e.lfn); });
                        if (!in || out) continue;
                    }
                    expected_hosts[e.lfn].insert(importer->se.host);
                    copies.push_back(Expected{importer->name, vo, e.relative_path, e.crc32});
                }
            }
        }
    }

    for (const auto& [lfn, hosts] : expected_hosts) {
        std::set<std::string> actual;
        try {
            for (const auto& pfn : catalog_->lookup(lfn)) {
                if (!actual.insert(pfn.host).second) miss(lfn + ": two PFNs on " + pfn.host);
            }
        } catch (const Error& e) {
            miss(lfn + ": " + e.code());
        }
        if (actual != hosts) {
            std::string want, got;
            for (const auto& h : hosts) want += h + " ";
            for (const auto& h : actual) got += h + " ";
            miss(lfn + ": catalogue hosts {" + got + "} expected {" + want + "}");
        }
    }
    for (const auto& c : copies) {
        StorageElement& store = *sites_.at(c.site)->se;
        try {
            const StorageObject o = store.stat(c.vo, c.path);
            if (!o.tiers.disk) {
                miss(c.site + ":" + c.vo + "/" + c.path + " not on disk");
                continue;
            }
            if (crc32(store.get_file(c.vo, c.path)) != c.crc) miss(c.site + ":" + c.vo + "/" + c.path + " CRC mismatch");
        } catch (const Error& e) {
            miss(c.site + ":" + c.vo + "/" + c.path + " " + e.code());
        }
    }
    return result;
}

json Harness::final_state() const {
    json catalog = json::object();
    for (const auto& lfn : catalog_->list_lfns("*", std::numeric_limits<std::size_t>::max())) {
        const LogicalFileRecord r = catalog_->get_logical(lfn);
        json pfns = json::array();
        for (const auto& p : catalog_->lookup(lfn)) pfns.push_back(p.str());
        catalog[lfn] = json{{"size", r.size ? json(*r.size) : json()},
                            {"crc32", r.crc32 ? json(*r.crc32) : json()},
                            {"extra", r.extra},
                            {"pfns", std::move(pfns)}};
    }
    json sites = json::object();
    for (const auto& spec : topology_.sites) {
        const SiteRuntime& rt = *sites_.at(spec.name);
        json objects = json::object();
        for (const auto& [vo, _] : spec.se.vo_roots) {
            json list = json::array();
            for (const auto& o : rt.se->list_dir(vo, "")) list.push_back(to_json(o));
            objects[vo] = std::move(list);
        }
        json mirror = json::object();
        for (const auto& vo : spec.daemon.vos) {
            json entries = json::array();
            for (const auto& e : rt.daemon->entries(vo)) entries.push_back(to_json(e));
            json dead = json::array();
            for (const auto& j : rt.daemon->dead_letters(vo)) dead.push_back(j.entry.lfn);
            std::sort(dead.begin(), dead.end());
            json subs = json::array();
            for (const auto& s : rt.daemon->subscribers(vo)) subs.push_back(s.subscriber_host);
            mirror[vo] = json{{"entries", std::move(entries)},
                              {"dead_letters", std::move(dead)},
                              {"pending_jobs", rt.daemon->pending_jobs(vo).size()},
                              {"subscribers", std::move(subs)}};
        }
        sites[spec.name] = json{{"objects", std::move(objects)}, {"mirror", std::move(mirror)}};
    }
    return json{{"catalog", std::move(catalog)}, {"sites", std::move(sites)}};
}

std::string Harness::digest(const json& state) { return fnv1a_hex(state.dump()); }

json Harness::evaluate(const json& x) {
    const std::string kind = x.at("kind").get<std::string>();
    json out{{"kind", kind}};
    auto check = [&](bool ok, std::string detail) {
        out["passed"] = ok;
        out["detail"] = std::move(detail);
        return out;
    };
    auto expect_count = [&](std::size_t actual) {
        const auto want = x.at("equals").get<std::size_t>();
        return check(actual == want, "got " + std::to_string(actual) + ", expected " + std::to_string(want));
    };
    if (kind == "converged") {
        const ConvergenceResult c = converged();
        std::string detail;
        for (const auto& d : c.diff) detail += (detail.empty() ? "" : "; ") + d;
        return check(c.converged, detail.empty() ? "converged" : detail);
    }
    if (kind == "pfn_count") {
        std::vector<std::string> lfns;
        if (x.contains("lfn")) {
            lfns.push_back(x["lfn"].get<std::string>());
        } else {
            lfns = catalog_->list_lfns(x.at("lfn_glob").get<std::string>(), std::numeric_limits<std::size_t>::max());
            if (lfns.empty()) return check(false, "no LFN matches");
        }
        const auto want = x.at("equals").get<std::size_t>();
        for (const auto& lfn : lfns) {
            std::size_t n = 0;
            try {
                n = catalog_->lookup(lfn).size();
            } catch (const Error&) {
            }
            if (n != want) return check(false, lfn + " has " + std::to_string(n) + " PFNs, expected " + std::to_string(want));
        }
        return check(true, std::to_string(lfns.size()) + " LFNs with " + std::to_string(want) + " PFNs");
    }
    if (kind == "replica_count") {
        StorageElement& store = se(x.at("site").get<std::string>());
        const std::string vo = x.at("vo").get<std::string>();
        std::size_t n = 0;
        for (const auto& o : store.list_dir(vo, "")) {
            if (!o.tiers.disk) continue;
            if (x.value("verify_crc", false)) {
                if (crc32(store.get_file(vo, o.path)) != o.crc32) return check(false, o.path + " fails its CRC");
                const std::string lfn = vo + "/" + o.path;
                try {
                    const auto rec = catalog_->get_logical(lfn);
                    if (rec.crc32 && *rec.crc32 != o.crc32) return check(false, o.path + " differs from catalogue CRC");
                } catch (const Error&) {
                }
            }
            ++n;
        }
        return expect_count(n);
    }
    if (kind == "dead_letter_count") {
        return expect_count(daemon(x.at("site").get<std::string>()).dead_letters(x.at("vo").get<std::string>()).size());
    }
    if (kind == "log_order") {
        const std::string lfn = x.at("lfn").get<std::string>();
        const std::string first = x.at("before").get<std::string>();
        const std::string second = x.at("after").get<std::string>();
        std::optional<std::size_t> a, b;
        const auto log = daemon(x.at("site").get<std::string>()).log();
        for (std::size_t i = 0; i < log.size(); ++i) {
            if (log[i].lfn != lfn) continue;
            if (log[i].event == first && !a) a = i;
            if (log[i].event == second) b = i;
        }
        if (!a || !b) return check(false, "missing " + std::string(!a ? first : second) + " for " + lfn);
        return check(*a < *b, first + "@" + std::to_string(*a) + " " + second + "@" + std::to_string(*b));
    }
    throw Error(errc::kBadRequest, "unknown expectation kind '" + kind + "'");
}

json Harness::run(const Scenario& scenario) {
    json steps = json::array();
    for (std::size_t i = 0; i < scenario.steps.size(); ++i) {
        const Step& step = scenario.steps[i];
        // Background work due before the step happens first.
        while (true) {
            std::optional<TimeMs> next;
            for (const auto& [_, rt] : sites_) {
                if (auto due = rt->daemon->next_due()) next = next ? std::min(*next, *due) : *due;
            }
            if (!next || *next > step.at) break;
            clock_.advance_to(*next);
            const TimeMs now = clock_.now();
            for (const auto& s : topology_.sites) sites_.at(s.name)->daemon->tick(now);
        }
        clock_.advance_to(step.at);
        json rec{{"index", i}, {"at", clock_.now()}, {"actor", step.actor}, {"action", step.action}};
        try {
            rec["result"] = execute(step);
            rec["ok"] = true;
        } catch (const Error& e) {
            rec["ok"] = false;
            rec["error"] = json{{"code", e.code()}, {"message", e.what()}};
        } catch (const json::exception& e) {
            rec["ok"] = false;
            rec["error"] = json{{"code", errc::kBadRequest}, {"message", e.what()}};
        }
        steps.push_back(std::move(rec));
    }

    json expectations = json::array();
    json first_failure;
    for (std::size_t i = 0; i < scenario.expect.size(); ++i) {
        const json& x = scenario.expect[i];
        json r;
        try {
            if (x.value("kind", "") == "step_ok" || x.value("kind", "") == "step_error") {
                const auto idx = x.at("step").get<std::size_t>();
                if (idx >= steps.size()) throw Error(errc::kBadRequest, "no step " + std::to_string(idx));
                const json& st = steps[idx];
                if (x["kind"] == "step_ok") {
                    r = json{{"kind", "step_ok"}, {"passed", st["ok"].get<bool>()},
                             {"detail", st["ok"].get<bool>() ? "ok" : st["error"]["code"].get<std::string>()}};
                } else {
                    const std::string want = x.at("code").get<std::string>();
                    const std::string got = st["ok"].get<bool>() ? "ok" : st["error"]["code"].get<std::string>();
                    r = json{{"kind", "step_error"}, {"passed", got == want}, {"detail", "got " + got + ", expected " + want}};
                }
            } else {
                r = evaluate(x);
            }
        } catch (const std::exception& e) {
            r = json{{"kind", x.value("kind", "?")}, {"passed", false}, {"detail", e.what()}};
        }
        r["index"] = i;
        if (!r["passed"].get<bool>() && first_failure.is_null()) {
            first_failure = "expect[" + std::to_string(i) + "] " + r["kind"].get<std::string>() + ": " +
                            r["detail"].get<std::string>();
        }
        expectations.push_back(std::move(r));
    }

    json logs = json::object();
    for (const auto& s : topology_.sites) {
        json events = json::array();
        for (const auto& e : sites_.at(s.name)->daemon->log()) events.push_back(to_json(e));
        logs[s.name] = std::move(events);
    }
    json state = final_state();
    const SimNet::Counters c = net_->counters();
    return json{{"seed", topology_.seed},
                {"steps", std::move(steps)},
                {"expectations", std::move(expectations)},
                {"passed", first_failure.is_null()},
                {"first_failure", first_failure},
                {"final_state_digest", digest(state)},
                {"final_state", std::move(state)},
                {"logs", std::move(logs)},
                {"virtual_time_ms", clock_.now()},
                {"net", {{"messages", c.messages}, {"frames", c.frames}, {"lost", c.lost}, {"corrupted", c.corrupted},
                         {"draws", c.draws}}}};
}

json run(const Topology& topology, const Scenario& scenario) {
    Harness harness(topology);
    return harness.run(scenario);
}

}  // namespace gm::sim
