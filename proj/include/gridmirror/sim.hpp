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
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gridmirror/catalog.hpp"
#include "gridmirror/clock.hpp"
#include "gridmirror/info_service.hpp"
#include "gridmirror/mirror_daemon.hpp"
#include "gridmirror/storage_element.hpp"
#include "gridmirror/wire.hpp"

namespace gm::sim {

struct LinkSpec {
    TimeMs latency_ms = 0;
    double fail_probability = 0.0;
    double corrupt_probability = 0.0;
};

enum class Channel { Control, Data };

/// Outcome forced on the next message of a channel.
///   Ok       deliver normally
///   Fail     lose the request (peer never sees it)
///   DropReply deliver, then lose the reply (control only)
///   Corrupt  flip one payload byte (data only)
enum class Fault { Ok, Fail, DropReply, Corrupt };

Fault parse_fault(std::string_view text);
std::string_view to_string(Fault fault) noexcept;

/// In-process network with per-link fault injection. Probabilistic faults
/// apply to data-plane frames only; control messages are lost only through
/// explicit schedules or node outages. Per-attempt schedules override the
/// probabilities until they run out.
class SimNet {
public:
    SimNet(ManualClock& clock, std::uint64_t seed);
    ~SimNet();

    void attach(const std::string& node, const Address& address, Service& service);
    /// Transport whose messages originate at `node`.
    Transport& endpoint(const std::string& node);

    void set_link(const std::string& a, const std::string& b, LinkSpec spec, bool symmetric = true);
    LinkSpec link(const std::string& from, const std::string& to) const;
    void inject(const std::string& from, const std::string& to, Channel channel, std::vector<Fault> schedule);
    void set_node_down(const std::string& node, bool down);
    bool node_down(const std::string& node) const;

    struct Counters {
        std::uint64_t messages = 0;
        std::uint64_t frames = 0;
        std::uint64_t lost = 0;
        std::uint64_t corrupted = 0;
        std::uint64_t draws = 0;
    };
    Counters counters() const;

private:
    class Endpoint;
    friend class Endpoint;

    json deliver_call(const std::string& from, const Address& to, const json& request);
    std::uint8_t deliver_frame(const std::string& from, const Address& to, std::span<const std::uint8_t> frame);
    std::pair<std::string, Service*> route(const Address& to) const;
    Fault next_fault(const std::string& from, const std::string& to, Channel channel);

    ManualClock& clock_;
    mutable std::recursive_mutex mutex_;
    std::mt19937_64 rng_;
    std::map<Address, std::pair<std::string, Service*>> services_;
    std::map<std::pair<std::string, std::string>, LinkSpec> links_;
    std::map<std::tuple<std::string, std::string, Channel>, std::deque<Fault>> schedules_;
    std::set<std::string> down_;
    std::map<std::string, std::unique_ptr<Endpoint>> endpoints_;
    Counters counters_;
};

struct SiteSpec {
    std::string name;
    SeConfig se;
    DaemonConfig daemon;
};

struct LinkEntry {
    std::string a;
    std::string b;
    LinkSpec spec;
    bool directed = false;
};

/// Multi-site layout. Node names are site names plus "ui", "catalog" and
/// "info"; links not listed are perfect.
struct Topology {
    std::uint64_t seed = 0;
    std::string token = "grid-secret";
    Address catalog{"catalog.grid", 9400};
    NamingMode naming = NamingMode::Free;
    Address info{"info.grid", 9401};
    TimeMs info_stale_after_ms = 0;
    std::vector<SiteSpec> sites;
    std::vector<LinkEntry> links;

    /// Throws Error(InvalidConfig).
    static Topology from_json(const json& j);
    void validate() const;
};

struct Step {
    TimeMs at = 0;
    std::string actor;
    std::string action;
    json args = json::object();
};

struct Scenario {
    std::vector<Step> steps;
    json expect = json::array();

    static Scenario from_json(const json& j);
};

struct ConvergenceResult {
    bool converged = true;
    std::vector<std::string> diff;
};

/// Boots a catalogue, an info service and one (SE, daemon) pair per site in
/// one process on a shared virtual clock and SimNet.
class Harness {
public:
    explicit Harness(Topology topology);
    ~Harness();

    /// Executes the scenario and returns the TraceReport:
    ///   {"steps": [...], "expectations": [...], "passed": bool,
    ///    "first_failure": str|null, "final_state": {...},
    ///    "final_state_digest": hex, "logs": {site: [...]}}
    json run(const Scenario& scenario);

    /// Runs all daemons on virtual time until every queue is empty.
    bool drain_all(TimeMs timeout_ms = 7LL * 24 * 3600 * 1000);

    /// Compares the catalogue and SE contents against the state obtained by
    /// applying each subscriber's filter directly to the exported file sets.
    ConvergenceResult converged() const;

    /// Canonical state ignoring timestamps and attempt counters.
    json final_state() const;
    static std::string digest(const json& state);

    json execute(const Step& step);

    ManualClock& clock() noexcept { return clock_; }
    SimNet& net() noexcept { return *net_; }
    Catalog& catalog() noexcept { return *catalog_; }
    InfoService& info() noexcept { return *info_; }
    StorageElement& se(const std::string& site);
    MirrorDaemon& daemon(const std::string& site);
    const Topology& topology() const noexcept { return topology_; }
    const SiteSpec& site(const std::string& name) const;
    const SiteSpec* site_by_host(std::string_view host) const;

private:
    struct SiteRuntime;

    json evaluate(const json& expectation);

    Topology topology_;
    ManualClock clock_;
    std::unique_ptr<SimNet> net_;
    std::unique_ptr<Catalog> catalog_;
    std::unique_ptr<CatalogService> catalog_service_;
    std::unique_ptr<InfoService> info_;
    std::unique_ptr<InfoServiceEndpoint> info_service_;
    std::map<std::string, std::unique_ptr<SiteRuntime>> sites_;
};

/// Pure function of (topology, scenario, seed).
json run(const Topology& topology, const Scenario& scenario);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view data);

}  // namespace gm::sim
