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

#include "gridmirror/mirror_daemon.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <future>

#include "gridmirror/catalog.hpp"
#include "gridmirror/glob.hpp"
#include "gridmirror/info_service.hpp"
#include "gridmirror/names.hpp"
#include "gridmirror/storage_element.hpp"

namespace gm {
namespace {

constexpr std::size_t kRecentEvents = 100;

std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof(buf), "%08x", v);
    return buf;
}

json to_json(const Subscription& s) {
    return json{{"subscriber_host", s.subscriber_host},
                {"subscriber_port", s.subscriber_port},
                {"vo", s.vo},
                {"created_at", s.created_at}};
}

Subscription subscription_from_json(const json& j) {
    return Subscription{j.at("subscriber_host").get<std::string>(), j.at("subscriber_port").get<std::uint16_t>(),
                        j.at("vo").get<std::string>(), j.value("created_at", TimeMs{0})};
}

}  // namespace

std::string_view to_string(EntryState state) noexcept {
    switch (state) {
    case EntryState::Local: return "Local";
    case EntryState::Exported: return "Exported";
    case EntryState::Imported: return "Imported";
    case EntryState::Replicated: return "Replicated";
    }
    return "?";
}

json to_json(const FileCatalogEntry& e) {
    return json{{"lfn", e.lfn},
                {"relative_path", e.relative_path},
                {"size", e.size},
                {"crc32", e.crc32},
                {"origin_host", e.origin_host},
                {"state", to_string(e.state)}};
}

json to_json(const TransferJob& job) {
    return json{{"lfn", job.entry.lfn},
                {"origin_host", job.entry.origin_host},
                {"attempts", job.attempts},
                {"max_attempts", job.max_attempts},
                {"next_attempt_at", job.next_attempt_at},
                {"last_error", job.last_error ? json(*job.last_error) : json()}};
}

json to_json(const EventMessage& event) {
    json files = json::array();
    for (const auto& f : event.files) files.push_back({{"lfn", f.lfn}, {"size", f.size}, {"crc32", f.crc32}});
    return json{{"vo", event.vo},
                {"origin_host", event.origin_host},
                {"origin_port", event.origin_port},
                {"sequence_no", event.sequence_no},
                {"files", std::move(files)}};
}

EventMessage event_from_json(const json& j) {
    EventMessage e;
    e.vo = arg_string(j, "vo");
    e.origin_host = arg_string(j, "origin_host");
    e.origin_port = static_cast<std::uint16_t>(arg_u64(j, "origin_port"));
    e.sequence_no = arg_u64(j, "sequence_no");
    if (!j.contains("files") || !j["files"].is_array()) throw Error(errc::kBadRequest, "event needs a files array");
    for (const auto& f : j["files"]) {
        e.files.push_back(EventFile{arg_string(f, "lfn"), arg_u64(f, "size"),
                                    static_cast<std::uint32_t>(arg_u64(f, "crc32"))});
    }
    return e;
}

json to_json(const LogEvent& e) {
    return json{{"ts", e.ts}, {"vo", e.vo}, {"lfn", e.lfn}, {"event", e.event}, {"attempt", e.attempt}, {"detail", e.detail}};
}

bool ImportFilter::accepts(std::string_view lfn) const {
    const bool included = include_globs.empty() ||
                          std::any_of(include_globs.begin(), include_globs.end(),
                                      [&](const std::string& g) { return glob_match(g, lfn); });
    return included && std::none_of(exclude_globs.begin(), exclude_globs.end(),
                                    [&](const std::string& g) { return glob_match(g, lfn); });
}

int ShellHookRunner::run(const std::string& command) {
    const int status = std::system(command.c_str());
    if (status == -1) return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : 128;
}

std::string expand_hook(std::string_view templ, std::string_view lfn, std::string_view path, std::uint32_t crc32) {
    std::string out;
    for (std::size_t i = 0; i < templ.size();) {
        auto try_sub = [&](std::string_view name, std::string_view value) {
            if (templ.substr(i).starts_with(name)) {
                out += value;
                i += name.size();
                return true;
            }
            return false;
        };
        if (try_sub("{lfn}", lfn) || try_sub("{path}", path) || try_sub("{crc32}", hex32(crc32))) continue;
        out += templ[i++];
    }
    return out;
}

void DaemonConfig::validate() const {
    auto bad = [](const std::string& why) { return Error(errc::kInvalidConfig, "daemon config: " + why); };
    if (host.empty()) throw bad("host is required");
    if (vos.empty()) throw bad("at least one VO is required");
    for (const auto& vo : vos) {
        if (!is_valid_vo(vo)) throw bad("invalid VO name '" + vo + "'");
    }
    if (base_backoff_ms <= 0) throw bad("base_backoff_ms must be > 0");
    if (max_attempts < 1) throw bad("max_attempts must be >= 1");
    if (transfer_concurrency < 1) throw bad("transfer_concurrency must be >= 1");
}

DaemonConfig DaemonConfig::from_json(const json& j) {
    DaemonConfig c;
    try {
        c.host = j.at("host").get<std::string>();
        c.port = j.value("port", std::uint16_t{9403});
        c.se = Address::parse(j.at("se").get<std::string>());
        c.catalog = Address::parse(j.at("catalog").get<std::string>());
        c.info = Address::parse(j.at("info").get<std::string>());
        c.vos = j.at("vos").get<std::vector<std::string>>();
        c.base_backoff_ms = j.value("base_backoff_ms", TimeMs{1000});
        c.max_attempts = j.value("max_attempts", 5);
        c.transfer_concurrency = j.value("transfer_concurrency", 4);
        c.auto_stage_to_mss = j.value("auto_stage_to_mss", false);
        c.token = j.value("token", std::string());
        if (j.contains("log_path") && !j["log_path"].is_null()) c.log_path = j["log_path"].get<std::string>();
    } catch (const json::exception& e) {
        throw Error(errc::kInvalidConfig, std::string("daemon config: ") + e.what());
    } catch (const Error& e) {
        throw Error(errc::kInvalidConfig, std::string("daemon config: ") + e.what());
    }
    c.validate();
    return c;
}

json DaemonConfig::to_json() const {
    json j{{"host", host},
           {"port", port},
           {"se", se.str()},
           {"catalog", catalog.str()},
           {"info", info.str()},
           {"vos", vos},
           {"base_backoff_ms", base_backoff_ms},
           {"max_attempts", max_attempts},
           {"transfer_concurrency", transfer_concurrency},
           {"auto_stage_to_mss", auto_stage_to_mss},
           {"token", token}};
    if (log_path) j["log_path"] = log_path->string();
    return j;
}

MirrorDaemon::MirrorDaemon(DaemonConfig config, Transport& transport, Clock& clock, std::shared_ptr<HookRunner> hooks)
    : config_(std::move(config)), transport_(transport), clock_(clock), hooks_(std::move(hooks)) {
    config_.validate();
    for (const auto& vo : config_.vos) vos_[vo];
    if (config_.log_path) {
        log_file_.open(*config_.log_path, std::ios::app);
        if (!log_file_) throw Error(errc::kIoFailure, "cannot open log " + config_.log_path->string());
    }
}

MirrorDaemon::VoState& MirrorDaemon::vo_state(std::string_view vo) {
    auto it = vos_.find(vo);
    if (it == vos_.end()) throw Error(errc::kVoNotServed, config_.host + " does not serve vo '" + std::string(vo) + "'");
    return it->second;
}

const MirrorDaemon::VoState& MirrorDaemon::vo_state(std::string_view vo) const {
    auto it = vos_.find(vo);
    if (it == vos_.end()) throw Error(errc::kVoNotServed, config_.host + " does not serve vo '" + std::string(vo) + "'");
    return it->second;
}

void MirrorDaemon::emit(std::string_view vo, std::string_view lfn, std::string_view event, int attempt,
                        std::string detail) {
    LogEvent e{clock_.now(), std::string(vo), std::string(lfn), std::string(event), attempt, std::move(detail)};
    std::lock_guard lock(log_mutex_);
    if (log_file_.is_open()) {
        log_file_ << to_json(e).dump() << '\n';
        log_file_.flush();
    }
    auto& recent = recent_[e.vo];
    recent.push_back(e);
    if (recent.size() > kRecentEvents) recent.pop_front();
    log_.push_back(std::move(e));
}

TimeMs MirrorDaemon::backoff(int prior_failures) const {
    return config_.base_backoff_ms << std::clamp(prior_failures, 0, 30);
}

std::string MirrorDaemon::local_pfn(std::string_view vo, std::string_view relative_path) const {
    const ResolvedRoot root = InfoClient(transport_, config_.info, config_.token).resolve(config_.se.host, vo);
    return PhysicalFileName{config_.se.host, root.port, join_path(root.root, relative_path)}.str();
}

Subscription MirrorDaemon::subscribe(std::string_view remote_host, std::uint16_t remote_port, std::string_view vo) {
    bool added = false;
    {
        std::lock_guard lock(mutex_);
        added = vo_state(vo).subscribed_to.try_emplace(std::string(remote_host), remote_port).second;
    }
    auto undo = [&] {
        if (!added) return;
        std::lock_guard lock(mutex_);
        vo_state(vo).subscribed_to.erase(std::string(remote_host));
    };
    RpcClient remote(transport_, Address{std::string(remote_host), remote_port}, config_.token);
    try {
        return subscription_from_json(remote.call(
            "accept_subscription", {{"subscriber_host", config_.host}, {"subscriber_port", config_.port}, {"vo", vo}}));
    } catch (const TransportError& e) {
        undo();
        throw Error(errc::kRemoteUnreachable, "cannot reach " + std::string(remote_host) + ":" +
                                                  std::to_string(remote_port) + " to subscribe: " + e.what());
    } catch (...) {
        undo();
        throw;
    }
}

Subscription MirrorDaemon::accept_subscription(std::string_view subscriber_host, std::uint16_t subscriber_port,
                                               std::string_view vo) {
    std::lock_guard lock(mutex_);
    VoState& vs = vo_state(vo);
    if (auto it = vs.subscribers.find(std::string(subscriber_host)); it != vs.subscribers.end()) return it->second;
    Subscription sub{std::string(subscriber_host), subscriber_port, std::string(vo), clock_.now()};
    vs.subscribers.emplace(sub.subscriber_host, sub);

    // A new subscriber gets everything exported so far in one sync event.
    EventMessage sync{std::string(vo), config_.host, config_.port, {}, 0};
    for (const auto& [lfn, e] : vs.local) {
        if (e.state == EntryState::Exported) sync.files.push_back(EventFile{lfn, e.size, e.crc32});
    }
    if (!sync.files.empty()) {
        sync.sequence_no = vs.next_seq++;
        Outgoing out;
        out.id = next_outgoing_id_++;
        out.subscriber = Address{sub.subscriber_host, sub.subscriber_port};
        out.event = std::move(sync);
        out.next_attempt_at = clock_.now();
        vs.outbox.push_back(std::move(out));
    }
    return sub;
}

FileCatalogEntry MirrorDaemon::register_local_file(std::string_view vo, std::string_view relative_path) {
    const std::string lfn = std::string(vo) + "/" + std::string(relative_path);
    {
        std::lock_guard lock(mutex_);
        VoState& vs = vo_state(vo);
        if (!LogicalFileName::is_valid(lfn) || !is_valid_relative_path(relative_path))
            throw Error(errc::kInvalidName, "cannot derive a logical name from '" + std::string(relative_path) + "'");
        if (vs.local.contains(lfn) || vs.imported.contains(lfn))
            throw Error(errc::kAlreadyRegistered, "'" + lfn + "' is already in a file catalogue");
    }
    SeClient se(transport_, config_.se, config_.token);
    const StorageObject stat = se.stat(vo, relative_path);
    if (!stat.tiers.disk)
        throw Error(errc::kNotStaged, "'" + std::string(relative_path) + "' is only on MSS; stage it in before registering");
    const StorageObject verified = se.checksum(vo, relative_path);

    FileCatalogEntry entry{lfn, std::string(relative_path), verified.size, verified.crc32, config_.host, EntryState::Local};
    {
        std::lock_guard lock(mutex_);
        VoState& vs = vo_state(vo);
        if (vs.local.contains(lfn) || vs.imported.contains(lfn))
            throw Error(errc::kAlreadyRegistered, "'" + lfn + "' is already in a file catalogue");
        vs.local.emplace(lfn, entry);
    }
    emit(vo, lfn, "registered", 0, "size=" + std::to_string(entry.size) + " crc32=" + hex32(entry.crc32));
    return entry;
}

EventMessage MirrorDaemon::publish_catalogue(std::string_view vo) {
    std::vector<FileCatalogEntry> pending;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [_, e] : vo_state(vo).local) {
            if (e.state == EntryState::Local) pending.push_back(e);
        }
    }
    if (pending.empty()) throw Error(errc::kNothingToPublish, "no Local entries to publish for vo " + std::string(vo));

    CatalogClient catalog(transport_, config_.catalog, config_.token);
    for (const auto& e : pending) {
        catalog.register_logical(e.lfn, e.size, e.crc32);
        catalog.add_replica(e.lfn, PhysicalFileName::parse(local_pfn(vo, e.relative_path)));
    }

    EventMessage event{std::string(vo), config_.host, config_.port, {}, 0};
    {
        std::lock_guard lock(mutex_);
        VoState& vs = vo_state(vo);
        for (const auto& e : pending) {
            auto it = vs.local.find(e.lfn);
            if (it == vs.local.end() || it->second.state != EntryState::Local) continue;
            it->second.state = EntryState::Exported;
            event.files.push_back(EventFile{e.lfn, e.size, e.crc32});
        }
        if (event.files.empty()) throw Error(errc::kNothingToPublish, "entries were published concurrently");
        event.sequence_no = vs.next_seq++;
        for (const auto& [host, sub] : vs.subscribers) {
            Outgoing out;
            out.id = next_outgoing_id_++;
            out.subscriber = Address{sub.subscriber_host, sub.subscriber_port};
            out.event = event;
            out.next_attempt_at = clock_.now();
            vs.outbox.push_back(std::move(out));
        }
    }
    for (const auto& f : event.files) emit(vo, f.lfn, "published", 0, "seq=" + std::to_string(event.sequence_no));
    deliver_notifications(clock_.now());
    return event;
}

std::vector<FileCatalogEntry> MirrorDaemon::handle_notification(const EventMessage& event) {
    if (event.files.empty()) throw Error(errc::kBadRequest, "event carries no files");
    std::vector<FileCatalogEntry> accepted;
    std::vector<std::string> enqueued;
    {
        std::lock_guard lock(mutex_);
        VoState& vs = vo_state(event.vo);
        if (!vs.subscribed_to.contains(event.origin_host))
            throw Error(errc::kUnknownOrigin,
                        config_.host + " is not subscribed to " + event.origin_host + " for vo " + event.vo);
        std::uint64_t& last = vs.last_seq[event.origin_host];
        if (event.sequence_no <= last) return accepted;
        last = event.sequence_no;
        const TimeMs now = clock_.now();
        for (const auto& f : event.files) {
            if (!LogicalFileName::is_valid(f.lfn)) continue;
            if (vs.imported.contains(f.lfn) || vs.local.contains(f.lfn)) continue;
            if (!vs.filter.accepts(f.lfn)) continue;
            const std::string relative = lfn_tail(f.lfn, event.vo);
            if (!is_valid_relative_path(relative)) continue;
            FileCatalogEntry entry{f.lfn, relative, f.size, f.crc32, event.origin_host, EntryState::Imported};
            vs.imported.emplace(f.lfn, entry);
            Job job;
            job.job.entry = entry;
            job.job.max_attempts = config_.max_attempts;
            job.job.next_attempt_at = now;
            vs.jobs.emplace(f.lfn, std::move(job));
            accepted.push_back(entry);
            enqueued.push_back(f.lfn);
        }
    }
    for (const auto& lfn : enqueued)
        emit(event.vo, lfn, "job_enqueued", 0, "origin=" + event.origin_host + " seq=" + std::to_string(event.sequence_no));
    return accepted;
}

bool MirrorDaemon::deliver_one(TimeMs now) {
    std::string vo;
    std::uint64_t id = 0;
    Outgoing item;
    {
        std::lock_guard lock(mutex_);
        for (auto& [name, vs] : vos_) {
            std::set<Address> blocked;
            for (auto& out : vs.outbox) {
                if (blocked.contains(out.subscriber)) continue;
                if (out.in_flight || out.next_attempt_at > now) {
                    blocked.insert(out.subscriber);
                    continue;
                }
                out.in_flight = true;
                vo = name;
                id = out.id;
                item = out;
                break;
            }
            if (id != 0) break;
        }
    }
    if (id == 0) return false;

    std::string error;
    json accepted;
    try {
        accepted = RpcClient(transport_, item.subscriber, config_.token).call("notify", to_json(item.event));
    } catch (const Error& e) {
        error = e.code() + ": " + e.what();
    }

    std::lock_guard lock(mutex_);
    VoState& vs = vos_.find(vo)->second;
    auto it = std::find_if(vs.outbox.begin(), vs.outbox.end(), [&](const Outgoing& o) { return o.id == id; });
    if (error.empty()) {
        vs.outbox.erase(it);
        emit(vo, "", "notified", item.attempts + 1,
             "subscriber=" + item.subscriber.host + " seq=" + std::to_string(item.event.sequence_no) +
                 " files=" + std::to_string(item.event.files.size()) + " accepted=" + std::to_string(accepted.size()));
        return true;
    }
    it->in_flight = false;
    it->last_error = error;
    ++it->attempts;
    if (it->attempts >= config_.max_attempts) {
        emit(vo, "", "dead_letter", it->attempts,
             "notification to " + it->subscriber.host + " seq=" + std::to_string(it->event.sequence_no) + ": " + error);
        vs.dead_notifications.push_back(*it);
        vs.outbox.erase(it);
    } else {
        it->next_attempt_at = now + backoff(it->attempts - 1);
    }
    return true;
}

void MirrorDaemon::deliver_notifications(TimeMs now) {
    // Each call delivers or defers at least one item, so this terminates.
    while (deliver_one(now)) {
    }
}

MirrorDaemon::AttemptResult MirrorDaemon::run_attempt(const std::string& vo, Job& work, int attempt) {
    const FileCatalogEntry& e = work.job.entry;
    SeClient local_se(transport_, config_.se, config_.token);
    auto drop_local = [&] {
        try {
            local_se.remove(vo, e.relative_path);
        } catch (const Error&) {
        }
    };
    try {
        if (!work.transferred) {
            const ResolvedRoot origin = InfoClient(transport_, config_.info, config_.token).resolve(e.origin_host, vo);
            const Address origin_se{e.origin_host, origin.port};
            std::optional<StorageObject> local;
            try {
                local = local_se.stat(vo, e.relative_path);
            } catch (const Error& err) {
                if (err.code() != errc::kNotFound) throw;
            }
            if (local && local->tiers.disk && local->crc32 == e.crc32 && local->size == e.size) {
                work.transferred = true;  // an earlier attempt landed the file
            } else {
                if (local) local_se.remove(vo, e.relative_path);
                SeClient origin_client(transport_, origin_se, config_.token);
                const StorageObject source = origin_client.stat(vo, e.relative_path);
                if (source.crc32 != e.crc32 || source.size != e.size)
                    return {false, true, "origin copy does not match the announced size/CRC"};
                if (!source.tiers.disk) {
                    origin_client.stage_from_mss(vo, e.relative_path);
                    emit(vo, e.lfn, "staged_in", attempt, "origin=" + e.origin_host);
                }
                emit(vo, e.lfn, "transfer_start", attempt, e.origin_host + " -> " + config_.se.host);
                TransferReceipt receipt;
                try {
                    receipt = third_party_transfer(transport_, config_.token, origin_se, vo, e.relative_path, config_.se,
                                                   vo, e.relative_path);
                } catch (const Error& err) {
                    if (err.code() == errc::kChecksumMismatch) return {false, true, err.code() + ": " + err.what()};
                    throw;
                }
                if (receipt.crc32 != e.crc32) {
                    drop_local();
                    return {false, true, "receipt CRC " + hex32(receipt.crc32) + " != announced " + hex32(e.crc32)};
                }
                const StorageObject landed = local_se.checksum(vo, e.relative_path);
                if (landed.crc32 != e.crc32) {
                    drop_local();
                    return {false, true, "local CRC " + hex32(landed.crc32) + " != announced " + hex32(e.crc32)};
                }
                emit(vo, e.lfn, "transfer_ok", attempt, "bytes=" + std::to_string(receipt.bytes) + " crc32=" + hex32(receipt.crc32));
                work.transferred = true;
            }
        }
        const std::string pfn_text = local_pfn(vo, e.relative_path);
        if (!work.registered) {
            CatalogClient catalog(transport_, config_.catalog, config_.token);
            const auto pfn = PhysicalFileName::parse(pfn_text);
            try {
                catalog.add_replica(e.lfn, pfn);
            } catch (const Error& err) {
                if (err.code() != errc::kUnknownLfn) throw;
                catalog.register_logical(e.lfn, e.size, e.crc32);
                catalog.add_replica(e.lfn, pfn);
            }
            emit(vo, e.lfn, "replica_registered", attempt, pfn_text);
            work.registered = true;
        }
        if (config_.auto_stage_to_mss && !work.staged_out) {
            local_se.stage_to_mss(vo, e.relative_path);
            emit(vo, e.lfn, "staged_out", attempt, "");
            work.staged_out = true;
        }
        std::string hook;
        {
            std::lock_guard lock(mutex_);
            hook = vo_state(vo).hook;
        }
        if (!hook.empty()) {
            const std::string command = expand_hook(hook, e.lfn, PhysicalFileName::parse(pfn_text).path, e.crc32);
            const int rc = hooks_->run(command);
            emit(vo, e.lfn, rc == 0 ? "hook_ok" : "hook_fail", attempt, "exit=" + std::to_string(rc) + " " + command);
        }
        return {true, false, {}};
    } catch (const Error& err) {
        return {false, false, err.code() + ": " + err.what()};
    }
}

JobOutcome MirrorDaemon::finish_attempt(const std::string& vo, const std::string& lfn, TimeMs now, const Job& work,
                                        const AttemptResult& result) {
    JobOutcome outcome{vo, lfn, 0, result.ok, false, result.error};
    bool cleanup = false;
    std::string relative;
    {
        std::lock_guard lock(mutex_);
        VoState& vs = vo_state(vo);
        auto it = vs.jobs.find(lfn);
        Job& job = it->second;
        job.in_flight = false;
        job.transferred = work.transferred;
        job.registered = work.registered;
        job.staged_out = work.staged_out;
        job.job.attempt_times.push_back(now);
        outcome.attempt = job.job.attempts + 1;
        if (result.ok) {
            vs.imported.at(lfn).state = EntryState::Replicated;
            vs.jobs.erase(it);
            return outcome;
        }
        const int prior = job.job.attempts++;
        job.job.last_error = result.error;
        emit(vo, lfn, result.crc_failure ? "crc_fail" : "transfer_fail", job.job.attempts, result.error);
        if (job.job.attempts >= job.job.max_attempts) {
            cleanup = !job.registered;
            relative = job.job.entry.relative_path;
            emit(vo, lfn, "dead_letter", job.job.attempts, "gave up after " + std::to_string(job.job.attempts) + " attempts");
            vs.dead.push_back(job.job);
            vs.jobs.erase(it);
            outcome.dead_lettered = true;
        } else {
            job.job.next_attempt_at = now + backoff(prior);
        }
    }
    if (cleanup) {
        try {
            SeClient(transport_, config_.se, config_.token).remove(vo, relative);
        } catch (const Error&) {
        }
    }
    return outcome;
}

std::vector<JobOutcome> MirrorDaemon::process_jobs(TimeMs now) {
    struct Due {
        std::string vo;
        std::string lfn;
        Job work;
    };
    std::vector<Due> due;
    {
        std::lock_guard lock(mutex_);
        for (auto& [vo, vs] : vos_) {
            for (auto& [lfn, job] : vs.jobs) {
                if (job.in_flight || job.job.next_attempt_at > now) continue;
                job.in_flight = true;
                due.push_back(Due{vo, lfn, job});
            }
        }
    }
    auto run_one = [this, now](Due& d) {
        const AttemptResult result = run_attempt(d.vo, d.work, d.work.job.attempts + 1);
        return finish_attempt(d.vo, d.lfn, now, d.work, result);
    };
    std::vector<JobOutcome> outcomes;
    outcomes.reserve(due.size());
    const std::size_t width = static_cast<std::size_t>(config_.transfer_concurrency);
    for (std::size_t start = 0; start < due.size(); start += width) {
        const std::size_t end = std::min(due.size(), start + width);
        if (end - start == 1) {
            outcomes.push_back(run_one(due[start]));
            continue;
        }
        std::vector<std::future<JobOutcome>> batch;
        for (std::size_t i = start; i < end; ++i) batch.push_back(std::async(std::launch::async, run_one, std::ref(due[i])));
        for (auto& f : batch) outcomes.push_back(f.get());
    }
    return outcomes;
}

void MirrorDaemon::tick(TimeMs now) {
    deliver_notifications(now);
    process_jobs(now);
}

void MirrorDaemon::set_import_filter(std::string_view vo, std::vector<std::string> include_globs,
                                     std::vector<std::string> exclude_globs) {
    for (const auto& g : include_globs) validate_glob(g);
    for (const auto& g : exclude_globs) validate_glob(g);
    std::lock_guard lock(mutex_);
    vo_state(vo).filter = ImportFilter{std::move(include_globs), std::move(exclude_globs)};
}

void MirrorDaemon::set_post_replication_hook(std::string_view vo, std::string command_template) {
    std::lock_guard lock(mutex_);
    vo_state(vo).hook = std::move(command_template);
}

json MirrorDaemon::status(std::string_view vo) const {
    json out;
    {
        std::lock_guard lock(mutex_);
        const VoState& vs = vo_state(vo);
        json subscribers = json::array();
        for (const auto& [_, s] : vs.subscribers) subscribers.push_back(to_json(s));
        json subscribed_to = json::array();
        for (const auto& [host, port] : vs.subscribed_to) subscribed_to.push_back(Address{host, port}.str());
        std::map<std::string, int> counts{{"Local", 0}, {"Exported", 0}, {"Imported", 0}, {"Replicated", 0}};
        for (const auto& [_, e] : vs.local) ++counts[std::string(to_string(e.state))];
        for (const auto& [_, e] : vs.imported) ++counts[std::string(to_string(e.state))];
        json pending = json::array();
        for (const auto& [_, j] : vs.jobs) pending.push_back(to_json(j.job));
        json dead = json::array();
        for (const auto& j : vs.dead) dead.push_back(to_json(j));
        out = json{{"vo", vo},
                   {"subscribers", std::move(subscribers)},
                   {"subscribed_to", std::move(subscribed_to)},
                   {"counts", counts},
                   {"pending_jobs", std::move(pending)},
                   {"dead_letter", std::move(dead)},
                   {"pending_notifications", vs.outbox.size()},
                   {"dead_notifications", vs.dead_notifications.size()}};
    }
    json log = json::array();
    {
        std::lock_guard lock(log_mutex_);
        if (auto it = recent_.find(vo); it != recent_.end()) {
            for (const auto& e : it->second) log.push_back(to_json(e));
        }
    }
    out["log"] = std::move(log);
    return out;
}

bool MirrorDaemon::idle(std::string_view vo) const {
    std::lock_guard lock(mutex_);
    const VoState& vs = vo_state(vo);
    return vs.jobs.empty() && vs.outbox.empty();
}

bool MirrorDaemon::idle() const {
    std::lock_guard lock(mutex_);
    return std::all_of(vos_.begin(), vos_.end(),
                       [](const auto& kv) { return kv.second.jobs.empty() && kv.second.outbox.empty(); });
}

std::optional<TimeMs> MirrorDaemon::next_due() const {
    std::optional<TimeMs> best;
    auto consider = [&](TimeMs t) { best = best ? std::min(*best, t) : t; };
    std::lock_guard lock(mutex_);
    for (const auto& [_, vs] : vos_) {
        for (const auto& [__, j] : vs.jobs) {
            if (!j.in_flight) consider(j.job.next_attempt_at);
        }
        std::set<Address> seen;  // only the head item per subscriber can go next
        for (const auto& o : vs.outbox) {
            if (seen.insert(o.subscriber).second && !o.in_flight) consider(o.next_attempt_at);
        }
    }
    return best;
}

bool MirrorDaemon::drain(std::string_view vo, TimeMs timeout_ms) {
    (void)vo_state(vo);
    const TimeMs deadline = clock_.now() + timeout_ms;
    const bool virtual_time = dynamic_cast<ManualClock*>(&clock_) != nullptr;
    while (true) {
        tick(clock_.now());
        if (idle(vo)) return true;
        const TimeMs now = clock_.now();
        if (now >= deadline) return false;
        TimeMs target = deadline;
        if (auto due = next_due()) target = std::min(target, std::max(*due, now + 1));
        if (!virtual_time) target = std::min(target, now + 50);
        clock_.sleep_until(target);
    }
}

std::vector<FileCatalogEntry> MirrorDaemon::entries(std::string_view vo) const {
    std::lock_guard lock(mutex_);
    const VoState& vs = vo_state(vo);
    std::vector<FileCatalogEntry> out;
    for (const auto& [_, e] : vs.local) out.push_back(e);
    for (const auto& [_, e] : vs.imported) out.push_back(e);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.lfn < b.lfn; });
    return out;
}

std::vector<TransferJob> MirrorDaemon::pending_jobs(std::string_view vo) const {
    std::lock_guard lock(mutex_);
    std::vector<TransferJob> out;
    for (const auto& [_, j] : vo_state(vo).jobs) out.push_back(j.job);
    return out;
}

std::vector<TransferJob> MirrorDaemon::dead_letters(std::string_view vo) const {
    std::lock_guard lock(mutex_);
    return vo_state(vo).dead;
}

std::vector<Subscription> MirrorDaemon::subscribers(std::string_view vo) const {
    std::lock_guard lock(mutex_);
    std::vector<Subscription> out;
    for (const auto& [_, s] : vo_state(vo).subscribers) out.push_back(s);
    return out;
}

std::vector<LogEvent> MirrorDaemon::log() const {
    std::lock_guard lock(log_mutex_);
    return log_;
}

MirrorService::MirrorService(MirrorDaemon& daemon, std::string token) : daemon_(daemon), dispatcher_(std::move(token)) {
    dispatcher_.on("subscribe", [this](const json& a) {
        const auto port = arg_u64(a, "remote_port");
        if (port == 0 || port > 65535) throw Error(errc::kBadRequest, "remote_port must be 1-65535");
        return to_json(daemon_.subscribe(arg_string(a, "remote_host"), static_cast<std::uint16_t>(port), arg_string(a, "vo")));
    });
    dispatcher_.on("accept_subscription", [this](const json& a) {
        return to_json(daemon_.accept_subscription(arg_string(a, "subscriber_host"),
                                                   static_cast<std::uint16_t>(arg_u64(a, "subscriber_port")),
                                                   arg_string(a, "vo")));
    });
    dispatcher_.on("notify", [this](const json& a) {
        json out = json::array();
        for (const auto& e : daemon_.handle_notification(event_from_json(a))) out.push_back(to_json(e));
        return out;
    });
    dispatcher_.on("register_local_file", [this](const json& a) {
        return to_json(daemon_.register_local_file(arg_string(a, "vo"), arg_string(a, "path")));
    });
    dispatcher_.on("publish_catalogue", [this](const json& a) { return to_json(daemon_.publish_catalogue(arg_string(a, "vo"))); });
    dispatcher_.on("set_import_filter", [this](const json& a) {
        daemon_.set_import_filter(arg_string(a, "vo"), arg_strings(a, "include"), arg_strings(a, "exclude"));
        return json{{"ok", true}};
    });
    dispatcher_.on("set_hook", [this](const json& a) {
        daemon_.set_post_replication_hook(arg_string(a, "vo"), arg_string(a, "command"));
        return json{{"ok", true}};
    });
    dispatcher_.on("status", [this](const json& a) { return daemon_.status(arg_string(a, "vo")); });
    dispatcher_.on("drain", [this](const json& a) {
        return json{{"drained", daemon_.drain(arg_string(a, "vo"), arg_i64_or(a, "timeout_ms", 60000))}};
    });
}

}  // namespace gm
