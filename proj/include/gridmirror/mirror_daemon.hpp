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
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gridmirror/clock.hpp"
#include "gridmirror/wire.hpp"

namespace gm {

struct DaemonConfig {
    std::string host;
    std::uint16_t port = 0;
    Address se;
    Address catalog;
    Address info;
    std::vector<std::string> vos;
    TimeMs base_backoff_ms = 1000;
    int max_attempts = 5;
    int transfer_concurrency = 4;
    bool auto_stage_to_mss = false;
    std::string token;
    std::optional<std::filesystem::path> log_path;

    void validate() const;
    static DaemonConfig from_json(const json& j);
    json to_json() const;
};

struct Subscription {
    std::string subscriber_host;
    std::uint16_t subscriber_port = 0;
    std::string vo;
    TimeMs created_at = 0;
};

enum class EntryState { Local, Exported, Imported, Replicated };
std::string_view to_string(EntryState state) noexcept;

struct FileCatalogEntry {
    std::string lfn;
    std::string relative_path;
    std::uint64_t size = 0;
    std::uint32_t crc32 = 0;
    std::string origin_host;
    EntryState state = EntryState::Local;
};

json to_json(const FileCatalogEntry& entry);

struct TransferJob {
    FileCatalogEntry entry;
    int attempts = 0;
    int max_attempts = 0;
    TimeMs next_attempt_at = 0;
    std::optional<std::string> last_error;
    std::vector<TimeMs> attempt_times;
};

json to_json(const TransferJob& job);

struct ImportFilter {
    std::vector<std::string> include_globs;
    std::vector<std::string> exclude_globs;

    bool accepts(std::string_view lfn) const;
};

struct EventFile {
    std::string lfn;
    std::uint64_t size = 0;
    std::uint32_t crc32 = 0;
};

struct EventMessage {
    std::string vo;
    std::string origin_host;
    std::uint16_t origin_port = 0;
    std::vector<EventFile> files;
    std::uint64_t sequence_no = 0;
};

json to_json(const EventMessage& event);
EventMessage event_from_json(const json& j);

struct JobOutcome {
    std::string vo;
    std::string lfn;
    int attempt = 0;
    bool succeeded = false;
    bool dead_lettered = false;
    std::string error;
};

struct LogEvent {
    TimeMs ts = 0;
    std::string vo;
    std::string lfn;
    std::string event;
    int attempt = 0;
    std::string detail;
};

json to_json(const LogEvent& event);

/// Runs post-replication hook commands; returns the exit status.
class HookRunner {
public:
    virtual ~HookRunner() = default;
    virtual int run(const std::string& command) = 0;
};

class ShellHookRunner final : public HookRunner {
public:
    int run(const std::string& command) override;
};

/// Expands {lfn}, {path} and {crc32} (8 lowercase hex digits).
std::string expand_hook(std::string_view templ, std::string_view lfn, std::string_view path, std::uint32_t crc32);

/// Per-site subscription mirroring daemon.
///
/// Exporter side: register_local_file puts a file in the local catalogue,
/// publish_catalogue registers it Grid-wide and queues one event per
/// subscriber. Importer side: handle_notification filters the event into the
/// import catalogue and enqueues one TransferJob per accepted file, and
/// process_jobs pulls each file from its origin SE with retries and
/// exponential backoff. Everything is keyed by VO and never crosses VOs.
class MirrorDaemon {
public:
    MirrorDaemon(DaemonConfig config, Transport& transport, Clock& clock,
                 std::shared_ptr<HookRunner> hooks = std::make_shared<ShellHookRunner>());

    /// Registers this daemon on the remote (exporting) daemon.
    Subscription subscribe(std::string_view remote_host, std::uint16_t remote_port, std::string_view vo);
    /// Remote side of subscribe.
    Subscription accept_subscription(std::string_view subscriber_host, std::uint16_t subscriber_port,
                                     std::string_view vo);

    FileCatalogEntry register_local_file(std::string_view vo, std::string_view relative_path);
    EventMessage publish_catalogue(std::string_view vo);
    std::vector<FileCatalogEntry> handle_notification(const EventMessage& event);

    std::vector<JobOutcome> process_jobs(TimeMs now);
    /// Pushes queued notifications that are due.
    void deliver_notifications(TimeMs now);
    void tick(TimeMs now);

    void set_import_filter(std::string_view vo, std::vector<std::string> include_globs,
                           std::vector<std::string> exclude_globs);
    void set_post_replication_hook(std::string_view vo, std::string command_template);

    json status(std::string_view vo) const;
    /// Drives this daemon's queues on its clock until `vo` is idle or the
    /// timeout elapses. Returns whether it drained.
    bool drain(std::string_view vo, TimeMs timeout_ms);

    bool idle() const;
    bool idle(std::string_view vo) const;
    std::optional<TimeMs> next_due() const;

    // Introspection.
    std::vector<FileCatalogEntry> entries(std::string_view vo) const;
    std::vector<TransferJob> pending_jobs(std::string_view vo) const;
    std::vector<TransferJob> dead_letters(std::string_view vo) const;
    std::vector<Subscription> subscribers(std::string_view vo) const;
    std::vector<LogEvent> log() const;
    const DaemonConfig& config() const noexcept { return config_; }

private:
    struct Outgoing {
        std::uint64_t id = 0;
        bool in_flight = false;
        std::string last_error;
        Address subscriber;
        EventMessage event;
        int attempts = 0;
        TimeMs next_attempt_at = 0;
    };
    struct Job {
        TransferJob job;
        bool in_flight = false;
        bool transferred = false;
        bool registered = false;
        bool staged_out = false;
    };
    struct VoState {
        std::map<std::string, FileCatalogEntry> local;     // Local / Exported
        std::map<std::string, FileCatalogEntry> imported;  // Imported / Replicated
        std::map<std::string, Subscription> subscribers;   // keyed by host
        std::map<std::string, std::uint16_t> subscribed_to;
        std::map<std::string, std::uint64_t> last_seq;     // per origin host
        std::uint64_t next_seq = 1;
        ImportFilter filter;
        std::string hook;
        std::map<std::string, Job> jobs;
        std::vector<TransferJob> dead;
        std::deque<Outgoing> outbox;
        std::vector<Outgoing> dead_notifications;
    };
    struct AttemptResult {
        bool ok = false;
        bool crc_failure = false;
        std::string error;
    };

    VoState& vo_state(std::string_view vo);
    const VoState& vo_state(std::string_view vo) const;
    void emit(std::string_view vo, std::string_view lfn, std::string_view event, int attempt,
              std::string detail);
    std::string local_pfn(std::string_view vo, std::string_view relative_path) const;
    AttemptResult run_attempt(const std::string& vo, Job& work, int attempt);
    JobOutcome finish_attempt(const std::string& vo, const std::string& lfn, TimeMs now, const Job& work,
                              const AttemptResult& result);
    bool deliver_one(TimeMs now);
    TimeMs backoff(int prior_failures) const;

    DaemonConfig config_;
    Transport& transport_;
    Clock& clock_;
    std::shared_ptr<HookRunner> hooks_;

    mutable std::mutex mutex_;
    std::map<std::string, VoState, std::less<>> vos_;
    std::uint64_t next_outgoing_id_ = 1;

    mutable std::mutex log_mutex_;
    std::vector<LogEvent> log_;
    std::map<std::string, std::deque<LogEvent>, std::less<>> recent_;
    std::ofstream log_file_;
};

/// Ops: subscribe, accept_subscription, notify, register_local_file,
/// publish_catalogue, set_import_filter, set_hook, status, drain.
class MirrorService final : public Service {
public:
    MirrorService(MirrorDaemon& daemon, std::string token);
    json handle(const json& request) override { return dispatcher_.dispatch(request); }

private:
    MirrorDaemon& daemon_;
    Dispatcher dispatcher_;
};

class MirrorClient {
public:
    MirrorClient(Transport& transport, Address address, std::string token)
        : rpc_(transport, std::move(address), std::move(token)) {}

    json call(std::string_view op, json args) const { return rpc_.call(op, std::move(args)); }

private:
    RpcClient rpc_;
};

}  // namespace gm
