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

#include "gridmirror/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <thread>

#include "CLI11.hpp"
#include "gridmirror/base64.hpp"
#include "gridmirror/catalog.hpp"
#include "gridmirror/crc32.hpp"
#include "gridmirror/info_service.hpp"
#include "gridmirror/mirror_daemon.hpp"
#include "gridmirror/replica_manager.hpp"
#include "gridmirror/sim.hpp"
#include "gridmirror/storage_element.hpp"
#include "gridmirror/tcp.hpp"

namespace gm::cli {
namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

/// Bad invocation: exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Settings {
    std::string config_path;
    std::string token;
    std::string vo;
    std::string catalog;
    std::string info;
    std::string se;
    std::string daemon;
    int timeout_ms = 30000;
    bool json_output = false;
};

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::kIoFailure, "cannot read " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::kInvalidConfig, "cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(errc::kInvalidConfig, path + ": " + e.what());
    }
}

/// Flags win over GRIDMIRROR_TOKEN, which wins over the config file.
void resolve_settings(Settings& s, const Settings& flags) {
    json file = json::object();
    if (!flags.config_path.empty()) {
        file = read_json_file(flags.config_path);
    } else if (const char* home = std::getenv("HOME")) {
        const std::string path = std::string(home) + "/.gridmirror.json";
        if (std::ifstream(path)) file = read_json_file(path);
    }
    auto pick = [&](const std::string& flag, const char* key) {
        if (!flag.empty()) return flag;
        return file.contains(key) && file[key].is_string() ? file[key].get<std::string>() : std::string();
    };
    s.catalog = pick(flags.catalog, "catalog");
    s.info = pick(flags.info, "info");
    s.se = pick(flags.se, "se");
    s.daemon = pick(flags.daemon, "daemon");
    s.vo = pick(flags.vo, "vo");
    s.token = pick({}, "token");
    if (const char* env = std::getenv("GRIDMIRROR_TOKEN")) s.token = env;
    if (!flags.token.empty()) s.token = flags.token;
    s.timeout_ms = flags.timeout_ms;
    s.json_output = flags.json_output;
}

Address need_address(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string("missing ") + flag + " (flag or config file)");
    try {
        return Address::parse(value);
    } catch (const Error& e) {
        throw UsageError(std::string(flag) + ": " + e.what());
    }
}

const std::string& need_vo(const Settings& s) {
    if (s.vo.empty()) throw UsageError("missing --vo (flag or config file)");
    return s.vo;
}

std::uint32_t parse_crc(const std::string& text) {
    try {
        std::size_t used = 0;
        const bool hex = text.starts_with("0x") || text.starts_with("0X");
        const unsigned long long v = std::stoull(hex ? text.substr(2) : text, &used, hex ? 16 : 10);
        if (used != text.size() - (hex ? 2 : 0) || v > 0xFFFFFFFFull) throw std::out_of_range("crc");
        return static_cast<std::uint32_t>(v);
    } catch (const std::logic_error&) {
        throw UsageError("--crc32 must be a 32-bit decimal or 0x-prefixed hex value");
    }
}

std::map<std::string, std::string> parse_pairs(const std::vector<std::string>& items, const char* flag) {
    std::map<std::string, std::string> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError(std::string(flag) + " expects key=value, got '" + item + "'");
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

void print_text(std::ostream& out, const json& result) {
    if (result.is_string()) {
        out << result.get<std::string>() << '\n';
    } else if (result.is_array() && std::all_of(result.begin(), result.end(), [](const json& j) { return j.is_string(); })) {
        for (const auto& line : result) out << line.get<std::string>() << '\n';
    } else {
        out << result.dump(2) << '\n';
    }
}

/// Blocks until SIGINT/SIGTERM, calling `tick` every `period_ms`.
void serve_until_signal(std::ostream& out, const std::string& banner, TimeMs period_ms,
                        const std::function<void()>& tick) {
    g_stop = false;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    out << banner << std::endl;
    auto next = std::chrono::steady_clock::now();
    while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        if (std::chrono::steady_clock::now() >= next) {
            tick();
            next = std::chrono::steady_clock::now() + std::chrono::milliseconds(period_ms);
        }
    }
}

/// A subcommand body: returns the wire result to print.
using Action = std::function<json()>;

struct Family {
    CLI::App app;
    Settings flags;
    Settings settings;
    Action action;
    // Raw-bytes output of `gm-se get` without --json.
    std::optional<std::vector<std::uint8_t>> raw;
    std::string raw_out;

    explicit Family(const std::string& name) : app("gridmirror " + name, "gm-" + name) {
        app.require_subcommand(1);
        app.fallthrough();  // global options may follow the subcommand
        app.add_option("--config", flags.config_path, "Client config file (default ~/.gridmirror.json)");
        app.add_option("--token", flags.token, "Shared secret");
        app.add_option("--vo", flags.vo, "Virtual organisation");
        app.add_option("--catalog", flags.catalog, "Catalogue address host:port");
        app.add_option("--info", flags.info, "Info-service address host:port");
        app.add_option("--timeout-ms", flags.timeout_ms, "Network timeout")->check(CLI::PositiveNumber);
        app.add_flag("--json", flags.json_output, "Machine-readable output");
    }

    CLI::App* command(const std::string& name, const std::string& help, Action body) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->callback([this, body = std::move(body)] { action = body; });
        return sub;
    }
};

void catalog_family(Family& f, TcpTransport& net) {
    auto client = [&f, &net] { return CatalogClient(net, need_address(f.settings.catalog, "--catalog"), f.settings.token); };
    auto rpc = [&f, &net](std::string_view op, json args) {
        return RpcClient(net, need_address(f.settings.catalog, "--catalog"), f.settings.token).call(op, std::move(args));
    };

    auto lfn = std::make_shared<std::string>();
    auto pfn = std::make_shared<std::string>();
    auto size = std::make_shared<std::optional<std::uint64_t>>();
    auto crc = std::make_shared<std::string>();
    auto attrs = std::make_shared<std::vector<std::string>>();
    auto* reg = f.command("register", "Register a logical file", [=] {
        json args{{"lfn", *lfn}};
        if (*size) args["size"] = **size;
        if (!crc->empty()) args["crc32"] = parse_crc(*crc);
        if (!attrs->empty()) args["extra"] = parse_pairs(*attrs, "--attr");
        return rpc("register_logical", args);
    });
    reg->add_option("lfn", *lfn)->required();
    reg->add_option("--size", *size);
    reg->add_option("--crc32", *crc);
    reg->add_option("--attr", *attrs, "key=value (repeatable)");

    auto* get = f.command("get", "Show a logical file record", [=] { return rpc("get_logical", {{"lfn", *lfn}}); });
    get->add_option("lfn", *lfn)->required();

    auto* add = f.command("add-replica", "Register a replica PFN", [=] {
        return rpc("add_replica", {{"lfn", *lfn}, {"pfn", *pfn}});
    });
    add->add_option("lfn", *lfn)->required();
    add->add_option("pfn", *pfn)->required();

    auto* rem = f.command("remove-replica", "Unregister a replica PFN", [=] {
        return rpc("remove_replica", {{"lfn", *lfn}, {"pfn", *pfn}});
    });
    rem->add_option("lfn", *lfn)->required();
    rem->add_option("pfn", *pfn)->required();

    auto* look = f.command("lookup", "List the PFNs of a logical file", [=] { return rpc("lookup", {{"lfn", *lfn}}); });
    look->add_option("lfn", *lfn)->required();

    auto pattern = std::make_shared<std::string>("*");
    auto limit = std::make_shared<std::uint64_t>(1000);
    auto* list = f.command("list", "List logical names matching a glob", [=] {
        return rpc("list_lfns", {{"pattern", *pattern}, {"limit", *limit}});
    });
    list->add_option("pattern", *pattern);
    list->add_option("--limit", *limit);

    auto key = std::make_shared<std::string>();
    auto value = std::make_shared<std::string>();
    auto* set = f.command("set-attr", "Set a logical-file attribute", [=] {
        return rpc("set_attribute", {{"lfn", *lfn}, {"key", *key}, {"value", *value}});
    });
    set->add_option("lfn", *lfn)->required();
    set->add_option("key", *key)->required();
    set->add_option("value", *value)->required();

    auto path = std::make_shared<std::string>();
    auto* save = f.command("snapshot", "Ask the server to write a snapshot", [=] {
        client().snapshot_save(*path);
        return json{{"saved", true}};
    });
    save->add_option("path", *path);

    auto listen = std::make_shared<std::string>("0.0.0.0:9400");
    auto naming = std::make_shared<std::string>("free");
    auto snapshot = std::make_shared<std::string>();
    auto interval = std::make_shared<TimeMs>(60000);
    auto* serve = f.command("serve", "Run the catalogue server", [=, &f] {
        SystemClock clock;
        Catalog catalog(parse_naming_mode(*naming), clock);
        std::optional<std::filesystem::path> snap;
        if (!snapshot->empty()) {
            snap = *snapshot;
            if (std::filesystem::exists(*snap)) catalog.snapshot_load(*snap);
        }
        CatalogService service(catalog, f.settings.token, snap);
        TcpServer server(service, Address::parse_listen(*listen));
        server.start();
        serve_until_signal(std::cout, "catalog listening on " + server.address().str(), *interval, [&] {
            if (snap) catalog.snapshot_save(*snap);
        });
        server.stop();
        if (snap) catalog.snapshot_save(*snap);
        return json{{"stopped", true}, {"entries", catalog.size()}};
    });
    serve->add_option("--listen", *listen, "host:port to bind");
    serve->add_option("--naming", *naming, "free or strict");
    serve->add_option("--snapshot", *snapshot, "Snapshot file loaded at start and saved periodically");
    serve->add_option("--snapshot-interval-ms", *interval)->check(CLI::PositiveNumber);
}

void se_family(Family& f, TcpTransport& net) {
    f.app.add_option("--se", f.flags.se, "Storage element address host:port");
    auto client = [&f, &net] { return SeClient(net, need_address(f.settings.se, "--se"), f.settings.token); };

    auto path = std::make_shared<std::string>();
    auto local = std::make_shared<std::string>();
    auto* put = f.command("put", "Store a local file", [=, &f] {
        return to_json(client().put(need_vo(f.settings), *path, read_file(*local)));
    });
    put->add_option("local-file", *local)->required();
    put->add_option("path", *path)->required();

    auto out = std::make_shared<std::string>();
    auto* get = f.command("get", "Fetch a file", [=, &f] {
        const auto bytes = client().get(need_vo(f.settings), *path);
        f.raw = bytes;
        f.raw_out = *out;
        return json{{"content", base64_encode(bytes)}, {"size", bytes.size()}, {"crc32", crc32(bytes)}};
    });
    get->add_option("path", *path)->required();
    get->add_option("-o,--out", *out, "Write the bytes here instead of standard output");

    auto simple = [&](const std::string& name, const std::string& help, auto op) {
        auto* sub = f.command(name, help, [=, &f] { return to_json(op(client(), need_vo(f.settings), *path)); });
        sub->add_option("path", *path)->required();
    };
    simple("stage-in", "Copy a file from MSS to disk",
           [](const SeClient& c, const std::string& vo, const std::string& p) { return c.stage_from_mss(vo, p); });
    simple("stage-out", "Copy a file from disk to MSS",
           [](const SeClient& c, const std::string& vo, const std::string& p) { return c.stage_to_mss(vo, p); });
    simple("evict", "Archive to MSS and drop the disk copy",
           [](const SeClient& c, const std::string& vo, const std::string& p) { return c.evict_to_mss(vo, p); });
    simple("checksum", "Recompute a file's CRC-32",
           [](const SeClient& c, const std::string& vo, const std::string& p) { return c.checksum(vo, p); });
    simple("stat", "Show a file's size, CRC and tiers",
           [](const SeClient& c, const std::string& vo, const std::string& p) { return c.stat(vo, p); });

    auto* del = f.command("delete", "Remove a file from both tiers", [=, &f] {
        client().remove(need_vo(f.settings), *path);
        return json{{"deleted", true}};
    });
    del->add_option("path", *path)->required();

    auto dir = std::make_shared<std::string>();
    auto* ls = f.command("ls", "List files below a directory", [=, &f] {
        json list = json::array();
        for (const auto& o : client().list_dir(need_vo(f.settings), *dir)) list.push_back(to_json(o));
        return list;
    });
    ls->add_option("dir", *dir);

    f.command("stats", "Transfer counters", [=, &f, &net] {
        return RpcClient(net, need_address(f.settings.se, "--se"), f.settings.token).call("stats");
    });

    auto config = std::make_shared<std::string>();
    auto data_dir = std::make_shared<std::string>();
    auto listen = std::make_shared<std::string>();
    auto heartbeat = std::make_shared<TimeMs>(10000);
    auto* serve = f.command("serve", "Run a storage element", [=, &f, &net] {
        SeConfig cfg = SeConfig::from_json(read_json_file(*config));
        if (cfg.token.empty()) cfg.token = f.settings.token;
        std::unique_ptr<BlobStore> disk, mss;
        if (data_dir->empty()) {
            disk = std::make_unique<MemoryBlobStore>();
            mss = std::make_unique<MemoryBlobStore>();
        } else {
            disk = std::make_unique<DirectoryBlobStore>(std::filesystem::path(*data_dir) / "disk");
            mss = std::make_unique<DirectoryBlobStore>(std::filesystem::path(*data_dir) / "mss");
        }
        SystemClock clock;
        StorageElement se(cfg, std::move(disk), std::move(mss), clock, net);
        se.recover();
        SeService service(se);
        TcpServer server(service, listen->empty() ? Address{"0.0.0.0", cfg.port} : Address::parse_listen(*listen));
        server.start();
        std::optional<InfoClient> info;
        if (!f.settings.info.empty()) info.emplace(net, need_address(f.settings.info, "--info"), f.settings.token);
        serve_until_signal(std::cout, "se " + cfg.host + " listening on " + server.address().str(), *heartbeat, [&] {
            if (!info) return;
            try {
                info->advertise(cfg.host, cfg.port, cfg.vo_roots);
            } catch (const Error& e) {
                std::cerr << "heartbeat failed: " << e.code() << ": " << e.what() << std::endl;
            }
        });
        server.stop();
        return json{{"stopped", true}};
    });
    serve->add_option("--se-config", *config, "SE config JSON")->required();
    serve->add_option("--data-dir", *data_dir, "Directory for disk/ and mss/ (default: in memory)");
    serve->add_option("--listen", *listen, "host:port to bind (default 0.0.0.0:<config port>)");
    serve->add_option("--heartbeat-ms", *heartbeat)->check(CLI::PositiveNumber);
}

void mirror_family(Family& f, TcpTransport& net) {
    f.app.add_option("--daemon", f.flags.daemon, "Mirror daemon address host:port");
    auto rpc = [&f, &net](std::string_view op, json args) {
        return RpcClient(net, need_address(f.settings.daemon, "--daemon"), f.settings.token).call(op, std::move(args));
    };

    auto remote = std::make_shared<std::string>();
    auto* sub = f.command("subscribe", "Subscribe to a remote daemon", [=, &f] {
        const Address a = need_address(*remote, "remote");
        return rpc("subscribe", {{"remote_host", a.host}, {"remote_port", a.port}, {"vo", need_vo(f.settings)}});
    });
    sub->add_option("remote", *remote, "Remote daemon host:port")->required();

    auto path = std::make_shared<std::string>();
    auto* reg = f.command("register-local", "Put a local SE file in the local catalogue", [=, &f] {
        return rpc("register_local_file", {{"vo", need_vo(f.settings)}, {"path", *path}});
    });
    reg->add_option("path", *path)->required();

    f.command("publish", "Publish Local entries to subscribers", [=, &f] {
        return rpc("publish_catalogue", {{"vo", need_vo(f.settings)}});
    });

    auto include = std::make_shared<std::vector<std::string>>();
    auto exclude = std::make_shared<std::vector<std::string>>();
    auto* filter = f.command("filter", "Set the import filter", [=, &f] {
        return rpc("set_import_filter", {{"vo", need_vo(f.settings)}, {"include", *include}, {"exclude", *exclude}});
    });
    filter->add_option("--include", *include, "Glob to accept (repeatable)");
    filter->add_option("--exclude", *exclude, "Glob to reject (repeatable)");

    auto command = std::make_shared<std::string>();
    auto* hook = f.command("hook", "Set the post-replication hook", [=, &f] {
        return rpc("set_hook", {{"vo", need_vo(f.settings)}, {"command", *command}});
    });
    hook->add_option("command", *command, "Template with {lfn} {path} {crc32}")->required();

    f.command("status", "Show subscriptions, counts, jobs and recent events",
              [=, &f] { return rpc("status", {{"vo", need_vo(f.settings)}}); });

    auto timeout = std::make_shared<TimeMs>(60000);
    auto* drain = f.command("drain", "Wait until no jobs are pending", [=, &f] {
        return rpc("drain", {{"vo", need_vo(f.settings)}, {"timeout_ms", *timeout}});
    });
    drain->add_option("--wait-ms", *timeout)->check(CLI::PositiveNumber);

    auto config = std::make_shared<std::string>();
    auto listen = std::make_shared<std::string>();
    auto tick = std::make_shared<TimeMs>(200);
    auto* serve = f.command("serve", "Run a mirror daemon", [=, &f, &net] {
        DaemonConfig cfg = DaemonConfig::from_json(read_json_file(*config));
        if (cfg.token.empty()) cfg.token = f.settings.token;
        SystemClock clock;
        MirrorDaemon daemon(cfg, net, clock);
        MirrorService service(daemon, cfg.token);
        TcpServer server(service, listen->empty() ? Address{"0.0.0.0", cfg.port} : Address::parse_listen(*listen));
        server.start();
        serve_until_signal(std::cout, "mirror " + cfg.host + " listening on " + server.address().str(), *tick,
                           [&] { daemon.tick(clock.now()); });
        server.stop();
        return json{{"stopped", true}};
    });
    serve->add_option("--daemon-config", *config, "Daemon config JSON")->required();
    serve->add_option("--listen", *listen, "host:port to bind (default 0.0.0.0:<config port>)");
    serve->add_option("--tick-ms", *tick)->check(CLI::PositiveNumber);
}

void rm_family(Family& f, TcpTransport& net) {
    auto no_rollback = std::make_shared<bool>(false);
    f.app.add_flag("--no-rollback", *no_rollback, "Leave orphan files on registration failure");
    auto manager = [&f, &net, no_rollback] {
        ClientConfig cfg{need_address(f.settings.catalog, "--catalog"), need_address(f.settings.info, "--info"),
                         f.settings.token, !*no_rollback, need_vo(f.settings)};
        return ReplicaManager(cfg, net);
    };

    auto source = std::make_shared<std::string>();
    auto lfn = std::make_shared<std::string>();
    auto dest = std::make_shared<std::string>();
    auto* copy = f.command("copy-and-register", "Copy a file to an SE and register it", [=] {
        ReplicaManager rm = manager();
        if (source->starts_with(std::string(PhysicalFileName::kScheme) + "://"))
            return to_json(rm.copy_and_register(PhysicalFileName::parse(*source), *dest, *lfn));
        return to_json(rm.copy_and_register(read_file(*source), *dest, *lfn));
    });
    copy->add_option("source", *source, "Local file or gmft:// PFN")->required();
    copy->add_option("lfn", *lfn)->required();
    copy->add_option("--dest", *dest, "Destination SE host")->required();

    auto from = std::make_shared<std::string>();
    auto* rep = f.command("replicate", "Third-party copy of a registered file", [=] {
        std::optional<std::string> src;
        if (!from->empty()) src = *from;
        return to_json(manager().replicate_file(*lfn, *dest, src));
    });
    rep->add_option("lfn", *lfn)->required();
    rep->add_option("--dest", *dest, "Destination SE host")->required();
    rep->add_option("--source", *from, "Source SE host (default: smallest other host)");

    auto host = std::make_shared<std::string>();
    auto* del = f.command("delete", "Delete a replica and unregister it", [=] {
        manager().delete_replica(*lfn, *host);
        return json{{"deleted", true}};
    });
    del->add_option("lfn", *lfn)->required();
    del->add_option("--se", *host, "SE host holding the replica")->required();

    auto* list = f.command("list-replicas", "List replicas with tiers and CRC", [=] {
        json out = json::array();
        for (const auto& r : manager().list_replicas(*lfn)) out.push_back(to_json(r));
        return out;
    });
    list->add_option("lfn", *lfn)->required();
}

void info_family(Family& f, TcpTransport& net) {
    auto rpc = [&f, &net](std::string_view op, json args) {
        return RpcClient(net, need_address(f.settings.info, "--info"), f.settings.token).call(op, std::move(args));
    };

    auto se = std::make_shared<std::string>();
    auto roots = std::make_shared<std::vector<std::string>>();
    auto* adv = f.command("advertise", "Advertise an SE and its VO roots", [=] {
        const Address a = need_address(*se, "se");
        return rpc("advertise", {{"host", a.host}, {"port", a.port}, {"vo_roots", parse_pairs(*roots, "--root")}});
    });
    adv->add_option("se", *se, "SE host:port")->required();
    adv->add_option("--root", *roots, "vo=/root (repeatable)")->required();

    auto host = std::make_shared<std::string>();
    auto* res = f.command("resolve", "Resolve the storage root of an SE for a VO", [=, &f] {
        return rpc("resolve", {{"host", *host}, {"vo", need_vo(f.settings)}});
    });
    res->add_option("host", *host)->required();

    f.command("list", "List SEs supporting a VO", [=, &f] { return rpc("list_ses", {{"vo", need_vo(f.settings)}}); });

    auto listen = std::make_shared<std::string>("0.0.0.0:9401");
    auto stale = std::make_shared<TimeMs>(0);
    auto* serve = f.command("serve", "Run the info service", [=, &f] {
        SystemClock clock;
        InfoService info(clock, *stale);
        InfoServiceEndpoint service(info, f.settings.token);
        TcpServer server(service, Address::parse_listen(*listen));
        server.start();
        serve_until_signal(std::cout, "info listening on " + server.address().str(), 1000, [] {});
        server.stop();
        return json{{"stopped", true}};
    });
    serve->add_option("--listen", *listen, "host:port to bind");
    serve->add_option("--stale-after-ms", *stale, "Hide SEs without a recent heartbeat (0 = never)");
}

int parse_cli(CLI::App& app, std::vector<std::string> argv, std::ostream& out, std::ostream& err) {
    std::reverse(argv.begin(), argv.end());
    try {
        app.parse(std::move(argv));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage: " << e.what() << '\n' << "run with --help for usage\n";
        return 2;
    }
    return -1;
}

const std::vector<std::string> kFamilies{"catalog", "se", "mirror", "rm", "info"};

std::string usage() {
    return "usage: gridmirror <catalog|se|mirror|rm|info|sim> <command> [options]\n"
           "       gm-catalog | gm-se | gm-mirror | gm-rm | gm-info <command> [options]\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (args.empty()) {
        err << usage();
        return 2;
    }
    std::string prog = args[0];
    if (auto slash = prog.rfind('/'); slash != std::string::npos) prog = prog.substr(slash + 1);
    std::string family;
    std::vector<std::string> rest;
    if (prog.starts_with("gm-")) {
        family = prog.substr(3);
        rest.assign(args.begin() + 1, args.end());
    } else {
        if (args.size() < 2 || args[1] == "--help" || args[1] == "-h") {
            (args.size() < 2 ? err : out) << usage();
            return args.size() < 2 ? 2 : 0;
        }
        family = args[1];
        rest.assign(args.begin() + 2, args.end());
    }
    if (family == "sim") {
        std::vector<std::string> sim_args{"gridmirror-sim"};
        sim_args.insert(sim_args.end(), rest.begin(), rest.end());
        return run_sim(sim_args, out, err);
    }
    if (std::find(kFamilies.begin(), kFamilies.end(), family) == kFamilies.end()) {
        err << "usage: unknown command family '" << family << "'\n" << usage();
        return 2;
    }

    Family f(family);
    auto net = std::make_unique<TcpTransport>();
    if (family == "catalog") catalog_family(f, *net);
    if (family == "se") se_family(f, *net);
    if (family == "mirror") mirror_family(f, *net);
    if (family == "rm") rm_family(f, *net);
    if (family == "info") info_family(f, *net);

    if (int rc = parse_cli(f.app, rest, out, err); rc >= 0) return rc;
    try {
        resolve_settings(f.settings, f.flags);
        *net = TcpTransport(f.settings.timeout_ms);
        const json result = f.action();
        if (f.settings.json_output) {
            out << result.dump() << '\n';
        } else if (f.raw) {
            if (f.raw_out.empty()) {
                out.write(reinterpret_cast<const char*>(f.raw->data()), static_cast<std::streamsize>(f.raw->size()));
            } else {
                std::ofstream file(f.raw_out, std::ios::binary);
                file.write(reinterpret_cast<const char*>(f.raw->data()), static_cast<std::streamsize>(f.raw->size()));
                if (!file) throw Error(errc::kIoFailure, "cannot write " + f.raw_out);
            }
        } else {
            print_text(out, result);
        }
        return 0;
    } catch (const UsageError& e) {
        err << "usage: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << e.code() << '\n' << e.what() << '\n';
        if (!e.detail().is_null()) err << e.detail().dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << errc::kInternal << '\n' << e.what() << '\n';
        return 1;
    }
}

int run_sim(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app("Deterministic multi-site simulation", "gridmirror-sim");
    app.require_subcommand(1);
    std::string topology_path, scenario_path;
    std::optional<std::uint64_t> seed;
    bool pretty = false;
    auto* run_cmd = app.add_subcommand("run", "Run a scenario and print the trace report");
    run_cmd->add_option("--topology", topology_path, "Topology JSON")->required();
    run_cmd->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    run_cmd->add_option("--seed", seed, "Overrides the topology seed");
    run_cmd->add_flag("--pretty", pretty, "Indent the report");

    std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
    if (int rc = parse_cli(app, rest, out, err); rc >= 0) return rc;
    try {
        sim::Topology topology = sim::Topology::from_json(read_json_file(topology_path));
        if (seed) topology.seed = *seed;
        const sim::Scenario scenario = sim::Scenario::from_json(read_json_file(scenario_path));
        const json report = sim::run(topology, scenario);
        out << (pretty ? report.dump(2) : report.dump()) << '\n';
        if (!report["passed"].get<bool>()) {
            err << errc::kScenarioFailed << '\n' << report["first_failure"].get<std::string>() << '\n';
            return 1;
        }
        return 0;
    } catch (const Error& e) {
        err << e.code() << '\n' << e.what() << '\n';
        return 1;
    }
}

}  // namespace gm::cli
