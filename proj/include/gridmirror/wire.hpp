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

#include <atomic>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridmirror/error.hpp"
#include "json.hpp"

namespace gm {

using json = nlohmann::json;

struct Address {
    std::string host;
    std::uint16_t port = 0;

    /// "host:port". Throws Error(BadRequest).
    static Address parse(std::string_view text);
    /// Same, but port 0 (pick any free port) is allowed.
    static Address parse_listen(std::string_view text);
    std::string str() const { return host + ":" + std::to_string(port); }

    auto operator<=>(const Address&) const = default;
};

// Newline-delimited JSON envelope.
//   request:  {"id": u64, "token": str, "op": str, "args": {...}}
//   response: {"id": u64, "ok": true, "result": ...}
//             {"id": u64, "ok": false, "error": {"code": str, "message": str[, "detail": ...]}}
json make_request(std::uint64_t id, std::string_view token, std::string_view op, json args);
json make_ok(std::uint64_t id, json result);
json make_error(std::uint64_t id, const Error& error);

/// Result of a response, or throws the carried Error.
json unwrap_response(const json& response);

// Binary data-plane frame:
//   "GMFT" | version u8 | path_len u16 | path | payload_len u64 | crc32 u32 | payload
// All integers little-endian. The receiver answers with one status byte.
inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kFrameFixedHeader = 4 + 1 + 2;

enum FrameStatus : std::uint8_t {
    kFrameOk = 0,
    kFrameChecksumMismatch = 1,
    kFrameDiskFull = 2,
    kFrameRejected = 3,
};

struct FrameView {
    std::string path;
    std::uint32_t crc32 = 0;
    std::span<const std::uint8_t> payload;
};

std::vector<std::uint8_t> encode_frame(std::string_view path, std::uint32_t crc32,
                                       std::span<const std::uint8_t> payload);

/// Returns nullopt for anything that is not a complete, well-formed frame.
std::optional<FrameView> decode_frame(std::span<const std::uint8_t> bytes);

/// Offset of the first payload byte inside an encoded frame.
std::size_t frame_payload_offset(std::span<const std::uint8_t> bytes);

/// A request handler. Implementations must be safe to call concurrently.
class Service {
public:
    virtual ~Service() = default;
    virtual json handle(const json& request) = 0;
    virtual std::uint8_t handle_frame(std::span<const std::uint8_t> /*frame*/) { return kFrameRejected; }
};

/// Message transport. Both calls throw TransportError when the peer cannot
/// be reached or the exchange is lost.
class Transport {
public:
    virtual ~Transport() = default;
    virtual json call(const Address& to, const json& request) = 0;
    virtual std::uint8_t send_frame(const Address& to, std::span<const std::uint8_t> frame) = 0;
};

/// Maps op names to handlers and turns exceptions into error responses.
class Dispatcher {
public:
    using Handler = std::function<json(const json& args)>;

    /// Empty token disables the check.
    explicit Dispatcher(std::string token = {}) : token_(std::move(token)) {}

    void on(std::string op, Handler handler) { handlers_[std::move(op)] = std::move(handler); }
    json dispatch(const json& request) const;
    const std::string& token() const noexcept { return token_; }

private:
    std::string token_;
    std::map<std::string, Handler, std::less<>> handlers_;
};

/// One peer at a fixed address.
class RpcClient {
public:
    RpcClient(Transport& transport, Address address, std::string token)
        : transport_(&transport), address_(std::move(address)), token_(std::move(token)) {}

    json call(std::string_view op, json args = json::object()) const;

    const Address& address() const noexcept { return address_; }
    const std::string& token() const noexcept { return token_; }
    Transport& transport() const noexcept { return *transport_; }

private:
    Transport* transport_;
    Address address_;
    std::string token_;
    inline static std::atomic<std::uint64_t> next_id_{1};
};

// Argument helpers; missing or mistyped fields raise Error(BadRequest).
std::string arg_string(const json& args, std::string_view key);
std::optional<std::string> arg_opt_string(const json& args, std::string_view key);
std::uint64_t arg_u64(const json& args, std::string_view key);
std::optional<std::uint64_t> arg_opt_u64(const json& args, std::string_view key);
std::int64_t arg_i64_or(const json& args, std::string_view key, std::int64_t fallback);
bool arg_bool_or(const json& args, std::string_view key, bool fallback);
std::vector<std::string> arg_strings(const json& args, std::string_view key);

}  // namespace gm
