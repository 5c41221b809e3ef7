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

#include "gridmirror/wire.hpp"

#include <charconv>
#include <cstring>

namespace gm {
namespace {

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t at, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
    return v;
}

Error bad_arg(std::string_view key, const char* what) {
    return Error(errc::kBadRequest, "argument '" + std::string(key) + "' " + what);
}

const json* find_arg(const json& args, std::string_view key) {
    if (!args.is_object()) return nullptr;
    auto it = args.find(std::string(key));
    if (it == args.end() || it->is_null()) return nullptr;
    return &*it;
}

}  // namespace

Address Address::parse(std::string_view text) {
    Address a = parse_listen(text);
    if (a.port == 0) throw Error(errc::kBadRequest, "port must be 1-65535 in '" + std::string(text) + "'");
    return a;
}

Address Address::parse_listen(std::string_view text) {
    const std::size_t colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0)
        throw Error(errc::kBadRequest, "expected host:port, got '" + std::string(text) + "'");
    const std::string_view port_text = text.substr(colon + 1);
    unsigned port = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port > 65535)
        throw Error(errc::kBadRequest, "bad port in '" + std::string(text) + "'");
    return Address{std::string(text.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

json make_request(std::uint64_t id, std::string_view token, std::string_view op, json args) {
    return json{{"id", id}, {"token", token}, {"op", op}, {"args", std::move(args)}};
}

json make_ok(std::uint64_t id, json result) {
    return json{{"id", id}, {"ok", true}, {"result", std::move(result)}};
}

json make_error(std::uint64_t id, const Error& error) {
    json err{{"code", error.code()}, {"message", error.what()}};
    if (!error.detail().is_null()) err["detail"] = error.detail();
    return json{{"id", id}, {"ok", false}, {"error", std::move(err)}};
}

json unwrap_response(const json& response) {
    if (!response.is_object() || !response.contains("ok"))
        throw Error(errc::kBadRequest, "malformed response envelope");
    if (response.at("ok").get<bool>()) return response.value("result", json());
    const json& err = response.at("error");
    throw Error(err.value("code", std::string(errc::kInternal)), err.value("message", std::string()),
                err.value("detail", json()));
}

std::vector<std::uint8_t> encode_frame(std::string_view path, std::uint32_t crc32,
                                       std::span<const std::uint8_t> payload) {
    if (path.size() > 0xFFFF) throw Error(errc::kBadRequest, "frame path longer than 65535 bytes");
    std::vector<std::uint8_t> out(kFrameFixedHeader + path.size() + 12 + payload.size());
    std::memcpy(out.data(), "GMFT", 4);
    out[4] = kFrameVersion;
    std::size_t at = 5;
    auto le = [&](std::uint64_t v, int bytes) {
        for (int i = 0; i < bytes; ++i) out[at++] = static_cast<std::uint8_t>(v >> (8 * i));
    };
    le(path.size(), 2);
    if (!path.empty()) std::memcpy(out.data() + at, path.data(), path.size());
    at += path.size();
    le(payload.size(), 8);
    le(crc32, 4);
    if (!payload.empty()) std::memcpy(out.data() + at, payload.data(), payload.size());
    return out;
}

std::optional<FrameView> decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kFrameFixedHeader) return std::nullopt;
    if (std::memcmp(bytes.data(), "GMFT", 4) != 0 || bytes[4] != kFrameVersion) return std::nullopt;
    const std::size_t path_len = get_le(bytes, 5, 2);
    const std::size_t after_path = kFrameFixedHeader + path_len;
    if (bytes.size() < after_path + 12) return std::nullopt;
    const std::uint64_t payload_len = get_le(bytes, after_path, 8);
    if (bytes.size() - (after_path + 12) != payload_len) return std::nullopt;
    FrameView view;
    view.path.assign(reinterpret_cast<const char*>(bytes.data() + kFrameFixedHeader), path_len);
    view.crc32 = static_cast<std::uint32_t>(get_le(bytes, after_path + 8, 4));
    view.payload = bytes.subspan(after_path + 12);
    return view;
}

std::size_t frame_payload_offset(std::span<const std::uint8_t> bytes) {
    return kFrameFixedHeader + get_le(bytes, 5, 2) + 12;
}

json Dispatcher::dispatch(const json& request) const {
    std::uint64_t id = 0;
    try {
        if (!request.is_object()) throw Error(errc::kBadRequest, "request must be a JSON object");
        if (auto it = request.find("id"); it != request.end() && it->is_number_unsigned()) id = it->get<std::uint64_t>();
        auto op_it = request.find("op");
        if (op_it == request.end() || !op_it->is_string()) throw Error(errc::kBadRequest, "missing op");
        if (!token_.empty()) {
            auto tok = request.find("token");
            if (tok == request.end() || !tok->is_string() || tok->get<std::string>() != token_)
                throw Error(errc::kUnauthorized, "token rejected");
        }
        const std::string op = op_it->get<std::string>();
        auto handler = handlers_.find(op);
        if (handler == handlers_.end()) throw Error(errc::kBadRequest, "unknown op '" + op + "'");
        json args = request.value("args", json::object());
        if (args.is_null()) args = json::object();
        if (!args.is_object()) throw Error(errc::kBadRequest, "args must be an object");
        return make_ok(id, handler->second(args));
    } catch (const Error& e) {
        return make_error(id, e);
    } catch (const json::exception& e) {
        return make_error(id, Error(errc::kBadRequest, e.what()));
    } catch (const std::exception& e) {
        return make_error(id, Error(errc::kInternal, e.what()));
    }
}

json RpcClient::call(std::string_view op, json args) const {
    const std::uint64_t id = next_id_.fetch_add(1);
    return unwrap_response(transport_->call(address_, make_request(id, token_, op, std::move(args))));
}

std::string arg_string(const json& args, std::string_view key) {
    const json* v = find_arg(args, key);
    if (!v) throw bad_arg(key, "is required");
    if (!v->is_string()) throw bad_arg(key, "must be a string");
    return v->get<std::string>();
}

std::optional<std::string> arg_opt_string(const json& args, std::string_view key) {
    if (!find_arg(args, key)) return std::nullopt;
    return arg_string(args, key);
}

std::uint64_t arg_u64(const json& args, std::string_view key) {
    const json* v = find_arg(args, key);
    if (!v) throw bad_arg(key, "is required");
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
        throw bad_arg(key, "must be a non-negative integer");
    return v->get<std::uint64_t>();
}

std::optional<std::uint64_t> arg_opt_u64(const json& args, std::string_view key) {
    if (!find_arg(args, key)) return std::nullopt;
    return arg_u64(args, key);
}

std::int64_t arg_i64_or(const json& args, std::string_view key, std::int64_t fallback) {
    const json* v = find_arg(args, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw bad_arg(key, "must be an integer");
    return v->get<std::int64_t>();
}

bool arg_bool_or(const json& args, std::string_view key, bool fallback) {
    const json* v = find_arg(args, key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw bad_arg(key, "must be a boolean");
    return v->get<bool>();
}

std::vector<std::string> arg_strings(const json& args, std::string_view key) {
    const json* v = find_arg(args, key);
    if (!v) return {};
    if (!v->is_array()) throw bad_arg(key, "must be an array of strings");
    std::vector<std::string> out;
    for (const auto& item : *v) {
        if (!item.is_string()) throw bad_arg(key, "must be an array of strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

}  // namespace gm
