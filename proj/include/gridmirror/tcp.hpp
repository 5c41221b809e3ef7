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
#include <condition_variable>
#include <cstdint>
#include <list>
#include <mutex>
#include <thread>

#include "gridmirror/wire.hpp"

namespace gm {

/// Thread-per-connection TCP front end for a Service. A connection carries
/// any number of newline-JSON requests and data-plane frames; the first byte
/// of each message ('G' vs '{') selects which.
class TcpServer {
public:
    TcpServer(Service& service, Address listen);
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    /// Binds and starts accepting. Port 0 picks an ephemeral port.
    void start();
    void stop();
    std::uint16_t port() const noexcept { return port_; }
    Address address() const { return {listen_.host, port_}; }

private:
    void accept_loop();
    void serve_connection(int fd);

    Service& service_;
    Address listen_;
    std::uint16_t port_ = 0;
    int listen_fd_ = -1;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex mutex_;
    std::condition_variable idle_;
    int active_ = 0;
    std::list<int> client_fds_;
};

/// Opens one connection per exchange.
class TcpTransport final : public Transport {
public:
    explicit TcpTransport(int timeout_ms = 30000) : timeout_ms_(timeout_ms) {}
    json call(const Address& to, const json& request) override;
    std::uint8_t send_frame(const Address& to, std::span<const std::uint8_t> frame) override;

private:
    int timeout_ms_;
};

}  // namespace gm
