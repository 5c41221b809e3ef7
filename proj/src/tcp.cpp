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

#include "gridmirror/tcp.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>

namespace gm {
namespace {

constexpr std::size_t kMaxLine = 256u << 20;
constexpr std::uint64_t kMaxPayload = 1ull << 32;

class Socket {
public:
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket() {
        if (fd_ >= 0) ::close(fd_);
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    int fd() const noexcept { return fd_; }

private:
    int fd_;
};

bool write_all(int fd, const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    while (n > 0) {
        const ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
        if (w < 0 && errno == EINTR) continue;
        if (w <= 0) return false;
        p += w;
        n -= static_cast<std::size_t>(w);
    }
    return true;
}

/// Buffered reader over a socket.
class Reader {
public:
    explicit Reader(int fd) : fd_(fd) {}

    bool peek(char& c) {
        if (!fill(1)) return false;
        c = buf_[pos_];
        return true;
    }

    bool read_line(std::string& line) {
        line.clear();
        while (true) {
            for (std::size_t i = pos_; i < buf_.size(); ++i) {
                if (buf_[i] == '\n') {
                    line.append(buf_, pos_, i - pos_);
                    pos_ = i + 1;
                    return true;
                }
            }
            line.append(buf_, pos_, std::string::npos);
            pos_ = buf_.size();
            if (line.size() > kMaxLine) return false;
            if (!fill(1)) return false;
        }
    }

    bool read_exact(std::vector<std::uint8_t>& out, std::size_t n) {
        while (n > 0) {
            if (!fill(1)) return false;
            const std::size_t take = std::min(n, buf_.size() - pos_);
            out.insert(out.end(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_),
                       buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + take));
            pos_ += take;
            n -= take;
        }
        return true;
    }

private:
    bool fill(std::size_t need) {
        if (buf_.size() - pos_ >= need) return true;
        if (pos_ > 0) {
            buf_.erase(0, pos_);
            pos_ = 0;
        }
        char chunk[64 * 1024];
        while (buf_.size() < need) {
            const ssize_t r = ::recv(fd_, chunk, sizeof(chunk), 0);
            if (r < 0 && errno == EINTR) continue;
            if (r <= 0) return false;
            buf_.append(chunk, static_cast<std::size_t>(r));
        }
        return true;
    }

    int fd_;
    std::string buf_;
    std::size_t pos_ = 0;
};

std::uint64_t le(const std::vector<std::uint8_t>& b, std::size_t at, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[at + i]) << (8 * i);
    return v;
}

/// Reads one complete frame whose first byte has been peeked.
bool read_frame(Reader& reader, std::vector<std::uint8_t>& frame) {
    frame.clear();
    if (!reader.read_exact(frame, kFrameFixedHeader)) return false;
    const std::size_t path_len = le(frame, 5, 2);
    if (!reader.read_exact(frame, path_len + 12)) return false;
    const std::uint64_t payload_len = le(frame, kFrameFixedHeader + path_len, 8);
    if (payload_len > kMaxPayload) return false;
    return reader.read_exact(frame, static_cast<std::size_t>(payload_len));
}

int connect_to(const Address& to, int timeout_ms) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(to.port);
    if (::getaddrinfo(to.host.c_str(), port.c_str(), &hints, &res) != 0 || !res)
        throw TransportError("cannot resolve " + to.str());
    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        timeval tv{timeout_ms / 1000, (timeout_ms % 1000) * 1000};
        ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
        ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw TransportError("cannot connect to " + to.str() + ": " + std::strerror(errno));
    return fd;
}

}  // namespace

TcpServer::TcpServer(Service& service, Address listen) : service_(service), listen_(std::move(listen)) {}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start() {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(listen_.port);
    const char* host = listen_.host.empty() || listen_.host == "*" ? nullptr : listen_.host.c_str();
    if (::getaddrinfo(host, port.c_str(), &hints, &res) != 0 || !res)
        throw Error(errc::kIoFailure, "cannot resolve listen address " + listen_.str());
    int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (fd < 0 || ::bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, 128) != 0) {
        const std::string why = std::strerror(errno);
        ::freeaddrinfo(res);
        if (fd >= 0) ::close(fd);
        throw Error(errc::kIoFailure, "cannot listen on " + listen_.str() + ": " + why);
    }
    ::freeaddrinfo(res);
    sockaddr_storage bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port
                                              : reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
    listen_fd_ = fd;
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
}

void TcpServer::stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable()) acceptor_.join();
    std::unique_lock lock(mutex_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    idle_.wait(lock, [this] { return active_ == 0; });
}

void TcpServer::accept_loop() {
    while (running_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR || errno == ECONNABORTED) continue;
            return;
        }
        std::lock_guard lock(mutex_);
        if (!running_) {
            ::close(fd);
            return;
        }
        client_fds_.push_back(fd);
        ++active_;
        std::thread([this, fd] { serve_connection(fd); }).detach();
    }
}

void TcpServer::serve_connection(int fd) {
    Reader reader(fd);
    std::string line;
    std::vector<std::uint8_t> frame;
    while (running_) {
        char first = 0;
        if (!reader.peek(first)) break;
        if (first == 'G') {
            if (!read_frame(reader, frame)) break;
            const std::uint8_t status = service_.handle_frame(frame);
            if (!write_all(fd, &status, 1)) break;
            continue;
        }
        if (!reader.read_line(line)) break;
        if (line.empty() || line == "\r") continue;
        json response;
        try {
            response = service_.handle(json::parse(line));
        } catch (const json::exception& e) {
            response = make_error(0, Error(errc::kBadRequest, std::string("malformed JSON: ") + e.what()));
        }
        std::string out = response.dump();
        out += '\n';
        if (!write_all(fd, out.data(), out.size())) break;
    }
    std::lock_guard lock(mutex_);
    client_fds_.remove(fd);
    ::close(fd);
    if (--active_ == 0) idle_.notify_all();
}

json TcpTransport::call(const Address& to, const json& request) {
    Socket sock(connect_to(to, timeout_ms_));
    std::string out = request.dump();
    out += '\n';
    if (!write_all(sock.fd(), out.data(), out.size())) throw TransportError("send to " + to.str() + " failed");
    Reader reader(sock.fd());
    std::string line;
    if (!reader.read_line(line)) throw TransportError("no response from " + to.str());
    try {
        return json::parse(line);
    } catch (const json::exception&) {
        throw TransportError("malformed response from " + to.str());
    }
}

std::uint8_t TcpTransport::send_frame(const Address& to, std::span<const std::uint8_t> frame) {
    Socket sock(connect_to(to, timeout_ms_));
    if (!write_all(sock.fd(), frame.data(), frame.size())) throw TransportError("frame send to " + to.str() + " failed");
    std::uint8_t status = 0;
    for (;;) {
        const ssize_t r = ::recv(sock.fd(), &status, 1, 0);
        if (r < 0 && errno == EINTR) continue;
        if (r != 1) throw TransportError("no frame status from " + to.str());
        return status;
    }
}

}  // namespace gm
