// Copyright 2026 The readoutchar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Line-oriented TCP protocol for remote experiment backends.
//
// Each request is one JSON object on one line:
//   {"op": "ramsey", "pulse": {...}, "window": {...}, "state": "0"|"1"|"superposition", "shots": n, "seed": s}
//   {"op": "acquire_iq", "pulse": {...}, "state": "0"|"1", "weights": {...}, "shots": n, "seed": s}
// and is answered by exactly one line, {"ok": true, "result": {...}} or
// {"ok": false, "error": {"reason": ..., "message": ...}}. A bad request gets an
// error line and the connection stays open.

#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "json.hpp"
#include "readoutchar/backend.hpp"
#include "readoutchar/error.hpp"

namespace readout {

namespace wire {

using json = nlohmann::json;

inline constexpr std::size_t kMaxLine = std::size_t{1} << 28;

inline json encode(const DrivePulse &p) {
    return {{"omega_d", p.omega_d}, {"eps", p.eps}, {"t_on", p.t_on}, {"t_off", p.t_off}};
}

inline json encode(const Window &w) {
    return {{"start", w.start}, {"end", w.end}};
}

inline json encode(const FilterWeights &w) {
    json re = json::array();
    json im = json::array();
    for (auto z : w.w) {
        re.push_back(z.real());
        im.push_back(z.imag());
    }
    return {{"times", w.times}, {"re", re}, {"im", im}};
}

inline json encode(const RamseyRequest &r) {
    return {{"op", "ramsey"},       {"pulse", encode(r.pulse)}, {"window", encode(r.window)},
            {"state", to_string(r.probe)}, {"shots", r.shots},  {"seed", r.seed}};
}

inline json encode(const IqRequest &r) {
    return {{"op", "acquire_iq"},   {"pulse", encode(r.pulse)}, {"state", to_string(r.state)},
            {"weights", encode(r.weights)}, {"shots", r.shots},  {"seed", r.seed}};
}

inline json encode(const RamseyResult &r) {
    return {{"phase", r.phase},
            {"contrast", r.contrast},
            {"shots", r.shots},
            {"phase_stderr", r.phase_stderr},
            {"contrast_stderr", r.contrast_stderr}};
}

inline json encode(const IQCloud &c) {
    json re = json::array();
    json im = json::array();
    for (auto z : c.points) {
        re.push_back(z.real());
        im.push_back(z.imag());
    }
    return {{"state", to_string(c.state)}, {"seed", c.seed}, {"re", re}, {"im", im}};
}

namespace detail {

[[noreturn]] inline void bad(const std::string &what) {
    throw Error(ErrorCode::protocol_error, what);
}

inline const json &field(const json &j, const char *key) {
    if (!j.is_object() || !j.contains(key)) {
        bad(std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

inline double number(const json &j, const char *key) {
    const auto &v = field(j, key);
    if (!v.is_number()) {
        bad(std::string("field '") + key + "' must be a number");
    }
    return v.get<double>();
}

inline std::uint64_t count(const json &j, const char *key) {
    const auto &v = field(j, key);
    if (!v.is_number_unsigned()) {
        bad(std::string("field '") + key + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

inline std::vector<double> numbers(const json &j, const char *key) {
    const auto &v = field(j, key);
    if (!v.is_array()) {
        bad(std::string("field '") + key + "' must be an array");
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto &e : v) {
        if (!e.is_number()) {
            bad(std::string("field '") + key + "' must hold numbers");
        }
        out.push_back(e.get<double>());
    }
    return out;
}

inline QubitState state(const json &j) {
    const auto &v = field(j, "state");
    if (v == "0") {
        return QubitState::ground;
    }
    if (v == "1") {
        return QubitState::excited;
    }
    bad("field 'state' must be \"0\" or \"1\"");
}

inline std::vector<complex> pairs(const json &j) {
    const auto re = numbers(j, "re");
    const auto im = numbers(j, "im");
    if (re.size() != im.size()) {
        bad("'re' and 'im' must have equal length");
    }
    std::vector<complex> out(re.size());
    for (std::size_t i = 0; i < re.size(); ++i) {
        out[i] = complex(re[i], im[i]);
    }
    return out;
}

}  // namespace detail

inline DrivePulse decode_pulse(const json &j) {
    return DrivePulse{detail::number(j, "omega_d"), detail::number(j, "eps"), detail::number(j, "t_on"),
                      detail::number(j, "t_off")};
}

inline Window decode_window(const json &j) {
    return Window{detail::number(j, "start"), detail::number(j, "end")};
}

inline FilterWeights decode_weights(const json &j) {
    FilterWeights w;
    w.times = detail::numbers(j, "times");
    w.w = detail::pairs(j);
    return w;
}

inline RamseyRequest decode_ramsey(const json &j) {
    RamseyRequest r;
    r.pulse = decode_pulse(detail::field(j, "pulse"));
    r.window = decode_window(detail::field(j, "window"));
    const auto &s = detail::field(j, "state");
    if (s == "superposition") {
        r.probe = RamseyProbe::superposition;
    } else {
        r.probe = probe_for(detail::state(j));
    }
    r.shots = detail::count(j, "shots");
    r.seed = detail::count(j, "seed");
    return r;
}

inline IqRequest decode_iq(const json &j) {
    IqRequest r;
    r.pulse = decode_pulse(detail::field(j, "pulse"));
    r.state = detail::state(j);
    r.weights = decode_weights(detail::field(j, "weights"));
    r.shots = detail::count(j, "shots");
    r.seed = detail::count(j, "seed");
    return r;
}

inline RamseyResult decode_ramsey_result(const json &j) {
    RamseyResult r;
    r.phase = detail::number(j, "phase");
    r.contrast = detail::number(j, "contrast");
    r.shots = detail::count(j, "shots");
    r.phase_stderr = detail::number(j, "phase_stderr");
    r.contrast_stderr = detail::number(j, "contrast_stderr");
    return r;
}

inline IQCloud decode_cloud(const json &j) {
    IQCloud c;
    c.state = detail::state(j);
    c.seed = detail::count(j, "seed");
    c.points = detail::pairs(j);
    return c;
}

inline std::string error_line(ErrorCode code, const std::string &message) {
    return json{{"ok", false}, {"error", {{"reason", std::string(to_string(code))}, {"message", message}}}}.dump();
}

// Answers one request line. Never throws for bad input.
inline std::string handle_line(ExperimentBackend &backend, const std::string &line) {
    try {
        json req;
        try {
            req = json::parse(line);
        } catch (const json::parse_error &e) {
            return error_line(ErrorCode::protocol_error, std::string("malformed request: ") + e.what());
        }
        if (!req.is_object()) {
            return error_line(ErrorCode::protocol_error, "request must be a JSON object");
        }
        const auto &op = detail::field(req, "op");
        if (!op.is_string()) {
            return error_line(ErrorCode::protocol_error, "field 'op' must be a string");
        }
        json result;
        if (op == "ramsey") {
            result = encode(backend.ramsey_under_drive(decode_ramsey(req)));
        } else if (op == "acquire_iq") {
            result = encode(backend.acquire_iq(decode_iq(req)));
        } else {
            return error_line(ErrorCode::protocol_error, "unknown op '" + op.get<std::string>() + "'");
        }
        return json{{"ok", true}, {"result", result}}.dump();
    } catch (const Error &e) {
        return error_line(e.code(), e.detail());
    } catch (const std::exception &e) {
        return error_line(ErrorCode::protocol_error, e.what());
    }
}

// Blocking line I/O over a connected socket.
class LineSocket {
  public:
    explicit LineSocket(int fd = -1) : fd_(fd) {
    }
    LineSocket(const LineSocket &) = delete;
    LineSocket &operator=(const LineSocket &) = delete;
    ~LineSocket() {
        close();
    }

    int fd() const {
        return fd_;
    }
    void close() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

    // False on orderly shutdown by the peer.
    bool read_line(std::string &line) {
        for (;;) {
            const auto nl = buf_.find('\n');
            if (nl != std::string::npos) {
                line = buf_.substr(0, nl);
                buf_.erase(0, nl + 1);
                return true;
            }
            if (buf_.size() > kMaxLine) {
                throw Error(ErrorCode::protocol_error, "line exceeds the maximum length");
            }
            char chunk[65536];
            const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
            if (n == 0) {
                return false;
            }
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                if (errno == EAGAIN || errno == EWOULDBLOCK) {
                    throw Error(ErrorCode::backend_unavailable, "timed out waiting for the remote backend");
                }
                throw Error(ErrorCode::backend_unavailable, std::string("receive failed: ") + std::strerror(errno));
            }
            buf_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    void write_line(const std::string &line) {
        std::string data = line;
        data.push_back('\n');
        std::size_t sent = 0;
        while (sent < data.size()) {
            const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw Error(ErrorCode::backend_unavailable, std::string("send failed: ") + std::strerror(errno));
            }
            sent += static_cast<std::size_t>(n);
        }
    }

  private:
    int fd_;
    std::string buf_;
};

}  // namespace wire

// Serves a backend on a TCP port, one thread per connection. Requests on a
// connection are answered strictly in order.
class WireServer {
  public:
    // port 0 picks a free port; see port().
    explicit WireServer(ExperimentBackend &backend, std::uint16_t port = 0, const std::string &host = "127.0.0.1")
        : backend_(backend) {
        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        require(listen_fd_ >= 0, ErrorCode::backend_unavailable, "cannot create socket");
        const int one = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
            ::close(listen_fd_);
            throw Error(ErrorCode::invalid_argument, "bad listen address '" + host + "'");
        }
        if (::bind(listen_fd_, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) != 0 ||
            ::listen(listen_fd_, 16) != 0) {
            const std::string why = std::strerror(errno);
            ::close(listen_fd_);
            throw Error(ErrorCode::backend_unavailable, "cannot listen on " + host + ":" + std::to_string(port) +
                                                            ": " + why);
        }
        socklen_t len = sizeof(addr);
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr *>(&addr), &len);
        port_ = ntohs(addr.sin_port);
        acceptor_ = std::jthread([this] { accept_loop(); });
    }

    WireServer(const WireServer &) = delete;
    WireServer &operator=(const WireServer &) = delete;

    ~WireServer() {
        stop();
    }

    std::uint16_t port() const {
        return port_;
    }

    void stop() {
        if (stopping_.exchange(true)) {
            return;
        }
        if (acceptor_.joinable()) {
            acceptor_.join();
        }
        {
            std::lock_guard lock(mu_);
            for (int fd : open_fds_) {
                ::shutdown(fd, SHUT_RDWR);
            }
        }
        connections_.clear();
        ::close(listen_fd_);
    }

  private:
    void accept_loop() {
        while (!stopping_) {
            pollfd p{listen_fd_, POLLIN, 0};
            if (::poll(&p, 1, 50) <= 0) {
                continue;
            }
            const int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0) {
                continue;
            }
            const int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            std::lock_guard lock(mu_);
            open_fds_.push_back(fd);
            connections_.emplace_back([this, fd] { serve(fd); });
        }
    }

    void serve(int fd) {
        wire::LineSocket sock(fd);
        try {
            std::string line;
            while (!stopping_ && sock.read_line(line)) {
                sock.write_line(wire::handle_line(backend_, line));
            }
        } catch (const Error &) {
            // Peer went away or sent an oversized line; drop the connection.
        }
        std::lock_guard lock(mu_);
        open_fds_.remove(fd);
        sock.close();
    }

    ExperimentBackend &backend_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::mutex mu_;
    std::list<int> open_fds_;
    std::list<std::jthread> connections_;
    std::jthread acceptor_;
};

// Client side: an ExperimentBackend whose calls travel over one connection.
// Calls are serialized, so concurrent protocol sweeps share it safely.
class WireBackend final : public ExperimentBackend {
  public:
    // endpoint is "host:port" or "tcp://host:port".
    explicit WireBackend(const std::string &endpoint, int timeout_ms = 60000) {
        std::string ep = endpoint;
        if (ep.rfind("tcp://", 0) == 0) {
            ep = ep.substr(6);
        }
        const auto colon = ep.rfind(':');
        require(colon != std::string::npos && colon + 1 < ep.size(), ErrorCode::invalid_argument,
                "endpoint must look like host:port, got '" + endpoint + "'");
        const std::string host = ep.substr(0, colon);
        const std::string port = ep.substr(colon + 1);

        addrinfo hints{};
        hints.ai_family = AF_INET;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo *res = nullptr;
        require(::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) == 0 && res != nullptr,
                ErrorCode::backend_unavailable, "cannot resolve '" + endpoint + "'");
        const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
        const bool ok = fd >= 0 && ::connect(fd, res->ai_addr, res->ai_addrlen) == 0;
        const std::string why = std::strerror(errno);
        ::freeaddrinfo(res);
        if (!ok) {
            if (fd >= 0) {
                ::close(fd);
            }
            throw Error(ErrorCode::backend_unavailable, "cannot connect to '" + endpoint + "': " + why);
        }
        timeval tv{timeout_ms / 1000, (timeout_ms % 1000) * 1000};
        ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
        ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
        const int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        sock_ = std::make_unique<wire::LineSocket>(fd);
    }

    RamseyResult ramsey_under_drive(const RamseyRequest &req) override {
        return wire::decode_ramsey_result(call(wire::encode(req).dump()));
    }

    IQCloud acquire_iq(const IqRequest &req) override {
        return wire::decode_cloud(call(wire::encode(req).dump()));
    }

    // Sends one raw line and returns the raw response line.
    std::string exchange(const std::string &line) {
        std::lock_guard lock(mu_);
        sock_->write_line(line);
        std::string reply;
        if (!sock_->read_line(reply)) {
            throw Error(ErrorCode::backend_unavailable, "remote backend closed the connection");
        }
        return reply;
    }

  private:
    wire::json call(const std::string &line) {
        const std::string reply = exchange(line);
        wire::json j;
        try {
            j = wire::json::parse(reply);
        } catch (const wire::json::parse_error &) {
            throw Error(ErrorCode::protocol_error, "malformed response from remote backend");
        }
        if (j.value("ok", false)) {
            return wire::detail::field(j, "result");
        }
        const auto &err = wire::detail::field(j, "error");
        const auto code = error_code_from(err.value("reason", "protocol_error"));
        throw Error(code.value_or(ErrorCode::protocol_error), err.value("message", "remote error"));
    }

    std::mutex mu_;
    std::unique_ptr<wire::LineSocket> sock_;
};

}  // namespace readout
