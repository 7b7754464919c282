#pragma once

// Session-oriented HTTP/JSON front of the engine. SessionService::handle is
// the whole protocol (docs/protocol.md); HttpServer only moves requests and
// responses between it and a socket.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fmgen/config_engine.hpp"
#include "fmgen/frame_engine.hpp"
#include "fmgen/generator.hpp"
#include "fmgen/widget_transform.hpp"

namespace fmgen {

struct Request {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct Response {
    int status = 200;
    std::string body;  ///< JSON document, newline-terminated
};

class SessionService {
public:
    using Clock = std::chrono::steady_clock;

    struct Options {
        std::chrono::seconds idle_timeout{30 * 60};
        /// Generate runs write to `output_root / <session id>`.
        std::filesystem::path output_root;
        /// Defaults to random 128-bit hex tokens.
        std::function<std::string()> next_id;
        std::function<Clock::time_point()> now;
    };

    SessionService();
    explicit SessionService(Options options);
    ~SessionService();

    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    Response handle(const Request& request);

    /// Drops sessions idle for longer than the timeout; returns how many.
    std::size_t expire_idle();
    std::size_t session_count() const;

    /// Snapshot of a session's configuration, for tests and replay checks.
    std::optional<Configuration> configuration(const std::string& id) const;

    const Options& options() const noexcept { return options_; }

private:
    struct Session;

    Options options_;
    mutable std::mutex table_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;

    std::shared_ptr<Session> lookup(const std::string& id);
    Response create(const Request& request);
    Response dispatch(Session& session, const std::string& action, const Request& request);
};

/// Blocking cpp-httplib server in a background thread.
class HttpServer {
public:
    explicit HttpServer(SessionService& service);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds and starts serving; port 0 picks a free port. Returns the port.
    int start(const std::string& host, int port);
    void stop();
    /// Blocks until the server stops.
    void wait();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace fmgen
