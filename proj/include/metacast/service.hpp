#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "metacast/io.hpp"

namespace metacast {

struct Request {
    std::string method;  // GET, POST, PATCH, ...
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

struct SessionOptions {
    Dims3 default_dims = {100, 100, 100};
    DensityOptions density;
    TechniqueConfig techniques;
};

/// Single-session engine state behind the HTTP API.
///
/// Requests are serialized on `request_mutex_`. Density builds run on a worker
/// thread that only touches `state_mutex_` to publish its result and bump the
/// revision, so status and point reads answer immediately while a build runs.
class SessionState {
public:
    explicit SessionState(SessionOptions options = {});
    ~SessionState();
    SessionState(const SessionState&) = delete;
    SessionState& operator=(const SessionState&) = delete;

    Response handle(const Request& request);
    // Blocks until the current density build (if any) has finished.
    void wait_for_build();
    std::uint64_t revision() const;

private:
    struct Loaded {
        ParticleCloud cloud;
        DensityGrid field;
    };
    enum class BuildState { none, building, ready, failed };

    Response upload_cloud(const Request& request);
    Response status() const;
    Response points(const Request& request) const;
    Response select(const Request& request);
    Response threshold(const Request& request);
    Response combine(const Request& request);
    Response selection_text_response() const;
    Response mesh_response() const;

    std::optional<Response> check_revision(const Json& body) const;
    std::shared_ptr<const Loaded> loaded() const;
    Json selection_reply(const std::string& selection_json) const;

    SessionOptions options_;
    mutable std::mutex request_mutex_;
    mutable std::mutex state_mutex_;
    std::shared_ptr<const Loaded> loaded_;
    std::optional<Selection> selection_;
    std::optional<IndexSet> pending_operand_;  // last baseline selection
    std::optional<IndexSet> combined_;
    std::uint64_t revision_ = 0;
    std::uint64_t build_token_ = 0;
    BuildState build_state_ = BuildState::none;
    std::string build_error_;
    std::atomic<int> build_phase_{0};
    std::thread builder_;
};

inline Response handle_request(SessionState& state, const Request& request) { return state.handle(request); }

// Serves the API on host:port until the process is stopped. `static_dir`, when
// non-empty, is mounted at / for the browser viewer.
int run_server(SessionState& state, const std::string& host, int port, const std::string& static_dir = {});

// Command-line entry point; returns 0 on success, 1 on usage errors, 2 on data errors.
int run_cli(int argc, const char* const* argv);

}  // namespace metacast
