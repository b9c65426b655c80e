#include <iostream>

// Eigen first: httplib pulls in <resolv.h>, whose `_res` macro breaks Eigen headers.
#include "metacast/service.hpp"

#include <httplib.h>

namespace metacast {

namespace {

bool local_origin(const std::string& origin) {
    for (const char* prefix : {"http://localhost", "http://127.0.0.1", "https://localhost", "https://127.0.0.1"}) {
        const std::string p(prefix);
        if (origin.compare(0, p.size(), p) == 0 && (origin.size() == p.size() || origin[p.size()] == ':')) {
            return true;
        }
    }
    return false;
}

void add_cors(const httplib::Request& req, httplib::Response& res) {
    const std::string origin = req.get_header_value("Origin");
    if (local_origin(origin)) {
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_header("Vary", "Origin");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, PATCH, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    }
}

}  // namespace

int run_server(SessionState& state, const std::string& host, int port, const std::string& static_dir) {
    httplib::Server server;
    if (!static_dir.empty() && !server.set_mount_point("/", static_dir)) {
        std::cerr << "static directory not found: " << static_dir << "\n";
        return 2;
    }

    const auto forward = [&state](const httplib::Request& req, httplib::Response& res) {
        Request r;
        r.method = req.method;
        r.path = req.path;
        for (const auto& [k, v] : req.params) {
            r.query.emplace(k, v);
        }
        r.body = req.body;
        const Response out = state.handle(r);
        add_cors(req, res);
        res.status = out.status;
        res.set_content(out.body, out.content_type);
    };
    const std::string api = R"(/api/.*)";
    server.Get(api, forward);
    server.Post(api, forward);
    server.Patch(api, forward);
    server.Options(api, [](const httplib::Request& req, httplib::Response& res) {
        add_cors(req, res);
        res.status = 204;
    });

    if (!server.bind_to_port(host, port)) {
        std::cerr << "cannot bind " << host << ":" << port << "\n";
        return 2;
    }
    std::cerr << "listening on http://" << host << ":" << port << "\n";
    return server.listen_after_bind() ? 0 : 2;
}

}  // namespace metacast
