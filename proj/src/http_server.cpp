#include <httplib.h>

#include "fmgen/service.hpp"

namespace fmgen {

struct HttpServer::Impl {
    SessionService& service;
    httplib::Server server;
    std::thread thread;
};

HttpServer::HttpServer(SessionService& service) : impl_(new Impl{service, {}, {}}) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        Request r{req.method, req.path, {}, req.body};
        for (const auto& [k, v] : req.params) r.query[k] = v;
        Response out = impl_->service.handle(r);
        res.status = out.status;
        res.set_content(out.body, "application/json");
    };
    impl_->server.Get(".*", handler);
    impl_->server.Post(".*", handler);
    impl_->server.Delete(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
    int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error("cannot listen on " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HttpServer::stop() {
    impl_->server.stop();
    wait();
}

void HttpServer::wait() {
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace fmgen
