#include "tarml/app/service.hpp"
#include "tarml/error.hpp"

// After the project headers: the resolver headers it pulls in define macros
// that clash with Eigen.
#include "httplib.h"

namespace tarml::app {

struct HttpServer::Impl {
  PredictionService& service;
  httplib::Server server;

  explicit Impl(PredictionService& s) : service(s) {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
      const auto r = service.handle(req.method, req.path, req.body);
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    server.Get(".*", forward);
    server.Post(".*", forward);
    server.Put(".*", forward);
    server.Delete(".*", forward);
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
      res.status = 500;
      res.set_content(R"({"error":"internal error"})", "application/json");
    });
  }
};

HttpServer::HttpServer(PredictionService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind to " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind to " + host + ":" + std::to_string(port));
  return port;
}

bool HttpServer::run() { return impl_->server.listen_after_bind(); }

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace tarml::app
