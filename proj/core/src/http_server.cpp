#include <atomic>

// The library default of 5 drops connects when a burst of clients arrives.
#define CPPHTTPLIB_LISTEN_BACKLOG 128
#include <httplib.h>

#include "natal_risk/error.hpp"
#include "natal_risk/service.hpp"

namespace natal_risk {

namespace {
constexpr std::size_t kWorkerThreads = 32;
}  // namespace

struct HttpServer::Impl {
  explicit Impl(const PredictionService& s) : service(s) {}

  const PredictionService& service;
  httplib::Server server;
  std::atomic<bool> bound{false};
};

HttpServer::HttpServer(const PredictionService& service) : impl_(std::make_unique<Impl>(service)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const auto out = impl_->service.handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  auto& s = impl_->server;
  // Keep-alive connections hold a worker each; the default pool of 8 starves
  // the queue under modest client concurrency.
  s.new_task_queue = [] { return new httplib::ThreadPool(kWorkerThreads); };
  s.set_keep_alive_timeout(1);
  s.set_tcp_nodelay(true);
  // httplib's default adds SO_REUSEPORT, which lets a second server share a busy port.
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
  });
  s.Get(R"(/api/.*)", handler);
  s.Post(R"(/api/.*)", handler);
  s.Put(R"(/api/.*)", handler);
  s.Delete(R"(/api/.*)", handler);
  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const auto out = error_response(res.status, res.status == 404 ? "NotFound" : "HttpError", req.path);
    res.set_content(out.body, out.content_type);
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = -1;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (impl_->server.bind_to_port(host, port)) {
    bound = port;
  }
  if (bound <= 0)
    throw Error(ErrorCode::PortUnavailable, "cannot bind " + host + ":" + std::to_string(port));
  impl_->bound = true;
  return bound;
}

void HttpServer::listen() {
  if (!impl_->bound) throw Error(ErrorCode::PortUnavailable, "listen() before bind()");
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace natal_risk
