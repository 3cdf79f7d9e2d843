#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "tarml/app/model_dir.hpp"
#include "tarml/shap.hpp"
#include "tarml/swarm.hpp"

namespace tarml::app {

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

struct ServiceOptions {
  // Largest swarm_size * (iterations + 1) an optimize request may ask for.
  std::size_t optimize_budget = 40000;
  // Optimize requests run one at a time; at most this many may wait.
  std::size_t optimize_queue = 4;
  // Used for targets whose model is not a tree ensemble.
  shap::SamplingOptions explain_sampling;
};

// Request handling independent of any socket layer. Every request reads one
// immutable snapshot of the models; reload() swaps the snapshot atomically.
class PredictionService {
 public:
  PredictionService(std::filesystem::path model_dir, ServiceOptions options = {});
  PredictionService(std::shared_ptr<const ModelBundle> bundle, ServiceOptions options = {});

  HttpResponse handle(std::string_view method, std::string_view path, std::string_view body);

  HttpResponse health() const;
  HttpResponse schema() const;
  HttpResponse predict(std::string_view body) const;
  HttpResponse explain(std::string_view body) const;
  HttpResponse optimize(std::string_view body);
  HttpResponse reload();

  std::shared_ptr<const ModelBundle> snapshot() const;
  void swap(std::shared_ptr<const ModelBundle> bundle);
  std::uint64_t generation() const;

 private:
  std::optional<std::filesystem::path> dir_;
  ServiceOptions options_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const ModelBundle> bundle_;
  std::uint64_t generation_ = 1;
  std::mutex optimize_mutex_;
  std::atomic<std::size_t> optimize_waiting_{0};
};

struct BindAddress {
  std::string host = "127.0.0.1";
  int port = 8080;
};

// "host:port" or ":port" or "port".
BindAddress parse_bind(std::string_view text);
// `fallback`, unless the TARML_BIND environment variable is set.
BindAddress resolve_bind(const BindAddress& fallback);

// Blocking HTTP front end for a PredictionService.
class HttpServer {
 public:
  explicit HttpServer(PredictionService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and returns the port (an ephemeral one when `port` is 0).
  int bind(const std::string& host, int port);
  // Serves until stop(); returns false if the listener failed.
  bool run();
  // Blocks until run() is accepting connections.
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tarml::app
