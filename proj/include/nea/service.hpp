#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nea/codebook.hpp"
#include "nea/kernels.hpp"
#include "nea/runtime.hpp"

namespace nea {

struct ServiceOptions {
  /// Per-session cap on resident decoded block bytes.
  std::optional<std::uint64_t> budget_bytes;
  std::chrono::steady_clock::duration idle_timeout = std::chrono::minutes(10);
  std::size_t max_sessions = 64;
  /// Served at "/" when set.
  std::filesystem::path static_dir;
  kernels::Exec exec = kernels::Exec::Parallel;
  /// Receives one JSON telemetry line per working-set switch.
  std::function<void(const std::string&)> telemetry_log;
};

struct ServiceRequest {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> params;
};

struct ServiceResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;

  std::optional<std::string> header(const std::string& name) const;
};

/// Request handling for the explorer HTTP API, independent of the transport.
/// Sessions are keyed by the client-supplied `session` parameter and created
/// on first use; each owns one working set over the shared reader.
class ExplorerService {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  ExplorerService(const CodebookReader& reader, ServiceOptions options = {}, Clock clock = {});
  ~ExplorerService();

  ServiceResponse handle(const ServiceRequest& request);

  std::size_t session_count() const;
  const ServiceOptions& options() const noexcept { return options_; }

  /// Drops sessions idle for longer than the timeout; returns how many.
  std::size_t expire_idle();

 private:
  struct Session;
  std::shared_ptr<Session> find_session(const std::string& id, bool create);

  ServiceResponse manifest() const;
  ServiceResponse create_session(const ServiceRequest& request);
  ServiceResponse slice(const ServiceRequest& request);
  ServiceResponse volume(const ServiceRequest& request);
  ServiceResponse agreement(const ServiceRequest& request);
  ServiceResponse stats(const ServiceRequest& request);

  const CodebookReader* reader_;
  ServiceOptions options_;
  Clock clock_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

/// cpp-httplib front end for an ExplorerService.
class HttpServer {
 public:
  explicit HttpServer(ExplorerService& service);
  ~HttpServer();

  /// Binds to host:port (port 0 picks a free one); returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nea
