#include "nea/service.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "nea/bytes.hpp"
#include "nea/error.hpp"

namespace nea {

namespace {

using nlohmann::json;

ServiceResponse json_response(int status, const json& body) {
  ServiceResponse r;
  r.status = status;
  r.body = body.dump();
  return r;
}

ServiceResponse error_response(int status, const std::string& message) {
  return json_response(status, json{{"error", message}});
}

int status_for(Errc code) {
  switch (code) {
    case Errc::OutOfRange:
    case Errc::InvalidArgument: return 400;
    case Errc::BudgetExceeded: return 413;
    default: return 500;
  }
}

std::uint32_t param_u32(const ServiceRequest& req, const std::string& name) {
  const auto it = req.params.find(name);
  if (it == req.params.end()) fail(Errc::InvalidArgument, "missing parameter '" + name + "'");
  const std::string& s = it->second;
  std::uint32_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) {
    fail(Errc::InvalidArgument, "parameter '" + name + "' must be a non-negative integer");
  }
  return v;
}

std::string param_or(const ServiceRequest& req, const std::string& name, const std::string& fallback) {
  const auto it = req.params.find(name);
  return it == req.params.end() ? fallback : it->second;
}

std::string float_bytes(std::span<const float> values) {
  std::string out(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    bytes::store_le(reinterpret_cast<std::byte*>(out.data()) + 4 * i, values[i]);
  }
  return out;
}

std::string content_type_for(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

}  // namespace

std::optional<std::string> ServiceResponse::header(const std::string& name) const {
  for (const auto& [k, v] : headers)
    if (k == name) return v;
  return std::nullopt;
}

struct ExplorerService::Session {
  Session(const CodebookReader& reader, const ServiceOptions& o) : ws(reader, o.budget_bytes, o.exec) {}
  std::mutex mutex;
  WorkingSet ws;
  Volume volume;
  std::chrono::steady_clock::time_point last_active;
};

ExplorerService::ExplorerService(const CodebookReader& reader, ServiceOptions options, Clock clock)
    : reader_(&reader), options_(std::move(options)), clock_(std::move(clock)) {
  if (!clock_) clock_ = [] { return std::chrono::steady_clock::now(); };
}

ExplorerService::~ExplorerService() = default;

std::size_t ExplorerService::session_count() const {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.size();
}

std::size_t ExplorerService::expire_idle() {
  const auto now = clock_();
  std::lock_guard lock(sessions_mutex_);
  std::size_t dropped = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (now - it->second->last_active > options_.idle_timeout) {
      it = sessions_.erase(it);
      ++dropped;
    } else {
      ++it;
    }
  }
  return dropped;
}

std::shared_ptr<ExplorerService::Session> ExplorerService::find_session(const std::string& id, bool create) {
  expire_idle();
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    if (!create) return nullptr;
    if (sessions_.size() >= options_.max_sessions) return nullptr;
    it = sessions_.emplace(id, std::make_shared<Session>(*reader_, options_)).first;
  }
  it->second->last_active = clock_();
  return it->second;
}

ServiceResponse ExplorerService::handle(const ServiceRequest& req) {
  ServiceResponse resp;
  try {
    if (req.path == "/api/manifest") {
      resp = manifest();
    } else if (req.path == "/api/session") {
      resp = create_session(req);
    } else if (req.path == "/api/slice") {
      resp = slice(req);
    } else if (req.path == "/api/volume") {
      resp = volume(req);
    } else if (req.path == "/api/agreement") {
      resp = agreement(req);
    } else if (req.path == "/api/stats") {
      resp = stats(req);
    } else if (!options_.static_dir.empty() && req.path.rfind("/api/", 0) != 0 && req.method == "GET") {
      auto rel = std::filesystem::path(req.path == "/" ? "index.html" : req.path.substr(1)).lexically_normal();
      if (rel.empty() || *rel.begin() == "..") {
        resp = error_response(404, "not found");
      } else {
        const auto file = options_.static_dir / rel;
        std::ifstream in(file, std::ios::binary);
        if (!in || std::filesystem::is_directory(file)) {
          resp = error_response(404, "not found");
        } else {
          std::ostringstream ss;
          ss << in.rdbuf();
          resp.body = ss.str();
          resp.content_type = content_type_for(file);
        }
      }
    } else {
      resp = error_response(404, "unknown route " + req.path);
    }
  } catch (const Error& e) {
    resp = error_response(status_for(e.code()), e.what());
  } catch (const std::exception& e) {
    resp = error_response(500, e.what());
  }
  resp.headers.emplace_back("Access-Control-Allow-Origin", "*");
  resp.headers.emplace_back("Access-Control-Expose-Headers",
                            "X-NEA-Keep, X-NEA-Load, X-NEA-Discard, X-NEA-Bytes-Read, X-NEA-Switch-Ms, "
                            "X-NEA-Width, X-NEA-Height, X-NEA-Summary");
  return resp;
}

ServiceResponse ExplorerService::manifest() const {
  const auto& h = reader_->header();
  const auto& d = h.shape.volume_dims;
  const auto& b = h.spec.block_dims;
  json reduction{{"kind", to_string(h.reduction.kind)}};
  if (h.reduction.kind == ReductionKind::Pca) reduction["components"] = h.reduction.components;
  if (h.reduction.kind == ReductionKind::Wavelet) reduction["quality"] = h.reduction.quality;
  return json_response(200, json{{"runs", h.shape.runs},
                                 {"timesteps", h.shape.timesteps},
                                 {"dims", {d.x, d.y, d.z}},
                                 {"block_dims", {b.x, b.y, b.z}},
                                 {"grid_dims", {h.grid.x, h.grid.y, h.grid.z}},
                                 {"decimals", h.spec.decimals},
                                 {"reduction", reduction},
                                 {"value_peak", h.shape.value_peak},
                                 {"b_rem", h.b_rem},
                                 {"b_tot", h.b_tot}});
}

ServiceResponse ExplorerService::create_session(const ServiceRequest& req) {
  const auto id = param_or(req, "session", "");
  if (id.empty()) return error_response(400, "missing parameter 'session'");
  if (!find_session(id, true)) return error_response(503, "session limit reached");
  return json_response(200, json{{"session", id}});
}

namespace {

void check_coord(const CodebookHeader& h, EnsembleCoordinate c) {
  if (c.r >= h.shape.runs || c.t >= h.shape.timesteps) {
    fail(Errc::OutOfRange, "coordinate (" + std::to_string(c.r) + "," + std::to_string(c.t) +
                               ") outside the ensemble");
  }
}

}  // namespace

ServiceResponse ExplorerService::slice(const ServiceRequest& req) {
  const auto id = param_or(req, "session", "");
  if (id.empty()) return error_response(400, "missing parameter 'session'");
  const EnsembleCoordinate c{param_u32(req, "r"), param_u32(req, "t")};
  const auto axis = param_or(req, "axis", "z");
  const auto index = param_u32(req, "index");
  const auto& h = reader_->header();
  check_coord(h, c);
  const Dims3 d = h.shape.volume_dims;
  std::uint32_t limit = 0, width = 0, height = 0;
  if (axis == "z") {
    limit = d.z, width = d.x, height = d.y;
  } else if (axis == "y") {
    limit = d.y, width = d.x, height = d.z;
  } else if (axis == "x") {
    limit = d.x, width = d.y, height = d.z;
  } else {
    return error_response(400, "axis must be x, y or z");
  }
  if (index >= limit) fail(Errc::OutOfRange, "slice index " + std::to_string(index) + " outside axis " + axis);

  auto session = find_session(id, true);
  if (!session) return error_response(503, "session limit reached");
  std::lock_guard lock(session->mutex);
  auto& ws = session->ws;
  SwitchTelemetry tel;
  tel.coord = c;
  if (!ws.current() || *ws.current() != c) {
    auto switched = ws.switch_to(c);
    tel = switched.telemetry;
    session->volume = std::move(switched.volume);
    if (options_.telemetry_log) options_.telemetry_log(tel.to_json());
  } else {
    tel.keep = ws.resident_blocks();
  }
  const Volume& v = session->volume;
  std::vector<float> plane(std::size_t{width} * height);
  for (std::uint32_t row = 0; row < height; ++row)
    for (std::uint32_t col = 0; col < width; ++col) {
      std::size_t at = 0;
      if (axis == "z") at = v.index(col, row, index);
      else if (axis == "y") at = v.index(col, index, row);
      else at = v.index(index, col, row);
      plane[std::size_t{row} * width + col] = v.data[at];
    }
  ServiceResponse resp;
  resp.content_type = "application/octet-stream";
  resp.body = float_bytes(plane);
  resp.headers = {{"X-NEA-Keep", std::to_string(tel.keep)},
                  {"X-NEA-Load", std::to_string(tel.load)},
                  {"X-NEA-Discard", std::to_string(tel.discard)},
                  {"X-NEA-Bytes-Read", std::to_string(tel.bytes_read)},
                  {"X-NEA-Switch-Ms", std::to_string(tel.wall_ms)},
                  {"X-NEA-Width", std::to_string(width)},
                  {"X-NEA-Height", std::to_string(height)}};
  return resp;
}

ServiceResponse ExplorerService::volume(const ServiceRequest& req) {
  const auto id = param_or(req, "session", "");
  if (id.empty()) return error_response(400, "missing parameter 'session'");
  const EnsembleCoordinate c{param_u32(req, "r"), param_u32(req, "t")};
  check_coord(reader_->header(), c);
  auto session = find_session(id, true);
  if (!session) return error_response(503, "session limit reached");
  std::lock_guard lock(session->mutex);
  if (!session->ws.current() || *session->ws.current() != c) {
    auto switched = session->ws.switch_to(c);
    session->volume = std::move(switched.volume);
    if (options_.telemetry_log) options_.telemetry_log(switched.telemetry.to_json());
  }
  ServiceResponse resp;
  resp.content_type = "application/octet-stream";
  resp.body = float_bytes(session->volume.data);
  return resp;
}

ServiceResponse ExplorerService::agreement(const ServiceRequest& req) {
  const EnsembleCoordinate c{param_u32(req, "r"), param_u32(req, "t")};
  check_coord(reader_->header(), c);
  const auto id = param_or(req, "session", "");
  if (!id.empty()) find_session(id, true);
  const auto grid = compute_agreement(*reader_, c, options_.exec);
  ServiceResponse resp;
  resp.content_type = "application/octet-stream";
  resp.body = float_bytes(grid.values);
  const json summary{{"min", grid.min()},
                     {"mean", grid.mean()},
                     {"runs", grid.runs},
                     {"grid_dims", {grid.grid.x, grid.grid.y, grid.grid.z}}};
  resp.headers = {{"X-NEA-Summary", summary.dump()}};
  return resp;
}

ServiceResponse ExplorerService::stats(const ServiceRequest& req) {
  const auto id = param_or(req, "session", "");
  auto session = id.empty() ? nullptr : find_session(id, false);
  if (!session) return error_response(404, "unknown session '" + id + "'");
  std::lock_guard lock(session->mutex);
  const auto& ws = session->ws;
  const auto& k = ws.counters();
  json current = nullptr;
  if (ws.current()) current = {ws.current()->r, ws.current()->t};
  return json_response(200, json{{"session", id},
                                 {"switches", k.switches},
                                 {"loads", k.loads},
                                 {"discards", k.discards},
                                 {"keeps", k.keeps},
                                 {"bytes_read", k.bytes_read},
                                 {"resident_blocks", ws.resident_blocks()},
                                 {"resident_bytes", ws.resident_bytes()},
                                 {"current", current}});
}

struct HttpServer::Impl {
  ExplorerService* service;
  httplib::Server server;
};

HttpServer::HttpServer(ExplorerService& service) : impl_(std::make_unique<Impl>()) {
  impl_->service = &service;
  auto dispatch = [svc = &service](const httplib::Request& in, httplib::Response& out) {
    ServiceRequest req;
    req.method = in.method;
    req.path = in.path;
    for (const auto& [k, v] : in.params) req.params.emplace(k, v);
    const auto resp = svc->handle(req);
    out.status = resp.status;
    for (const auto& [k, v] : resp.headers) out.set_header(k, v);
    out.set_content(resp.body, resp.content_type);
  };
  impl_->server.Get(R"(/.*)", dispatch);
  impl_->server.Post(R"(/.*)", dispatch);
  impl_->server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& out) {
    out.set_header("Access-Control-Allow-Origin", "*");
    out.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    out.set_header("Access-Control-Allow-Headers", "Content-Type");
    out.status = 204;
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) fail(Errc::Io, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) fail(Errc::Io, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace nea
