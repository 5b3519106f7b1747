#include "andor/http_service.hpp"

#include <chrono>
#include <stdexcept>

#include <httplib.h>

namespace andor {

using nlohmann::json;

namespace {

constexpr auto kAckTimeout = std::chrono::seconds(30);
constexpr auto kStreamPoll = std::chrono::milliseconds(250);

std::uint64_t since_param(const httplib::Request& req) {
  if (!req.has_param("since")) return 0;
  try {
    return std::stoull(req.get_param_value("since"));
  } catch (const std::exception&) {
    throw std::invalid_argument("since must be a non-negative integer");
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

HttpService::HttpService(SnapshotBoard& board, EventLog& log, Mailbox& mailbox)
    : board_(board), log_(log), mailbox_(mailbox), server_(std::make_unique<httplib::Server>()) {
  routes();
}

HttpService::~HttpService() { stop(); }

void HttpService::routes() {
  server_->set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server_->Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server_->Get("/api/snapshot", [this](const httplib::Request&, httplib::Response& res) {
    json snap = board_.snapshot();
    if (snap.is_null()) {
      send_json(res, 503, {{"error", "no snapshot published yet"}});
      return;
    }
    send_json(res, 200, snap);
  });

  server_->Get("/api/events", [this](const httplib::Request& req, httplib::Response& res) {
    std::uint64_t since = 0;
    try {
      since = since_param(req);
    } catch (const std::invalid_argument& e) {
      send_json(res, 400, {{"error", e.what()}});
      return;
    }
    std::string body;
    for (const std::string& line : log_.since(since)) body += line + "\n";
    res.set_content(body, "application/x-ndjson");
  });

  server_->Get("/api/events/stream", [this](const httplib::Request& req, httplib::Response& res) {
    std::uint64_t since = 0;
    try {
      since = since_param(req);
    } catch (const std::invalid_argument& e) {
      send_json(res, 400, {{"error", e.what()}});
      return;
    }
    auto cursor = std::make_shared<std::uint64_t>(since);
    res.set_chunked_content_provider("application/x-ndjson", [this, cursor](std::size_t, httplib::DataSink& sink) {
      while (!shutdown_requested_) {
        log_.wait_for(*cursor, kStreamPoll);
        auto lines = log_.since(*cursor);
        for (const std::string& line : lines) {
          std::string chunk = line + "\n";
          if (!sink.is_writable() || !sink.write(chunk.data(), chunk.size())) return false;
        }
        *cursor += lines.size();
        if (lines.empty() && log_.closed()) break;
        if (!lines.empty()) return true;
      }
      sink.done();
      return true;
    });
  });

  server_->Post("/api/interventions", [this](const httplib::Request& req, httplib::Response& res) {
    Intervention intervention;
    try {
      intervention = Intervention::from_json(json::parse(req.body));
    } catch (const std::exception& e) {
      send_json(res, 400, {{"accepted", false}, {"reason", e.what()}});
      return;
    }
    auto ack = mailbox_.submit(std::move(intervention));
    if (ack.wait_for(kAckTimeout) != std::future_status::ready) {
      send_json(res, 504, {{"accepted", false}, {"reason", "engine did not reach a step boundary in time"}});
      return;
    }
    const InterventionAck& a = ack.get();
    send_json(res, a.accepted ? 200 : 409, {{"accepted", a.accepted}, {"reason", a.reason}});
  });

  server_->Post("/api/shutdown", [this](const httplib::Request&, httplib::Response& res) {
    {
      std::lock_guard lock(mutex_);
      shutdown_requested_ = true;
    }
    shutdown_cv_.notify_all();
    send_json(res, 200, {{"ok", true}});
  });
}

int HttpService::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  return bound;
}

void HttpService::stop() {
  {
    std::lock_guard lock(mutex_);
    shutdown_requested_ = true;
  }
  shutdown_cv_.notify_all();
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void HttpService::wait_for_shutdown() {
  std::unique_lock lock(mutex_);
  shutdown_cv_.wait(lock, [this] { return shutdown_requested_.load(); });
}

}  // namespace andor
