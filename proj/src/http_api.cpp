#include "zoterag/http_api.hpp"

#include <httplib.h>

#include <thread>

#include "web_resource.hpp"
#include "zoterag/logging.hpp"

namespace zoterag {

using nlohmann::json;

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParams:
    case ErrorCode::kInvalidLibraryId:
    case ErrorCode::kEmptyQuestion:
    case ErrorCode::kEmptyText:
      return 400;
    case ErrorCode::kUnknownSession:
    case ErrorCode::kUnknownJob:
    case ErrorCode::kLibraryNotFound:
      return 404;
    case ErrorCode::kIndexStale:
    case ErrorCode::kNoIndex:
    case ErrorCode::kBusy:
      return 409;
    case ErrorCode::kAuthFailed:
    case ErrorCode::kTransport:
    case ErrorCode::kProviderError:
    case ErrorCode::kContextOverflow:
    case ErrorCode::kDimMismatch:
      return 502;
    default:
      return 500;
  }
}

struct HttpApi::Impl {
  explicit Impl(ChatService& s) : service(s) {}

  ChatService& service;
  httplib::Server server;
  std::thread thread;
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(logging::redact(body.dump()), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, http_status_for(code),
            {{"error", std::string(to_string(code))}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalidParams, "request body is not valid JSON");
  }
}

// Wraps a handler so every failure becomes a JSON error response.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, ErrorCode::kInvalidParams, e.what());
    } catch (const std::exception& e) {
      logging::get()->error("unhandled error on {} {}: {}", req.method, req.path,
                            e.what());
      send_json(res, 500, {{"error", "Internal"}, {"message", "internal error"}});
    }
  };
}

}  // namespace

HttpApi::HttpApi(ChatService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  ChatService& svc = service;

  srv.Get("/", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(std::string(resources::kIndexHtml), "text/html; charset=utf-8");
  });
  srv.Get("/index.html", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(std::string(resources::kIndexHtml), "text/html; charset=utf-8");
  });

  srv.Get("/api/health", guarded([](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  }));

  srv.Get("/api/config", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, svc.config_json());
  }));

  srv.Put("/api/config", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    svc.update_config(parse_body(req));
    send_json(res, 200, svc.config_json());
  }));

  srv.Post("/api/config/chunking",
           guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             const auto cfg = svc.config();
             const std::size_t size =
                 body.contains("chunk_size") ? body.at("chunk_size").get<std::size_t>()
                                             : cfg.chunking.chunk_size;
             const std::size_t overlap =
                 body.contains("chunk_overlap") ? body.at("chunk_overlap").get<std::size_t>()
                                                : cfg.chunking.chunk_overlap;
             const bool stale = svc.apply_chunking_params(size, overlap);
             send_json(res, 200, {{"stale", stale}, {"config", svc.config_json()}});
           }));

  srv.Post("/api/ingest", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const std::string job = svc.start_ingest(parse_body(req));
    send_json(res, 202, {{"job_id", job}});
  }));

  srv.Get(R"(/api/ingest/([^/]+))",
          guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, svc.ingest_report(req.matches[1]).to_json());
          }));

  srv.Post("/api/sessions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    std::string requested;
    if (body.contains("session_id")) requested = body.at("session_id").get<std::string>();
    if (!requested.empty() && !valid_session_id(requested)) {
      throw Error(ErrorCode::kInvalidParams,
                  "session id must be 1-64 characters of [A-Za-z0-9_-]");
    }
    send_json(res, 201, {{"session_id", svc.create_session(requested)}});
  }));

  srv.Post("/api/ask", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    if (!body.is_object()) throw Error(ErrorCode::kInvalidParams, "body must be an object");
    std::string session_id;
    if (body.contains("session_id") && !body.at("session_id").is_null()) {
      session_id = body.at("session_id").get<std::string>();
    } else {
      session_id = svc.create_session();
    }
    if (!body.contains("question") || !body.at("question").is_string()) {
      throw Error(ErrorCode::kEmptyQuestion, "question must be a nonempty string");
    }
    const json overrides = body.value("overrides", json::object());
    json out = to_json(svc.ask(session_id, body.at("question").get<std::string>(), overrides));
    out["session_id"] = session_id;
    send_json(res, 200, out);
  }));

  srv.Get(R"(/api/sessions/([^/]+)/history)",
          guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            json turns = json::array();
            for (const auto& t : svc.history(id)) turns.push_back(t.to_json());
            send_json(res, 200, {{"session_id", id}, {"turns", turns}});
          }));

  srv.Get(R"(/api/sessions/([^/]+)/history/export)",
          guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            const std::string body = logging::redact(svc.export_history(id));
            res.set_header("Content-Disposition",
                           "attachment; filename=\"chat-history-" + id + ".txt\"");
            res.set_content(body, "text/plain; charset=utf-8");
          }));

  srv.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    logging::get()->info("{} {} -> {}", req.method, req.path, res.status);
  });
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
  int bound = -1;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (impl_->server.bind_to_port(host, port)) {
    bound = port;
  }
  if (bound <= 0) {
    throw Error(ErrorCode::kIoError,
                "cannot listen on " + host + ":" + std::to_string(port));
  }
  return bound;
}

void HttpApi::listen() { impl_->server.listen_after_bind(); }

int HttpApi::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  impl_->thread = std::thread([this] { listen(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpApi::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace zoterag
