#include "nqr/http_server.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "nqr/error.hpp"

namespace nqr {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse:
    case ErrorCode::kVocabulary:
    case ErrorCode::kUnsupportedQuery:
    case ErrorCode::kMissingEntity:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kUndefinedMetric: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kLoad:
    case ErrorCode::kIo: return 500;
  }
  return 500;
}

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, status, json{{"code", code}, {"message", message}});
}

std::size_t query_size(const httplib::Request& req, const char* key, std::size_t fallback, std::size_t max) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  try {
    std::size_t pos = 0;
    const long long n = std::stoll(v, &pos);
    if (pos != v.size() || n < 0) throw std::invalid_argument(v);
    return std::min<std::size_t>(static_cast<std::size_t>(n), max);
  } catch (const std::exception&) {
    fail(ErrorCode::kInvalidArgument, std::string("query parameter '") + key + "' must be a non-negative integer");
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("request body is not JSON: ") + e.what());
  }
}

template <typename F>
httplib::Server::Handler guarded(F&& f) {
  return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, to_string(ErrorCode::kParse), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  SessionService& service;
  HttpOptions options;
  httplib::Server server;
  int port = -1;

  Impl(SessionService& s, HttpOptions o) : service(s), options(std::move(o)) { routes(); }

  void routes() {
    if (options.cors) {
      server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                  {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                                  {"Access-Control-Allow-Headers", "Content-Type"}});
      server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }
    if (!options.static_dir.empty()) server.set_mount_point("/", options.static_dir);
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      send_error(res, res.status, res.status == 404 ? "not_found" : "error", "no route for " + req.method + " " + req.path);
    });

    server.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
                 send_json(res, 200, json{{"status", "ok"}});
               }));

    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  CreateSessionRequest r;
                  if (body.contains("query_id") && !body.at("query_id").is_null()) {
                    r.query_id = body.at("query_id").get<QueryId>();
                  }
                  if (body.contains("query") && !body.at("query").is_null()) {
                    r.query = body.at("query").get<QueryGraph>();
                  }
                  if (body.contains("reranker")) r.reranker = body.at("reranker").get<RerankerChoice>();
                  const auto info = service.create(r);
                  json out = info;
                  out["ranking"] = service.ranking(info.id, query_size(req, "top_k", 20, 100000), 0);
                  send_json(res, 201, out);
                }));

    server.Get(R"(/sessions/([0-9a-fA-F]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, 200, service.info(req.matches[1]));
               }));

    server.Get(R"(/sessions/([0-9a-fA-F]+)/ranking)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto top_k = query_size(req, "top_k", 20, 100000);
                 const auto offset = query_size(req, "offset", 0, std::numeric_limits<std::size_t>::max());
                 send_json(res, 200, service.ranking(req.matches[1], top_k, offset));
               }));

    server.Post(R"(/sessions/([0-9a-fA-F]+)/preferences)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  if (!body.contains("entity") || !body.contains("label")) {
                    fail(ErrorCode::kInvalidArgument, "body needs 'entity' and 'label'");
                  }
                  const auto entity = body.at("entity").get<EntityId>();
                  const auto label = body.at("label").get<int>();
                  if (label != 0 && label != 1) fail(ErrorCode::kInvalidArgument, "label must be 0 or 1");
                  std::optional<std::uint64_t> expected;
                  if (body.contains("expected_revision") && !body.at("expected_revision").is_null()) {
                    expected = body.at("expected_revision").get<std::uint64_t>();
                  }
                  auto page = service.submit(req.matches[1], entity, static_cast<std::uint8_t>(label), expected);
                  if (req.has_param("top_k")) {
                    page = service.ranking(req.matches[1], query_size(req, "top_k", 20, 100000), 0);
                  }
                  send_json(res, 200, page);
                }));

    server.Delete(R"(/sessions/([0-9a-fA-F]+)/preferences/last)",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                    std::optional<std::uint64_t> expected;
                    if (req.has_param("expected_revision")) {
                      expected = query_size(req, "expected_revision", 0, std::numeric_limits<std::size_t>::max());
                    }
                    send_json(res, 200, service.undo(req.matches[1], expected));
                  }));

    server.Get("/queries", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto& r = service.resources();
                 const auto offset = query_size(req, "offset", 0, std::numeric_limits<std::size_t>::max());
                 const auto limit = query_size(req, "limit", 100, 10000);
                 std::optional<Split> split;
                 if (req.has_param("split")) split = parse_split(req.get_param_value("split"));
                 json rows = json::array();
                 std::size_t total = 0;
                 if (r.dataset) {
                   for (const auto& q : r.dataset->instances) {
                     if (split && q.split != *split) continue;
                     if (r.scores && !r.scores->find(q.id)) continue;
                     if (total >= offset && rows.size() < limit) {
                       rows.push_back({{"id", q.id},
                                       {"split", to_string(q.split)},
                                       {"structure", to_string(q.query.structure)},
                                       {"answers", q.answers.answers.size()},
                                       {"preference_sets", q.preference_sets.size()},
                                       {"query", q.query}});
                     }
                     ++total;
                   }
                 }
                 send_json(res, 200, json{{"total", total}, {"offset", offset}, {"queries", rows}});
               }));

    server.Get("/entities", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto& r = service.resources();
                 const auto offset = query_size(req, "offset", 0, std::numeric_limits<std::size_t>::max());
                 const auto limit = query_size(req, "limit", 1000, 100000);
                 const std::string needle = req.has_param("q") ? req.get_param_value("q") : "";
                 json rows = json::array();
                 std::size_t total = 0;
                 if (r.entities) {
                   const auto& names = r.entities->names();
                   for (std::size_t id = 0; id < names.size(); ++id) {
                     if (!needle.empty() && names[id].find(needle) == std::string::npos) continue;
                     if (total >= offset && rows.size() < limit) rows.push_back({{"id", id}, {"name", names[id]}});
                     ++total;
                   }
                 }
                 send_json(res, 200, json{{"total", total}, {"offset", offset}, {"entities", rows}});
               }));

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        send_error(res, res.status, res.status == 404 ? "not_found" : "http", httplib::status_message(res.status));
      }
    });
  }
};

HttpServer::HttpServer(SessionService& service, HttpOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  if (impl_->options.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(impl_->options.host);
  } else {
    impl_->port = impl_->server.bind_to_port(impl_->options.host, impl_->options.port) ? impl_->options.port : -1;
  }
  if (impl_->port < 0) {
    fail(ErrorCode::kIo, "cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  }
  return impl_->port;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace nqr
