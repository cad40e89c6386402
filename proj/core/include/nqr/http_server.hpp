#pragma once

#include <memory>
#include <string>

#include "nqr/error.hpp"
#include "nqr/session.hpp"

namespace nqr {

struct HttpOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string static_dir;  // served at / when set (the web UI build)
  bool cors = true;
};

// JSON API over a SessionService:
//   POST   /sessions                         {query_id | query, reranker}
//   GET    /sessions/{id}
//   GET    /sessions/{id}/ranking?top_k=&offset=
//   POST   /sessions/{id}/preferences        {entity, label, expected_revision}
//   DELETE /sessions/{id}/preferences/last   [?expected_revision=]
//   GET    /queries?split=&offset=&limit=
//   GET    /entities?offset=&limit=&q=
//   GET    /health
// Errors are {"code": ..., "message": ...} with a 4xx/5xx status.
class HttpServer {
 public:
  HttpServer(SessionService& service, HttpOptions options);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and returns the bound port; throws kIo on failure.
  int bind();
  // Blocks until stop().
  void serve();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

int http_status(ErrorCode code);

}  // namespace nqr
