#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "nqr/cosine.hpp"
#include "nqr/error.hpp"
#include "nqr/http_server.hpp"
#include "nqr/session.hpp"

namespace nqr {
namespace {

using nlohmann::json;

class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    static const auto w = testing::tiny_world(12);
    world_ = &w;
    SessionResources r;
    r.entities = std::make_shared<const Vocabulary>(w.synth.graph.entities());
    r.graph = std::make_shared<const KnowledgeGraph>(w.synth.graph);
    r.dataset = std::make_shared<const Dataset>(w.dataset);
    r.scores = std::make_shared<const ScoreMatrix>(w.synth.scores);
    r.similarity = std::make_shared<const SimilarityCache>(w.qa);
    service_ = std::make_unique<SessionService>(r);
    server_ = std::make_unique<HttpServer>(*service_, HttpOptions{"127.0.0.1", 0, "", true});
    port_ = server_->bind();
    thread_ = std::thread([this] { server_->serve(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void TearDown() override {
    server_->stop();
    thread_.join();
  }

  std::string create_session(const std::string& kind = "cosine") {
    const json body{{"query_id", world_->dataset.split(Split::kTest).front()->id}, {"reranker", {{"kind", kind}}}};
    auto res = client_->Post("/sessions", body.dump(), "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 201);
    return json::parse(res->body).at("id").get<std::string>();
  }

  const testing::TinyWorld* world_ = nullptr;
  std::unique_ptr<SessionService> service_;
  std::unique_ptr<HttpServer> server_;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

TEST_F(HttpTest, Health) {
  auto res = client_->Get("/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_TRUE(server_->running());
}

TEST_F(HttpTest, SessionLifecycle) {
  const auto id = create_session();
  auto page = client_->Get(("/sessions/" + id + "/ranking?top_k=5").c_str());
  ASSERT_TRUE(page);
  EXPECT_EQ(page->status, 200);
  EXPECT_EQ(json::parse(page->body).at("rows").size(), 5u);

  const json pref{{"entity", 3}, {"label", 1}, {"expected_revision", 0}};
  auto sub = client_->Post(("/sessions/" + id + "/preferences").c_str(), pref.dump(), "application/json");
  ASSERT_TRUE(sub);
  EXPECT_EQ(sub->status, 200);
  EXPECT_EQ(json::parse(sub->body).at("revision"), 1);

  auto stale = client_->Post(("/sessions/" + id + "/preferences").c_str(),
                             json{{"entity", 4}, {"label", 0}, {"expected_revision", 0}}.dump(), "application/json");
  ASSERT_TRUE(stale);
  EXPECT_EQ(stale->status, 409);
  EXPECT_EQ(json::parse(stale->body).at("code"), "conflict");

  auto info = client_->Get(("/sessions/" + id).c_str());
  ASSERT_TRUE(info);
  EXPECT_EQ(json::parse(info->body).at("revision"), 1);

  auto undo = client_->Delete(("/sessions/" + id + "/preferences/last").c_str());
  ASSERT_TRUE(undo);
  EXPECT_EQ(undo->status, 200);
  EXPECT_EQ(json::parse(undo->body).at("revision"), 0);
  auto again = client_->Delete(("/sessions/" + id + "/preferences/last").c_str());
  EXPECT_EQ(again->status, 409);
}

TEST_F(HttpTest, ErrorsAreJson) {
  auto missing = client_->Get("/sessions/zzz/ranking");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_TRUE(json::parse(missing->body).contains("message"));
  auto unknown = client_->Get("/sessions/abc123/ranking");
  ASSERT_TRUE(unknown);
  EXPECT_EQ(unknown->status, 404);
  EXPECT_EQ(json::parse(unknown->body).at("code"), "not_found");
  auto bad = client_->Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
}

TEST_F(HttpTest, QueriesAndEntities) {
  auto q = client_->Get("/queries?split=test&limit=3");
  ASSERT_TRUE(q);
  EXPECT_EQ(q->status, 200);
  const auto jq = json::parse(q->body);
  EXPECT_LE(jq.at("queries").size(), 3u);
  auto e = client_->Get("/entities?limit=4");
  ASSERT_TRUE(e);
  EXPECT_EQ(e->status, 200);
  EXPECT_EQ(json::parse(e->body).at("entities").size(), 4u);
}

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status(ErrorCode::kNotFound), 404);
  EXPECT_EQ(http_status(ErrorCode::kConflict), 409);
  EXPECT_EQ(http_status(ErrorCode::kParse), 400);
}

}  // namespace
}  // namespace nqr
