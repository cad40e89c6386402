#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nqr/cosine.hpp"
#include "nqr/dataset.hpp"
#include "nqr/kg.hpp"
#include "nqr/metrics.hpp"
#include "nqr/model.hpp"
#include "nqr/scores.hpp"

namespace nqr {

enum class RerankerKind { kIdentity, kCosine, kNqr };

struct RerankerChoice {
  RerankerKind kind = RerankerKind::kIdentity;
  CosineConfig cosine;
};

void to_json(nlohmann::json& j, const RerankerChoice& c);
void from_json(const nlohmann::json& j, RerankerChoice& c);

// Read-only state shared by every session.
struct SessionResources {
  std::shared_ptr<const Vocabulary> entities;       // display names; may be null
  std::shared_ptr<const KnowledgeGraph> graph;      // enables ad-hoc queries
  std::shared_ptr<const KnowledgeGraph> train_graph;
  std::shared_ptr<const Dataset> dataset;           // known queries + ground truth
  std::shared_ptr<const ScoreMatrix> scores;        // base scores by query id
  std::shared_ptr<const SimilarityCache> similarity;
  std::shared_ptr<const Reranker> nqr;              // loaded checkpoint, if any
  SyntheticScoreOptions adhoc_scores;               // base scores for ad-hoc queries
  bool normalize_adhoc = true;
  std::filesystem::path storage;                    // empty: memory only
};

struct CreateSessionRequest {
  std::optional<QueryId> query_id;
  std::optional<QueryGraph> query;
  RerankerChoice reranker;
};

struct RankedRow {
  std::size_t rank = 0;  // 1-based
  EntityId entity = 0;
  std::string name;
  double adjusted = 0.0;
  double base = 0.0;
  std::optional<std::uint8_t> label;
  long rank_delta = 0;  // previous rank - current rank
};

struct RankingPage {
  std::string session;
  std::uint64_t revision = 0;
  std::size_t total = 0;
  std::size_t offset = 0;
  std::vector<RankedRow> rows;
};

struct StepRecord {
  std::uint64_t revision = 0;
  std::optional<double> pa;  // over the labels given so far
  RankingMetrics metrics;
};

struct SessionInfo {
  std::string id;
  std::optional<QueryId> query_id;
  QueryGraph query;
  RerankerChoice reranker;
  std::string created;
  std::string updated;
  std::uint64_t revision = 0;
  PreferenceSet preferences;
  bool has_ground_truth = false;
  std::vector<StepRecord> trace;
};

void to_json(nlohmann::json& j, const RankedRow& r);
void to_json(nlohmann::json& j, const RankingPage& p);
void to_json(nlohmann::json& j, const SessionInfo& s);

// Interactive sessions. Every mutation reranks the base scores with the
// whole accumulated preference list, appends an event to the session log
// and publishes a new immutable snapshot; readers only touch snapshots.
class SessionService {
 public:
  explicit SessionService(SessionResources resources);
  ~SessionService();

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  SessionInfo create(const CreateSessionRequest& request);
  RankingPage submit(const std::string& id, EntityId entity, std::uint8_t label,
                     std::optional<std::uint64_t> expected_revision = {});
  RankingPage undo(const std::string& id, std::optional<std::uint64_t> expected_revision = {});
  RankingPage ranking(const std::string& id, std::size_t top_k = 20, std::size_t offset = 0) const;
  SessionInfo info(const std::string& id) const;
  std::vector<std::string> list() const;

  // Rebuilds sessions from the event logs under resources.storage.
  std::size_t restore();
  // Replays one session's log from disk into a fresh, unregistered state and
  // returns its full ranking.
  RankingPage replay(const std::string& id) const;

  const SessionResources& resources() const { return resources_; }

 private:
  struct Session;
  struct Snapshot;

  std::shared_ptr<Session> find(const std::string& id) const;
  std::shared_ptr<Session> build(const nlohmann::json& create_event) const;
  void apply_submit(Session& s, EntityId entity, std::uint8_t label) const;
  void apply_undo(Session& s) const;
  void publish(Session& s) const;
  void append_event(const Session& s, const nlohmann::json& event) const;
  RankingPage page(const Session& s, const Snapshot& snap, std::size_t top_k, std::size_t offset) const;
  const Reranker& reranker_for(const RerankerChoice& c) const;

  SessionResources resources_;
  IdentityReranker identity_;
  mutable std::mutex registry_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  mutable std::mutex cosine_mu_;
  mutable std::map<std::pair<double, double>, std::shared_ptr<CosineReranker>> cosine_;
};

}  // namespace nqr
