#include "nqr/session.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "nqr/binary_io.hpp"
#include "nqr/error.hpp"

namespace nqr {

namespace fs = std::filesystem;

namespace {

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string random_token() {
  static std::mutex mu;
  static std::mt19937_64 rng = [] {
    std::random_device rd;
    std::seed_seq seq{rd(), rd(), rd(), rd()};
    return std::mt19937_64(seq);
  }();
  std::lock_guard lock(mu);
  return io::hex64(rng()) + io::hex64(rng());
}

bool valid_token(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

std::string_view to_string(RerankerKind k) {
  switch (k) {
    case RerankerKind::kIdentity: return "identity";
    case RerankerKind::kCosine: return "cosine";
    case RerankerKind::kNqr: return "nqr";
  }
  return "identity";
}

}  // namespace

void to_json(nlohmann::json& j, const RerankerChoice& c) {
  j = nlohmann::json{{"kind", to_string(c.kind)}};
  if (c.kind == RerankerKind::kCosine) {
    j["alpha_p"] = c.cosine.alpha_p;
    j["alpha_n"] = c.cosine.alpha_n;
  }
}

void from_json(const nlohmann::json& j, RerankerChoice& c) {
  c = {};
  const std::string kind = j.is_string() ? j.get<std::string>() : j.value("kind", std::string("identity"));
  if (kind == "identity") {
    c.kind = RerankerKind::kIdentity;
  } else if (kind == "cosine") {
    c.kind = RerankerKind::kCosine;
    if (j.is_object()) {
      c.cosine.alpha_p = j.value("alpha_p", c.cosine.alpha_p);
      c.cosine.alpha_n = j.value("alpha_n", c.cosine.alpha_n);
    }
    validate(c.cosine);
  } else if (kind == "nqr") {
    c.kind = RerankerKind::kNqr;
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown reranker '" + kind + "'");
  }
}

void to_json(nlohmann::json& j, const RankedRow& r) {
  j = nlohmann::json{{"rank", r.rank},         {"entity", r.entity}, {"name", r.name},
                     {"adjusted", r.adjusted}, {"base", r.base},     {"rank_delta", r.rank_delta}};
  j["label"] = r.label ? nlohmann::json(*r.label) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const RankingPage& p) {
  j = nlohmann::json{{"session", p.session}, {"revision", p.revision}, {"total", p.total},
                     {"offset", p.offset},   {"rows", p.rows}};
}

void to_json(nlohmann::json& j, const SessionInfo& s) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& r : s.trace) {
    trace.push_back({{"revision", r.revision},
                     {"pa", r.pa ? nlohmann::json(*r.pa) : nlohmann::json(nullptr)},
                     {"mrr", r.metrics.mrr},
                     {"hits1", r.metrics.hits1},
                     {"hits3", r.metrics.hits3},
                     {"hits10", r.metrics.hits10}});
  }
  nlohmann::json prefs = nlohmann::json::array();
  for (const auto& p : s.preferences.pairs) prefs.push_back({{"entity", p.entity}, {"label", p.label}});
  j = nlohmann::json{{"id", s.id},
                     {"query", s.query},
                     {"reranker", s.reranker},
                     {"created", s.created},
                     {"updated", s.updated},
                     {"revision", s.revision},
                     {"preferences", prefs},
                     {"has_ground_truth", s.has_ground_truth},
                     {"trace", trace}};
  j["query_id"] = s.query_id ? nlohmann::json(*s.query_id) : nlohmann::json(nullptr);
}

struct SessionService::Snapshot {
  std::uint64_t revision = 0;
  PreferenceSet preferences;
  std::vector<double> adjusted;
  std::vector<EntityId> order;
  std::vector<long> delta;  // per entity
  std::vector<StepRecord> trace;
  std::string updated;
};

struct SessionService::Session {
  std::string id;
  std::optional<QueryId> query_id;
  QueryGraph query;
  RerankerChoice reranker;
  std::string created;
  nlohmann::json create_event;
  std::shared_ptr<const std::vector<double>> base;
  std::vector<EntityId> answers;
  bool has_truth = false;

  std::mutex write_mu;  // serializes mutations
  PreferenceSet preferences;
  std::vector<StepRecord> trace;
  std::vector<std::uint32_t> rank_of;

  mutable std::mutex snap_mu;  // guards the pointer swap only
  std::shared_ptr<const Snapshot> snapshot;

  std::shared_ptr<const Snapshot> current() const {
    std::lock_guard lock(snap_mu);
    return snapshot;
  }
};

SessionService::SessionService(SessionResources resources) : resources_(std::move(resources)) {
  if (!resources_.storage.empty()) fs::create_directories(resources_.storage);
}

SessionService::~SessionService() = default;

const Reranker& SessionService::reranker_for(const RerankerChoice& c) const {
  switch (c.kind) {
    case RerankerKind::kIdentity: return identity_;
    case RerankerKind::kNqr:
      if (!resources_.nqr) fail(ErrorCode::kInvalidArgument, "no NQR checkpoint loaded");
      return *resources_.nqr;
    case RerankerKind::kCosine: {
      if (!resources_.similarity) fail(ErrorCode::kInvalidArgument, "no embedding table loaded for cosine reranking");
      std::lock_guard lock(cosine_mu_);
      auto& slot = cosine_[{c.cosine.alpha_p, c.cosine.alpha_n}];
      if (!slot) slot = std::make_shared<CosineReranker>(resources_.similarity, c.cosine);
      return *slot;
    }
  }
  return identity_;
}

std::shared_ptr<SessionService::Session> SessionService::build(const nlohmann::json& ev) const {
  auto s = std::make_shared<Session>();
  s->id = ev.at("id").get<std::string>();
  s->created = ev.at("created").get<std::string>();
  s->reranker = ev.at("reranker").get<RerankerChoice>();
  s->create_event = ev;
  reranker_for(s->reranker);  // fail early on an unavailable reranker

  if (ev.contains("query_id") && !ev.at("query_id").is_null()) {
    const QueryId qid = ev.at("query_id").get<QueryId>();
    if (!resources_.scores || !resources_.scores->find(qid)) {
      fail(ErrorCode::kNotFound, "no base scores for query " + std::to_string(qid));
    }
    s->query_id = qid;
    const auto row = resources_.scores->at(qid);
    s->base = std::make_shared<const std::vector<double>>(row.begin(), row.end());
    if (resources_.dataset) {
      for (const auto& inst : resources_.dataset->instances) {
        if (inst.id == qid) {
          s->query = inst.query;
          s->answers = inst.answers.answers;
          s->has_truth = !s->answers.empty();
          break;
        }
      }
    }
  } else if (ev.contains("query") && !ev.at("query").is_null()) {
    s->query = ev.at("query").get<QueryGraph>();
    if (!resources_.graph) fail(ErrorCode::kNotFound, "ad-hoc queries need a loaded graph");
    validate(s->query, resources_.graph.get());
    const auto answers = answer_query(*resources_.graph, resources_.train_graph.get(), s->query);
    SyntheticScoreOptions so = resources_.adhoc_scores;
    io::Fnv1a h;
    h.update(nlohmann::json(s->query).dump());
    so.seed ^= h.digest();
    auto base = synthetic_scores(resources_.graph->num_entities(), answers.answers, so);
    if (resources_.normalize_adhoc) minmax_normalize(base);
    s->base = std::make_shared<const std::vector<double>>(std::move(base));
    s->answers = answers.answers;
    s->has_truth = !s->answers.empty();
  } else {
    fail(ErrorCode::kInvalidArgument, "session needs a query_id or a query");
  }
  if (resources_.similarity && resources_.similarity->table().size() != s->base->size() &&
      s->reranker.kind != RerankerKind::kIdentity) {
    fail(ErrorCode::kShapeMismatch, "base scores and embedding table disagree on the entity count");
  }
  s->rank_of.assign(s->base->size(), 0);
  publish(*s);
  return s;
}

void SessionService::publish(Session& s) const {
  auto snap = std::make_shared<Snapshot>();
  snap->revision = s.preferences.pairs.size();
  snap->preferences = s.preferences;
  snap->adjusted = reranker_for(s.reranker).rerank(*s.base, s.preferences);
  const std::size_t n = snap->adjusted.size();
  snap->order.resize(n);
  std::iota(snap->order.begin(), snap->order.end(), 0);
  const auto& adj = snap->adjusted;
  std::stable_sort(snap->order.begin(), snap->order.end(), [&](EntityId a, EntityId b) { return adj[a] > adj[b]; });
  std::vector<std::uint32_t> rank_of(n);
  for (std::size_t i = 0; i < n; ++i) rank_of[snap->order[i]] = static_cast<std::uint32_t>(i + 1);
  snap->delta.resize(n);
  const bool first = !s.snapshot;
  for (std::size_t e = 0; e < n; ++e) {
    snap->delta[e] = first ? 0 : static_cast<long>(s.rank_of[e]) - static_cast<long>(rank_of[e]);
  }
  s.rank_of = std::move(rank_of);

  if (s.has_truth) {
    StepRecord r;
    r.revision = snap->revision;
    const auto pos = s.preferences.positives();
    const auto neg = s.preferences.negatives();
    if (!pos.empty() && !neg.empty()) r.pa = pairwise_accuracy(adj, pos, neg);
    r.metrics = ranking_metrics(adj, s.answers);
    while (!s.trace.empty() && s.trace.back().revision >= r.revision) s.trace.pop_back();
    s.trace.push_back(r);
  }
  snap->trace = s.trace;
  snap->updated = now_iso8601();

  std::lock_guard lock(s.snap_mu);
  s.snapshot = std::move(snap);
}

void SessionService::append_event(const Session& s, const nlohmann::json& event) const {
  if (resources_.storage.empty()) return;
  const fs::path dir = resources_.storage / s.id;
  fs::create_directories(dir);
  std::ofstream out(dir / "events.jsonl", std::ios::app);
  if (!out) fail(ErrorCode::kIo, "cannot append to the event log of session " + s.id);
  out << event.dump() << '\n';
  out.flush();
  if (!out) fail(ErrorCode::kIo, "event log write failed for session " + s.id);
}

namespace {

void write_snapshot_file(const fs::path& dir, std::uint64_t revision, const std::vector<double>& adjusted) {
  const fs::path tmp = dir / "snapshot.json.tmp";
  {
    std::ofstream out(tmp);
    if (!out) fail(ErrorCode::kIo, "cannot write " + tmp.string());
    out << nlohmann::json{{"revision", revision}, {"adjusted", adjusted}}.dump() << '\n';
  }
  fs::rename(tmp, dir / "snapshot.json");
}

}  // namespace

void SessionService::apply_submit(Session& s, EntityId entity, std::uint8_t label) const {
  if (label > 1) fail(ErrorCode::kInvalidArgument, "label must be 0 or 1");
  if (entity >= s.base->size()) fail(ErrorCode::kMissingEntity, "unknown entity " + std::to_string(entity));
  for (const auto& p : s.preferences.pairs) {
    if (p.entity == entity) fail(ErrorCode::kConflict, "entity " + std::to_string(entity) + " is already labeled");
  }
  s.preferences.pairs.push_back({entity, label});
  try {
    publish(s);
  } catch (...) {
    s.preferences.pairs.pop_back();
    throw;
  }
}

void SessionService::apply_undo(Session& s) const {
  if (s.preferences.pairs.empty()) fail(ErrorCode::kConflict, "nothing to undo at revision 0");
  const auto last = s.preferences.pairs.back();
  s.preferences.pairs.pop_back();
  try {
    publish(s);
  } catch (...) {
    s.preferences.pairs.push_back(last);
    throw;
  }
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
  std::lock_guard lock(registry_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorCode::kNotFound, "no session '" + id + "'");
  return it->second;
}

SessionInfo SessionService::create(const CreateSessionRequest& request) {
  nlohmann::json ev{{"type", "create"}, {"id", random_token()}, {"created", now_iso8601()},
                    {"reranker", request.reranker}};
  if (request.query_id) {
    ev["query_id"] = *request.query_id;
  } else if (request.query) {
    ev["query"] = *request.query;
  }
  auto s = build(ev);
  append_event(*s, ev);
  if (!resources_.storage.empty()) write_snapshot_file(resources_.storage / s->id, 0, s->current()->adjusted);
  {
    std::lock_guard lock(registry_mu_);
    sessions_[s->id] = s;
  }
  return info(s->id);
}

RankingPage SessionService::submit(const std::string& id, EntityId entity, std::uint8_t label,
                                   std::optional<std::uint64_t> expected_revision) {
  auto s = find(id);
  std::lock_guard lock(s->write_mu);
  const std::uint64_t rev = s->preferences.pairs.size();
  if (expected_revision && *expected_revision != rev) {
    fail(ErrorCode::kConflict, "stale revision " + std::to_string(*expected_revision) + ", session is at " +
                                   std::to_string(rev));
  }
  apply_submit(*s, entity, label);
  append_event(*s, {{"type", "submit"}, {"entity", entity}, {"label", label}, {"revision", rev + 1}});
  const auto snap = s->current();
  if (!resources_.storage.empty()) write_snapshot_file(resources_.storage / id, snap->revision, snap->adjusted);
  return page(*s, *snap, 20, 0);
}

RankingPage SessionService::undo(const std::string& id, std::optional<std::uint64_t> expected_revision) {
  auto s = find(id);
  std::lock_guard lock(s->write_mu);
  const std::uint64_t rev = s->preferences.pairs.size();
  if (expected_revision && *expected_revision != rev) {
    fail(ErrorCode::kConflict, "stale revision " + std::to_string(*expected_revision) + ", session is at " +
                                   std::to_string(rev));
  }
  apply_undo(*s);
  append_event(*s, {{"type", "undo"}, {"revision", rev - 1}});
  const auto snap = s->current();
  if (!resources_.storage.empty()) write_snapshot_file(resources_.storage / id, snap->revision, snap->adjusted);
  return page(*s, *snap, 20, 0);
}

RankingPage SessionService::page(const Session& s, const Snapshot& snap, std::size_t top_k, std::size_t offset) const {
  RankingPage p;
  p.session = s.id;
  p.revision = snap.revision;
  p.total = snap.order.size();
  p.offset = offset;
  std::unordered_map<EntityId, std::uint8_t> labels;
  for (const auto& pair : snap.preferences.pairs) labels[pair.entity] = pair.label;
  for (std::size_t i = offset; i < snap.order.size() && i - offset < top_k; ++i) {
    const EntityId e = snap.order[i];
    RankedRow r;
    r.rank = i + 1;
    r.entity = e;
    if (resources_.entities && e < resources_.entities->size()) r.name = resources_.entities->name(e);
    r.adjusted = snap.adjusted[e];
    r.base = (*s.base)[e];
    if (auto it = labels.find(e); it != labels.end()) r.label = it->second;
    r.rank_delta = snap.delta[e];
    p.rows.push_back(std::move(r));
  }
  return p;
}

RankingPage SessionService::ranking(const std::string& id, std::size_t top_k, std::size_t offset) const {
  auto s = find(id);
  return page(*s, *s->current(), top_k, offset);
}

SessionInfo SessionService::info(const std::string& id) const {
  auto s = find(id);
  const auto snap = s->current();
  SessionInfo out;
  out.id = s->id;
  out.query_id = s->query_id;
  out.query = s->query;
  out.reranker = s->reranker;
  out.created = s->created;
  out.updated = snap->updated;
  out.revision = snap->revision;
  out.preferences = snap->preferences;
  out.has_ground_truth = s->has_truth;
  out.trace = snap->trace;
  return out;
}

std::vector<std::string> SessionService::list() const {
  std::lock_guard lock(registry_mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

namespace {

std::vector<nlohmann::json> read_events(const fs::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorCode::kNotFound, "no event log " + file.string());
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kParse, file.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (out.empty() || out.front().value("type", "") != "create") {
    fail(ErrorCode::kParse, file.string() + ": log does not start with a create event");
  }
  return out;
}

}  // namespace

RankingPage SessionService::replay(const std::string& id) const {
  if (resources_.storage.empty()) fail(ErrorCode::kNotFound, "sessions are not persisted");
  if (!valid_token(id)) fail(ErrorCode::kNotFound, "no session '" + id + "'");
  const auto events = read_events(resources_.storage / id / "events.jsonl");
  auto s = build(events.front());
  for (std::size_t i = 1; i < events.size(); ++i) {
    const auto& ev = events[i];
    const auto type = ev.at("type").get<std::string>();
    if (type == "submit") {
      apply_submit(*s, ev.at("entity").get<EntityId>(), ev.at("label").get<std::uint8_t>());
    } else if (type == "undo") {
      apply_undo(*s);
    } else {
      fail(ErrorCode::kParse, "unknown event type '" + type + "'");
    }
  }
  const auto snap = s->current();
  return page(*s, *snap, snap->order.size(), 0);
}

std::size_t SessionService::restore() {
  if (resources_.storage.empty()) return 0;
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(resources_.storage)) {
    if (!entry.is_directory()) continue;
    const auto id = entry.path().filename().string();
    if (!valid_token(id) || !fs::exists(entry.path() / "events.jsonl")) continue;
    const auto events = read_events(entry.path() / "events.jsonl");
    auto s = build(events.front());
    for (std::size_t i = 1; i < events.size(); ++i) {
      const auto type = events[i].at("type").get<std::string>();
      if (type == "submit") {
        apply_submit(*s, events[i].at("entity").get<EntityId>(), events[i].at("label").get<std::uint8_t>());
      } else if (type == "undo") {
        apply_undo(*s);
      }
    }
    std::lock_guard lock(registry_mu_);
    sessions_[id] = s;
    ++n;
  }
  return n;
}

}  // namespace nqr
