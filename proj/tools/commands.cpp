#include "commands.hpp"

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <pthread.h>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "manifest.hpp"
#include "nqr/binary_io.hpp"
#include "nqr/dataset.hpp"
#include "nqr/error.hpp"
#include "nqr/http_server.hpp"
#include "nqr/kg.hpp"
#include "nqr/metrics.hpp"
#include "nqr/model.hpp"
#include "nqr/scores.hpp"
#include "nqr/session.hpp"

namespace nqr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ScoreMatrix read_scores(const ScoreInput& in, std::optional<std::size_t> entities, RunManifest* m) {
  if (m) m->input("scores", in.path);
  auto s = load_scores(in.path, entities);
  if (!in.raw) minmax_normalize(s);
  return s;
}

std::shared_ptr<const EmbeddingTable> read_table(const std::string& path, RunManifest* m,
                                                 const std::string& role = "embeddings") {
  if (path.empty()) fail(ErrorCode::kInvalidArgument, "--embeddings is required");
  if (m) m->input(role, path);
  return std::make_shared<const EmbeddingTable>(load_embeddings(path));
}

Dataset read_data(const std::string& path, RunManifest* m) {
  if (m) m->input("data", path);
  return read_dataset_file(path);
}

std::uint64_t vocabulary_hash(const std::string& entities) {
  return entities.empty() ? 0 : load_vocabulary_file(entities).fingerprint();
}

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

KnowledgeGraph read_graph(const std::string& path, const Vocabulary* entities, const Vocabulary* relations) {
  GraphLoadOptions opts;
  opts.entity_vocabulary = entities;
  opts.relation_vocabulary = relations;
  opts.strict = entities != nullptr || relations != nullptr;
  return load_graph_file(path, opts);
}

// Owns whatever the chosen reranker needs.
struct LoadedReranker {
  std::shared_ptr<const EmbeddingTable> table;
  std::unique_ptr<Reranker> reranker;
};

LoadedReranker make_reranker(const RerankerOptions& o, std::size_t num_entities, RunManifest* m) {
  LoadedReranker out;
  if (o.kind == "identity") {
    out.reranker = std::make_unique<IdentityReranker>();
  } else if (o.kind == "cosine") {
    const CosineConfig cfg{o.alpha_p, o.alpha_n};
    validate(cfg);
    out.table = read_table(o.embeddings, m);
    out.reranker = std::make_unique<CosineReranker>(std::make_shared<const SimilarityCache>(out.table), cfg);
  } else if (o.kind == "nqr") {
    if (o.model.empty()) fail(ErrorCode::kInvalidArgument, "--model is required for the nqr reranker");
    out.table = read_table(o.embeddings, m);
    if (m) m->input("model", o.model);
    auto model = load_model(o.model);
    const std::uint64_t expected = model.vocabulary_hash ? vocabulary_hash(o.entities) : 0;
    out.reranker = std::make_unique<NqrReranker>(std::move(model), out.table, expected);
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown reranker '" + o.kind + "'");
  }
  if (out.table && out.table->size() != num_entities) {
    fail(ErrorCode::kShapeMismatch, "embedding table has " + std::to_string(out.table->size()) +
                                        " rows, scores have " + std::to_string(num_entities) + " columns");
  }
  return out;
}

json summary_json(const MetricSummary& s) {
  return {{"traces", s.traces}, {"pa_traces", s.pa_traces}, {"av_pa", s.av_pa},
          {"av_mrr", s.av_mrr}, {"base_pa", s.base_pa},     {"base_mrr", s.base_mrr}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out << text;
}

}  // namespace

int run_synth_kg(const SynthKgOptions& o, const std::string& config) {
  RunManifest m("synth-kg");
  m.set_config(config);
  m.seed("seed", o.config.seed);
  spdlog::info("synthesizing {} entities, {} relations", o.config.num_entities, o.config.num_relations);
  const auto b = synthesize_benchmark(o.config);
  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  auto out = [&](const std::string& role, const std::string& name) {
    const auto p = (dir / name).string();
    m.output(role, p);
    return p;
  };
  save_vocabulary_file(out("entities", "entities.txt"), b.graph.entities());
  save_vocabulary_file(out("relations", "relations.txt"), b.graph.relations());
  save_graph_file(out("graph", "graph.tsv"), b.graph);
  save_graph_file(out("train_graph", "train_graph.tsv"), b.train_graph);
  save_embeddings(out("text_embeddings", "text.emb"), b.text);
  save_embeddings(out("qa_embeddings", "qa.emb"), b.qa);
  save_scores(out("scores", "scores.bin"), b.scores);
  Dataset queries{b.queries};
  write_dataset_file(out("queries", "queries.jsonl"), queries);
  {
    std::ofstream c(out("clusters", "clusters.txt"));
    for (auto k : b.clusters) c << k << '\n';
  }
  m.write((dir / "manifest.json").string());
  std::cout << "wrote " << b.graph.num_triples() << " triples, " << b.queries.size() << " queries to " << o.out_dir
            << '\n';
  return 0;
}

int run_gen_data(const GenDataOptions& o, const std::string& config) {
  RunManifest m("gen-data");
  m.set_config(config);
  m.seed("seed", o.benchmark.seed);
  std::optional<Vocabulary> ents, rels;
  if (!o.entities.empty()) {
    m.input("entities", o.entities);
    ents = load_vocabulary_file(o.entities);
  }
  if (!o.relations.empty()) {
    m.input("relations", o.relations);
    rels = load_vocabulary_file(o.relations);
  }
  m.input("graph", o.graph);
  const auto kg = read_graph(o.graph, ents ? &*ents : nullptr, rels ? &*rels : nullptr);
  std::optional<KnowledgeGraph> train_kg;
  if (!o.train_graph.empty()) {
    m.input("train_graph", o.train_graph);
    train_kg = read_graph(o.train_graph, &kg.entities(), &kg.relations());
  }
  m.input("queries", o.queries);
  const auto queries = read_dataset_file(o.queries);
  const auto table = read_table(o.embeddings, &m);
  if (table->size() != kg.num_entities()) {
    fail(ErrorCode::kShapeMismatch, "embedding table has " + std::to_string(table->size()) + " rows, graph has " +
                                        std::to_string(kg.num_entities()) + " entities");
  }
  for (const auto& q : queries.instances) validate(q.query, &kg);

  const auto r = generate_benchmark(kg, train_kg ? &*train_kg : nullptr, queries.instances, *table, o.benchmark);
  ensure_parent(o.out);
  write_dataset_file(o.out, r.dataset);
  m.output("dataset", o.out);
  const auto table_text = format_stats(count_dataset(r.dataset));
  if (!o.stats_out.empty()) {
    write_text(o.stats_out, table_text);
    m.output("stats", o.stats_out);
  }
  const auto& st = r.stats;
  spdlog::info("considered {} queries: kept {}, too few answers {}, too many {}, non-1p train {}, too few sets {}",
               st.considered, st.kept, st.too_few_answers, st.too_many_answers, st.non_1p_train,
               st.insufficient_sets);
  std::cout << table_text;
  std::cout << "dataset fnv1a " << io::hex64(io::hash_file(o.out)) << '\n';
  m.write(manifest_path(o.out));
  return 0;
}

int run_train(const TrainOptions& o, const std::string& config) {
  RunManifest m("train");
  m.set_config(config);
  TrainConfig cfg = o.config;
  cfg.loss = parse_loss_kind(o.loss);
  validate(cfg);
  m.seed("seed", cfg.seed);
  const auto data = read_data(o.data, &m);
  const auto table = read_table(o.embeddings, &m);
  const auto scores = read_scores(o.scores, table->size(), &m);
  spdlog::info("training {} for {} epochs (lr {}, margin {}, kl {})", to_string(cfg.loss), cfg.epochs,
               cfg.learning_rate, cfg.margin, cfg.kl_weight);
  auto result = train(data, scores, *table, cfg, [](std::size_t epoch, double loss) {
    spdlog::info("epoch {:4d} loss {:.6f}", epoch + 1, loss);
  });
  if (result.skipped_non_1p) spdlog::warn("dropped {} non-1p training queries", result.skipped_non_1p);
  ensure_parent(o.out);
  save_model(o.out, {std::move(result.params), vocabulary_hash(o.entities), table->size()});
  m.output("model", o.out);
  if (!o.loss_csv.empty()) {
    std::ofstream out(o.loss_csv);
    out << "epoch,loss\n";
    for (std::size_t i = 0; i < result.epoch_loss.size(); ++i) out << i + 1 << ',' << result.epoch_loss[i] << '\n';
    m.output("loss_csv", o.loss_csv);
  }
  m.write(manifest_path(o.out));
  std::cout << "final loss " << result.epoch_loss.back() << '\n';
  return 0;
}

int run_grid(const GridOptions& o, const std::string& config) {
  RunManifest m("grid");
  m.set_config(config);
  TrainConfig base = o.config;
  base.loss = parse_loss_kind(o.loss);
  m.seed("seed", base.seed);
  GridSpec grid = base.loss == LossKind::kRankNet ? ranknet_grid() : GridSpec{};
  if (!o.learning_rates.empty()) grid.learning_rates = o.learning_rates;
  if (!o.margins.empty()) grid.margins = o.margins;
  if (!o.kl_weights.empty()) grid.kl_weights = o.kl_weights;
  const auto data = read_data(o.data, &m);
  const auto table = read_table(o.embeddings, &m);
  const auto scores = read_scores(o.scores, table->size(), &m);
  ProtocolOptions popts;
  popts.max_steps = o.steps;
  auto result = grid_search(grid, base, data, scores, *table, popts, [](const GridRow& r) {
    spdlog::info("lr {} margin {} kl {}: AvPA {:.4f} AvMRR {:.4f}", r.config.learning_rate, r.config.margin,
                 r.config.kl_weight, r.av_pa, r.av_mrr);
  });
  ensure_parent(o.report);
  {
    std::ofstream out(o.report);
    if (!out) fail(ErrorCode::kIo, "cannot write " + o.report);
    write_grid_report(out, result.rows);
  }
  m.output("report", o.report);
  if (!o.best_model.empty()) {
    ensure_parent(o.best_model);
    save_model(o.best_model, {std::move(result.best_model.params), vocabulary_hash(o.entities), table->size()});
    m.output("best_model", o.best_model);
  }
  const auto& best = result.rows[result.best];
  std::cout << "best: lr " << best.config.learning_rate << " margin " << best.config.margin << " kl "
            << best.config.kl_weight << " objective " << best.objective << '\n';
  m.write(manifest_path(o.report));
  return 0;
}

int run_tune_cosine(const TuneCosineOptions& o, const std::string& config) {
  RunManifest m("tune-cosine");
  m.set_config(config);
  const auto data = read_data(o.data, &m);
  const auto table = read_table(o.embeddings, &m);
  const auto scores = read_scores(o.scores, table->size(), &m);
  ProtocolOptions popts;
  popts.max_steps = o.steps;
  const auto result = tune_cosine(data.split(parse_split(o.split)), scores,
                                  std::make_shared<const SimilarityCache>(table), o.alpha_p, o.alpha_n, popts);
  ensure_parent(o.report);
  {
    std::ofstream out(o.report);
    if (!out) fail(ErrorCode::kIo, "cannot write " + o.report);
    write_cosine_report(out, result);
  }
  m.output("report", o.report);
  if (!o.out.empty()) {
    write_text(o.out, json{{"alpha_p", result.best.alpha_p}, {"alpha_n", result.best.alpha_n}}.dump(2) + "\n");
    m.output("config", o.out);
  }
  std::cout << "best alpha_p " << result.best.alpha_p << " alpha_n " << result.best.alpha_n << '\n';
  m.write(manifest_path(o.report));
  return 0;
}

int run_eval(const EvalOptions& o, const std::string& config) {
  RunManifest m("eval");
  m.set_config(config);
  const auto data = read_data(o.data, &m);
  const auto scores = read_scores(o.scores, {}, &m);
  const auto rr = make_reranker(o.reranker, scores.cols(), &m);
  ProtocolOptions popts;
  popts.max_steps = o.steps;
  const auto instances = data.split(parse_split(o.split));
  if (instances.empty()) fail(ErrorCode::kInvalidArgument, "split '" + o.split + "' has no queries");
  const auto traces = run_protocol_all(*rr.reranker, instances, scores, popts);
  const auto agg = aggregate(traces);
  json summary{{"reranker", rr.reranker->name()}, {"split", o.split}, {"overall", summary_json(agg.overall)}};
  json curve = json::array();
  for (const auto& c : agg.curve) {
    curve.push_back({{"t", c.t}, {"count", c.count}, {"pa", c.pa}, {"mrr", c.mrr}, {"hits1", c.hits1},
                     {"hits3", c.hits3}, {"hits10", c.hits10}});
  }
  summary["curve"] = curve;
  if (!o.out_dir.empty()) {
    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    {
      std::ofstream out(dir / "traces.jsonl");
      write_traces(out, traces);
    }
    {
      std::ofstream out(dir / "structures.csv");
      write_structure_csv(out, agg);
    }
    {
      std::ofstream out(dir / "curve.csv");
      write_curve_csv(out, agg);
    }
    if (o.svg) {
      std::ofstream out(dir / "curve.svg");
      write_curve_svg(out, {{rr.reranker->name(), agg}});
      m.output("svg", (dir / "curve.svg").string());
    }
    write_text((dir / "summary.json").string(), summary.dump(2) + "\n");
    for (const char* f : {"traces.jsonl", "structures.csv", "curve.csv", "summary.json"}) {
      m.output(f, (dir / f).string());
    }
    m.write((dir / "manifest.json").string());
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int run_rerank(const RerankOptions& o, const std::string& config) {
  RunManifest m("rerank");
  m.set_config(config);
  const auto scores = read_scores(o.scores, {}, &m);
  if (scores.rows() == 0) fail(ErrorCode::kInvalidArgument, "score file has no rows");
  const QueryId id = o.has_query_id ? o.query_id : scores.ids().front();
  const auto base = scores.at(id);
  PreferenceSet prefs;
  if (!o.preferences.empty()) {
    m.input("preferences", o.preferences);
    std::ifstream in(o.preferences);
    if (!in) fail(ErrorCode::kIo, "cannot open " + o.preferences);
    try {
      prefs = json::parse(in).get<PreferenceSet>();
    } catch (const json::exception& e) {
      fail(ErrorCode::kParse, o.preferences + ": " + e.what());
    }
  }
  for (const auto& p : prefs.pairs) {
    if (p.entity >= base.size()) fail(ErrorCode::kMissingEntity, "entity " + std::to_string(p.entity) + " has no score");
  }
  const auto rr = make_reranker(o.reranker, scores.cols(), &m);
  const auto adjusted = rr.reranker->rerank(base, prefs);
  if (!o.out.empty()) {
    ensure_parent(o.out);
    save_scores(o.out, ScoreMatrix(adjusted.size(), {id}, adjusted));
    m.output("scores", o.out);
    m.write(manifest_path(o.out));
  }
  std::vector<EntityId> order(adjusted.size());
  for (EntityId e = 0; e < order.size(); ++e) order[e] = e;
  const auto k = std::min(o.top_k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](EntityId a, EntityId b) { return adjusted[a] > adjusted[b] || (adjusted[a] == adjusted[b] && a < b); });
  std::cout << "rank\tentity\tadjusted\tbase\n";
  for (std::size_t i = 0; i < k; ++i) {
    std::cout << i + 1 << '\t' << order[i] << '\t' << adjusted[order[i]] << '\t' << base[order[i]] << '\n';
  }
  return 0;
}

int run_serve(const ServeOptions& o) {
  SessionResources r;
  std::size_t num_entities = 0;
  if (!o.entities.empty()) r.entities = std::make_shared<const Vocabulary>(load_vocabulary_file(o.entities));
  if (!o.graph.empty()) {
    auto kg = std::make_shared<const KnowledgeGraph>(read_graph(o.graph, r.entities.get(), nullptr));
    if (!r.entities) r.entities = std::make_shared<const Vocabulary>(kg->entities());
    r.graph = kg;
    if (!o.train_graph.empty()) {
      r.train_graph =
          std::make_shared<const KnowledgeGraph>(read_graph(o.train_graph, &kg->entities(), &kg->relations()));
    }
  }
  if (!o.data.empty()) r.dataset = std::make_shared<const Dataset>(read_dataset_file(o.data));
  if (!o.scores.path.empty()) {
    r.scores = std::make_shared<const ScoreMatrix>(read_scores(o.scores, {}, nullptr));
    num_entities = r.scores->cols();
  }
  if (!o.embeddings.empty()) {
    auto table = read_table(o.embeddings, nullptr);
    if (num_entities && table->size() != num_entities) {
      fail(ErrorCode::kShapeMismatch, "embedding rows do not match score columns");
    }
    r.similarity = std::make_shared<const SimilarityCache>(table);
    if (!o.model.empty()) {
      const std::uint64_t hash = r.entities ? r.entities->fingerprint() : 0;
      auto model = load_model(o.model);
      // models trained without a vocabulary carry hash 0 and skip the check
      const std::uint64_t expected = model.vocabulary_hash ? hash : 0;
      r.nqr = std::make_shared<const NqrReranker>(std::move(model), table, expected);
    }
  } else if (!o.model.empty()) {
    fail(ErrorCode::kInvalidArgument, "--model needs --embeddings");
  }
  r.adhoc_scores.sigma = o.adhoc_sigma;
  r.adhoc_scores.seed = o.seed;
  if (!o.storage.empty()) {
    fs::create_directories(o.storage);
    r.storage = o.storage;
  }

  // Block the stop signals before any thread starts so only sigwait sees them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  SessionService service(std::move(r));
  if (!o.storage.empty()) spdlog::info("restored {} sessions", service.restore());
  HttpServer server(service, HttpOptions{o.host, o.port, o.static_dir, true});
  const int port = server.bind();
  spdlog::info("listening on http://{}:{}", o.host, port);
  std::cout << "port " << port << std::endl;
  std::thread worker([&] { server.serve(); });
  int sig = 0;
  sigwait(&set, &sig);
  spdlog::info("signal {}, shutting down", sig);
  server.stop();
  worker.join();
  return 0;
}

int run_stats(const StatsOptions& o) {
  const auto data = read_dataset_file(o.data);
  std::cout << format_stats(count_dataset(data));
  return 0;
}

}  // namespace nqr::cli
