#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "nqr/error.hpp"

namespace {

using namespace nqr::cli;

void add_scores(CLI::App* sub, ScoreInput& s, bool required = true) {
  auto* opt = sub->add_option("--scores", s.path, "base score matrix (NQSC)");
  if (required) opt->required();
  sub->add_flag("--raw-scores", s.raw, "use scores as stored, without per-query min-max normalization");
}

void add_reranker(CLI::App* sub, RerankerOptions& r) {
  sub->add_option("--reranker", r.kind, "identity, cosine or nqr")
      ->check(CLI::IsMember({"identity", "cosine", "nqr"}))
      ->capture_default_str();
  sub->add_option("--model", r.model, "NQR checkpoint");
  sub->add_option("--embeddings", r.embeddings, "entity embedding table");
  sub->add_option("--entities", r.entities, "entity vocabulary, checked against the checkpoint");
  sub->add_option("--alpha-p", r.alpha_p, "cosine weight for positives")->capture_default_str();
  sub->add_option("--alpha-n", r.alpha_n, "cosine weight for negatives")->capture_default_str();
}

void add_train_config(CLI::App* sub, nqr::TrainConfig& c, bool with_grid_axes) {
  if (!with_grid_axes) {
    sub->add_option("--lr", c.learning_rate, "Adam learning rate")->capture_default_str();
    sub->add_option("--margin", c.margin, "preference margin")->capture_default_str();
    sub->add_option("--kl-weight", c.kl_weight, "weight of the answer KL term")->capture_default_str();
  }
  sub->add_option("--epochs", c.epochs)->capture_default_str();
  sub->add_option("--batch-size", c.batch_size)->capture_default_str();
  sub->add_option("--seed", c.seed)->capture_default_str();
  sub->add_flag("--prefix-subsets", c.prefix_subsets, "train on prefixes of the interaction order");
  sub->add_flag("--zero-head", c.zero_head, "start the output layer at zero (identity reranker)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive reranking of knowledge-graph query answers"};
  app.set_config("--config", "", "TOML file with option values; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level)
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
      ->capture_default_str();

  SynthKgOptions synth;
  auto* s_synth = app.add_subcommand("synth-kg", "generate a synthetic graph, embeddings, queries and base scores");
  s_synth->add_option("--out", synth.out_dir, "output directory")->required();
  {
    auto& c = synth.config;
    s_synth->add_option("--entities", c.num_entities)->capture_default_str();
    s_synth->add_option("--relations", c.num_relations)->capture_default_str();
    s_synth->add_option("--clusters", c.num_clusters)->capture_default_str();
    s_synth->add_option("--dim", c.dim)->capture_default_str();
    s_synth->add_option("--community-size", c.community_size)->capture_default_str();
    s_synth->add_option("--edge-probability", c.edge_probability)->capture_default_str();
    s_synth->add_option("--min-fanout", c.min_fanout)->capture_default_str();
    s_synth->add_option("--max-fanout", c.max_fanout)->capture_default_str();
    s_synth->add_option("--holdout", c.holdout_fraction)->capture_default_str();
    s_synth->add_option("--text-spread", c.text_spread)->capture_default_str();
    s_synth->add_option("--qa-spread", c.qa_spread)->capture_default_str();
    s_synth->add_option("--train-queries", c.train_queries)->capture_default_str();
    s_synth->add_option("--valid-per-structure", c.valid_per_structure)->capture_default_str();
    s_synth->add_option("--test-per-structure", c.test_per_structure)->capture_default_str();
    s_synth->add_option("--score-sigma", c.scores.sigma)->capture_default_str();
    s_synth->add_option("--seed", c.seed)->capture_default_str();
  }

  GenDataOptions gen;
  auto* s_gen = app.add_subcommand("gen-data", "cluster query answers into preference sets");
  s_gen->add_option("--graph", gen.graph, "full graph (TSV triples)")->required();
  s_gen->add_option("--train-graph", gen.train_graph, "training graph; splits answers into easy and hard");
  s_gen->add_option("--entities", gen.entities, "entity vocabulary; unknown names are errors");
  s_gen->add_option("--relations", gen.relations, "relation vocabulary; unknown names are errors");
  s_gen->add_option("--queries", gen.queries, "query instances (JSON lines)")->required();
  s_gen->add_option("--embeddings", gen.embeddings, "text embeddings used for clustering")->required();
  s_gen->add_option("--out", gen.out, "output dataset (JSON lines)")->required();
  s_gen->add_option("--stats-out", gen.stats_out, "write the count table here too");
  s_gen->add_option("--min-answers", gen.benchmark.min_answers)->capture_default_str();
  s_gen->add_option("--max-answers", gen.benchmark.max_answers)->capture_default_str();
  s_gen->add_option("--per-query", gen.benchmark.per_query)->capture_default_str();
  s_gen->add_option("--min-fraction", gen.benchmark.min_fraction)->capture_default_str();
  s_gen->add_option("--seed", gen.benchmark.seed)->capture_default_str();

  TrainOptions tr;
  auto* s_train = app.add_subcommand("train", "train an NQR checkpoint");
  s_train->add_option("--data", tr.data)->required();
  add_scores(s_train, tr.scores);
  s_train->add_option("--embeddings", tr.embeddings)->required();
  s_train->add_option("--entities", tr.entities, "entity vocabulary; its fingerprint is stored in the checkpoint");
  s_train->add_option("--out", tr.out, "checkpoint path")->required();
  s_train->add_option("--loss-csv", tr.loss_csv, "per-epoch mean loss");
  s_train->add_option("--loss", tr.loss)->check(CLI::IsMember({"margin+kl", "ranknet"}))->capture_default_str();
  add_train_config(s_train, tr.config, false);

  GridOptions grid;
  auto* s_grid = app.add_subcommand("grid", "hyperparameter grid search on the valid split");
  s_grid->add_option("--data", grid.data)->required();
  add_scores(s_grid, grid.scores);
  s_grid->add_option("--embeddings", grid.embeddings)->required();
  s_grid->add_option("--entities", grid.entities);
  s_grid->add_option("--report", grid.report, "TSV with one row per grid point")->required();
  s_grid->add_option("--best-model", grid.best_model, "save the selected checkpoint");
  s_grid->add_option("--loss", grid.loss)->check(CLI::IsMember({"margin+kl", "ranknet"}))->capture_default_str();
  s_grid->add_option("--lrs", grid.learning_rates, "learning rates (default grid when empty)")->delimiter(',');
  s_grid->add_option("--margins", grid.margins)->delimiter(',');
  s_grid->add_option("--kl-weights", grid.kl_weights)->delimiter(',');
  s_grid->add_option("--steps", grid.steps, "interaction steps per preference set")->capture_default_str();
  add_train_config(s_grid, grid.config, true);

  TuneCosineOptions tc;
  auto* s_tc = app.add_subcommand("tune-cosine", "pick the cosine baseline weights");
  s_tc->add_option("--data", tc.data)->required();
  add_scores(s_tc, tc.scores);
  s_tc->add_option("--embeddings", tc.embeddings)->required();
  s_tc->add_option("--report", tc.report)->required();
  s_tc->add_option("--out", tc.out, "JSON with the chosen weights");
  s_tc->add_option("--split", tc.split)->capture_default_str();
  s_tc->add_option("--alpha-p", tc.alpha_p)->delimiter(',');
  s_tc->add_option("--alpha-n", tc.alpha_n)->delimiter(',');
  s_tc->add_option("--steps", tc.steps)->capture_default_str();

  EvalOptions ev;
  auto* s_eval = app.add_subcommand("eval", "run the interactive protocol and aggregate metrics");
  s_eval->add_option("--data", ev.data)->required();
  add_scores(s_eval, ev.scores);
  add_reranker(s_eval, ev.reranker);
  s_eval->add_option("--split", ev.split)->capture_default_str();
  s_eval->add_option("--steps", ev.steps)->capture_default_str();
  s_eval->add_option("--out-dir", ev.out_dir, "write traces, CSV tables and a summary here");
  s_eval->add_flag("--svg", ev.svg, "also plot the metric curves");

  RerankOptions rr;
  auto* s_rr = app.add_subcommand("rerank", "rerank one query given a preference file");
  add_scores(s_rr, rr.scores);
  auto* qid = s_rr->add_option("--query-id", rr.query_id, "score row (default: the first)");
  s_rr->add_option("--preferences", rr.preferences, "JSON preference set");
  add_reranker(s_rr, rr.reranker);
  s_rr->add_option("--out", rr.out, "write the adjusted scores as a one-row score file");
  s_rr->add_option("--top-k", rr.top_k)->capture_default_str();

  ServeOptions sv;
  auto* s_serve = app.add_subcommand("serve", "HTTP API for interactive sessions");
  s_serve->add_option("--host", sv.host)->capture_default_str();
  s_serve->add_option("--port", sv.port, "0 picks a free port")->capture_default_str();
  s_serve->add_option("--data", sv.data);
  add_scores(s_serve, sv.scores, false);
  s_serve->add_option("--embeddings", sv.embeddings);
  s_serve->add_option("--model", sv.model);
  s_serve->add_option("--entities", sv.entities);
  s_serve->add_option("--graph", sv.graph, "enables ad-hoc queries");
  s_serve->add_option("--train-graph", sv.train_graph);
  s_serve->add_option("--static-dir", sv.static_dir, "serve a built web UI from here");
  s_serve->add_option("--storage", sv.storage, "persist sessions in this directory");
  s_serve->add_option("--adhoc-sigma", sv.adhoc_sigma, "noise of synthetic base scores for ad-hoc queries")
      ->capture_default_str();
  s_serve->add_option("--seed", sv.seed)->capture_default_str();

  StatsOptions st;
  auto* s_stats = app.add_subcommand("stats", "print per-structure counts of a dataset");
  s_stats->add_option("--data", st.data)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  const auto level = spdlog::level::from_str(log_level);
  spdlog::set_level(level);
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");

  try {
    for (auto* sub : app.get_subcommands()) {
      const std::string config = sub->config_to_str(true, false);
      if (sub == s_synth) return run_synth_kg(synth, config);
      if (sub == s_gen) return run_gen_data(gen, config);
      if (sub == s_train) return run_train(tr, config);
      if (sub == s_grid) return run_grid(grid, config);
      if (sub == s_tc) return run_tune_cosine(tc, config);
      if (sub == s_eval) return run_eval(ev, config);
      if (sub == s_rr) {
        rr.has_query_id = qid->count() > 0;
        return run_rerank(rr, config);
      }
      if (sub == s_serve) return run_serve(sv);
      if (sub == s_stats) return run_stats(st);
    }
  } catch (const nqr::Error& e) {
    spdlog::error("{}: {}", nqr::to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 1;
}
