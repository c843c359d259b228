/*
 * Copyright 2026 The textknn Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// textknn command line. Every subcommand prints a JSON summary on stdout; on
// failure it prints {"error": {"code": ..., "message": ...}} on stderr and
// exits with status 1 (2 for usage errors).

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "textknn/corpus.hpp"
#include "textknn/harness.hpp"
#include "textknn/synthetic.hpp"

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace textknn;

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

int fail(std::string_view code, std::string_view message, int status) {
  json err;
  err["error"] = {{"code", code}, {"message", message}};
  std::cerr << err.dump() << '\n';
  return status;
}

json scores_summary(const Scores& s) {
  return {{"rmse", s.rmse}, {"tfcp", s.tfcp}, {"fallback_rate", s.fallback_rate}, {"users_excluded", s.users_excluded}};
}

const std::vector<Interaction>& pick_split(Workspace& ws, const std::string& split) {
  if (split == "validation") return ws.validation();
  if (split == "test") return ws.test();
  throw Error("invalid_argument", fmt::format("unknown split '{}'", split));
}

const UserWeightMatrix& weights_for(const ExperimentConfig& cfg, Workspace& ws) {
  switch (cfg.predictor) {
    case PredictorKind::text_knn:
    case PredictorKind::text_bknn:
      if (auto why = validate(cfg.similarity)) throw Error("config", *why);
      return ws.text_weights(cfg.similarity, cfg.sentence_neighbors, cfg.min_similarity);
    case PredictorKind::knn:
    case PredictorKind::bknn:
      return ws.msd_weights(cfg.msd_min_support);
    case PredictorKind::cooc_knn:
    case PredictorKind::cooc_bknn:
      return ws.cooccurrence(cfg.cooccurrence);
    default:
      throw Error("config", fmt::format("predictor {} has no user weights", to_string(cfg.predictor)));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memory-based rating prediction from review-sentence matches"};
  app.require_subcommand(1);

  std::string input, format = "amazon-json", out, out_dir, config_path, grid_path, split = "test";
  std::string user, item;
  std::size_t kcore = 20, neighbors = 3, matches = 5;
  std::uint64_t seed = 1;
  SyntheticOptions synth_opts;

  auto* ingest = app.add_subcommand("ingest", "Parse a review dump, keep its k-core, write JSON lines");
  ingest->add_option("--input", input, "Review dump (plain or gzip)")->required();
  ingest->add_option("--format", format, "amazon-json | yelp-json | generic-tsv");
  ingest->add_option("--kcore", kcore, "Minimum interactions per user and item (0 keeps everything)");
  ingest->add_option("--out", out, "Output JSON-lines file")->required();

  auto* split_cmd = app.add_subcommand("split", "Leave-one-last-item split plus the train sentence manifest");
  split_cmd->add_option("--input", input, "Interactions JSON lines")->required();
  split_cmd->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* graph = app.add_subcommand("graph", "Build the sentence k-NN graphs of a config");
  graph->add_option("--config", config_path, "Experiment config")->required();
  graph->add_option("--out", out, "Graph TSV (head, tail, cosine)")->required();

  auto* weights = app.add_subcommand("weights", "Compute the user weights of a config");
  weights->add_option("--config", config_path, "Experiment config")->required();
  weights->add_option("--out", out, "Weights TSV (u, v, w)")->required();

  auto* predict = app.add_subcommand("predict", "Predict a split and write the predictions");
  predict->add_option("--config", config_path, "Experiment config")->required();
  predict->add_option("--split", split, "validation | test");
  predict->add_option("--out", out, "Predictions TSV")->required();

  auto* eval = app.add_subcommand("eval", "Run one experiment and write its report");
  eval->add_option("--config", config_path, "Experiment config")->required();
  eval->add_option("--out-dir", out_dir, "Report directory (overrides output_dir)");

  auto* grid = app.add_subcommand("grid", "Grid search on validation, report the selected cell on test");
  grid->add_option("--grid", grid_path, "Grid spec")->required();
  grid->add_option("--out-dir", out_dir, "Report directory (overrides base.output_dir)");

  auto* explain = app.add_subcommand("explain", "Sentence matches behind one prediction");
  explain->add_option("--config", config_path, "Experiment config (text predictor)")->required();
  explain->add_option("--user", user, "User id")->required();
  explain->add_option("--item", item, "Item id")->required();
  explain->add_option("--neighbors", neighbors, "Neighbors to show");
  explain->add_option("--matches", matches, "Matches per neighbor");

  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic corpus with embeddings");
  synth->add_option("--out-dir", out_dir, "Output directory")->required();
  synth->add_option("--seed", seed, "Generator seed");
  synth->add_option("--users", synth_opts.users, "Number of users");
  synth->add_option("--items", synth_opts.items, "Number of items");

  auto* presets = app.add_subcommand("presets", "Print the shipped tuned configurations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*ingest) {
      auto report = parse_reviews(input, parse_review_format(format));
      auto data = kcore > 0 ? kcore_filter(report.dataset, kcore) : report.dataset;
      write_interactions_jsonl(out, data.interactions());
      print({{"lines", report.lines},
             {"parsed", report.dataset.size()},
             {"malformed", report.malformed},
             {"out_of_range", report.out_of_range},
             {"duplicates", report.duplicates},
             {"kept", data.size()},
             {"users", data.num_users()},
             {"items", data.num_items()}});
    } else if (*split_cmd) {
      Dataset data(read_interactions_jsonl(input));
      auto s = chrono_split(data);
      fs::create_directories(out_dir);
      write_interactions_jsonl(fs::path(out_dir) / "train.jsonl", s.train.interactions());
      write_interactions_jsonl(fs::path(out_dir) / "validation.jsonl", s.validation);
      write_interactions_jsonl(fs::path(out_dir) / "test.jsonl", s.test);
      auto sentences = segment_sentences(s.train);
      write_sentence_manifest(fs::path(out_dir) / "sentences.tsv", sentences);
      print({{"train", s.train.size()},
             {"validation", s.validation.size()},
             {"test", s.test.size()},
             {"sentences", sentences.size()}});
    } else if (*graph) {
      auto cfg = load_experiment_config(config_path);
      auto ws = open_workspace(cfg, true);
      const auto& gs = ws->graphs(cfg.similarity.graph_scope, cfg.sentence_neighbors, cfg.min_similarity);
      write_graph_tsv(out, gs);
      std::size_t edges = 0;
      for (const auto& g : gs) edges += g.num_edges();
      print({{"graphs", gs.size()}, {"sentences", ws->corpus().size()}, {"edges", edges}});
    } else if (*weights) {
      auto cfg = load_experiment_config(config_path);
      auto ws = open_workspace(cfg, uses_graphs(cfg.predictor));
      const auto& w = weights_for(cfg, *ws);
      write_weights_tsv(out, w, ws->train());
      print({{"users", w.num_users()}, {"nonzero", w.nnz()}});
    } else if (*predict) {
      auto cfg = load_experiment_config(config_path);
      auto ws = open_workspace(cfg, uses_graphs(cfg.predictor));
      auto predictor = ws->make_predictor(cfg, cfg.seed);
      auto report = evaluate(pick_split(*ws, split), ws->train(), *predictor);
      write_predictions_tsv(out, report.predictions, cell_label(cfg));
      print({{"split", split},
             {"targets", report.targets},
             {"rmse", report.rmse},
             {"tfcp", report.tfcp_macro},
             {"fallback_rate", report.fallback_rate}});
    } else if (*eval) {
      auto cfg = load_experiment_config(config_path);
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      auto result = run_experiment(cfg);
      const auto& best = result.cells[result.best];
      print({{"label", best.label},
             {"validation", scores_summary(best.validation)},
             {"test", scores_summary(result.test)},
             {"output_dir", cfg.output_dir}});
    } else if (*grid) {
      auto spec = load_grid_spec(grid_path);
      if (!out_dir.empty()) spec.base.output_dir = out_dir;
      bool need_embeddings = uses_graphs(spec.base.predictor);
      for (auto p : spec.predictors) need_embeddings = need_embeddings || uses_graphs(p);
      auto ws = open_workspace(spec.base, need_embeddings);
      auto result = grid_search(spec, *ws);
      if (!spec.base.output_dir.empty()) emit_report(result, spec.base.output_dir);
      const auto& best = result.cells[result.best];
      print({{"trials", result.cells.size()},
             {"pruned", result.pruned},
             {"selected", best.label},
             {"validation", scores_summary(best.validation)},
             {"test", scores_summary(result.test)},
             {"output_dir", spec.base.output_dir}});
    } else if (*explain) {
      auto cfg = load_experiment_config(config_path);
      if (!uses_graphs(cfg.predictor)) throw Error("config", "explain needs a text_knn or text_bknn config");
      auto ws = open_workspace(cfg, true);
      auto predictor = ws->make_predictor(cfg, cfg.seed);
      auto outcome = predictor->predict({user, item, 0});
      auto u = ws->train().find_user(user);
      if (!u) throw Error("invalid_argument", fmt::format("user '{}' is not in the train split", user));
      const auto& gs = ws->graphs(cfg.similarity.graph_scope, cfg.sentence_neighbors, cfg.min_similarity);
      const auto& corpus = ws->corpus();
      json rows = json::array();
      for (std::size_t n = 0; n < std::min(neighbors, outcome.neighbors.size()); ++n) {
        const auto& nb = outcome.neighbors[n];
        json ms = json::array();
        auto ev = match_evidence(*u, nb.user, gs, corpus, cfg.similarity.edge_weight);
        for (std::size_t m = 0; m < std::min(matches, ev.size()); ++m) {
          ms.push_back({{"head", corpus.at(ev[m].head).text},
                        {"tail", corpus.at(ev[m].tail).text},
                        {"weight", ev[m].weight}});
        }
        rows.push_back({{"neighbor", ws->train().user_id(nb.user)},
                        {"weight", nb.weight},
                        {"rating", nb.rating},
                        {"matches", ms}});
      }
      print({{"user", user},
             {"item", item},
             {"estimate", outcome.estimate},
             {"fallback", outcome.fallback_used},
             {"neighbors", rows}});
    } else if (*synth) {
      synth_opts.seed = seed;
      auto corpus = make_synthetic(synth_opts);
      write_synthetic(corpus, out_dir);
      auto cfg = *preset("text-knn-f");
      cfg.data.train = "train.jsonl";
      cfg.data.validation = "validation.jsonl";
      cfg.data.test = "test.jsonl";
      cfg.data.sentences = "sentences.tsv";
      cfg.data.embeddings = "embeddings.semb";
      std::ofstream(fs::path(out_dir) / "config.json") << experiment_config_json(cfg);
      print({{"interactions", corpus.interactions.size()},
             {"train", corpus.split.train.size()},
             {"sentences", corpus.sentences.size()},
             {"config", (fs::path(out_dir) / "config.json").string()}});
    } else if (*presets) {
      json all = json::object();
      for (const auto& name : preset_names()) all[name] = json::parse(experiment_config_json(*preset(name)));
      print(all);
    }
  } catch (const Error& e) {
    return fail(e.code(), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
