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

// Experiment configuration, cached pipeline stages, grid search and report
// files.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "textknn/corpus.hpp"
#include "textknn/embedding_store.hpp"
#include "textknn/evaluation.hpp"
#include "textknn/predictors.hpp"
#include "textknn/sentence_graph.hpp"
#include "textknn/user_similarity.hpp"

namespace textknn {

enum class PredictorKind {
  uniform,
  normal,
  baseline,
  knn,
  bknn,
  svd,
  text_knn,
  text_bknn,
  cooc_knn,
  cooc_bknn,
  oracle,
};

PredictorKind parse_predictor_kind(std::string_view name);
std::string_view to_string(PredictorKind kind);
/// Predictors whose weights come from the sentence graphs.
bool uses_graphs(PredictorKind kind);
/// Predictors that need the sentence corpus (graphs or co-occurrence).
bool uses_sentences(PredictorKind kind);
/// Predictors whose output depends on the seed.
bool is_stochastic(PredictorKind kind);

enum class SelectionMetric { rmse, tfcp };

SelectionMetric parse_selection_metric(std::string_view name);
std::string_view to_string(SelectionMetric metric);

struct DataConfig {
  /// Raw review dump to filter and split, or empty when train/validation/test
  /// are given as JSON-lines files.
  std::string input;
  ReviewFormat format = ReviewFormat::amazon_json;
  std::size_t kcore = 20;
  std::string train;
  std::string validation;
  std::string test;
  /// Sentence manifest of the train split. Re-segmented from train when empty.
  std::string sentences;
  /// Embedding file whose rows follow the sentence manifest.
  std::string embeddings;

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct ExperimentConfig {
  DataConfig data;
  PredictorKind predictor = PredictorKind::text_knn;
  UserSimConfig similarity;
  std::size_t sentence_neighbors = 10;
  std::size_t user_neighbors = 40;
  std::optional<double> min_similarity;
  CooccurrenceVariant cooccurrence = CooccurrenceVariant::indicator;
  BaselineParams baseline;
  SvdParams svd;
  std::size_t msd_min_support = 1;
  std::uint64_t seed = 0;
  /// Stochastic predictors are run with seeds seed, seed+1, ... and their
  /// scores averaged.
  std::size_t repeats = 1;
  SelectionMetric selection = SelectionMetric::rmse;
  std::size_t threads = 1;
  std::string output_dir;
  /// On-disk graph cache; TEXTKNN_CACHE_DIR overrides it when set.
  std::string cache_dir;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses a JSON config. A "preset" key starts from that preset; the other
/// keys override it. Unknown keys are an Error("config").
ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Canonical JSON (every field, fixed key order).
std::string experiment_config_json(const ExperimentConfig& cfg);

std::vector<std::string> preset_names();
/// The tuned text configurations: text-knn-r, text-bknn-r, text-knn-f, text-bknn-f.
std::optional<ExperimentConfig> preset(std::string_view name);

/// Human-readable cell label, unique within a grid.
std::string cell_label(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Inputs and cached stages

struct Inputs {
  Dataset train;
  std::vector<Interaction> validation;
  std::vector<Interaction> test;
  std::optional<std::vector<SentenceRecord>> sentences;
  std::optional<EmbeddingTable> embeddings;
};

/// Reads the files named by `data`. The embedding file is loaded only when
/// `need_embeddings` is set.
Inputs load_inputs(const DataConfig& data, bool need_embeddings);

/// Memoizes one value per key; different keys may be computed concurrently.
template <class V>
class OnceCache {
 public:
  template <class Make>
  const V& get(const std::string& key, Make&& make) {
    Slot* slot = nullptr;
    {
      std::lock_guard lock(mutex_);
      auto& s = slots_[key];
      if (!s) s = std::make_unique<Slot>();
      slot = s.get();
    }
    std::call_once(slot->once, [&] { slot->value = std::make_unique<V>(make()); });
    return *slot->value;
  }

 private:
  struct Slot {
    std::once_flag once;
    std::unique_ptr<V> value;
  };
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;
};

/// Data plus every derived stage, built on first use and shared by all grid
/// cells. Thread-safe.
class Workspace {
 public:
  Workspace(Inputs inputs, std::size_t threads = 1, std::filesystem::path cache_dir = {});

  const Dataset& train() const noexcept { return inputs_.train; }
  const std::vector<Interaction>& validation() const noexcept { return inputs_.validation; }
  const std::vector<Interaction>& test() const noexcept { return inputs_.test; }
  bool has_embeddings() const noexcept { return inputs_.embeddings.has_value(); }

  const SentenceCorpus& corpus();
  const std::vector<SentenceGraph>& graphs(GraphScope scope, std::size_t k, std::optional<double> min_similarity);
  const UserWeightMatrix& text_weights(const UserSimConfig& cfg, std::size_t k, std::optional<double> min_similarity);
  const UserWeightMatrix& msd_weights(std::size_t min_support);
  const UserWeightMatrix& cooccurrence(CooccurrenceVariant variant);
  const TrainRatings& ratings();
  const BaselineModel& baseline(const BaselineParams& params);
  const NormalModel& normal();
  const MFModel& svd(const SvdParams& params, std::uint64_t seed);

  /// Throws Error("config") with a remediation hint when a text predictor is
  /// requested without embeddings.
  std::unique_ptr<Predictor> make_predictor(const ExperimentConfig& cfg, std::uint64_t seed);

 private:
  std::vector<SentenceGraph> build_or_load_graphs(GraphScope scope, std::size_t k, std::optional<double> min_similarity);

  Inputs inputs_;
  std::size_t threads_;
  std::filesystem::path cache_dir_;
  std::once_flag corpus_once_;
  std::unique_ptr<SentenceCorpus> corpus_;
  std::once_flag ratings_once_;
  std::unique_ptr<TrainRatings> ratings_;
  std::once_flag normal_once_;
  std::unique_ptr<NormalModel> normal_;
  OnceCache<std::vector<SentenceGraph>> graphs_;
  OnceCache<UserWeightMatrix> weights_;
  OnceCache<BaselineModel> baselines_;
  OnceCache<MFModel> svds_;
};

// ---------------------------------------------------------------------------
// Experiments

struct Scores {
  double rmse = 0.0;
  double tfcp = 0.0;
  double fallback_rate = 0.0;
  std::size_t users_excluded = 0;
  std::optional<double> pair_fcp;
};

struct ExplanationRow {
  std::string user_id;
  std::string item_id;
  double estimate = 0.0;
  std::string neighbor_id;
  double neighbor_weight = 0.0;
  double neighbor_rating = 0.0;
  SentenceId head;
  SentenceId tail;
  double match_weight = 0.0;
  std::string head_text;
  std::string tail_text;
};

struct CellResult {
  ExperimentConfig config;
  std::string label;
  Scores validation;
};

struct GridSpec {
  ExperimentConfig base;
  // Empty axis: the base value only.
  std::vector<PredictorKind> predictors;
  std::vector<MatchScheme> matching;
  std::vector<WeightScheme> weight_schemes;
  std::vector<bool> polarized;
  std::vector<GraphScope> graph_scopes;
  std::vector<UserNorm> user_norms;
  std::vector<MatchNorm> match_norms;
  std::vector<CooccurrenceVariant> cooccurrence;
};

/// {"base": <config>, "axes": {"predictor": [...], "matching": [...], ...}}
GridSpec parse_grid_spec(std::string_view json_text);
GridSpec load_grid_spec(const std::filesystem::path& path);

struct ExpandedGrid {
  std::vector<ExperimentConfig> cells;
  std::size_t pruned = 0;
};

/// Cartesian product in axis order (predictor outermost). Similarity axes
/// are collapsed for predictors that ignore them; invalid similarity
/// combinations are pruned and counted.
ExpandedGrid expand_grid(const GridSpec& grid);

struct GridResult {
  SelectionMetric selection = SelectionMetric::rmse;
  std::vector<CellResult> cells;  // grid order
  std::size_t pruned = 0;
  std::size_t best = 0;
  /// Test scores of the selected cell only.
  Scores test;
  EvalReport test_report;
  std::vector<ExplanationRow> explanations;
};

/// Scores every cell on validation, selects the best (ties: first cell) and
/// evaluates only that one on test. Throws when the grid is empty.
GridResult grid_search(const GridSpec& grid, Workspace& ws);

/// Cache directory after the TEXTKNN_CACHE_DIR override.
std::filesystem::path resolve_cache_dir(const ExperimentConfig& cfg);
/// Workspace over the files named by cfg.data; embeddings are loaded when
/// `need_embeddings` is set.
std::unique_ptr<Workspace> open_workspace(const ExperimentConfig& cfg, bool need_embeddings);

/// One-cell grid.
GridResult run_experiment(const ExperimentConfig& cfg, Workspace& ws);
/// Loads the data named by cfg, runs it and writes the report when
/// cfg.output_dir is set.
GridResult run_experiment(const ExperimentConfig& cfg);

/// Writes leaderboard.csv, scores.csv, correlation.json, explanations.tsv,
/// predictions.tsv, report.json and config.json into `dir`.
void emit_report(const GridResult& result, const std::filesystem::path& dir);

/// The leaderboard CSV text (also written by emit_report).
std::string leaderboard_csv(const GridResult& result);

}  // namespace textknn
