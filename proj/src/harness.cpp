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

#include "textknn/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "textknn/parallel.hpp"

namespace textknn {
namespace {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON field helpers

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error("config", fmt::format("{} is not valid JSON: {}", what, e.what()));
  }
}

void expect_object(const json& v, std::string_view key) {
  if (!v.is_object()) throw Error("config", fmt::format("'{}' must be an object", key));
}

std::string get_string(const json& v, std::string_view key) {
  if (!v.is_string()) throw Error("config", fmt::format("'{}' must be a string", key));
  return v.get<std::string>();
}

std::size_t get_count(const json& v, std::string_view key) {
  if (!v.is_number_unsigned()) throw Error("config", fmt::format("'{}' must be a non-negative integer", key));
  return v.get<std::size_t>();
}

double get_number(const json& v, std::string_view key) {
  if (!v.is_number()) throw Error("config", fmt::format("'{}' must be a number", key));
  return v.get<double>();
}

bool get_bool(const json& v, std::string_view key) {
  if (!v.is_boolean()) throw Error("config", fmt::format("'{}' must be true or false", key));
  return v.get<bool>();
}

[[noreturn]] void unknown_key(std::string_view section, std::string_view key) {
  throw Error("config", fmt::format("unknown key '{}' in {}", key, section));
}

void apply_data(const json& obj, DataConfig& d) {
  expect_object(obj, "data");
  for (const auto& [key, v] : obj.items()) {
    if (key == "input") d.input = get_string(v, key);
    else if (key == "format") d.format = parse_review_format(get_string(v, key));
    else if (key == "kcore") d.kcore = get_count(v, key);
    else if (key == "train") d.train = get_string(v, key);
    else if (key == "validation") d.validation = get_string(v, key);
    else if (key == "test") d.test = get_string(v, key);
    else if (key == "sentences") d.sentences = get_string(v, key);
    else if (key == "embeddings") d.embeddings = get_string(v, key);
    else unknown_key("data", key);
  }
}

void apply_similarity(const json& obj, UserSimConfig& s) {
  expect_object(obj, "similarity");
  for (const auto& [key, v] : obj.items()) {
    if (key == "matching") s.matching = parse_match_scheme(get_string(v, key));
    else if (key == "weight_scheme") s.edge_weight.scheme = parse_weight_scheme(get_string(v, key));
    else if (key == "polarized") s.edge_weight.polarized = get_bool(v, key);
    else if (key == "graph_scope") s.graph_scope = parse_graph_scope(get_string(v, key));
    else if (key == "user_norm") s.user_norm = parse_user_norm(get_string(v, key));
    else if (key == "match_norm") s.match_norm = parse_match_norm(get_string(v, key));
    else unknown_key("similarity", key);
  }
}

void apply_baseline(const json& obj, BaselineParams& b) {
  expect_object(obj, "baseline");
  for (const auto& [key, v] : obj.items()) {
    if (key == "reg_u") b.reg_u = get_number(v, key);
    else if (key == "reg_i") b.reg_i = get_number(v, key);
    else if (key == "epochs") b.epochs = get_count(v, key);
    else unknown_key("baseline", key);
  }
}

void apply_svd(const json& obj, SvdParams& s) {
  expect_object(obj, "svd");
  for (const auto& [key, v] : obj.items()) {
    if (key == "factors") s.factors = get_count(v, key);
    else if (key == "lr") s.lr = get_number(v, key);
    else if (key == "reg") s.reg = get_number(v, key);
    else if (key == "epochs") s.epochs = get_count(v, key);
    else if (key == "init_std") s.init_std = get_number(v, key);
    else unknown_key("svd", key);
  }
}

ExperimentConfig config_from_json(const json& obj) {
  expect_object(obj, "config");
  ExperimentConfig cfg;
  if (obj.contains("preset")) {
    const auto name = get_string(obj["preset"], "preset");
    auto p = preset(name);
    if (!p) throw Error("config", fmt::format("unknown preset '{}'", name));
    cfg = *p;
  }
  for (const auto& [key, v] : obj.items()) {
    if (key == "preset") continue;
    if (key == "data") apply_data(v, cfg.data);
    else if (key == "predictor") cfg.predictor = parse_predictor_kind(get_string(v, key));
    else if (key == "similarity") apply_similarity(v, cfg.similarity);
    else if (key == "sentence_neighbors") cfg.sentence_neighbors = get_count(v, key);
    else if (key == "user_neighbors") cfg.user_neighbors = get_count(v, key);
    else if (key == "min_similarity") cfg.min_similarity = v.is_null() ? std::nullopt : std::optional(get_number(v, key));
    else if (key == "cooccurrence") cfg.cooccurrence = parse_cooccurrence(get_string(v, key));
    else if (key == "baseline") apply_baseline(v, cfg.baseline);
    else if (key == "svd") apply_svd(v, cfg.svd);
    else if (key == "msd_min_support") cfg.msd_min_support = get_count(v, key);
    else if (key == "seed") cfg.seed = get_count(v, key);
    else if (key == "repeats") cfg.repeats = get_count(v, key);
    else if (key == "selection") cfg.selection = parse_selection_metric(get_string(v, key));
    else if (key == "threads") cfg.threads = get_count(v, key);
    else if (key == "output_dir") cfg.output_dir = get_string(v, key);
    else if (key == "cache_dir") cfg.cache_dir = get_string(v, key);
    else unknown_key("config", key);
  }
  if (cfg.sentence_neighbors == 0) throw Error("config", "sentence_neighbors must be at least 1");
  if (cfg.user_neighbors == 0) throw Error("config", "user_neighbors must be at least 1");
  if (cfg.repeats == 0) throw Error("config", "repeats must be at least 1");
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["data"] = {{"input", cfg.data.input},
               {"format", to_string(cfg.data.format)},
               {"kcore", cfg.data.kcore},
               {"train", cfg.data.train},
               {"validation", cfg.data.validation},
               {"test", cfg.data.test},
               {"sentences", cfg.data.sentences},
               {"embeddings", cfg.data.embeddings}};
  j["predictor"] = to_string(cfg.predictor);
  j["similarity"] = {{"matching", to_string(cfg.similarity.matching)},
                     {"weight_scheme", to_string(cfg.similarity.edge_weight.scheme)},
                     {"polarized", cfg.similarity.edge_weight.polarized},
                     {"graph_scope", to_string(cfg.similarity.graph_scope)},
                     {"user_norm", to_string(cfg.similarity.user_norm)},
                     {"match_norm", to_string(cfg.similarity.match_norm)}};
  j["sentence_neighbors"] = cfg.sentence_neighbors;
  j["user_neighbors"] = cfg.user_neighbors;
  j["min_similarity"] = cfg.min_similarity ? json(*cfg.min_similarity) : json(nullptr);
  j["cooccurrence"] = to_string(cfg.cooccurrence);
  j["baseline"] = {{"reg_u", cfg.baseline.reg_u}, {"reg_i", cfg.baseline.reg_i}, {"epochs", cfg.baseline.epochs}};
  j["svd"] = {{"factors", cfg.svd.factors},
              {"lr", cfg.svd.lr},
              {"reg", cfg.svd.reg},
              {"epochs", cfg.svd.epochs},
              {"init_std", cfg.svd.init_std}};
  j["msd_min_support"] = cfg.msd_min_support;
  j["seed"] = cfg.seed;
  j["repeats"] = cfg.repeats;
  j["selection"] = to_string(cfg.selection);
  j["threads"] = cfg.threads;
  j["output_dir"] = cfg.output_dir;
  j["cache_dir"] = cfg.cache_dir;
  return j;
}

// Resolves the data paths of a config file against its directory.
void anchor_paths(DataConfig& d, const std::filesystem::path& base) {
  for (auto* p : {&d.input, &d.train, &d.validation, &d.test, &d.sentences, &d.embeddings}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  }
}

json nullable(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

json scores_json(const Scores& s) {
  json j;
  j["rmse"] = nullable(s.rmse);
  j["tfcp"] = nullable(s.tfcp);
  j["fallback_rate"] = s.fallback_rate;
  j["users_excluded"] = s.users_excluded;
  j["pair_fcp"] = s.pair_fcp ? nullable(*s.pair_fcp) : json(nullptr);
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", fmt::format("cannot write '{}'", path.string()));
  out << content;
  if (!out) throw Error("io", fmt::format("write failed for '{}'", path.string()));
}

std::string fnum(double x) { return std::isnan(x) ? std::string("nan") : fmt::format("{}", x); }

std::string tsv_field(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
  return s;
}

// ---------------------------------------------------------------------------
// Graph cache files

struct Fnv1a {
  std::uint64_t h = 1469598103934665603ULL;

  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t k = 0; k < n; ++k) {
      h ^= c[k];
      h *= 1099511628211ULL;
    }
  }
  template <class T>
  void pod(const T& v) {
    bytes(&v, sizeof(T));
  }
};

constexpr char kGraphCacheMagic[8] = {'T', 'K', 'G', 'R', 'A', 'P', 'H', '1'};

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T take(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("format", "truncated graph cache file");
  return v;
}

void save_graphs(const std::filesystem::path& path, const std::vector<SentenceGraph>& graphs) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io", fmt::format("cannot write '{}'", tmp.string()));
    out.write(kGraphCacheMagic, sizeof(kGraphCacheMagic));
    put<std::uint64_t>(out, graphs.size());
    for (const auto& g : graphs) {
      put<std::uint8_t>(out, g.item() ? 1 : 0);
      put<std::uint32_t>(out, g.item() ? g.item()->value : 0);
      put<std::uint64_t>(out, g.k());
      put<std::uint64_t>(out, g.num_vertices());
      for (auto s : g.vertices()) put<std::uint32_t>(out, s.value);
      for (std::size_t h = 0; h < g.num_vertices(); ++h) {
        const auto edges = g.out_edges(h);
        put<std::uint64_t>(out, edges.size());
        for (const auto& e : edges) {
          put<std::uint32_t>(out, e.tail.value);
          put<double>(out, e.cosine);
        }
      }
    }
    if (!out) throw Error("io", fmt::format("write failed for '{}'", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

std::vector<SentenceGraph> load_graphs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", fmt::format("cannot open '{}'", path.string()));
  char magic[sizeof(kGraphCacheMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kGraphCacheMagic, sizeof(magic)) != 0) {
    throw Error("format", fmt::format("'{}' is not a graph cache file", path.string()));
  }
  const auto count = take<std::uint64_t>(in);
  std::vector<SentenceGraph> graphs;
  graphs.reserve(count);
  for (std::uint64_t gi = 0; gi < count; ++gi) {
    const bool has_item = take<std::uint8_t>(in) != 0;
    const auto item = take<std::uint32_t>(in);
    const auto k = take<std::uint64_t>(in);
    const auto n = take<std::uint64_t>(in);
    std::vector<SentenceId> vertices(n);
    for (auto& s : vertices) s = SentenceId{take<std::uint32_t>(in)};
    std::vector<std::size_t> offsets{0};
    std::vector<Edge> edges;
    for (std::uint64_t h = 0; h < n; ++h) {
      const auto m = take<std::uint64_t>(in);
      for (std::uint64_t e = 0; e < m; ++e) {
        const auto tail = take<std::uint32_t>(in);
        edges.push_back({SentenceId{tail}, take<double>(in)});
      }
      offsets.push_back(edges.size());
    }
    graphs.emplace_back(has_item ? std::optional(ItemIdx{item}) : std::nullopt, k, std::move(vertices),
                        std::move(offsets), std::move(edges));
  }
  return graphs;
}

bool lower_is_better(SelectionMetric m) { return m == SelectionMetric::rmse; }

double metric_of(const Scores& s, SelectionMetric m) { return m == SelectionMetric::rmse ? s.rmse : s.tfcp; }

// True when a beats b; NaN never beats anything.
bool better(double a, double b, SelectionMetric m) {
  if (std::isnan(a)) return false;
  if (std::isnan(b)) return true;
  return lower_is_better(m) ? a < b : a > b;
}

Scores score(const ExperimentConfig& cfg, Workspace& ws, const std::vector<Interaction>& targets,
             EvalReport* first_report) {
  const std::size_t runs = is_stochastic(cfg.predictor) ? cfg.repeats : 1;
  Scores s;
  double pair_sum = 0.0;
  std::size_t pair_runs = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    auto predictor = ws.make_predictor(cfg, cfg.seed + r);
    auto report = evaluate(targets, ws.train(), *predictor);
    s.rmse += report.rmse;
    s.tfcp += report.tfcp_macro;
    s.fallback_rate += report.fallback_rate;
    if (report.pair_fcp) {
      pair_sum += *report.pair_fcp;
      ++pair_runs;
    }
    if (r == 0) {
      s.users_excluded = report.users_excluded;
      if (first_report) *first_report = std::move(report);
    }
  }
  const auto n = static_cast<double>(runs);
  s.rmse /= n;
  s.tfcp /= n;
  s.fallback_rate /= n;
  if (pair_runs > 0) s.pair_fcp = pair_sum / static_cast<double>(pair_runs);
  return s;
}

std::vector<ExplanationRow> explain_targets(const ExperimentConfig& cfg, Workspace& ws,
                                            const std::vector<Interaction>& targets) {
  constexpr std::size_t kNeighbors = 3;
  constexpr std::size_t kMatches = 3;
  std::vector<ExplanationRow> rows;
  if (!uses_graphs(cfg.predictor)) return rows;
  const auto& graphs = ws.graphs(cfg.similarity.graph_scope, cfg.sentence_neighbors, cfg.min_similarity);
  const auto& corpus = ws.corpus();
  auto predictor = ws.make_predictor(cfg, cfg.seed);
  for (const auto& t : targets) {
    auto out = predictor->predict({t.user_id, t.item_id, t.timestamp});
    auto u = ws.train().find_user(t.user_id);
    if (!u) continue;
    for (std::size_t n = 0; n < std::min(kNeighbors, out.neighbors.size()); ++n) {
      const auto& nb = out.neighbors[n];
      auto matches = match_evidence(*u, nb.user, graphs, corpus, cfg.similarity.edge_weight);
      for (std::size_t m = 0; m < std::min(kMatches, matches.size()); ++m) {
        const auto& ev = matches[m];
        rows.push_back({t.user_id, t.item_id, out.estimate, ws.train().user_id(nb.user), nb.weight, nb.rating,
                        ev.head, ev.tail, ev.weight, corpus.at(ev.head).text, corpus.at(ev.tail).text});
      }
    }
  }
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// Enums

PredictorKind parse_predictor_kind(std::string_view name) {
  static const std::pair<std::string_view, PredictorKind> kTable[] = {
      {"uniform", PredictorKind::uniform},     {"normal", PredictorKind::normal},
      {"baseline", PredictorKind::baseline},   {"knn", PredictorKind::knn},
      {"bknn", PredictorKind::bknn},           {"svd", PredictorKind::svd},
      {"text_knn", PredictorKind::text_knn},   {"text_bknn", PredictorKind::text_bknn},
      {"cooc_knn", PredictorKind::cooc_knn},   {"cooc_bknn", PredictorKind::cooc_bknn},
      {"oracle", PredictorKind::oracle},
  };
  for (const auto& [n, k] : kTable) {
    if (n == name) return k;
  }
  throw Error("config", fmt::format("unknown predictor '{}'", name));
}

std::string_view to_string(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::uniform:
      return "uniform";
    case PredictorKind::normal:
      return "normal";
    case PredictorKind::baseline:
      return "baseline";
    case PredictorKind::knn:
      return "knn";
    case PredictorKind::bknn:
      return "bknn";
    case PredictorKind::svd:
      return "svd";
    case PredictorKind::text_knn:
      return "text_knn";
    case PredictorKind::text_bknn:
      return "text_bknn";
    case PredictorKind::cooc_knn:
      return "cooc_knn";
    case PredictorKind::cooc_bknn:
      return "cooc_bknn";
    case PredictorKind::oracle:
      return "oracle";
  }
  return "?";
}

bool uses_graphs(PredictorKind kind) { return kind == PredictorKind::text_knn || kind == PredictorKind::text_bknn; }

bool uses_sentences(PredictorKind kind) {
  return uses_graphs(kind) || kind == PredictorKind::cooc_knn || kind == PredictorKind::cooc_bknn;
}

bool is_stochastic(PredictorKind kind) {
  return kind == PredictorKind::uniform || kind == PredictorKind::normal || kind == PredictorKind::svd;
}

SelectionMetric parse_selection_metric(std::string_view name) {
  if (name == "rmse") return SelectionMetric::rmse;
  if (name == "tfcp") return SelectionMetric::tfcp;
  throw Error("config", fmt::format("unknown selection metric '{}'", name));
}

std::string_view to_string(SelectionMetric metric) { return metric == SelectionMetric::rmse ? "rmse" : "tfcp"; }

// ---------------------------------------------------------------------------
// Config

ExperimentConfig parse_experiment_config(std::string_view json_text) {
  return config_from_json(parse_json(json_text, "config"));
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  auto cfg = parse_experiment_config(read_text_file(path));
  anchor_paths(cfg.data, path.parent_path());
  return cfg;
}

std::string experiment_config_json(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

std::vector<std::string> preset_names() { return {"text-knn-r", "text-bknn-r", "text-knn-f", "text-bknn-f"}; }

std::optional<ExperimentConfig> preset(std::string_view name) {
  ExperimentConfig cfg;
  auto& s = cfg.similarity;
  if (name == "text-knn-r") {
    cfg.predictor = PredictorKind::text_knn;
    cfg.selection = SelectionMetric::rmse;
    s = {MatchScheme::many_to_many, {WeightScheme::continuous, true}, GraphScope::global, UserNorm::none,
         MatchNorm::out_degree};
  } else if (name == "text-bknn-r") {
    cfg.predictor = PredictorKind::text_bknn;
    cfg.selection = SelectionMetric::rmse;
    s = {MatchScheme::one_to_one, {WeightScheme::binary, false}, GraphScope::global, UserNorm::none,
         MatchNorm::none};
  } else if (name == "text-knn-f" || name == "text-bknn-f") {
    cfg.predictor = name == "text-knn-f" ? PredictorKind::text_knn : PredictorKind::text_bknn;
    cfg.selection = SelectionMetric::tfcp;
    s = {MatchScheme::many_to_many, {WeightScheme::continuous, true}, GraphScope::per_item,
         UserNorm::neighbor_sentences, MatchNorm::in_degree};
  } else {
    return std::nullopt;
  }
  return cfg;
}

std::string cell_label(const ExperimentConfig& cfg) {
  std::string label(to_string(cfg.predictor));
  if (uses_graphs(cfg.predictor)) {
    label += fmt::format("[{}]", describe(cfg.similarity));
  } else if (cfg.predictor == PredictorKind::cooc_knn || cfg.predictor == PredictorKind::cooc_bknn) {
    label += fmt::format("[{}]", to_string(cfg.cooccurrence));
  }
  return label;
}

// ---------------------------------------------------------------------------
// Inputs

Inputs load_inputs(const DataConfig& data, bool need_embeddings) {
  // Checked before any file is read.
  if (need_embeddings && data.embeddings.empty()) {
    throw Error("config",
                "this predictor needs sentence embeddings: write the train sentence manifest with "
                "'textknn split', encode it with the encoder bridge, and set data.embeddings");
  }
  Inputs in;
  if (!data.input.empty()) {
    auto parsed = parse_reviews(data.input, data.format);
    auto split = chrono_split(kcore_filter(parsed.dataset, data.kcore));
    in.train = std::move(split.train);
    in.validation = std::move(split.validation);
    in.test = std::move(split.test);
  } else {
    if (data.train.empty() || data.validation.empty() || data.test.empty()) {
      throw Error("config", "data needs either 'input' or all of 'train', 'validation' and 'test'");
    }
    in.train = Dataset(read_interactions_jsonl(data.train));
    in.validation = read_interactions_jsonl(data.validation);
    in.test = read_interactions_jsonl(data.test);
  }
  if (!data.sentences.empty()) in.sentences = read_sentence_manifest(data.sentences);
  if (need_embeddings) in.embeddings = load_embeddings(data.embeddings);
  return in;
}

// ---------------------------------------------------------------------------
// Workspace

Workspace::Workspace(Inputs inputs, std::size_t threads, std::filesystem::path cache_dir)
    : inputs_(std::move(inputs)), threads_(threads), cache_dir_(std::move(cache_dir)) {}

const SentenceCorpus& Workspace::corpus() {
  std::call_once(corpus_once_, [&] {
    auto records = inputs_.sentences ? *inputs_.sentences : segment_sentences(inputs_.train);
    corpus_ = std::make_unique<SentenceCorpus>(inputs_.train, std::move(records));
    if (inputs_.embeddings) check_row_count(*inputs_.embeddings, corpus_->size());
  });
  return *corpus_;
}

std::vector<SentenceGraph> Workspace::build_or_load_graphs(GraphScope scope, std::size_t k,
                                                          std::optional<double> min_similarity) {
  const auto& table = *inputs_.embeddings;
  const auto& c = corpus();
  KnnGraphOptions opts{k, min_similarity, threads_};
  if (cache_dir_.empty()) return build_graphs(table, c, scope, opts);

  Fnv1a h;
  h.bytes(kGraphCacheMagic, sizeof(kGraphCacheMagic));
  h.pod(static_cast<std::uint64_t>(table.dim()));
  h.bytes(table.values().data(), table.values().size() * sizeof(float));
  for (const auto& s : c.sentences()) {
    h.pod(c.user_of(s.id).value);
    h.pod(c.item_of(s.id).value);
  }
  h.pod(static_cast<std::uint8_t>(scope));
  h.pod(static_cast<std::uint64_t>(k));
  h.pod(min_similarity.has_value());
  h.pod(min_similarity.value_or(0.0));
  const auto path = cache_dir_ / fmt::format("graphs-{:016x}.bin", h.h);
  if (std::filesystem::exists(path)) return load_graphs(path);
  auto graphs = build_graphs(table, c, scope, opts);
  std::filesystem::create_directories(cache_dir_);
  save_graphs(path, graphs);
  return graphs;
}

const std::vector<SentenceGraph>& Workspace::graphs(GraphScope scope, std::size_t k,
                                                    std::optional<double> min_similarity) {
  if (!inputs_.embeddings) {
    throw Error("config",
                "sentence graphs need embeddings: encode the train sentence manifest and set data.embeddings");
  }
  const auto key = fmt::format("{}/{}/{}", to_string(scope), k, min_similarity ? fnum(*min_similarity) : "none");
  return graphs_.get(key, [&] { return build_or_load_graphs(scope, k, min_similarity); });
}

const UserWeightMatrix& Workspace::text_weights(const UserSimConfig& cfg, std::size_t k,
                                                std::optional<double> min_similarity) {
  const auto key =
      fmt::format("text/{}/{}/{}", describe(cfg), k, min_similarity ? fnum(*min_similarity) : "none");
  return weights_.get(key, [&] {
    return compute_user_weights(graphs(cfg.graph_scope, k, min_similarity), corpus(), cfg, threads_);
  });
}

const UserWeightMatrix& Workspace::msd_weights(std::size_t min_support) {
  return weights_.get(fmt::format("msd/{}", min_support),
                      [&] { return msd_similarity(ratings(), min_support, threads_); });
}

const UserWeightMatrix& Workspace::cooccurrence(CooccurrenceVariant variant) {
  return weights_.get(fmt::format("cooc/{}", to_string(variant)),
                      [&] { return cooccurrence_weights(corpus(), variant); });
}

const TrainRatings& Workspace::ratings() {
  std::call_once(ratings_once_, [&] { ratings_ = std::make_unique<TrainRatings>(inputs_.train); });
  return *ratings_;
}

const BaselineModel& Workspace::baseline(const BaselineParams& params) {
  return baselines_.get(fmt::format("{}/{}/{}", params.reg_u, params.reg_i, params.epochs),
                        [&] { return fit_baseline(inputs_.train, params); });
}

const NormalModel& Workspace::normal() {
  std::call_once(normal_once_, [&] { normal_ = std::make_unique<NormalModel>(fit_normal(inputs_.train)); });
  return *normal_;
}

const MFModel& Workspace::svd(const SvdParams& params, std::uint64_t seed) {
  const auto key = fmt::format("{}/{}/{}/{}/{}/{}", params.factors, params.lr, params.reg, params.epochs,
                               params.init_std, seed);
  return svds_.get(key, [&] { return fit_svd(inputs_.train, params, seed); });
}

std::unique_ptr<Predictor> Workspace::make_predictor(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto& train = inputs_.train;
  const std::string name(to_string(cfg.predictor));
  switch (cfg.predictor) {
    case PredictorKind::uniform:
      return std::make_unique<UniformPredictor>(seed);
    case PredictorKind::normal:
      return std::make_unique<NormalPredictor>(normal(), seed);
    case PredictorKind::baseline:
      return std::make_unique<BaselinePredictor>(train, baseline(cfg.baseline));
    case PredictorKind::knn:
      return std::make_unique<NeighborPredictor>(name, train, ratings(), msd_weights(cfg.msd_min_support),
                                                 cfg.user_neighbors, nullptr);
    case PredictorKind::bknn:
      return std::make_unique<NeighborPredictor>(name, train, ratings(), msd_weights(cfg.msd_min_support),
                                                 cfg.user_neighbors, &baseline(cfg.baseline));
    case PredictorKind::svd:
      return std::make_unique<SvdPredictor>(train, svd(cfg.svd, seed));
    case PredictorKind::text_knn:
    case PredictorKind::text_bknn: {
      if (auto why = validate(cfg.similarity)) throw Error("config", *why);
      const auto& w = text_weights(cfg.similarity, cfg.sentence_neighbors, cfg.min_similarity);
      return std::make_unique<NeighborPredictor>(
          name, train, ratings(), w, cfg.user_neighbors,
          cfg.predictor == PredictorKind::text_bknn ? &baseline(cfg.baseline) : nullptr);
    }
    case PredictorKind::cooc_knn:
    case PredictorKind::cooc_bknn: {
      const auto& w = cooccurrence(cfg.cooccurrence);
      return std::make_unique<NeighborPredictor>(
          name, train, ratings(), w, cfg.user_neighbors,
          cfg.predictor == PredictorKind::cooc_bknn ? &baseline(cfg.baseline) : nullptr);
    }
    case PredictorKind::oracle: {
      auto oracle = std::make_unique<OraclePredictor>(train.interactions());
      oracle->add(inputs_.validation);
      oracle->add(inputs_.test);
      return oracle;
    }
  }
  throw Error("config", "unhandled predictor");
}

// ---------------------------------------------------------------------------
// Grid

GridSpec parse_grid_spec(std::string_view json_text) {
  const auto doc = parse_json(json_text, "grid spec");
  expect_object(doc, "grid spec");
  GridSpec g;
  for (const auto& [key, v] : doc.items()) {
    if (key != "base" && key != "axes") unknown_key("grid spec", key);
  }
  if (doc.contains("base")) g.base = config_from_json(doc["base"]);
  if (!doc.contains("axes")) return g;
  const auto& axes = doc["axes"];
  expect_object(axes, "axes");
  for (const auto& [key, v] : axes.items()) {
    if (!v.is_array()) throw Error("config", fmt::format("axis '{}' must be an array", key));
    for (const auto& x : v) {
      if (key == "predictor") g.predictors.push_back(parse_predictor_kind(get_string(x, key)));
      else if (key == "matching") g.matching.push_back(parse_match_scheme(get_string(x, key)));
      else if (key == "weight_scheme") g.weight_schemes.push_back(parse_weight_scheme(get_string(x, key)));
      else if (key == "polarized") g.polarized.push_back(get_bool(x, key));
      else if (key == "graph_scope") g.graph_scopes.push_back(parse_graph_scope(get_string(x, key)));
      else if (key == "user_norm") g.user_norms.push_back(parse_user_norm(get_string(x, key)));
      else if (key == "match_norm") g.match_norms.push_back(parse_match_norm(get_string(x, key)));
      else if (key == "cooccurrence") g.cooccurrence.push_back(parse_cooccurrence(get_string(x, key)));
      else unknown_key("axes", key);
    }
  }
  return g;
}

GridSpec load_grid_spec(const std::filesystem::path& path) {
  auto g = parse_grid_spec(read_text_file(path));
  anchor_paths(g.base.data, path.parent_path());
  return g;
}

ExpandedGrid expand_grid(const GridSpec& grid) {
  const auto& b = grid.base;
  auto axis = [](const auto& values, auto fallback) {
    using T = decltype(fallback);
    return values.empty() ? std::vector<T>{fallback} : std::vector<T>(values.begin(), values.end());
  };
  const auto predictors = axis(grid.predictors, b.predictor);
  const auto matching = axis(grid.matching, b.similarity.matching);
  const auto schemes = axis(grid.weight_schemes, b.similarity.edge_weight.scheme);
  const auto polarized = axis(grid.polarized, b.similarity.edge_weight.polarized);
  const auto scopes = axis(grid.graph_scopes, b.similarity.graph_scope);
  const auto user_norms = axis(grid.user_norms, b.similarity.user_norm);
  const auto match_norms = axis(grid.match_norms, b.similarity.match_norm);
  const auto variants = axis(grid.cooccurrence, b.cooccurrence);

  ExpandedGrid out;
  std::set<std::string> seen;
  auto push = [&](const ExperimentConfig& cfg) {
    if (seen.insert(cell_label(cfg)).second) out.cells.push_back(cfg);
  };
  for (auto p : predictors) {
    ExperimentConfig cfg = b;
    cfg.predictor = p;
    if (uses_graphs(p)) {
      for (auto m : matching)
        for (auto ws : schemes)
          for (bool pol : polarized)
            for (auto sc : scopes)
              for (auto un : user_norms)
                for (auto mn : match_norms) {
                  cfg.similarity = {m, {ws, pol}, sc, un, mn};
                  if (validate(cfg.similarity)) {
                    ++out.pruned;
                    continue;
                  }
                  push(cfg);
                }
    } else if (p == PredictorKind::cooc_knn || p == PredictorKind::cooc_bknn) {
      for (auto v : variants) {
        cfg.cooccurrence = v;
        push(cfg);
      }
    } else {
      push(cfg);
    }
  }
  return out;
}

GridResult grid_search(const GridSpec& grid, Workspace& ws) {
  const auto expanded = expand_grid(grid);
  if (expanded.cells.empty()) throw Error("config", "the grid has no valid cell");
  GridResult result;
  result.selection = grid.base.selection;
  result.pruned = expanded.pruned;
  result.cells.resize(expanded.cells.size());
  parallel_for(expanded.cells.size(), grid.base.threads, [&](std::size_t k) {
    const auto& cfg = expanded.cells[k];
    result.cells[k] = {cfg, cell_label(cfg), score(cfg, ws, ws.validation(), nullptr)};
  });

  const auto metric = result.selection;
  for (std::size_t k = 1; k < result.cells.size(); ++k) {
    if (better(metric_of(result.cells[k].validation, metric), metric_of(result.cells[result.best].validation, metric),
               metric)) {
      result.best = k;
    }
  }
  const auto& chosen = result.cells[result.best].config;
  result.test = score(chosen, ws, ws.test(), &result.test_report);
  result.explanations = explain_targets(chosen, ws, ws.test());
  return result;
}

GridResult run_experiment(const ExperimentConfig& cfg, Workspace& ws) {
  GridSpec grid;
  grid.base = cfg;
  return grid_search(grid, ws);
}

std::filesystem::path resolve_cache_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("TEXTKNN_CACHE_DIR"); env && *env) return env;
  return cfg.cache_dir;
}

std::unique_ptr<Workspace> open_workspace(const ExperimentConfig& cfg, bool need_embeddings) {
  return std::make_unique<Workspace>(load_inputs(cfg.data, need_embeddings), cfg.threads, resolve_cache_dir(cfg));
}

GridResult run_experiment(const ExperimentConfig& cfg) {
  auto ws = open_workspace(cfg, uses_graphs(cfg.predictor));
  auto result = run_experiment(cfg, *ws);
  if (!cfg.output_dir.empty()) emit_report(result, cfg.output_dir);
  return result;
}

// ---------------------------------------------------------------------------
// Reports

std::string leaderboard_csv(const GridResult& result) {
  std::vector<std::size_t> order(result.cells.size());
  std::iota(order.begin(), order.end(), 0);
  const auto metric = result.selection;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return better(metric_of(result.cells[a].validation, metric), metric_of(result.cells[b].validation, metric),
                  metric);
  });
  std::string out = "rank,label,predictor,validation_rmse,validation_tfcp,fallback_rate,users_excluded,selected\n";
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& c = result.cells[order[r]];
    out += fmt::format("{},\"{}\",{},{},{},{},{},{}\n", r + 1, c.label, to_string(c.config.predictor),
                       fnum(c.validation.rmse), fnum(c.validation.tfcp), fnum(c.validation.fallback_rate),
                       c.validation.users_excluded, order[r] == result.best ? 1 : 0);
  }
  return out;
}

void emit_report(const GridResult& result, const std::filesystem::path& dir) {
  if (result.cells.empty()) throw Error("invalid_argument", "no report to emit");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("io", fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));

  write_file(dir / "leaderboard.csv", leaderboard_csv(result));

  const auto& best = result.cells[result.best];
  std::string scores = "label,predictor,split,rmse,tfcp\n";
  for (const auto& c : result.cells) {
    scores += fmt::format("\"{}\",{},validation,{},{}\n", c.label, to_string(c.config.predictor),
                          fnum(c.validation.rmse), fnum(c.validation.tfcp));
  }
  scores += fmt::format("\"{}\",{},test,{},{}\n", best.label, to_string(best.config.predictor),
                        fnum(result.test.rmse), fnum(result.test.tfcp));
  write_file(dir / "scores.csv", scores);

  json corr;
  corr["models"] = result.cells.size();
  corr["metric_a"] = "validation_rmse (lower is better)";
  corr["metric_b"] = "validation_tfcp";
  std::map<std::string, double> by_rmse;
  std::map<std::string, double> by_tfcp;
  for (const auto& c : result.cells) {
    by_rmse[c.label] = -c.validation.rmse;
    by_tfcp[c.label] = c.validation.tfcp;
  }
  if (by_rmse.size() >= 2) {
    const auto rc = rank_correlation(by_rmse, by_tfcp);
    corr["spearman_rho"] = nullable(rc.spearman_rho);
    corr["kendall_tau"] = nullable(rc.kendall_tau);
  } else {
    corr["spearman_rho"] = nullptr;
    corr["kendall_tau"] = nullptr;
  }
  write_file(dir / "correlation.json", corr.dump(2) + "\n");

  std::string expl =
      "user_id\titem_id\testimate\tneighbor_id\tneighbor_weight\tneighbor_rating\thead_sentence\t"
      "tail_sentence\tmatch_weight\thead_text\ttail_text\n";
  for (const auto& e : result.explanations) {
    expl += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", e.user_id, e.item_id, e.estimate,
                        e.neighbor_id, e.neighbor_weight, e.neighbor_rating, e.head.value, e.tail.value,
                        e.match_weight, tsv_field(e.head_text), tsv_field(e.tail_text));
  }
  write_file(dir / "explanations.tsv", expl);

  write_predictions_tsv(dir / "predictions.tsv", result.test_report.predictions, best.label);

  json report;
  report["selection"] = to_string(result.selection);
  report["trials"] = result.cells.size();
  report["pruned"] = result.pruned;
  report["selected"] = {{"label", best.label}, {"validation", scores_json(best.validation)},
                        {"test", scores_json(result.test)}};
  auto& board = report["leaderboard"] = json::array();
  for (const auto& c : result.cells) board.push_back({{"label", c.label}, {"validation", scores_json(c.validation)}});
  write_file(dir / "report.json", report.dump(2) + "\n");

  write_file(dir / "config.json", experiment_config_json(best.config));
}

}  // namespace textknn
