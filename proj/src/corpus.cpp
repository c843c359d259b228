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

#include "textknn/corpus.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <memory>
#include <numeric>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "json.hpp"

namespace textknn {
namespace {

using json = nlohmann::json;

std::vector<std::string> sorted_unique(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::uint32_t index_of(const std::vector<std::string>& sorted, const std::string& id) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), id);
  return static_cast<std::uint32_t>(it - sorted.begin());
}

// Builds CSR offsets/positions grouping `owner[pos]` buckets.
void group_positions(const std::vector<std::uint32_t>& owner, std::size_t buckets,
                     std::vector<std::size_t>& offsets, std::vector<std::uint32_t>& positions) {
  offsets.assign(buckets + 1, 0);
  for (auto o : owner) ++offsets[o + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  positions.assign(owner.size(), 0);
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t pos = 0; pos < owner.size(); ++pos) {
    positions[cursor[owner[pos]]++] = static_cast<std::uint32_t>(pos);
  }
}

template <class T>
std::optional<T> find_sorted(const std::vector<std::string>& ids, std::string_view id) {
  auto it = std::lower_bound(ids.begin(), ids.end(), id,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == ids.end() || *it != id) return std::nullopt;
  return T{static_cast<std::uint32_t>(it - ids.begin())};
}

// Line reader over zlib; gzread handles uncompressed input transparently.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path)
      : file_(gzopen(path.c_str(), "rb"), &gzclose) {
    if (!file_) throw Error("io", fmt::format("cannot open '{}'", path.string()));
    std::error_code ec;
    if (std::filesystem::is_directory(path, ec)) {
      throw Error("io", fmt::format("'{}' is a directory", path.string()));
    }
  }

  bool next(std::string& line) {
    line.clear();
    while (true) {
      if (pos_ == len_) {
        if (eof_) return !line.empty();
        int n = gzread(file_.get(), buffer_.data(), static_cast<unsigned>(buffer_.size()));
        if (n < 0) throw Error("io", "read error while decompressing input");
        if (n == 0) {
          eof_ = true;
          return !line.empty();
        }
        pos_ = 0;
        len_ = static_cast<std::size_t>(n);
      }
      const char* begin = buffer_.data() + pos_;
      const char* end = buffer_.data() + len_;
      const char* nl = std::find(begin, end, '\n');
      line.append(begin, nl);
      pos_ += static_cast<std::size_t>(nl - begin);
      if (nl != end) {
        ++pos_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
    }
  }

 private:
  std::unique_ptr<gzFile_s, int (*)(gzFile)> file_;
  std::array<char, 1 << 16> buffer_{};
  std::size_t pos_ = 0;
  std::size_t len_ = 0;
  bool eof_ = false;
};

bool all_space(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::optional<double> to_double(std::string_view s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::int64_t> to_int64(std::string_view s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

// "YYYY-MM-DD" optionally followed by " HH:MM:SS" or "THH:MM:SS", UTC.
std::optional<std::int64_t> parse_datetime(std::string_view s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  auto num = [&](std::size_t at, std::size_t len, int& out) {
    if (at + len > s.size()) return false;
    auto [p, ec] = std::from_chars(s.data() + at, s.data() + at + len, out);
    return ec == std::errc() && p == s.data() + at + len;
  };
  if (!num(0, 4, y) || s.size() < 10 || s[4] != '-' || !num(5, 2, mo) || s[7] != '-' ||
      !num(8, 2, d)) {
    return std::nullopt;
  }
  if (s.size() > 10) {
    if (s.size() != 19 || (s[10] != ' ' && s[10] != 'T') || !num(11, 2, h) || s[13] != ':' ||
        !num(14, 2, mi) || s[16] != ':' || !num(17, 2, sec)) {
      return std::nullopt;
    }
  }
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + sec;
}

std::optional<std::string> json_id(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return it->dump();
  return std::nullopt;
}

std::optional<double> json_number(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return to_double(v.get_ref<const std::string&>());
  return std::nullopt;
}

enum class LineStatus { ok, blank, malformed, out_of_range };

LineStatus parse_json_line(const std::string& line, const JsonFields& f, Interaction& out) {
  if (all_space(line)) return LineStatus::blank;
  json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded() || !obj.is_object()) return LineStatus::malformed;
  auto user = json_id(obj, f.user);
  auto item = json_id(obj, f.item);
  auto rating_it = obj.find(f.rating);
  auto time_it = obj.find(f.timestamp);
  if (!user || !item || rating_it == obj.end() || time_it == obj.end()) return LineStatus::malformed;
  auto rating = json_number(*rating_it);
  if (!rating) return LineStatus::malformed;
  std::optional<std::int64_t> ts;
  if (f.timestamp_is_datetime) {
    if (time_it->is_string()) ts = parse_datetime(time_it->get_ref<const std::string&>());
  } else if (time_it->is_number_integer()) {
    ts = time_it->get<std::int64_t>();
  } else if (time_it->is_string()) {
    ts = to_int64(time_it->get_ref<const std::string&>());
  }
  if (!ts) return LineStatus::malformed;
  std::string text;
  if (auto t = obj.find(f.text); t != obj.end()) {
    if (t->is_string()) {
      text = t->get<std::string>();
    } else if (!t->is_null()) {
      return LineStatus::malformed;
    }
  }
  if (!(*rating >= 1.0 && *rating <= 5.0)) return LineStatus::out_of_range;
  out = Interaction{std::move(*user), std::move(*item), *rating, *ts, std::move(text)};
  return LineStatus::ok;
}

LineStatus parse_tsv_line(const std::string& line, Interaction& out) {
  if (all_space(line)) return LineStatus::blank;
  std::array<std::string_view, 4> head{};
  std::string_view rest(line);
  for (auto& field : head) {
    auto tab = rest.find('\t');
    if (tab == std::string_view::npos) return LineStatus::malformed;
    field = rest.substr(0, tab);
    rest.remove_prefix(tab + 1);
  }
  if (head[0].empty() || head[1].empty()) return LineStatus::malformed;
  auto rating = to_double(head[2]);
  auto ts = to_int64(head[3]);
  if (!rating || !ts) return LineStatus::malformed;
  if (!(*rating >= 1.0 && *rating <= 5.0)) return LineStatus::out_of_range;
  out = Interaction{std::string(head[0]), std::string(head[1]), *rating, *ts, std::string(rest)};
  return LineStatus::ok;
}

template <class LineParser>
ParseReport parse_lines(const std::filesystem::path& path, LineParser&& parse) {
  LineReader reader(path);
  ParseReport report;
  std::vector<Interaction> rows;
  std::set<std::tuple<std::string, std::string, std::int64_t>> seen;
  std::string line;
  while (reader.next(line)) {
    ++report.lines;
    Interaction row;
    switch (parse(line, row)) {
      case LineStatus::blank:
        continue;
      case LineStatus::malformed:
        ++report.malformed;
        continue;
      case LineStatus::out_of_range:
        ++report.out_of_range;
        continue;
      case LineStatus::ok:
        break;
    }
    if (!seen.emplace(row.user_id, row.item_id, row.timestamp).second) {
      ++report.duplicates;
      continue;
    }
    rows.push_back(std::move(row));
  }
  report.dataset = Dataset(std::move(rows));
  return report;
}

std::string sanitize_field(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::vector<Interaction> interactions) : interactions_(std::move(interactions)) {
  std::vector<std::string> users, items;
  users.reserve(interactions_.size());
  items.reserve(interactions_.size());
  for (const auto& row : interactions_) {
    users.push_back(row.user_id);
    items.push_back(row.item_id);
  }
  user_ids_ = sorted_unique(std::move(users));
  item_ids_ = sorted_unique(std::move(items));

  user_of_.resize(interactions_.size());
  item_of_.resize(interactions_.size());
  for (std::size_t pos = 0; pos < interactions_.size(); ++pos) {
    user_of_[pos] = index_of(user_ids_, interactions_[pos].user_id);
    item_of_[pos] = index_of(item_ids_, interactions_[pos].item_id);
  }
  group_positions(user_of_, user_ids_.size(), user_offsets_, user_positions_);
  group_positions(item_of_, item_ids_.size(), item_offsets_, item_positions_);

  for (std::size_t u = 0; u < user_ids_.size(); ++u) {
    auto first = user_positions_.begin() + static_cast<std::ptrdiff_t>(user_offsets_[u]);
    auto last = user_positions_.begin() + static_cast<std::ptrdiff_t>(user_offsets_[u + 1]);
    std::stable_sort(first, last, [this](std::uint32_t a, std::uint32_t b) {
      return interactions_[a].timestamp < interactions_[b].timestamp;
    });
  }
}

std::optional<UserIdx> Dataset::find_user(std::string_view id) const {
  return find_sorted<UserIdx>(user_ids_, id);
}

std::optional<ItemIdx> Dataset::find_item(std::string_view id) const {
  return find_sorted<ItemIdx>(item_ids_, id);
}

std::span<const std::uint32_t> Dataset::user_history(UserIdx u) const {
  const auto b = user_offsets_.at(u.value), e = user_offsets_.at(u.value + 1);
  return {user_positions_.data() + b, e - b};
}

std::span<const std::uint32_t> Dataset::item_history(ItemIdx i) const {
  const auto b = item_offsets_.at(i.value), e = item_offsets_.at(i.value + 1);
  return {item_positions_.data() + b, e - b};
}

// ---------------------------------------------------------------------------
// Parsing

ReviewFormat parse_review_format(std::string_view name) {
  if (name == "amazon-json") return ReviewFormat::amazon_json;
  if (name == "yelp-json") return ReviewFormat::yelp_json;
  if (name == "generic-tsv") return ReviewFormat::generic_tsv;
  throw Error("invalid_argument", fmt::format("unknown review format '{}'", name));
}

std::string_view to_string(ReviewFormat format) {
  switch (format) {
    case ReviewFormat::amazon_json:
      return "amazon-json";
    case ReviewFormat::yelp_json:
      return "yelp-json";
    case ReviewFormat::generic_tsv:
      return "generic-tsv";
  }
  return "?";
}

JsonFields JsonFields::amazon() {
  return {"reviewerID", "asin", "overall", "unixReviewTime", "reviewText", false};
}

JsonFields JsonFields::yelp() { return {"user_id", "business_id", "stars", "date", "text", true}; }

ParseReport parse_reviews(const std::filesystem::path& path, ReviewFormat format) {
  switch (format) {
    case ReviewFormat::amazon_json:
      return parse_reviews(path, JsonFields::amazon());
    case ReviewFormat::yelp_json:
      return parse_reviews(path, JsonFields::yelp());
    case ReviewFormat::generic_tsv:
      return parse_lines(path, parse_tsv_line);
  }
  throw Error("invalid_argument", "unknown review format");
}

ParseReport parse_reviews(const std::filesystem::path& path, const JsonFields& fields) {
  return parse_lines(path, [&fields](const std::string& line, Interaction& out) {
    return parse_json_line(line, fields, out);
  });
}

// ---------------------------------------------------------------------------
// k-core

Dataset kcore_filter(const Dataset& data, std::size_t k) {
  const std::size_t n = data.size();
  std::vector<std::size_t> user_deg(data.num_users()), item_deg(data.num_items());
  for (std::size_t u = 0; u < data.num_users(); ++u) user_deg[u] = data.user_history(UserIdx{u}).size();
  for (std::size_t i = 0; i < data.num_items(); ++i) item_deg[i] = data.item_history(ItemIdx{i}).size();

  std::vector<char> alive(n, 1), user_gone(data.num_users(), 0), item_gone(data.num_items(), 0);
  // Work list of (is_item, index) nodes whose degree fell below k.
  std::vector<std::pair<bool, std::uint32_t>> work;
  for (std::uint32_t u = 0; u < user_deg.size(); ++u)
    if (user_deg[u] < k) work.emplace_back(false, u);
  for (std::uint32_t i = 0; i < item_deg.size(); ++i)
    if (item_deg[i] < k) work.emplace_back(true, i);

  while (!work.empty()) {
    auto [is_item, idx] = work.back();
    work.pop_back();
    auto& gone = is_item ? item_gone[idx] : user_gone[idx];
    if (gone) continue;
    gone = 1;
    auto positions = is_item ? data.item_history(ItemIdx{idx}) : data.user_history(UserIdx{idx});
    for (auto pos : positions) {
      if (!alive[pos]) continue;
      alive[pos] = 0;
      if (is_item) {
        auto u = data.user_of(pos).value;
        if (--user_deg[u] < k && !user_gone[u]) work.emplace_back(false, u);
      } else {
        auto i = data.item_of(pos).value;
        if (--item_deg[i] < k && !item_gone[i]) work.emplace_back(true, i);
      }
    }
  }

  std::vector<Interaction> kept;
  for (std::size_t pos = 0; pos < n; ++pos) {
    if (alive[pos]) kept.push_back(data.at(pos));
  }
  return Dataset(std::move(kept));
}

// ---------------------------------------------------------------------------
// Sentences

namespace {

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closing(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// The word ending right before the '.' at `dot`.
bool guarded_abbreviation(std::string_view text, std::size_t dot) {
  static constexpr std::array<std::string_view, 18> kAbbrev = {
      "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "e.g", "i.e", "inc", "ltd",
      "vol", "approx", "dept", "mt", "ft"};
  std::size_t b = dot;
  while (b > 0 && !is_space(text[b - 1])) --b;
  std::string_view word = text.substr(b, dot - b);
  while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'')) {
    word.remove_prefix(1);
  }
  if (word.size() == 1) {
    char c = word[0];
    return c >= 'B' && c <= 'Z' && c != 'I';
  }
  std::string lower(word);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return std::find(kAbbrev.begin(), kAbbrev.end(), lower) != kAbbrev.end();
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    auto piece = trim(text.substr(b, e - b));
    if (!piece.empty()) out.emplace_back(piece);
  };
  std::size_t start = 0, i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (!is_terminal(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && is_terminal(text[j])) ++j;
    const bool single_dot = (j - i == 1) && text[i] == '.';
    while (j < n && is_closing(text[j])) ++j;
    if (j == n || is_space(text[j])) {
      if (!(single_dot && guarded_abbreviation(text, i))) {
        emit(start, j);
        start = j;
      }
    }
    i = j;
  }
  emit(start, n);
  return out;
}

std::vector<SentenceRecord> segment_sentences(const Dataset& data) {
  std::vector<SentenceRecord> out;
  for (const auto& row : data.interactions()) {
    std::uint32_t ordinal = 0;
    for (auto& piece : split_sentences(row.text)) {
      out.push_back(SentenceRecord{SentenceId{out.size()}, row.user_id, row.item_id, row.rating,
                                   std::move(piece), ordinal++});
    }
  }
  return out;
}

SentenceCorpus::SentenceCorpus(const Dataset& train, std::vector<SentenceRecord> sentences)
    : sentences_(std::move(sentences)) {
  user_of_.resize(sentences_.size());
  item_of_.resize(sentences_.size());
  for (std::size_t s = 0; s < sentences_.size(); ++s) {
    const auto& rec = sentences_[s];
    if (rec.id.value != s) {
      throw Error("format", fmt::format("sentence ids must be contiguous: row {} has id {}", s,
                                        rec.id.value));
    }
    auto u = train.find_user(rec.user_id);
    auto i = train.find_item(rec.item_id);
    if (!u || !i) {
      throw Error("format", fmt::format("sentence {} refers to ({}, {}) which is not in the train set",
                                        s, rec.user_id, rec.item_id));
    }
    user_of_[s] = u->value;
    item_of_[s] = i->value;
  }
  std::vector<std::uint32_t> positions;
  group_positions(user_of_, train.num_users(), user_offsets_, positions);
  user_sentences_.resize(positions.size());
  std::transform(positions.begin(), positions.end(), user_sentences_.begin(),
                 [](std::uint32_t p) { return SentenceId{p}; });
  group_positions(item_of_, train.num_items(), item_offsets_, positions);
  item_sentences_.resize(positions.size());
  std::transform(positions.begin(), positions.end(), item_sentences_.begin(),
                 [](std::uint32_t p) { return SentenceId{p}; });
}

std::span<const SentenceId> SentenceCorpus::by_user(UserIdx u) const {
  const auto b = user_offsets_.at(u.value), e = user_offsets_.at(u.value + 1);
  return {user_sentences_.data() + b, e - b};
}

std::span<const SentenceId> SentenceCorpus::by_item(ItemIdx i) const {
  const auto b = item_offsets_.at(i.value), e = item_offsets_.at(i.value + 1);
  return {item_sentences_.data() + b, e - b};
}

std::size_t SentenceCorpus::count(UserIdx u, ItemIdx i) const {
  auto mine = by_user(u);
  return static_cast<std::size_t>(std::count_if(
      mine.begin(), mine.end(), [&](SentenceId s) { return item_of_[s.value] == i.value; }));
}

// ---------------------------------------------------------------------------
// Split

ChronoSplit chrono_split(const Dataset& data) {
  ChronoSplit split;
  std::vector<char> held_out(data.size(), 0);
  for (std::size_t u = 0; u < data.num_users(); ++u) {
    auto history = data.user_history(UserIdx{u});
    if (history.size() < 3) continue;
    const auto last = history[history.size() - 1];
    const auto penultimate = history[history.size() - 2];
    held_out[last] = held_out[penultimate] = 1;
    split.validation.push_back(data.at(penultimate));
    split.test.push_back(data.at(last));
  }
  std::vector<Interaction> train;
  train.reserve(data.size() - split.test.size() - split.validation.size());
  for (std::size_t pos = 0; pos < data.size(); ++pos) {
    if (!held_out[pos]) train.push_back(data.at(pos));
  }
  split.train = Dataset(std::move(train));
  return split;
}

// ---------------------------------------------------------------------------
// Files

void write_interactions_jsonl(const std::filesystem::path& path, std::span<const Interaction> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", fmt::format("cannot write '{}'", path.string()));
  for (const auto& row : rows) {
    nlohmann::ordered_json obj;
    obj["user_id"] = row.user_id;
    obj["item_id"] = row.item_id;
    obj["rating"] = row.rating;
    obj["timestamp"] = row.timestamp;
    obj["text"] = row.text;
    out << obj.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
  if (!out) throw Error("io", fmt::format("write failed for '{}'", path.string()));
}

std::vector<Interaction> read_interactions_jsonl(const std::filesystem::path& path) {
  LineReader reader(path);
  std::vector<Interaction> rows;
  std::string line;
  std::size_t lineno = 0;
  while (reader.next(line)) {
    ++lineno;
    if (all_space(line)) continue;
    json obj = json::parse(line, nullptr, false);
    try {
      if (obj.is_discarded()) throw std::runtime_error("invalid JSON");
      rows.push_back(Interaction{obj.at("user_id").get<std::string>(),
                                 obj.at("item_id").get<std::string>(),
                                 obj.at("rating").get<double>(),
                                 obj.at("timestamp").get<std::int64_t>(),
                                 obj.value("text", std::string())});
    } catch (const std::exception& e) {
      throw Error("format", fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  return rows;
}

void write_sentence_manifest(const std::filesystem::path& path, std::span<const SentenceRecord> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", fmt::format("cannot write '{}'", path.string()));
  for (const auto& r : rows) {
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", r.id.value, sanitize_field(r.user_id),
                       sanitize_field(r.item_id), r.review_rating, r.ordinal,
                       sanitize_field(r.text));
  }
  if (!out) throw Error("io", fmt::format("write failed for '{}'", path.string()));
}

std::vector<SentenceRecord> read_sentence_manifest(const std::filesystem::path& path) {
  LineReader reader(path);
  std::vector<SentenceRecord> rows;
  std::string line;
  std::size_t lineno = 0;
  while (reader.next(line)) {
    ++lineno;
    std::array<std::string_view, 5> head{};
    std::string_view rest(line);
    bool ok = true;
    for (auto& field : head) {
      auto tab = rest.find('\t');
      if (tab == std::string_view::npos) {
        ok = false;
        break;
      }
      field = rest.substr(0, tab);
      rest.remove_prefix(tab + 1);
    }
    auto id = ok ? to_int64(head[0]) : std::nullopt;
    auto rating = ok ? to_double(head[3]) : std::nullopt;
    auto ordinal = ok ? to_int64(head[4]) : std::nullopt;
    if (!id || !rating || !ordinal || *id < 0 || *ordinal < 0) {
      throw Error("format", fmt::format("{}:{}: malformed manifest row", path.string(), lineno));
    }
    rows.push_back(SentenceRecord{SentenceId{static_cast<std::uint64_t>(*id)}, std::string(head[1]),
                                  std::string(head[2]), *rating, std::string(rest),
                                  static_cast<std::uint32_t>(*ordinal)});
  }
  return rows;
}

}  // namespace textknn
