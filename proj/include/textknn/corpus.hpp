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

// Review corpora: parsing, k-core filtering, sentence segmentation and the
// leave-one-last-item split.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "textknn/common.hpp"

namespace textknn {

struct Interaction {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;  // in [1, 5]
  std::int64_t timestamp = 0;
  std::string text;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// Immutable collection of interactions with dense user/item indices.
///
/// Indices are assigned in ascending (byte-wise) order of the string ids, so
/// comparing indices is the same as comparing ids, independent of the input
/// order. Interactions keep their input order.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Interaction> interactions);

  const std::vector<Interaction>& interactions() const noexcept { return interactions_; }
  const Interaction& at(std::size_t pos) const { return interactions_.at(pos); }
  std::size_t size() const noexcept { return interactions_.size(); }
  bool empty() const noexcept { return interactions_.empty(); }

  std::size_t num_users() const noexcept { return user_ids_.size(); }
  std::size_t num_items() const noexcept { return item_ids_.size(); }
  const std::string& user_id(UserIdx u) const { return user_ids_.at(u.value); }
  const std::string& item_id(ItemIdx i) const { return item_ids_.at(i.value); }
  std::optional<UserIdx> find_user(std::string_view id) const;
  std::optional<ItemIdx> find_item(std::string_view id) const;

  UserIdx user_of(std::size_t pos) const { return UserIdx{user_of_.at(pos)}; }
  ItemIdx item_of(std::size_t pos) const { return ItemIdx{item_of_.at(pos)}; }

  /// Positions of u's interactions, timestamp ascending, ties by input order.
  std::span<const std::uint32_t> user_history(UserIdx u) const;
  /// Positions of i's interactions in input order.
  std::span<const std::uint32_t> item_history(ItemIdx i) const;

 private:
  std::vector<Interaction> interactions_;
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
  std::vector<std::uint32_t> user_of_;
  std::vector<std::uint32_t> item_of_;
  std::vector<std::size_t> user_offsets_;
  std::vector<std::uint32_t> user_positions_;
  std::vector<std::size_t> item_offsets_;
  std::vector<std::uint32_t> item_positions_;
};

enum class ReviewFormat { amazon_json, yelp_json, generic_tsv };

ReviewFormat parse_review_format(std::string_view name);
std::string_view to_string(ReviewFormat format);

/// Field names of a JSON-lines review dump.
struct JsonFields {
  std::string user;
  std::string item;
  std::string rating;
  std::string timestamp;
  std::string text;
  /// Timestamp stored as "YYYY-MM-DD[ HH:MM:SS]" (UTC) instead of epoch seconds.
  bool timestamp_is_datetime = false;

  static JsonFields amazon();
  static JsonFields yelp();
};

struct ParseReport {
  Dataset dataset;
  std::size_t lines = 0;
  std::size_t malformed = 0;
  std::size_t out_of_range = 0;
  std::size_t duplicates = 0;

  std::size_t warnings() const noexcept { return malformed + out_of_range + duplicates; }
};

/// Parses a review dump. Plain and gzip-compressed files are both accepted.
/// Malformed lines, ratings outside [1, 5] and repeated
/// (user, item, timestamp) keys are skipped and counted.
/// Throws Error("io") when the file cannot be opened.
ParseReport parse_reviews(const std::filesystem::path& path, ReviewFormat format);
ParseReport parse_reviews(const std::filesystem::path& path, const JsonFields& fields);

/// Maximal sub-dataset where every user and every item keeps at least k
/// interactions (iterative peeling). Kept interactions retain input order.
Dataset kcore_filter(const Dataset& data, std::size_t k);

struct SentenceRecord {
  SentenceId id;
  std::string user_id;
  std::string item_id;
  double review_rating = 0.0;
  std::string text;
  std::uint32_t ordinal = 0;

  friend bool operator==(const SentenceRecord&, const SentenceRecord&) = default;
};

/// Rule-based splitter: breaks after runs of '.', '!' or '?' (plus closing
/// quotes/brackets) that are followed by whitespace or the end of the text.
/// A lone '.' after a known abbreviation or a single-letter initial does not
/// break. Pieces are whitespace-trimmed; empty pieces are dropped.
std::vector<std::string> split_sentences(std::string_view text);

/// Sentences of every review in dataset order, ids 0..N-1.
std::vector<SentenceRecord> segment_sentences(const Dataset& data);

/// Sentence records resolved against the train dataset they were cut from.
class SentenceCorpus {
 public:
  SentenceCorpus() = default;
  /// Throws Error("format") when ids are not 0..N-1 in order or a record
  /// names a user/item absent from `train`.
  SentenceCorpus(const Dataset& train, std::vector<SentenceRecord> sentences);

  std::span<const SentenceRecord> sentences() const noexcept { return sentences_; }
  const SentenceRecord& at(SentenceId s) const { return sentences_.at(s.value); }
  std::size_t size() const noexcept { return sentences_.size(); }
  std::size_t num_users() const noexcept { return user_offsets_.empty() ? 0 : user_offsets_.size() - 1; }
  std::size_t num_items() const noexcept { return item_offsets_.empty() ? 0 : item_offsets_.size() - 1; }

  UserIdx user_of(SentenceId s) const { return UserIdx{user_of_.at(s.value)}; }
  ItemIdx item_of(SentenceId s) const { return ItemIdx{item_of_.at(s.value)}; }
  double rating_of(SentenceId s) const { return sentences_.at(s.value).review_rating; }

  /// S_u, ascending ids.
  std::span<const SentenceId> by_user(UserIdx u) const;
  /// S_i, ascending ids.
  std::span<const SentenceId> by_item(ItemIdx i) const;
  /// |S_{u,i}|
  std::size_t count(UserIdx u, ItemIdx i) const;

 private:
  std::vector<SentenceRecord> sentences_;
  std::vector<std::uint32_t> user_of_;
  std::vector<std::uint32_t> item_of_;
  std::vector<std::size_t> user_offsets_;
  std::vector<SentenceId> user_sentences_;
  std::vector<std::size_t> item_offsets_;
  std::vector<SentenceId> item_sentences_;
};

struct ChronoSplit {
  Dataset train;
  std::vector<Interaction> validation;  // ascending user id
  std::vector<Interaction> test;        // ascending user id
};

/// Leave-one-last-item split. Users with at least 3 interactions give their
/// last one to test and the penultimate one to validation; everyone else stays
/// entirely in train.
ChronoSplit chrono_split(const Dataset& data);

// Canonical files.

void write_interactions_jsonl(const std::filesystem::path& path, std::span<const Interaction> rows);
std::vector<Interaction> read_interactions_jsonl(const std::filesystem::path& path);

/// TSV: sentence_id, user_id, item_id, review_rating, ordinal, text. No header.
/// Tabs and line breaks inside the text are written as spaces.
void write_sentence_manifest(const std::filesystem::path& path, std::span<const SentenceRecord> rows);
std::vector<SentenceRecord> read_sentence_manifest(const std::filesystem::path& path);

}  // namespace textknn
