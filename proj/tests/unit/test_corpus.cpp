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

#include <gtest/gtest.h>
#include <zlib.h>

#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "temp_dir.hpp"
#include "textknn/corpus.hpp"

namespace textknn {
namespace {

using testing::make_dataset;
using testing::Rating;
using testing::TempDir;

std::vector<std::string> ids_by_user_history(const Dataset& d, UserIdx u) {
  std::vector<std::string> out;
  for (auto pos : d.user_history(u)) out.push_back(d.at(pos).item_id);
  return out;
}

TEST(ParseReviews, EmptyFileGivesEmptyDataset) {
  TempDir dir;
  auto p = dir.write("empty.tsv", "");
  auto report = parse_reviews(p, ReviewFormat::generic_tsv);
  EXPECT_EQ(report.dataset.size(), 0u);
  EXPECT_EQ(report.warnings(), 0u);
}

TEST(ParseReviews, ThreeLineTsvFixture) {
  TempDir dir;
  auto p = dir.write("r.tsv",
                     "bob\tm2\t5\t300\tLoved it.\n"
                     "amy\tm1\t1\t200\tBad. Very bad.\n"
                     "bob\tm1\t3\t100\tFine\twith a tab\n");
  auto report = parse_reviews(p, ReviewFormat::generic_tsv);
  const auto& d = report.dataset;
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(report.lines, 3u);
  EXPECT_EQ(report.warnings(), 0u);
  EXPECT_EQ(d.num_users(), 2u);
  EXPECT_EQ(d.num_items(), 2u);
  // Input order is kept.
  EXPECT_EQ(d.at(0), (Interaction{"bob", "m2", 5.0, 300, "Loved it."}));
  EXPECT_EQ(d.at(1), (Interaction{"amy", "m1", 1.0, 200, "Bad. Very bad."}));
  EXPECT_EQ(d.at(2), (Interaction{"bob", "m1", 3.0, 100, "Fine\twith a tab"}));
  // Indices follow sorted ids; histories are time-sorted.
  EXPECT_EQ(d.user_id(UserIdx{0}), "amy");
  EXPECT_EQ(d.item_id(ItemIdx{1}), "m2");
  EXPECT_EQ(ids_by_user_history(d, *d.find_user("bob")), (std::vector<std::string>{"m1", "m2"}));
}

TEST(ParseReviews, OutOfRangeRatingIsSkippedAndCounted) {
  TempDir dir;
  auto p = dir.write("r.tsv", "a\tx\t7\t1\t\na\ty\t4\t2\t\n");
  auto report = parse_reviews(p, ReviewFormat::generic_tsv);
  EXPECT_EQ(report.dataset.size(), 1u);
  EXPECT_EQ(report.out_of_range, 1u);
  EXPECT_EQ(report.warnings(), 1u);
}

TEST(ParseReviews, MalformedBlankAndDuplicateLines) {
  TempDir dir;
  auto p = dir.write("r.tsv",
                     "a\tx\t4\t1\thello\n"
                     "\n"
                     "not a review\n"
                     "a\tx\tfour\t1\t\n"
                     "a\tx\t2\t1\tsame key again\n"
                     "a\tx\t2\t5\tlater review of x\n");
  auto report = parse_reviews(p, ReviewFormat::generic_tsv);
  EXPECT_EQ(report.dataset.size(), 2u);
  EXPECT_EQ(report.malformed, 2u);
  EXPECT_EQ(report.duplicates, 1u);
  EXPECT_EQ(report.dataset.at(0).text, "hello");
}

TEST(ParseReviews, MissingFileIsIoError) {
  try {
    parse_reviews("/nonexistent/dir/reviews.json", ReviewFormat::amazon_json);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "io");
  }
}

TEST(ParseReviews, AmazonAndYelpJson) {
  TempDir dir;
  auto amazon = dir.write("a.json",
                          R"({"reviewerID":"A1","asin":"B9","overall":5.0,"unixReviewTime":1400000000,"reviewText":"Great film. Loved it!"})"
                          "\n"
                          R"({"reviewerID":"A2","asin":"B9","overall":"2","unixReviewTime":"1400000001"})"
                          "\n"
                          R"({"reviewerID":"A3","asin":"B9"})"
                          "\n{broken\n");
  auto a = parse_reviews(amazon, ReviewFormat::amazon_json);
  ASSERT_EQ(a.dataset.size(), 2u);
  EXPECT_EQ(a.malformed, 2u);
  EXPECT_EQ(a.dataset.at(0).text, "Great film. Loved it!");
  EXPECT_EQ(a.dataset.at(1).rating, 2.0);
  EXPECT_EQ(a.dataset.at(1).timestamp, 1400000001);

  auto yelp = dir.write("y.json",
                        R"({"user_id":"u","business_id":"b","stars":4,"date":"1970-01-02 00:00:10","text":"ok"})"
                        "\n");
  auto y = parse_reviews(yelp, ReviewFormat::yelp_json);
  ASSERT_EQ(y.dataset.size(), 1u);
  EXPECT_EQ(y.dataset.at(0).timestamp, 86410);
}

TEST(ParseReviews, GzipInputMatchesPlain) {
  TempDir dir;
  const std::string body = "a\tx\t4\t1\tOne. Two.\nb\tx\t3\t2\tThree\n";
  auto plain = dir.write("r.tsv", body);
  auto gz = dir / "r.tsv.gz";
  gzFile f = gzopen(gz.string().c_str(), "wb");
  ASSERT_NE(f, nullptr);
  ASSERT_EQ(gzwrite(f, body.data(), static_cast<unsigned>(body.size())), static_cast<int>(body.size()));
  gzclose(f);
  auto a = parse_reviews(plain, ReviewFormat::generic_tsv);
  auto b = parse_reviews(gz, ReviewFormat::generic_tsv);
  EXPECT_EQ(a.dataset.interactions(), b.dataset.interactions());
}

TEST(ReviewFormatNames, RoundTrip) {
  for (auto f : {ReviewFormat::amazon_json, ReviewFormat::yelp_json, ReviewFormat::generic_tsv}) {
    EXPECT_EQ(parse_review_format(to_string(f)), f);
  }
  EXPECT_THROW(parse_review_format("csv"), Error);
}

// ---------------------------------------------------------------------------

TEST(KcoreFilter, AlreadyCoreIsFixpoint) {
  std::vector<Rating> rows;
  for (int u = 0; u < 3; ++u)
    for (int i = 0; i < 3; ++i) rows.push_back({"u" + std::to_string(u), "i" + std::to_string(i), 3.0, u * 3 + i});
  auto d = make_dataset(rows);
  EXPECT_EQ(kcore_filter(d, 3).interactions(), d.interactions());
  EXPECT_EQ(kcore_filter(d, 1).interactions(), d.interactions());
  EXPECT_TRUE(kcore_filter(d, 4).empty());
}

TEST(KcoreFilter, SingletonUserRemoved) {
  std::vector<Rating> rows;
  for (int u = 0; u < 3; ++u)
    for (int i = 0; i < 3; ++i) rows.push_back({"u" + std::to_string(u), "i" + std::to_string(i), 4.0, u * 3 + i});
  rows.push_back({"lonely", "i1", 2.0, 50});
  auto core = kcore_filter(make_dataset(rows), 2);
  EXPECT_EQ(core.size(), 9u);
  EXPECT_FALSE(core.find_user("lonely").has_value());
}

TEST(KcoreFilter, CascadingPeel) {
  // A chain where removing one node starves the next.
  auto d = make_dataset({{"a", "x", 1}, {"a", "y", 1}, {"b", "y", 1}, {"b", "z", 1}, {"c", "z", 1}});
  EXPECT_TRUE(kcore_filter(d, 2).empty());
}

TEST(KcoreFilter, MatchesBruteForceOnRandomFixtures) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    std::uniform_int_distribution<int> side(1, 7);
    const int nu = side(rng), ni = side(rng);
    std::bernoulli_distribution edge(0.55);
    std::vector<Rating> rows;
    for (int u = 0; u < nu; ++u)
      for (int i = 0; i < ni; ++i)
        if (edge(rng)) rows.push_back({"u" + std::to_string(u), "i" + std::to_string(i), 3.0, u * 10 + i});
    auto d = make_dataset(rows);
    for (std::size_t k : {1, 2, 3}) {
      std::vector<Interaction> expect;
      for (auto pos : testing::brute_kcore_full(d, k)) expect.push_back(d.at(pos));
      EXPECT_EQ(kcore_filter(d, k).interactions(), expect) << "trial " << trial << " k " << k;
    }
  }
}

// ---------------------------------------------------------------------------

TEST(SplitSentences, Examples) {
  EXPECT_EQ(split_sentences("Great film. Loved it!"), (std::vector<std::string>{"Great film.", "Loved it!"}));
  EXPECT_TRUE(split_sentences("").empty());
  EXPECT_TRUE(split_sentences("   ").empty());
  EXPECT_EQ(split_sentences("no punctuation here"), (std::vector<std::string>{"no punctuation here"}));
}

TEST(SplitSentences, AbbreviationsInitialsAndRuns) {
  EXPECT_EQ(split_sentences("Dr. Smith was fine. J. Doe was not."),
            (std::vector<std::string>{"Dr. Smith was fine.", "J. Doe was not."}));
  EXPECT_EQ(split_sentences("Wow!!! Really?\" Yes."),
            (std::vector<std::string>{"Wow!!!", "Really?\"", "Yes."}));
  EXPECT_EQ(split_sentences("Version 2.0 rocks. Ok"), (std::vector<std::string>{"Version 2.0 rocks.", "Ok"}));
  EXPECT_EQ(split_sentences("Wait... what"), (std::vector<std::string>{"Wait...", "what"}));
}

TEST(SegmentSentences, IdsOrdinalsAndDeterminism) {
  auto d = make_dataset({{"u", "a", 5, 1, "Great film. Loved it!"}, {"v", "a", 2, 2, ""}, {"v", "b", 3, 3, "Meh"}});
  auto s = segment_sentences(d);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], (SentenceRecord{SentenceId{0}, "u", "a", 5.0, "Great film.", 0}));
  EXPECT_EQ(s[1], (SentenceRecord{SentenceId{1}, "u", "a", 5.0, "Loved it!", 1}));
  EXPECT_EQ(s[2], (SentenceRecord{SentenceId{2}, "v", "b", 3.0, "Meh", 0}));
  EXPECT_EQ(segment_sentences(d), s);
}

TEST(SentenceCorpus, GroupsAndCounts) {
  auto d = make_dataset({{"u", "a", 5, 1, "One. Two."}, {"v", "a", 2, 2, "Three."}, {"u", "b", 3, 3, "Four."}});
  SentenceCorpus c(d, segment_sentences(d));
  const auto u = *d.find_user("u");
  const auto a = *d.find_item("a");
  EXPECT_EQ(c.by_user(u).size(), 3u);
  EXPECT_EQ(c.by_item(a).size(), 3u);
  EXPECT_EQ(c.count(u, a), 2u);
  EXPECT_EQ(c.count(*d.find_user("v"), *d.find_item("b")), 0u);
  EXPECT_EQ(c.user_of(SentenceId{2}), *d.find_user("v"));
  EXPECT_EQ(c.rating_of(SentenceId{3}), 3.0);
}

TEST(SentenceCorpus, RejectsBadRecords) {
  auto d = make_dataset({{"u", "a", 5, 1, "One."}});
  EXPECT_THROW(SentenceCorpus(d, {{SentenceId{1}, "u", "a", 5, "x", 0}}), Error);
  EXPECT_THROW(SentenceCorpus(d, {{SentenceId{0}, "w", "a", 5, "x", 0}}), Error);
}

// ---------------------------------------------------------------------------

TEST(ChronoSplit, FiveInteractions) {
  auto d = make_dataset({{"u", "c", 3, 3}, {"u", "e", 5, 5}, {"u", "a", 1, 1}, {"u", "d", 4, 4}, {"u", "b", 2, 2}});
  auto s = chrono_split(d);
  ASSERT_EQ(s.test.size(), 1u);
  ASSERT_EQ(s.validation.size(), 1u);
  EXPECT_EQ(s.test[0].timestamp, 5);
  EXPECT_EQ(s.validation[0].timestamp, 4);
  ASSERT_EQ(s.train.size(), 3u);
  for (const auto& r : s.train.interactions()) EXPECT_LE(r.timestamp, 3);
}

TEST(ChronoSplit, ShortHistoriesStayInTrain) {
  auto d = make_dataset({{"u", "a", 3, 1}, {"u", "b", 4, 2}, {"v", "a", 1, 1}, {"v", "b", 2, 2}, {"v", "c", 5, 3}});
  auto s = chrono_split(d);
  ASSERT_EQ(s.test.size(), 1u);
  EXPECT_EQ(s.test[0].user_id, "v");
  EXPECT_EQ(s.validation[0].user_id, "v");
  EXPECT_EQ(s.train.size(), 3u);
  EXPECT_EQ(s.train.user_history(*s.train.find_user("u")).size(), 2u);
}

TEST(ChronoSplit, EqualTimestampsFollowInputOrder) {
  auto d = make_dataset({{"u", "a", 3, 1}, {"u", "late1", 4, 9}, {"u", "late2", 2, 9}});
  for (int run = 0; run < 3; ++run) {
    auto s = chrono_split(d);
    EXPECT_EQ(s.test[0].item_id, "late2");
    EXPECT_EQ(s.validation[0].item_id, "late1");
  }
}

TEST(ChronoSplit, PartitionInvariantsOnRandomData) {
  std::mt19937_64 rng(3);
  std::vector<Rating> rows;
  std::uniform_int_distribution<int> user(0, 30), item(0, 20), ts(0, 50), stars(1, 5);
  for (int n = 0; n < 400; ++n) rows.push_back({"u" + std::to_string(user(rng)), "i" + std::to_string(item(rng)), double(stars(rng)), ts(rng)});
  auto d = make_dataset(rows);
  auto s = chrono_split(d);
  EXPECT_EQ(s.train.size() + s.validation.size() + s.test.size(), d.size());
  ASSERT_EQ(s.validation.size(), s.test.size());
  for (std::size_t k = 0; k < s.test.size(); ++k) {
    const auto& t = s.test[k];
    const auto& v = s.validation[k];
    EXPECT_EQ(t.user_id, v.user_id);
    if (k > 0) EXPECT_LT(s.test[k - 1].user_id, t.user_id);
    EXPECT_LE(v.timestamp, t.timestamp);
    auto u = s.train.find_user(t.user_id);
    ASSERT_TRUE(u.has_value());
    for (auto pos : s.train.user_history(*u)) EXPECT_LE(s.train.at(pos).timestamp, v.timestamp);
  }
}

// ---------------------------------------------------------------------------

TEST(Files, JsonlRoundTrip) {
  TempDir dir;
  std::vector<Interaction> rows = {{"u\"1", "i\t2", 4.5, -3, "line\nbreak"}, {"u", "i", 1.0, 1700000000, ""}};
  write_interactions_jsonl(dir / "x.jsonl", rows);
  EXPECT_EQ(read_interactions_jsonl(dir / "x.jsonl"), rows);
}

TEST(Files, JsonlBadLineNamesLocation) {
  TempDir dir;
  auto p = dir.write("x.jsonl", "{\"user_id\":\"u\",\"item_id\":\"i\",\"rating\":3,\"timestamp\":1}\n{\"user_id\":1}\n");
  try {
    read_interactions_jsonl(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "format");
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
}

TEST(Files, ManifestRoundTripSanitizesText) {
  TempDir dir;
  std::vector<SentenceRecord> rows = {{SentenceId{0}, "u", "a", 5.0, "plain", 0},
                                      {SentenceId{1}, "u", "a", 5.0, "tab\there\nnewline", 1}};
  write_sentence_manifest(dir / "m.tsv", rows);
  auto back = read_sentence_manifest(dir / "m.tsv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], rows[0]);
  EXPECT_EQ(back[1].text, "tab here newline");
  EXPECT_EQ(back[1].ordinal, 1u);
}

}  // namespace
}  // namespace textknn
