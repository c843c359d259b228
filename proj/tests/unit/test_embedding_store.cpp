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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "temp_dir.hpp"
#include "textknn/embedding_store.hpp"

namespace textknn {
namespace {

using testing::TempDir;

double norm(std::span<const float> v) {
  double s = 0;
  for (float x : v) s += double(x) * x;
  return std::sqrt(s);
}

std::string error_code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() + ": " + e.what();
  }
  return "no error";
}

TEST(EmbeddingTable, ThreeRowsUnitNorm) {
  EmbeddingTable t(4, {1, 0, 0, 0, 0, 2, 0, 0, 1, 1, 1, 1});
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t.dim(), 4u);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(norm(t.row(r)), 1.0, 1e-6);
  EXPECT_NEAR(t.max_input_norm_deviation(), 1.0, 1e-12);
}

TEST(EmbeddingTable, RenormalizesKeepingDirection) {
  EmbeddingTable t(2, {0.3f, 0.4f});
  EXPECT_NEAR(t.row(0)[0], 0.6, 1e-6);
  EXPECT_NEAR(t.row(0)[1], 0.8, 1e-6);
  EXPECT_NEAR(t.max_input_norm_deviation(), 0.5, 1e-6);
}

TEST(EmbeddingTable, RejectsZeroRowAndRaggedValues) {
  auto zero = error_code_of([] { EmbeddingTable(2, {1, 0, 0, 0}); });
  EXPECT_EQ(zero.rfind("format", 0), 0u) << zero;
  EXPECT_NE(zero.find("row 1"), std::string::npos) << zero;
  EXPECT_THROW(EmbeddingTable(3, {1, 2, 3, 4}), Error);
}

TEST(EmbeddingFile, RoundTrip) {
  TempDir dir;
  std::vector<float> v = {1, 0, 0, 0, 0.5f, 0.5f, 0.5f, 0.5f};
  write_embeddings(dir / "e.semb", 4, v);
  EXPECT_EQ(std::filesystem::file_size(dir / "e.semb"), kEmbeddingHeaderBytes + v.size() * 4);
  auto t = load_embeddings(dir / "e.semb");
  ASSERT_EQ(t.size(), 2u);
  ASSERT_EQ(t.dim(), 4u);
  for (std::size_t k = 0; k < v.size(); ++k) EXPECT_FLOAT_EQ(t.values()[k], v[k]);
  EXPECT_LT(t.max_input_norm_deviation(), 1e-6);
  check_row_count(t, 2);
  EXPECT_THROW(check_row_count(t, 3), Error);
}

TEST(EmbeddingFile, EmptyTableIsValid) {
  TempDir dir;
  write_embeddings(dir / "e.semb", 512, {});
  auto t = load_embeddings(dir / "e.semb");
  EXPECT_EQ(t.size(), 0u);
  EXPECT_EQ(t.dim(), 512u);
}

TEST(EmbeddingFile, TruncatedFileNamesBothLengths) {
  TempDir dir;
  write_embeddings(dir / "e.semb", 4, std::vector<float>{1, 0, 0, 0, 0, 1, 0, 0});
  std::filesystem::resize_file(dir / "e.semb", kEmbeddingHeaderBytes + 20);
  auto msg = error_code_of([&] { load_embeddings(dir / "e.semb"); });
  EXPECT_EQ(msg.rfind("format", 0), 0u) << msg;
  EXPECT_NE(msg.find("52"), std::string::npos) << msg;
  EXPECT_NE(msg.find("40"), std::string::npos) << msg;
}

TEST(EmbeddingFile, HeaderErrors) {
  TempDir dir;
  auto bad_magic = dir.write("m.semb", std::string("XEMB") + std::string(16, '\0'));
  EXPECT_NE(error_code_of([&] { load_embeddings(bad_magic); }).find("magic"), std::string::npos);
  auto short_file = dir.write("s.semb", "SEMB");
  EXPECT_EQ(error_code_of([&] { load_embeddings(short_file); }).rfind("format", 0), 0u);
  std::string header(kEmbeddingHeaderBytes, '\0');
  std::memcpy(header.data(), "SEMB", 4);
  header[4] = 2;
  auto version = dir.write("v.semb", header);
  EXPECT_NE(error_code_of([&] { load_embeddings(version); }).find("version"), std::string::npos);
  EXPECT_EQ(error_code_of([&] { load_embeddings(dir / "missing.semb"); }).rfind("io", 0), 0u);
}

TEST(EmbeddingFile, ZeroRowOnDiskIsRejectedWithIndex) {
  TempDir dir;
  write_embeddings(dir / "e.semb", 2, std::vector<float>{1, 0, 0, 1, 0, 0});
  auto msg = error_code_of([&] { load_embeddings(dir / "e.semb"); });
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
}

TEST(Cosine, Examples) {
  std::vector<float> a = {0.6f, 0.8f}, neg = {-0.6f, -0.8f}, x = {1, 0}, y = {0, 1};
  EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-7);
  EXPECT_NEAR(cosine_similarity(a, neg), -1.0, 1e-7);
  EXPECT_EQ(cosine_similarity(x, y), 0.0);
  EXPECT_NEAR(cosine_distance(x, y), 1.0, 0.0);
  std::vector<float> three = {1, 0, 0};
  EXPECT_EQ(error_code_of([&] { cosine_similarity(x, three); }).rfind("invalid_argument", 0), 0u);
}

TEST(Cosine, Symmetric) {
  EmbeddingTable t(3, {0.1f, 0.7f, -0.3f, 0.9f, 0.2f, 0.4f});
  EXPECT_EQ(cosine_similarity(t.row(0), t.row(1)), cosine_similarity(t.row(1), t.row(0)));
}

}  // namespace
}  // namespace textknn
