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

#pragma once

#include <compare>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace textknn {

/// Dense index into one of the dataset's id spaces. The tag keeps user,
/// item and sentence indices from being mixed up.
template <class Tag>
struct Index {
  std::uint32_t value = 0;

  constexpr Index() = default;
  template <std::integral T>
  constexpr explicit Index(T v) : value(static_cast<std::uint32_t>(v)) {}

  friend constexpr auto operator<=>(Index, Index) = default;
};

using UserIdx = Index<struct UserTag>;
using ItemIdx = Index<struct ItemTag>;
using SentenceId = Index<struct SentenceTag>;

/// Library error. `code` is a stable machine-readable category used by the
/// CLI's error JSON ("io", "format", "config", "invalid_argument", ...).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace textknn

template <class Tag>
struct std::hash<textknn::Index<Tag>> {
  std::size_t operator()(textknn::Index<Tag> idx) const noexcept {
    return std::hash<std::uint32_t>{}(idx.value);
  }
};
