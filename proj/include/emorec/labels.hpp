// emorec/labels.hpp

// Copyright 2026  The emorec Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "emorec/error.hpp"

namespace emorec {

/// The five emotion classes, in report and tie-break order.
enum class EmotionLabel : std::size_t { Anger = 0, Surprise, Happiness, Sadness, Neutral };

inline constexpr std::size_t kNumLabels = 5;

inline constexpr std::array<EmotionLabel, kNumLabels> kAllLabels = {
    EmotionLabel::Anger, EmotionLabel::Surprise, EmotionLabel::Happiness, EmotionLabel::Sadness,
    EmotionLabel::Neutral};

inline constexpr std::size_t index_of(EmotionLabel l) { return static_cast<std::size_t>(l); }

inline std::string_view to_string(EmotionLabel l) {
  static constexpr std::array<std::string_view, kNumLabels> names = {
      "anger", "surprise", "happiness", "sadness", "neutral"};
  return names[index_of(l)];
}

inline std::optional<EmotionLabel> try_parse_label(std::string_view s) {
  for (EmotionLabel l : kAllLabels)
    if (to_string(l) == s) return l;
  return std::nullopt;
}

inline EmotionLabel parse_label(std::string_view s) {
  if (auto l = try_parse_label(s)) return *l;
  fail(ErrorCode::BadLabel, "unknown emotion label '" + std::string(s) + "'");
}

enum class Gender { Male, Female };

inline std::string_view to_string(Gender g) { return g == Gender::Male ? "male" : "female"; }

inline std::optional<Gender> try_parse_gender(std::string_view s) {
  if (s == "male") return Gender::Male;
  if (s == "female") return Gender::Female;
  return std::nullopt;
}

inline Gender parse_gender(std::string_view s) {
  if (auto g = try_parse_gender(s)) return *g;
  fail(ErrorCode::BadGender, "unknown gender '" + std::string(s) + "'");
}

enum class Split { Train, Test };

inline std::string_view to_string(Split s) { return s == Split::Train ? "train" : "test"; }

inline std::optional<Split> try_parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

}  // namespace emorec
