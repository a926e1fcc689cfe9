// Copyright 2026 The claimscope Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace claimscope {

// Thrown when a token does not name a code of the claim taxonomy.
class CodeParseError : public std::invalid_argument {
 public:
  explicit CodeParseError(std::string_view token)
      : std::invalid_argument("unknown taxonomy code '" + std::string(token) + "'"),
        token_(token) {}
  const std::string &token() const { return token_; }

 private:
  std::string token_;
};

// A node of the two-level contrarian-claim taxonomy.
//
// Leaf codes ("5.2", "0.0") label individual texts. Major-level codes ("5")
// only arise as the parent of a leaf and carry no minor component. 0.0 is the
// single non-contrarian code.
class TaxonomyCode {
 public:
  static constexpr std::uint8_t kNoMinor = 0xff;

  // Defaults to 0.0 (no claim).
  constexpr TaxonomyCode() = default;

  static constexpr std::optional<TaxonomyCode> make(int major, std::optional<int> minor);
  static std::optional<TaxonomyCode> try_parse(std::string_view token);
  static TaxonomyCode parse(std::string_view token) {
    if (auto code = try_parse(token)) return *code;
    throw CodeParseError(token);
  }

  constexpr int major() const { return major_; }
  constexpr std::optional<int> minor() const {
    if (minor_ == kNoMinor) return std::nullopt;
    return minor_;
  }
  constexpr bool is_leaf() const { return minor_ != kNoMinor; }
  constexpr bool is_contrarian() const { return major_ != 0; }

  // "M.m" for leaves ("0.0" for no claim), "M" for major-level codes.
  std::string str() const {
    std::string out(1, static_cast<char>('0' + major_));
    if (is_leaf()) {
      out += '.';
      out += std::to_string(minor_);
    }
    return out;
  }

  std::string_view label() const;

  // Position in the 19-leaf taxonomy order (0.0 first), or nullopt for majors.
  std::optional<std::size_t> leaf_index() const;
  // Position among the 18 contrarian leaves; only valid for contrarian leaves.
  std::size_t contrarian_index() const;

  friend constexpr auto operator<=>(const TaxonomyCode &, const TaxonomyCode &) = default;

 private:
  constexpr TaxonomyCode(std::uint8_t major, std::uint8_t minor) : major_(major), minor_(minor) {}

  // Field order matters for the defaulted ordering: major then minor, with
  // the major-level node (minor 0xff) sorting after its leaves.
  std::uint8_t major_ = 0;
  std::uint8_t minor_ = 0;

  friend struct TaxonomyTable;
};

struct TaxonomyEntry {
  int major;
  int minor;
  std::string_view label;
};

struct TaxonomyTable {
  static constexpr std::array<TaxonomyEntry, 19> kLeaves{{
      {0, 0, "No claim"},
      {1, 1, "Ice/permafrost/snow cover isn't melting"},
      {1, 2, "We're heading into an ice age/global cooling"},
      {1, 3, "Weather is cold/snowing"},
      {1, 4, "Climate hasn't warmed/changed over the last (few) decade(s)"},
      {1, 6, "Sea level rise is exaggerated/not accelerating"},
      {1, 7, "Extreme weather isn't increasing/has happened before/isn't linked to climate change"},
      {2, 1, "It's natural cycles/variation"},
      {2, 3, "There's no evidence for greenhouse effect/carbon dioxide driving climate change"},
      {3, 1, "Climate sensitivity is low/negative feedbacks reduce warming"},
      {3, 2, "Species/plants/reefs aren't showing climate impacts/are benefiting from climate change"},
      {3, 3, "CO2 is beneficial/not a pollutant"},
      {4, 1, "Climate policies (mitigation or adaptation) are harmful"},
      {4, 2, "Climate policies are ineffective/flawed"},
      {4, 4, "Clean energy technology/biofuels won't work"},
      {4, 5, "People need energy (e.g. from fossil fuels/nuclear)"},
      {5, 1, "Climate-related science is unreliable/uncertain/unsound (data, methods & models)"},
      {5, 2, "Climate movement is unreliable/alarmist/corrupt"},
      {5, 3, "Climate change is a conspiracy"},
  }};

  static constexpr std::array<std::string_view, 6> kMajorLabels{{
      "No claim",
      "Global warming is not happening",
      "Human greenhouse gases are not causing climate change",
      "Climate impacts/global warming is beneficial/not bad",
      "Climate solutions won't work",
      "Climate movement/science is unreliable",
  }};

  static constexpr TaxonomyCode leaf(std::size_t i) {
    return TaxonomyCode(static_cast<std::uint8_t>(kLeaves[i].major),
                        static_cast<std::uint8_t>(kLeaves[i].minor));
  }
  static constexpr TaxonomyCode major_node(int major) {
    return TaxonomyCode(static_cast<std::uint8_t>(major), TaxonomyCode::kNoMinor);
  }
};

inline constexpr std::size_t kLeafCount = TaxonomyTable::kLeaves.size();
inline constexpr std::size_t kContrarianCount = kLeafCount - 1;

inline constexpr TaxonomyCode kNoClaim{};

// All 19 leaf codes in taxonomy order.
inline constexpr std::array<TaxonomyCode, kLeafCount> kAllCodes = [] {
  std::array<TaxonomyCode, kLeafCount> out{};
  for (std::size_t i = 0; i < kLeafCount; ++i) out[i] = TaxonomyTable::leaf(i);
  return out;
}();

// The 18 contrarian leaf codes in taxonomy order.
inline constexpr std::array<TaxonomyCode, kContrarianCount> kContrarianCodes = [] {
  std::array<TaxonomyCode, kContrarianCount> out{};
  for (std::size_t i = 0; i < kContrarianCount; ++i) out[i] = TaxonomyTable::leaf(i + 1);
  return out;
}();

constexpr std::optional<TaxonomyCode> TaxonomyCode::make(int major, std::optional<int> minor) {
  if (!minor) {
    if (major >= 1 && major <= 5) return TaxonomyTable::major_node(major);
    return std::nullopt;
  }
  for (std::size_t i = 0; i < kLeafCount; ++i) {
    if (TaxonomyTable::kLeaves[i].major == major && TaxonomyTable::kLeaves[i].minor == *minor) {
      return TaxonomyTable::leaf(i);
    }
  }
  return std::nullopt;
}

// Accepts "5.2", "5_2", "0", "0.0" and major-level tokens "1".."5".
// Surrounding ASCII whitespace is ignored.
inline std::optional<TaxonomyCode> TaxonomyCode::try_parse(std::string_view token) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r')) {
    token.remove_suffix(1);
  }
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (token.size() == 1 && digit(token[0])) {
    int major = token[0] - '0';
    if (major == 0) return kNoClaim;
    return make(major, std::nullopt);
  }
  if (token.size() == 3 && digit(token[0]) && (token[1] == '.' || token[1] == '_') && digit(token[2])) {
    return make(token[0] - '0', token[2] - '0');
  }
  return std::nullopt;
}

inline std::string_view TaxonomyCode::label() const {
  if (auto i = leaf_index()) return TaxonomyTable::kLeaves[*i].label;
  return TaxonomyTable::kMajorLabels[major_];
}

inline std::optional<std::size_t> TaxonomyCode::leaf_index() const {
  if (!is_leaf()) return std::nullopt;
  for (std::size_t i = 0; i < kLeafCount; ++i) {
    if (kAllCodes[i] == *this) return i;
  }
  return std::nullopt;
}

inline std::size_t TaxonomyCode::contrarian_index() const {
  auto i = leaf_index();
  if (!i || *i == 0) throw std::logic_error("contrarian_index on non-contrarian code " + str());
  return *i - 1;
}

inline TaxonomyCode parse_code(std::string_view token) { return TaxonomyCode::parse(token); }

// Parent of a leaf: x.y -> x; 0.0 is its own parent; majors are fixed points.
inline TaxonomyCode super_claim(TaxonomyCode code) {
  if (!code.is_contrarian()) return kNoClaim;
  return TaxonomyTable::major_node(code.major());
}

inline bool is_contrarian(TaxonomyCode code) { return code.is_contrarian(); }

}  // namespace claimscope
