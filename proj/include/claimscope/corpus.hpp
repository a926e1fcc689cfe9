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

// Readers for tweet corpora and labeled claim datasets. Also stratified
// splitting of labeled data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "json.hpp"

#include "claimscope/calendar.hpp"
#include "claimscope/csv.hpp"
#include "claimscope/taxonomy.hpp"
#include "claimscope/textproc.hpp"

namespace claimscope {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TweetRecord {
  std::string id;
  Timestamp created_at;
  std::string author_id;
  std::string text;
  std::string source_tag;

  friend bool operator==(const TweetRecord &, const TweetRecord &) = default;
};

enum class TweetFormat { jsonl, csv };

inline TweetFormat parse_tweet_format(std::string_view s) {
  if (s == "jsonl") return TweetFormat::jsonl;
  if (s == "csv") return TweetFormat::csv;
  throw std::invalid_argument("unknown tweet format '" + std::string(s) + "' (expected jsonl or csv)");
}

// Picks the format from the file extension; anything but ".csv" is JSONL.
inline TweetFormat format_from_path(const std::string &path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0 ? TweetFormat::csv
                                                                          : TweetFormat::jsonl;
}

struct IngestStats {
  std::uint64_t records = 0;
  std::uint64_t skipped = 0;
  std::vector<std::string> diagnostics;
};

namespace detail {

inline bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return is_ascii_space(c); });
}

}  // namespace detail

// Pull-based reader over a tweet file. Malformed rows are skipped, counted and
// described in stats().diagnostics; they never abort the stream.
class TweetReader {
 public:
  TweetReader(const std::string &path, TweetFormat format)
      : path_(path), format_(format), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot read tweet file " + path);
    if (format_ == TweetFormat::csv) {
      csv_ = std::make_unique<csv::CsvReader>(in_);
      read_csv_header();
    }
  }

  std::optional<TweetRecord> next() {
    return format_ == TweetFormat::jsonl ? next_jsonl() : next_csv();
  }

  const IngestStats &stats() const { return stats_; }

 private:
  void skip(std::size_t line, const std::string &why) {
    ++stats_.skipped;
    stats_.diagnostics.push_back(path_ + ":" + std::to_string(line) + ": " + why);
  }

  std::optional<TweetRecord> accept(std::size_t line, std::string id, std::string_view created,
                                    std::string author, std::string text, std::string source_tag) {
    auto ts = parse_timestamp(created);
    if (!ts) {
      skip(line, "unparseable timestamp '" + std::string(created) + "'");
      return std::nullopt;
    }
    if (id.empty()) {
      skip(line, "empty id");
      return std::nullopt;
    }
    if (detail::blank(text)) {
      skip(line, "empty text");
      return std::nullopt;
    }
    if (!seen_ids_.insert(id).second) {
      skip(line, "duplicate id '" + id + "'");
      return std::nullopt;
    }
    ++stats_.records;
    return TweetRecord{std::move(id), *ts, std::move(author), std::move(text), std::move(source_tag)};
  }

  std::optional<TweetRecord> next_jsonl() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (detail::blank(line)) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        skip(line_no_, "malformed JSON");
        continue;
      }
      auto field = [&](const char *name) -> std::optional<std::string> {
        auto it = j.find(name);
        if (it == j.end() || !it->is_string()) return std::nullopt;
        return it->get<std::string>();
      };
      auto id = field("id"), created = field("created_at"), author = field("author_id"),
           text = field("text");
      if (!id || !created || !author || !text) {
        skip(line_no_, "missing or non-string field (need id, created_at, author_id, text)");
        continue;
      }
      if (auto rec = accept(line_no_, std::move(*id), *created, std::move(*author), std::move(*text),
                            field("source_tag").value_or(""))) {
        return rec;
      }
    }
    return std::nullopt;
  }

  void read_csv_header() {
    std::optional<std::vector<std::string>> header;
    try {
      header = csv_->next();
    } catch (const std::exception &e) {
      throw IoError(path_ + ": " + e.what());
    }
    if (!header) return;
    for (std::size_t i = 0; i < header->size(); ++i) {
      std::string name = (*header)[i];
      if (i == 0 && name.starts_with("\xEF\xBB\xBF")) name.erase(0, 3);
      columns_[name] = i;
    }
    for (const char *required : {"id", "created_at", "author_id", "text"}) {
      if (!columns_.count(required)) {
        throw IoError(path_ + ": CSV header lacks column '" + required + "'");
      }
    }
  }

  std::optional<TweetRecord> next_csv() {
    if (columns_.empty()) return std::nullopt;
    while (true) {
      std::optional<std::vector<std::string>> row;
      try {
        row = csv_->next();
      } catch (const std::exception &e) {
        skip(csv_->line(), e.what());
        return std::nullopt;
      }
      if (!row) return std::nullopt;
      if (row->size() == 1 && (*row)[0].empty()) continue;
      if (row->size() != columns_.size()) {
        skip(csv_->line(), "expected " + std::to_string(columns_.size()) + " fields, got " +
                               std::to_string(row->size()));
        continue;
      }
      auto get = [&](const char *name) { return (*row)[columns_.at(name)]; };
      std::string tag = columns_.count("source_tag") ? get("source_tag") : std::string();
      if (auto rec = accept(csv_->line(), get("id"), get("created_at"), get("author_id"), get("text"),
                            std::move(tag))) {
        return rec;
      }
    }
  }

  std::string path_;
  TweetFormat format_;
  std::ifstream in_;
  std::unique_ptr<csv::CsvReader> csv_;
  std::unordered_map<std::string, std::size_t> columns_;
  std::unordered_set<std::string> seen_ids_;
  std::size_t line_no_ = 0;
  IngestStats stats_;
};

struct TweetCorpus {
  std::vector<TweetRecord> records;
  IngestStats stats;
};

inline TweetCorpus ingest_tweets(const std::string &path, TweetFormat format) {
  TweetReader reader(path, format);
  TweetCorpus out;
  while (auto rec = reader.next()) out.records.push_back(std::move(*rec));
  out.stats = reader.stats();
  return out;
}

inline TweetCorpus ingest_tweets(const std::string &path) { return ingest_tweets(path, format_from_path(path)); }

// Canonical JSONL line (no trailing newline). source_tag is written only when set.
inline std::string to_jsonl(const TweetRecord &r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["created_at"] = format_timestamp(r.created_at);
  j["author_id"] = r.author_id;
  j["text"] = r.text;
  if (!r.source_tag.empty()) j["source_tag"] = r.source_tag;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

// Case-insensitive substring match of any phrase against normalized text.
class KeywordFilter {
 public:
  explicit KeywordFilter(const std::vector<std::string> &phrases) {
    for (const auto &p : phrases) {
      std::string n = normalize(p);
      if (!n.empty()) phrases_.push_back(std::move(n));
    }
    if (phrases_.empty()) throw std::invalid_argument("keyword filter needs at least one phrase");
    std::sort(phrases_.begin(), phrases_.end());
    phrases_.erase(std::unique(phrases_.begin(), phrases_.end()), phrases_.end());
  }

  bool matches(std::string_view text) const {
    std::string n = normalize(text);
    return std::any_of(phrases_.begin(), phrases_.end(),
                       [&](const std::string &p) { return n.find(p) != std::string::npos; });
  }
  bool operator()(const TweetRecord &r) const { return matches(r.text); }

  const std::vector<std::string> &phrases() const { return phrases_; }

 private:
  std::vector<std::string> phrases_;
};

// The collection keywords of the climate tweet corpus.
inline std::vector<std::string> default_climate_keywords() {
  return {"#climatechange", "climate change", "global warming", "climate crisis", "climate emergency"};
}

inline std::vector<TweetRecord> keyword_filter(const std::vector<TweetRecord> &records,
                                               const std::vector<std::string> &keywords) {
  KeywordFilter filter(keywords);
  std::vector<TweetRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out), std::cref(filter));
  return out;
}

// ---------------------------------------------------------------------------
// Labeled claims

enum class BinaryLabel { convinced, contrarian };

inline std::string_view to_string(BinaryLabel l) {
  return l == BinaryLabel::contrarian ? "contrarian" : "convinced";
}

enum class DatasetTag { cards, waterloo, expert_tweets };

inline std::string_view to_string(DatasetTag t) {
  switch (t) {
    case DatasetTag::cards: return "cards";
    case DatasetTag::waterloo: return "waterloo";
    case DatasetTag::expert_tweets: return "expert_tweets";
  }
  return "";
}

inline DatasetTag parse_dataset_tag(std::string_view s) {
  if (s == "cards") return DatasetTag::cards;
  if (s == "waterloo") return DatasetTag::waterloo;
  if (s == "expert_tweets" || s == "expert") return DatasetTag::expert_tweets;
  throw std::invalid_argument("unknown dataset tag '" + std::string(s) + "'");
}

enum class Split { train, validation, test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "validation" || s == "valid" || s == "dev") return Split::validation;
  if (s == "test") return Split::test;
  return std::nullopt;
}

using ClaimLabel = std::variant<TaxonomyCode, BinaryLabel>;

inline BinaryLabel binary_of(const ClaimLabel &label) {
  if (const auto *code = std::get_if<TaxonomyCode>(&label)) {
    return code->is_contrarian() ? BinaryLabel::contrarian : BinaryLabel::convinced;
  }
  return std::get<BinaryLabel>(label);
}

// Stable string key: "5.2" for codes, "contrarian"/"convinced" otherwise.
inline std::string label_key(const ClaimLabel &label) {
  if (const auto *code = std::get_if<TaxonomyCode>(&label)) return code->str();
  return std::string(to_string(std::get<BinaryLabel>(label)));
}

struct LabeledClaim {
  std::string text;
  ClaimLabel label;
  DatasetTag dataset_tag = DatasetTag::cards;
  std::optional<Split> split;

  friend bool operator==(const LabeledClaim &, const LabeledClaim &) = default;
};

// Waterloo tokens collapse to the binary framing: misleading (sentiment -1)
// is contrarian, everything verified (0, 1, 2) is convinced.
inline std::optional<BinaryLabel> parse_waterloo_label(std::string_view token) {
  if (token == "misleading" || token == "contrarian" || token == "-1") return BinaryLabel::contrarian;
  if (token == "verified" || token == "convinced" || token == "0" || token == "1" || token == "2") {
    return BinaryLabel::convinced;
  }
  return std::nullopt;
}

struct RowError {
  std::size_t row;  // 1-based data row (header excluded)
  std::string message;
};

struct LabeledDataset {
  std::vector<LabeledClaim> claims;
  std::vector<RowError> errors;
};

// Reads a CSV with header text,label[,split]. CARDS and expert datasets carry
// leaf taxonomy codes; Waterloo carries binary tokens.
inline LabeledDataset ingest_labeled(std::istream &in, DatasetTag tag, const std::string &name = "<stream>") {
  csv::CsvReader reader(in);
  auto header = reader.next();
  if (!header) return {};
  std::optional<std::size_t> text_col, label_col, split_col;
  for (std::size_t i = 0; i < header->size(); ++i) {
    std::string h = (*header)[i];
    if (i == 0 && h.starts_with("\xEF\xBB\xBF")) h.erase(0, 3);
    if (h == "text") text_col = i;
    if (h == "label") label_col = i;
    if (h == "split") split_col = i;
  }
  if (!text_col || !label_col) throw IoError(name + ": labeled CSV needs columns text,label");

  LabeledDataset out;
  std::size_t row_no = 0;
  while (auto row = reader.next()) {
    if (row->size() == 1 && (*row)[0].empty()) continue;
    ++row_no;
    if (row->size() != header->size()) {
      out.errors.push_back({row_no, "expected " + std::to_string(header->size()) + " fields"});
      continue;
    }
    const std::string &token = (*row)[*label_col];
    LabeledClaim claim{(*row)[*text_col], kNoClaim, tag, std::nullopt};
    if (tag == DatasetTag::waterloo) {
      auto b = parse_waterloo_label(token);
      if (!b) {
        out.errors.push_back({row_no, "unknown label token '" + token + "'"});
        continue;
      }
      claim.label = *b;
    } else {
      auto code = TaxonomyCode::try_parse(token);
      if (!code || !code->is_leaf()) {
        out.errors.push_back({row_no, "unknown label token '" + token + "'"});
        continue;
      }
      claim.label = *code;
    }
    if (split_col && !(*row)[*split_col].empty()) {
      claim.split = parse_split((*row)[*split_col]);
      if (!claim.split) {
        out.errors.push_back({row_no, "unknown split '" + (*row)[*split_col] + "'"});
        continue;
      }
    }
    out.claims.push_back(std::move(claim));
  }
  return out;
}

inline LabeledDataset ingest_labeled(const std::string &path, DatasetTag tag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read labeled file " + path);
  return ingest_labeled(in, tag, path);
}

inline std::string render_label(const LabeledClaim &c) {
  if (c.dataset_tag == DatasetTag::waterloo) {
    return binary_of(c.label) == BinaryLabel::contrarian ? "misleading" : "verified";
  }
  return label_key(c.label);
}

inline void write_labeled_csv(std::ostream &out, const std::vector<LabeledClaim> &claims) {
  out << "text,label,split\n";
  for (const auto &c : claims) {
    csv::write_row(out, {c.text, render_label(c), c.split ? std::string(to_string(*c.split)) : ""});
  }
}

// ---------------------------------------------------------------------------
// Stratified splitting

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  std::vector<LabeledClaim> train;
  std::vector<LabeledClaim> validation;
  std::vector<LabeledClaim> test;
  std::vector<std::string> warnings;
};

namespace detail {

// Unbiased draw in [0, bound) from the raw engine output, identical on every
// standard library.
inline std::uint64_t bounded(std::mt19937_64 &rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

template <class T>
void shuffle(std::vector<T> &v, std::mt19937_64 &rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[bounded(rng, i)]);
  }
}

// Largest-remainder apportionment of n over the given weights (sum 1).
inline std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3> &w) {
  std::array<std::size_t, 3> out{};
  std::array<double, 3> frac{};
  std::size_t used = 0;
  for (int s = 0; s < 3; ++s) {
    double q = static_cast<double>(n) * w[s];
    out[s] = static_cast<std::size_t>(std::floor(q + 1e-9));
    frac[s] = q - static_cast<double>(out[s]);
    used += out[s];
  }
  while (used < n) {
    int best = 0;
    for (int s = 1; s < 3; ++s) {
      if (frac[s] > frac[best] + 1e-12) best = s;
    }
    ++out[best];
    frac[best] = -1.0;
    ++used;
  }
  return out;
}

}  // namespace detail

// Stratified, seeded three-way split. Per-class split sizes stay within one of
// their exact quotas and the overall sizes match the ratios up to rounding.
// Classes with fewer members than splits go wholly to train (with a warning).
// Each output keeps the input order.
inline DatasetSplit split_dataset(const std::vector<LabeledClaim> &claims, SplitRatios ratios = {},
                                  std::uint64_t seed = 0) {
  const std::array<double, 3> w{ratios.train, ratios.validation, ratios.test};
  if (w[0] <= 0 || w[1] <= 0 || w[2] <= 0) throw std::invalid_argument("split ratios must be positive");
  if (std::abs(w[0] + w[1] + w[2] - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");

  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < claims.size(); ++i) by_class[label_key(claims[i].label)].push_back(i);

  DatasetSplit out;
  std::vector<int> assignment(claims.size(), 0);
  std::vector<const std::vector<std::size_t> *> strata;
  std::size_t stratified_total = 0;
  for (const auto &[key, members] : by_class) {
    if (members.size() < 3) {
      out.warnings.push_back("class " + key + " has " + std::to_string(members.size()) +
                             " member(s), fewer than the 3 splits; placed wholly in train");
      continue;
    }
    strata.push_back(&members);
    stratified_total += members.size();
  }

  // Per-class floors first. Remainders are then handed out so every split
  // reaches its overall target while each class moves by at most one.
  auto target = detail::apportion(stratified_total, w);
  std::vector<std::array<std::size_t, 3>> sizes(strata.size());
  std::vector<std::array<double, 3>> frac(strata.size());
  std::array<long, 3> deficit{static_cast<long>(target[0]), static_cast<long>(target[1]),
                              static_cast<long>(target[2])};
  for (std::size_t c = 0; c < strata.size(); ++c) {
    for (int s = 0; s < 3; ++s) {
      double q = static_cast<double>(strata[c]->size()) * w[s];
      sizes[c][s] = static_cast<std::size_t>(std::floor(q + 1e-9));
      frac[c][s] = q - static_cast<double>(sizes[c][s]);
      deficit[s] -= static_cast<long>(sizes[c][s]);
    }
  }
  std::vector<std::size_t> order(strata.size());
  for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
  auto residual = [&](std::size_t c) {
    return strata[c]->size() - sizes[c][0] - sizes[c][1] - sizes[c][2];
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return residual(a) > residual(b); });
  for (std::size_t c : order) {
    std::array<bool, 3> given{};
    for (std::size_t r = residual(c); r > 0; --r) {
      int best = -1;
      for (int s = 0; s < 3; ++s) {
        if (given[s]) continue;
        if (best < 0) {
          best = s;
          continue;
        }
        bool s_open = deficit[s] > 0, b_open = deficit[best] > 0;
        if (s_open != b_open) {
          if (s_open) best = s;
        } else if (frac[c][s] > frac[c][best] + 1e-12) {
          best = s;
        }
      }
      ++sizes[c][best];
      --deficit[best];
      given[best] = true;
    }
  }

  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < strata.size(); ++c) {
    std::vector<std::size_t> members = *strata[c];
    detail::shuffle(members, rng);
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s) {
      for (std::size_t k = 0; k < sizes[c][s]; ++k) assignment[members[pos++]] = s;
    }
  }
  for (std::size_t i = 0; i < claims.size(); ++i) {
    LabeledClaim c = claims[i];
    switch (assignment[i]) {
      case 0: c.split = Split::train; out.train.push_back(std::move(c)); break;
      case 1: c.split = Split::validation; out.validation.push_back(std::move(c)); break;
      default: c.split = Split::test; out.test.push_back(std::move(c)); break;
    }
  }
  return out;
}

}  // namespace claimscope
