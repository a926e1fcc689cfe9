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

// How claim categories move around trigger events. Also per-account
// activity statistics.

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "claimscope/calendar.hpp"
#include "claimscope/corpus.hpp"
#include "claimscope/taxonomy.hpp"
#include "claimscope/textproc.hpp"
#include "claimscope/trends.hpp"

namespace claimscope {

enum class TriggerType { NaturalEvent, PoliticalEvent, ContrarianInfluencer, ConvincedInfluencer };

inline constexpr std::array<TriggerType, 4> kTriggerTypes{
    TriggerType::ContrarianInfluencer, TriggerType::ConvincedInfluencer, TriggerType::NaturalEvent,
    TriggerType::PoliticalEvent};

inline std::string_view to_string(TriggerType t) {
  switch (t) {
    case TriggerType::NaturalEvent: return "NaturalEvent";
    case TriggerType::PoliticalEvent: return "PoliticalEvent";
    case TriggerType::ContrarianInfluencer: return "ContrarianInfluencer";
    case TriggerType::ConvincedInfluencer: return "ConvincedInfluencer";
  }
  return "";
}

inline TriggerType parse_trigger_type(std::string_view s) {
  for (auto t : kTriggerTypes) {
    if (to_string(t) == s) return t;
  }
  throw std::invalid_argument("unknown trigger type '" + std::string(s) + "'");
}

struct TriggerEvent {
  std::string name;
  AnalysisWindow window;
  TriggerType trigger_type;
};

// [{"name": ..., "type": ..., "start": "YYYY-MM-DD", "end": "YYYY-MM-DD"}, ...]
inline std::vector<TriggerEvent> parse_events(const nlohmann::json &j) {
  if (!j.is_array()) throw std::invalid_argument("event registry must be a JSON list");
  std::vector<TriggerEvent> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto &e = j[i];
    try {
      auto start = parse_date(e.at("start").get<std::string>());
      auto end = parse_date(e.at("end").get<std::string>());
      if (!start || !end) throw std::invalid_argument("bad date");
      out.push_back({e.at("name").get<std::string>(), AnalysisWindow(*start, *end),
                     parse_trigger_type(e.at("type").get<std::string>())});
    } catch (const std::exception &ex) {
      throw std::invalid_argument("event " + std::to_string(i) + ": " + ex.what());
    }
  }
  return out;
}

inline std::vector<TriggerEvent> load_events(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read event registry " + path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw std::invalid_argument(path + ": malformed JSON");
  return parse_events(j);
}

// Shares of contrarian tweets: tracked codes individually, the rest pooled.
struct CategoryDistribution {
  std::vector<TaxonomyCode> tracked;
  std::vector<double> shares;  // parallel to tracked
  double others = 0.0;
  std::uint64_t contrarian = 0;

  double share(TaxonomyCode code) const {
    auto it = std::find(tracked.begin(), tracked.end(), code);
    if (it == tracked.end()) throw std::out_of_range("code " + code.str() + " is not tracked");
    return shares[static_cast<std::size_t>(it - tracked.begin())];
  }
};

inline void check_tracked(std::span<const TaxonomyCode> tracked) {
  std::set<TaxonomyCode> seen;
  for (auto c : tracked) {
    if (!c.is_leaf() || !c.is_contrarian()) throw std::invalid_argument("tracked code " + c.str() + " is not contrarian");
    if (!seen.insert(c).second) throw std::invalid_argument("tracked code " + c.str() + " listed twice");
  }
}

inline std::array<std::uint64_t, kContrarianCount> pooled_counts(std::span<const DailyAggregate> series,
                                                                  const std::vector<AnalysisWindow> &windows) {
  std::array<std::uint64_t, kContrarianCount> counts{};
  for (const auto &d : series) {
    bool inside = windows.empty() ||
                  std::any_of(windows.begin(), windows.end(), [&](const AnalysisWindow &w) { return w.contains(d.date); });
    if (!inside) continue;
    for (std::size_t i = 0; i < kContrarianCount; ++i) counts[i] += d.per_code[i];
  }
  return counts;
}

inline CategoryDistribution distribution_from_counts(const std::array<std::uint64_t, kContrarianCount> &counts,
                                                     std::span<const TaxonomyCode> tracked) {
  check_tracked(tracked);
  CategoryDistribution out;
  out.tracked.assign(tracked.begin(), tracked.end());
  for (auto c : counts) out.contrarian += c;
  if (out.contrarian == 0) throw std::domain_error("no contrarian tweets: category distribution is undefined");
  const double total = static_cast<double>(out.contrarian);
  std::uint64_t tracked_sum = 0;
  for (auto code : tracked) {
    auto n = counts[code.contrarian_index()];
    tracked_sum += n;
    out.shares.push_back(static_cast<double>(n) / total);
  }
  out.others = static_cast<double>(out.contrarian - tracked_sum) / total;
  return out;
}

inline CategoryDistribution category_distribution(std::span<const DailyAggregate> series,
                                                  std::optional<AnalysisWindow> window,
                                                  std::span<const TaxonomyCode> tracked) {
  std::vector<AnalysisWindow> windows;
  if (window) windows.push_back(*window);
  return distribution_from_counts(pooled_counts(series, windows), tracked);
}

// The n most frequent contrarian codes over the series; ties in taxonomy order.
inline std::vector<TaxonomyCode> top_codes(std::span<const DailyAggregate> series, std::size_t n = 5) {
  auto counts = pooled_counts(series, {});
  std::vector<std::size_t> idx(kContrarianCount);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  std::vector<TaxonomyCode> out;
  for (std::size_t i = 0; i < std::min(n, idx.size()); ++i) {
    if (counts[idx[i]] == 0) break;
    out.push_back(kContrarianCodes[idx[i]]);
  }
  return out;
}

struct CategoryShift {
  std::optional<TaxonomyCode> code;     // nullopt is the pooled "others" bucket
  std::optional<double> percent_change;  // nullopt when the baseline share is 0
};

// 100 * (window share - baseline share) / baseline share, pooling the days of
// every event of the given type; the baseline is the whole series.
inline std::vector<CategoryShift> category_shift(std::span<const TriggerEvent> events,
                                                 std::span<const DailyAggregate> series, TriggerType type,
                                                 std::span<const TaxonomyCode> tracked) {
  std::vector<AnalysisWindow> windows;
  for (const auto &e : events) {
    if (e.trigger_type == type) windows.push_back(e.window);
  }
  if (windows.empty()) throw std::invalid_argument("no events of type " + std::string(to_string(type)));
  auto baseline = category_distribution(series, std::nullopt, tracked);
  auto in_window = distribution_from_counts(pooled_counts(series, windows), tracked);
  auto change = [](double now, double base) -> std::optional<double> {
    if (base == 0.0) return std::nullopt;
    return 100.0 * (now - base) / base;
  };
  std::vector<CategoryShift> out;
  for (std::size_t i = 0; i < baseline.tracked.size(); ++i) {
    out.push_back({baseline.tracked[i], change(in_window.shares[i], baseline.shares[i])});
  }
  out.push_back({std::nullopt, change(in_window.others, baseline.others)});
  return out;
}

// trigger_type,<tracked codes>,others; one row per type present in events.
inline void write_shift_csv(std::ostream &out, std::span<const TriggerEvent> events,
                            std::span<const DailyAggregate> series, std::span<const TaxonomyCode> tracked) {
  out << "trigger_type";
  for (auto c : tracked) out << ',' << c.str();
  out << ",others\n";
  for (auto type : kTriggerTypes) {
    bool present = std::any_of(events.begin(), events.end(), [&](const TriggerEvent &e) { return e.trigger_type == type; });
    if (!present) continue;
    out << to_string(type);
    for (const auto &s : category_shift(events, series, type, tracked)) {
      out << ',' << (s.percent_change ? format_fixed(*s.percent_change, 2) : std::string());
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Accounts

struct UserActivity {
  std::string author_id;
  std::array<std::uint64_t, kContrarianCount> per_code{};
  std::uint64_t total = 0;  // contrarian tweets in scope
  std::uint64_t distinct = 0;
  double uniqueness_ratio = 1.0;
};

// Per-author tallies of contrarian tweets, optionally restricted to one code.
// Mergeable across shards.
class ActivityAccumulator {
 public:
  explicit ActivityAccumulator(std::optional<TaxonomyCode> scope = std::nullopt) : scope_(scope) {}

  bool in_scope(TaxonomyCode code) const { return code.is_contrarian() && (!scope_ || *scope_ == code); }

  void add(const TweetRecord &record, TaxonomyCode final_code) {
    if (!in_scope(final_code)) return;
    auto &a = authors_[record.author_id];
    ++a.per_code[final_code.contrarian_index()];
    ++a.total;
    auto fp = fingerprint(normalize(record.text));
    ++a.fingerprints[fp];
  }

  void merge(const ActivityAccumulator &other) {
    for (const auto &[id, o] : other.authors_) {
      auto &a = authors_[id];
      for (std::size_t i = 0; i < kContrarianCount; ++i) a.per_code[i] += o.per_code[i];
      a.total += o.total;
      for (const auto &[fp, n] : o.fingerprints) a.fingerprints[fp] += n;
    }
  }

  // Sorted by in-scope volume (largest first), then author id.
  std::vector<UserActivity> result() const {
    std::vector<UserActivity> out;
    out.reserve(authors_.size());
    for (const auto &[id, a] : authors_) {
      UserActivity u;
      u.author_id = id;
      u.per_code = a.per_code;
      u.total = a.total;
      u.distinct = a.fingerprints.size();
      u.uniqueness_ratio = static_cast<double>(u.distinct) / static_cast<double>(u.total);
      out.push_back(std::move(u));
    }
    std::sort(out.begin(), out.end(), [](const UserActivity &x, const UserActivity &y) {
      if (x.total != y.total) return x.total > y.total;
      return x.author_id < y.author_id;
    });
    return out;
  }

  // Share of in-scope tweets whose (author, text) fingerprint repeats at least
  // min_repeats times.
  double repeated_fraction(std::uint64_t min_repeats = 5) const {
    std::uint64_t total = 0, repeated = 0;
    for (const auto &[id, a] : authors_) {
      for (const auto &[fp, n] : a.fingerprints) {
        total += n;
        if (n >= min_repeats) repeated += n;
      }
    }
    return total ? static_cast<double>(repeated) / static_cast<double>(total) : 0.0;
  }

 private:
  struct Tally {
    std::array<std::uint64_t, kContrarianCount> per_code{};
    std::uint64_t total = 0;
    std::unordered_map<ContentFingerprint, std::uint64_t, FingerprintHash> fingerprints;
  };
  std::optional<TaxonomyCode> scope_;
  std::map<std::string, Tally> authors_;
};

// Pairs of (record, prediction).
template <class Range>
std::vector<UserActivity> user_activity(const Range &pairs, std::optional<TaxonomyCode> scope = std::nullopt) {
  ActivityAccumulator acc(scope);
  for (const auto &[record, prediction] : pairs) acc.add(record, prediction.final_code);
  return acc.result();
}

// Mean in-scope tweets per author among authors with at least one tweet of code.
inline double mean_tweets_per_user(std::span<const UserActivity> activity, TaxonomyCode code) {
  std::uint64_t tweets = 0, users = 0;
  const auto i = code.contrarian_index();
  for (const auto &u : activity) {
    if (u.per_code[i]) tweets += u.per_code[i], ++users;
  }
  return users ? static_cast<double>(tweets) / static_cast<double>(users) : 0.0;
}

enum class OutlierRule { volume, repetition };

inline std::string_view to_string(OutlierRule r) { return r == OutlierRule::volume ? "volume" : "repetition"; }

struct OutlierFlag {
  std::string author_id;
  std::vector<OutlierRule> rules;
};

// Volume: total >= count_threshold. Repetition: uniqueness <= uniqueness_threshold.
inline std::vector<OutlierFlag> flag_outliers(std::span<const UserActivity> activity, std::uint64_t count_threshold,
                                              double uniqueness_threshold) {
  if (count_threshold == 0 || !(uniqueness_threshold > 0.0)) throw std::invalid_argument("thresholds must be positive");
  std::vector<OutlierFlag> out;
  for (const auto &u : activity) {
    OutlierFlag f{u.author_id, {}};
    if (u.total >= count_threshold) f.rules.push_back(OutlierRule::volume);
    if (u.uniqueness_ratio <= uniqueness_threshold) f.rules.push_back(OutlierRule::repetition);
    if (!f.rules.empty()) out.push_back(std::move(f));
  }
  return out;
}

// Distinct normalized texts / texts, over contrarian tweets (optionally one code).
template <class Range>
double corpus_uniqueness(const Range &pairs, std::optional<TaxonomyCode> scope = std::nullopt) {
  std::unordered_set<ContentFingerprint, FingerprintHash> distinct;
  std::uint64_t total = 0;
  for (const auto &[record, prediction] : pairs) {
    TaxonomyCode code = prediction.final_code;
    if (!code.is_contrarian() || (scope && *scope != code)) continue;
    ++total;
    distinct.insert(fingerprint(normalize(record.text)));
  }
  if (total == 0) throw std::domain_error("no texts in scope: uniqueness is undefined");
  return static_cast<double>(distinct.size()) / static_cast<double>(total);
}

}  // namespace claimscope
