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

// Daily aggregation of classified tweets and detection of peak windows.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "claimscope/calendar.hpp"
#include "claimscope/csv.hpp"
#include "claimscope/taxonomy.hpp"

namespace claimscope {

struct DailyAggregate {
  Date date;
  std::uint64_t total = 0;
  std::uint64_t contrarian = 0;
  std::array<std::uint64_t, kContrarianCount> per_code{};  // kContrarianCodes order

  std::uint64_t count(TaxonomyCode code) const { return per_code[code.contrarian_index()]; }

  friend bool operator==(const DailyAggregate &, const DailyAggregate &) = default;
};

// Mergeable per-day tally. Days are UTC.
class DailyAggregator {
 public:
  void add(Timestamp created_at, TaxonomyCode final_code) {
    auto &day = days_[day_of(created_at)];
    ++day.total;
    if (final_code.is_contrarian()) {
      ++day.contrarian;
      ++day.per_code[final_code.contrarian_index()];
    }
  }

  void merge(const DailyAggregator &other) {
    for (const auto &[date, d] : other.days_) {
      auto &mine = days_[date];
      mine.total += d.total;
      mine.contrarian += d.contrarian;
      for (std::size_t i = 0; i < kContrarianCount; ++i) mine.per_code[i] += d.per_code[i];
    }
  }

  // One entry per day from the first to the last observed day, zero-filled.
  std::vector<DailyAggregate> series() const {
    std::vector<DailyAggregate> out;
    if (days_.empty()) return out;
    Date first = days_.begin()->first, last = days_.rbegin()->first;
    out.reserve(static_cast<std::size_t>((last - first).count() + 1));
    for (Date d = first; d <= last; d += std::chrono::days{1}) {
      auto it = days_.find(d);
      DailyAggregate a = it == days_.end() ? DailyAggregate{} : it->second;
      a.date = d;
      out.push_back(a);
    }
    return out;
  }

 private:
  std::map<Date, DailyAggregate> days_;
};

// Pairs of (record, prediction) exposing created_at and final_code.
template <class Range>
std::vector<DailyAggregate> aggregate_daily(const Range &pairs) {
  DailyAggregator agg;
  for (const auto &[record, prediction] : pairs) agg.add(record.created_at, prediction.final_code);
  return agg.series();
}

// 100 * contrarian / total per day; nullopt on days without tweets.
inline std::vector<std::optional<double>> contrarian_share(std::span<const DailyAggregate> series) {
  std::vector<std::optional<double>> out;
  out.reserve(series.size());
  for (const auto &d : series) {
    if (d.total == 0) {
      out.emplace_back();
    } else {
      out.emplace_back(100.0 * static_cast<double>(d.contrarian) / static_cast<double>(d.total));
    }
  }
  return out;
}

// Mean over the days where the share is defined.
inline std::optional<double> mean_share(std::span<const DailyAggregate> series) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto &s : contrarian_share(series)) {
    if (s) sum += *s, ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

struct PeakSpan {
  std::size_t first = 0;  // index of first peaked day
  std::size_t last = 0;   // index of last peaked day (inclusive)
  double peak = 0.0;      // largest value inside the span

  friend bool operator==(const PeakSpan &, const PeakSpan &) = default;
};

// Days with value > mean + k * sd (population sd over the whole series),
// adjacent peaked days merged. Ordered by peak value, largest first; equal
// peaks keep chronological order.
inline std::vector<PeakSpan> detect_peaks(std::span<const double> values, double k = 2.0) {
  if (values.size() < 7) throw std::invalid_argument("peak detection needs at least 7 values");
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; })) return {};
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double threshold = mean + k * std::sqrt(var / n);

  std::vector<PeakSpan> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > threshold)) continue;
    if (!out.empty() && out.back().last + 1 == i) {
      out.back().last = i;
      out.back().peak = std::max(out.back().peak, values[i]);
    } else {
      out.push_back({i, i, values[i]});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const PeakSpan &a, const PeakSpan &b) { return a.peak > b.peak; });
  return out;
}

// Peak windows of the daily totals.
inline std::vector<AnalysisWindow> detect_peak_windows(std::span<const DailyAggregate> series, double k = 2.0) {
  std::vector<double> totals;
  totals.reserve(series.size());
  for (const auto &d : series) totals.push_back(static_cast<double>(d.total));
  std::vector<AnalysisWindow> out;
  for (const auto &p : detect_peaks(totals, k)) out.emplace_back(series[p.first].date, series[p.last].date);
  return out;
}

inline std::string format_fixed(double v, int decimals = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

// date,total,contrarian,share,<one column per contrarian code>
inline void write_daily_csv(std::ostream &out, std::span<const DailyAggregate> series) {
  out << "date,total,contrarian,share";
  for (auto code : kContrarianCodes) out << ',' << code.str();
  out << '\n';
  auto shares = contrarian_share(series);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto &d = series[i];
    out << format_date(d.date) << ',' << d.total << ',' << d.contrarian << ','
        << (shares[i] ? format_fixed(*shares[i]) : std::string());
    for (auto c : d.per_code) out << ',' << c;
    out << '\n';
  }
}

}  // namespace claimscope
