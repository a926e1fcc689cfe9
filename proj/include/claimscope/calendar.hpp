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

// UTC timestamps and inclusive day windows.

#include <chrono>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace claimscope {

using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;

namespace detail {

inline bool read_fixed(std::string_view s, std::size_t pos, std::size_t len, int &out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    char c = s[i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

}  // namespace detail

// Parses "YYYY-MM-DD".
inline std::optional<Date> parse_date(std::string_view s) {
  int y, m, d;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!detail::read_fixed(s, 0, 4, y) || !detail::read_fixed(s, 5, 2, m) ||
      !detail::read_fixed(s, 8, 2, d)) {
    return std::nullopt;
  }
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

// Parses ISO-8601 "YYYY-MM-DDTHH:MM:SS" with optional fractional seconds
// (truncated) and a "Z" or "+HH:MM"/"-HH:MM" suffix. A space may replace the
// "T". Offsets are folded into UTC; a missing zone designator is rejected.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
  if (s.size() < 20) return std::nullopt;
  auto date = parse_date(s.substr(0, 10));
  if (!date) return std::nullopt;
  if (s[10] != 'T' && s[10] != 't' && s[10] != ' ') return std::nullopt;
  int hh, mm, ss;
  if (!detail::read_fixed(s, 11, 2, hh) || s[13] != ':' || !detail::read_fixed(s, 14, 2, mm) ||
      s[16] != ':' || !detail::read_fixed(s, 17, 2, ss)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos, ++digits;
    if (digits == 0) return std::nullopt;
  }
  std::chrono::seconds offset{0};
  std::string_view zone = s.substr(pos);
  if (zone == "Z" || zone == "z") {
  } else if (zone.size() == 6 && (zone[0] == '+' || zone[0] == '-') && zone[3] == ':') {
    int oh, om;
    if (!detail::read_fixed(zone, 1, 2, oh) || !detail::read_fixed(zone, 4, 2, om) || oh > 23 ||
        om > 59) {
      return std::nullopt;
    }
    offset = std::chrono::hours{oh} + std::chrono::minutes{om};
    if (zone[0] == '-') offset = -offset;
  } else {
    return std::nullopt;
  }
  Timestamp t = std::chrono::time_point_cast<std::chrono::seconds>(Timestamp{*date}) +
                std::chrono::hours{hh} + std::chrono::minutes{mm} + std::chrono::seconds{ss};
  return t - offset;
}

inline std::string format_date(Date d) {
  std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

// Canonical form "YYYY-MM-DDTHH:MM:SSZ".
inline std::string format_timestamp(Timestamp t) {
  Date d = std::chrono::floor<std::chrono::days>(t);
  std::chrono::hh_mm_ss<std::chrono::seconds> tod{t - d};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%sT%02d:%02d:%02dZ", format_date(d).c_str(),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

inline Date day_of(Timestamp t) { return std::chrono::floor<std::chrono::days>(t); }

// Inclusive range of UTC days.
struct AnalysisWindow {
  Date start;
  Date end;

  AnalysisWindow(Date s, Date e) : start(s), end(e) {
    if (end < start) throw std::invalid_argument("analysis window ends before it starts");
  }

  bool contains(Date d) const { return d >= start && d <= end; }
  bool contains(Timestamp t) const { return contains(day_of(t)); }
  long days() const { return (end - start).count() + 1; }

  // "START:END" with both ends as YYYY-MM-DD.
  static AnalysisWindow parse(std::string_view spec) {
    auto colon = spec.find(':');
    if (colon == std::string_view::npos) {
      throw std::invalid_argument("window must be START:END, got '" + std::string(spec) + "'");
    }
    auto s = parse_date(spec.substr(0, colon));
    auto e = parse_date(spec.substr(colon + 1));
    if (!s || !e) throw std::invalid_argument("bad window dates in '" + std::string(spec) + "'");
    return AnalysisWindow(*s, *e);
  }

  std::string str() const { return format_date(start) + ":" + format_date(end); }

  friend bool operator==(const AnalysisWindow &, const AnalysisWindow &) = default;
};

}  // namespace claimscope
