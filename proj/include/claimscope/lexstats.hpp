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

// Lexical anomalies of a time window against the whole corpus. Each term
// gets a smoothed log2 fold change and a two-sample significance test.
//
// For term t the 2x2 table is
//
//              t        other terms
//   window     w_t      W - w_t
//   baseline   b_t      B - b_t

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "claimscope/calendar.hpp"
#include "claimscope/corpus.hpp"
#include "claimscope/parallel.hpp"
#include "claimscope/textproc.hpp"

namespace claimscope {

// Term counts over the normalized text of each record, optionally restricted
// to records created inside a window.
inline TermVector term_counts(std::span<const TweetRecord> corpus, std::optional<AnalysisWindow> window = std::nullopt,
                              int max_n = 2, const StopwordSet &stopwords = default_stopwords(), unsigned jobs = 1) {
  return sharded_reduce<TermVector>(
      corpus.size(), jobs, [] { return TermVector{}; },
      [&](TermVector &acc, std::size_t i) {
        const auto &r = corpus[i];
        if (window && !window->contains(r.created_at)) return;
        add_terms(acc, tokenize(normalize(r.text)), max_n, stopwords);
      },
      [](TermVector &into, const TermVector &from) { into.merge(from); });
}

// Two-sided p-value of the pooled two-proportion z-test comparing a/(a+b)
// with c/(c+d).
inline double two_proportion_z_p(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  const double n1 = static_cast<double>(a + b), n2 = static_cast<double>(c + d);
  if (n1 == 0 || n2 == 0) return 1.0;
  const double p1 = static_cast<double>(a) / n1, p2 = static_cast<double>(c) / n2;
  const double pooled = static_cast<double>(a + c) / (n1 + n2);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
  if (se == 0.0) return 1.0;
  const double z = (p1 - p2) / se;
  return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
}

// Two-sided conditional exact test on the 2x2 table [[a, b], [c, d]]: the
// total probability, under the hypergeometric law with all margins fixed, of
// tables no more likely than the observed one. Cost is linear in the smallest
// margin.
inline double fisher_exact_p(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  const std::uint64_t row1 = a + b, row2 = c + d, col1 = a + c;
  const std::uint64_t lo = col1 > row2 ? col1 - row2 : 0;
  const std::uint64_t hi = std::min(row1, col1);
  if (lo == hi) return 1.0;
  // log P(x) - log P(lo), via P(x+1)/P(x) = (row1-x)(col1-x) / ((x+1)(row2-col1+x+1)).
  std::vector<long double> logp(static_cast<std::size_t>(hi - lo + 1));
  logp[0] = 0.0L;
  for (std::uint64_t x = lo; x < hi; ++x) {
    long double num = static_cast<long double>(row1 - x) * static_cast<long double>(col1 - x);
    long double den = static_cast<long double>(x + 1) * static_cast<long double>(row2 - col1 + x + 1);
    logp[x - lo + 1] = logp[x - lo] + std::log(num / den);
  }
  const long double top = *std::max_element(logp.begin(), logp.end());
  const long double observed = logp[a - lo];
  // Relative tolerance for "no more likely than observed".
  const long double cutoff = observed + 1e-7L;
  long double total = 0.0L, tail = 0.0L;
  for (long double lp : logp) {
    long double w = std::exp(lp - top);
    total += w;
    if (lp <= cutoff) tail += w;
  }
  return static_cast<double>(std::min(1.0L, tail / total));
}

struct SignificanceOptions {
  // Tables whose smallest margin is at most this use the exact test.
  std::uint64_t exact_margin_limit = 1000;
  // So do tables with any expected cell count below this.
  double min_expected = 5.0;
};

inline bool use_exact_test(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d,
                           const SignificanceOptions &opts = {}) {
  const std::uint64_t r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
  const std::uint64_t smallest = std::min({r1, r2, c1, c2});
  if (smallest <= opts.exact_margin_limit) return true;
  const double n = static_cast<double>(r1 + r2);
  const double expected =
      static_cast<double>(std::min(r1, r2)) * static_cast<double>(std::min(c1, c2)) / n;
  return expected < opts.min_expected;
}

// p-value for one term: w of W window terms vs b of B baseline terms.
inline double term_p_value(std::uint64_t w, std::uint64_t W, std::uint64_t b, std::uint64_t B,
                           const SignificanceOptions &opts = {}) {
  if (w > W || b > B) throw std::invalid_argument("term count exceeds its total");
  const std::uint64_t a = w, bb = W - w, c = b, d = B - b;
  return use_exact_test(a, bb, c, d, opts) ? fisher_exact_p(a, bb, c, d) : two_proportion_z_p(a, bb, c, d);
}

namespace detail {

template <class Fn>
void for_each_union_term(const TermVector &window, const TermVector &baseline, Fn &&fn) {
  for (const auto &[term, b] : baseline.counts()) fn(term, window.count(term), b);
  for (const auto &[term, w] : window.counts()) {
    if (!baseline.counts().count(term)) fn(term, w, std::uint64_t{0});
  }
}

inline std::size_t union_size(const TermVector &window, const TermVector &baseline) {
  std::size_t v = baseline.size();
  for (const auto &[term, w] : window.counts()) v += !baseline.counts().count(term);
  return v;
}

}  // namespace detail

// log2(((w + s) / (W + sV)) / ((b + s) / (B + sV))) with s the additive
// smoothing and V the union vocabulary size.
inline double smoothed_lfc(std::uint64_t w, std::uint64_t W, std::uint64_t b, std::uint64_t B, double smoothing,
                           std::size_t vocabulary) {
  const double sv = smoothing * static_cast<double>(vocabulary);
  return std::log2(((static_cast<double>(w) + smoothing) / (static_cast<double>(W) + sv)) /
                   ((static_cast<double>(b) + smoothing) / (static_cast<double>(B) + sv)));
}

inline std::unordered_map<std::string, double> log_fold_change(const TermVector &window, const TermVector &baseline,
                                                               double smoothing = 0.5) {
  if (baseline.total() == 0) throw std::invalid_argument("baseline has no terms");
  const std::size_t v = detail::union_size(window, baseline);
  std::unordered_map<std::string, double> out;
  out.reserve(v);
  detail::for_each_union_term(window, baseline, [&](const std::string &t, std::uint64_t w, std::uint64_t b) {
    out.emplace(t, smoothed_lfc(w, window.total(), b, baseline.total(), smoothing, v));
  });
  return out;
}

inline std::unordered_map<std::string, double> significance(const TermVector &window, const TermVector &baseline,
                                                            const SignificanceOptions &opts = {}) {
  if (window.total() == 0 || baseline.total() == 0) throw std::invalid_argument("significance needs non-empty vectors");
  std::unordered_map<std::string, double> out;
  detail::for_each_union_term(window, baseline, [&](const std::string &t, std::uint64_t w, std::uint64_t b) {
    out.emplace(t, term_p_value(w, window.total(), b, baseline.total(), opts));
  });
  return out;
}

// Benjamini-Hochberg adjusted p-values, same order as the input.
inline std::vector<double> benjamini_hochberg(std::span<const double> p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return p[x] < p[y]; });
  std::vector<double> q(m);
  double running = 1.0;
  for (std::size_t r = m; r > 0; --r) {
    std::size_t i = order[r - 1];
    running = std::min(running, p[i] * static_cast<double>(m) / static_cast<double>(r));
    q[i] = running;
  }
  return q;
}

struct LexicalAnomaly {
  std::string term;
  double lfc = 0.0;
  double p_value = 1.0;
  std::uint64_t window_count = 0;
  std::uint64_t window_total = 0;
  std::uint64_t baseline_count = 0;
  std::uint64_t baseline_total = 0;
};

struct AnomalyOptions {
  double smoothing = 0.5;
  double alpha_level = 0.05;
  std::size_t top = 10;
  bool benjamini_hochberg = false;
  SignificanceOptions significance;
};

// The n terms with p < alpha_level and the largest lfc. Ties prefer the larger
// window count, then the smaller term.
inline std::vector<LexicalAnomaly> top_anomalies(const TermVector &window, const TermVector &baseline,
                                                 const std::unordered_map<std::string, double> &lfcs,
                                                 const std::unordered_map<std::string, double> &p_values,
                                                 double alpha_level = 0.05, std::size_t n = 10,
                                                 bool adjust_bh = false) {
  std::vector<LexicalAnomaly> all;
  all.reserve(lfcs.size());
  for (const auto &[term, lfc] : lfcs) {
    auto p = p_values.find(term);
    if (p == p_values.end()) throw std::invalid_argument("term '" + term + "' has no p-value");
    all.push_back({term, lfc, p->second, window.count(term), window.total(), baseline.count(term), baseline.total()});
  }
  if (adjust_bh) {
    std::sort(all.begin(), all.end(), [](const auto &x, const auto &y) { return x.term < y.term; });
    std::vector<double> raw;
    raw.reserve(all.size());
    for (const auto &a : all) raw.push_back(a.p_value);
    auto q = benjamini_hochberg(raw);
    for (std::size_t i = 0; i < all.size(); ++i) all[i].p_value = q[i];
  }
  std::erase_if(all, [&](const LexicalAnomaly &a) { return !(a.p_value < alpha_level); });
  auto better = [](const LexicalAnomaly &x, const LexicalAnomaly &y) {
    if (x.lfc != y.lfc) return x.lfc > y.lfc;
    if (x.window_count != y.window_count) return x.window_count > y.window_count;
    return x.term < y.term;
  };
  if (all.size() > n) {
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), better);
    all.resize(n);
  } else {
    std::sort(all.begin(), all.end(), better);
  }
  return all;
}

inline std::vector<LexicalAnomaly> analyze_window(const TermVector &window, const TermVector &baseline,
                                                  const AnomalyOptions &opts = {}) {
  if (window.total() == 0) return {};
  auto lfcs = log_fold_change(window, baseline, opts.smoothing);
  auto ps = significance(window, baseline, opts.significance);
  return top_anomalies(window, baseline, lfcs, ps, opts.alpha_level, opts.top, opts.benjamini_hochberg);
}

inline std::string format_scientific(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6E", v);
  return buf;
}

// token,log_fold_change,p_value,window_count,baseline_count
inline void write_anomaly_csv(std::ostream &out, std::span<const LexicalAnomaly> anomalies) {
  out << "token,log_fold_change,p_value,window_count,baseline_count\n";
  for (const auto &a : anomalies) {
    char lfc[64];
    std::snprintf(lfc, sizeof(lfc), "%.6f", a.lfc);
    out << csv::escape(a.term) << ',' << lfc << ',' << format_scientific(a.p_value) << ',' << a.window_count << ','
        << a.baseline_count << '\n';
  }
}

}  // namespace claimscope
