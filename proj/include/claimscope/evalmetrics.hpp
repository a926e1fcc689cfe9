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

// Confusion matrices and F1 scores. Macro averages run over a declared class
// universe. A class of the universe without a score counts as F1 = 0.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace claimscope {

template <class Label>
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<Label> universe) : classes_(std::move(universe)) {
    for (std::size_t i = 0; i < classes_.size(); ++i) {
      if (!index_.emplace(classes_[i], i).second) throw std::invalid_argument("duplicate class in universe");
    }
    counts_.assign(classes_.size() * classes_.size(), 0);
  }

  void add(const Label &gold, const Label &predicted) { ++counts_[slot(gold) * size() + slot(predicted)]; }

  void merge(const ConfusionMatrix &other) {
    if (other.classes_ != classes_) throw std::invalid_argument("cannot merge matrices over different classes");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  }

  std::size_t size() const { return classes_.size(); }
  const std::vector<Label> &classes() const { return classes_; }

  // counts[gold][predicted]
  std::uint64_t at(std::size_t gold, std::size_t predicted) const { return counts_[gold * size() + predicted]; }

  std::uint64_t support(std::size_t gold) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < size(); ++p) s += at(gold, p);
    return s;
  }
  std::uint64_t predicted(std::size_t p) const {
    std::uint64_t s = 0;
    for (std::size_t g = 0; g < size(); ++g) s += at(g, p);
    return s;
  }
  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }

  std::size_t slot(const Label &l) const {
    auto it = index_.find(l);
    if (it == index_.end()) throw std::invalid_argument("label outside the class universe");
    return it->second;
  }

  friend bool operator==(const ConfusionMatrix &a, const ConfusionMatrix &b) {
    return a.classes_ == b.classes_ && a.counts_ == b.counts_;
  }

 private:
  std::vector<Label> classes_;
  std::map<Label, std::size_t> index_;
  std::vector<std::uint64_t> counts_;
};

template <class Label>
ConfusionMatrix<Label> confusion(std::span<const Label> predictions, std::span<const Label> golds,
                                 const std::vector<Label> &universe) {
  if (predictions.size() != golds.size()) throw std::invalid_argument("prediction and gold lengths differ");
  ConfusionMatrix<Label> cm(universe);
  for (std::size_t i = 0; i < golds.size(); ++i) cm.add(golds[i], predictions[i]);
  return cm;
}

template <class Label>
ConfusionMatrix<Label> confusion(const std::vector<Label> &predictions, const std::vector<Label> &golds,
                                 const std::vector<Label> &universe) {
  return confusion(std::span<const Label>(predictions), std::span<const Label>(golds), universe);
}

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

// Per-class scores from raw counts. Every undefined ratio is 0.
inline ClassScores scores_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  ClassScores s;
  s.support = tp + fn;
  s.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  s.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

template <class Label>
std::map<Label, ClassScores> f1_per_class(const ConfusionMatrix<Label> &cm) {
  std::map<Label, ClassScores> out;
  for (std::size_t c = 0; c < cm.size(); ++c) {
    std::uint64_t tp = cm.at(c, c);
    out[cm.classes()[c]] = scores_from_counts(tp, cm.predicted(c) - tp, cm.support(c) - tp);
  }
  return out;
}

// Mean F1 over the universe; universe members without a score contribute 0.
template <class Label>
double macro_f1(const std::map<Label, double> &per_class, const std::vector<Label> &universe) {
  if (universe.empty()) throw std::invalid_argument("macro average over an empty class universe");
  for (const auto &[label, f1] : per_class) {
    if (std::find(universe.begin(), universe.end(), label) == universe.end()) {
      throw std::invalid_argument("scored class outside the universe");
    }
  }
  double sum = 0.0;
  for (const auto &label : universe) {
    auto it = per_class.find(label);
    if (it != per_class.end()) sum += it->second;
  }
  return sum / static_cast<double>(universe.size());
}

template <class Label>
double macro_f1(const std::map<Label, ClassScores> &per_class, const std::vector<Label> &universe) {
  std::map<Label, double> f1;
  for (const auto &[l, s] : per_class) f1[l] = s.f1;
  return macro_f1(f1, universe);
}

// F1 of the positive class. Works for any indexable range of bool-like values.
template <class Range>
double binary_f1(const Range &predictions, const Range &golds) {
  if (predictions.size() != golds.size()) throw std::invalid_argument("prediction and gold lengths differ");
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const bool p = predictions[i], g = golds[i];
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  return scores_from_counts(tp, fp, fn).f1;
}

template <class Label>
struct MetricReport {
  std::vector<Label> classes;
  std::map<Label, ClassScores> per_class;
  double macro_f1 = 0.0;
  std::uint64_t total = 0;
};

template <class Label>
MetricReport<Label> metric_report(const ConfusionMatrix<Label> &cm) {
  MetricReport<Label> r;
  r.classes = cm.classes();
  r.per_class = f1_per_class(cm);
  r.macro_f1 = claimscope::macro_f1(r.per_class, r.classes);
  r.total = cm.total();
  return r;
}

inline std::string percent_1dp(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v * 100.0);
  return buf;
}

// category,precision,recall,f1,support with scores x100 at one decimal, then a
// macro row.
template <class Label, class Name>
void write_metric_csv(std::ostream &out, const MetricReport<Label> &r, Name &&name) {
  out << "category,precision,recall,f1,support\n";
  for (const auto &l : r.classes) {
    const auto &s = r.per_class.at(l);
    out << name(l) << ',' << percent_1dp(s.precision) << ',' << percent_1dp(s.recall) << ','
        << percent_1dp(s.f1) << ',' << s.support << '\n';
  }
  out << "macro_average,,," << percent_1dp(r.macro_f1) << ',' << r.total << '\n';
}

template <class Label, class Name>
nlohmann::ordered_json metric_json(const MetricReport<Label> &r, Name &&name) {
  nlohmann::ordered_json j;
  j["classes"] = nlohmann::ordered_json::array();
  for (const auto &l : r.classes) {
    const auto &s = r.per_class.at(l);
    j["classes"].push_back({{"category", name(l)},
                            {"precision", s.precision},
                            {"recall", s.recall},
                            {"f1", s.f1},
                            {"support", s.support}});
  }
  j["macro_f1"] = r.macro_f1;
  j["total"] = r.total;
  return j;
}

}  // namespace claimscope
