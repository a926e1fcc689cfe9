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


// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures. Arguments: path to the claimscope binary, scratch directory.

#include <sys/resource.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "claimscope/claimscope.hpp"
#include "support/synthetic.hpp"
#include "support/workspace.hpp"

namespace fs = std::filesystem;
using namespace claimscope;
namespace syn = claimscope::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *f, double v) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string binary_path;
fs::path work_dir;

// ---------------------------------------------------------------------------

Outcome macro_average() {
  const std::vector<double> augmented{81.5, 70.4, 44.4, 48.6, 65.6, 59.7, 52,   69.4, 25,  34.8,
                                      74.6, 65.4, 49.4, 28.6, 54.5, 39.4, 38.2, 53.5, 62.9};
  const std::vector<double> cards{70.9, 60.5, 40, 37, 62.1, 56.7, 46.4, 68.1, 36.7,
                                  38.5, 61,   54.2, 38.5, 37.6, 30.8, 19.7, 32.8, 38.6};
  const std::vector<TaxonomyCode> universe(kAllCodes.begin(), kAllCodes.end());
  std::map<TaxonomyCode, double> a, c;
  for (std::size_t i = 0; i < augmented.size(); ++i) a[kAllCodes[i]] = augmented[i];
  for (std::size_t i = 0; i < cards.size(); ++i) c[kAllCodes[i]] = cards[i];  // 5.3 is last and absent
  const double ma = macro_f1(a, universe), mc = macro_f1(c, universe);
  return {std::abs(ma - 53.57) <= 0.01 && std::abs(mc - 43.69) <= 0.01 && !c.count(parse_code("5.3")),
          "augmented " + fmt("%.4f", ma) + ", cards " + fmt("%.4f", mc)};
}

// ---------------------------------------------------------------------------

using boost::multiprecision::cpp_int;

cpp_int choose(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  cpp_int r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Exact rational enumeration of the hypergeometric law; tables count as "no
// more likely" within a relative 1e-7, the customary tie tolerance.
double exact_two_sided(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  const std::uint64_t row1 = a + b, col1 = a + c, n = a + b + c + d;
  const std::uint64_t lo = col1 > n - row1 ? col1 - (n - row1) : 0, hi = std::min(row1, col1);
  auto weight = [&](std::uint64_t x) { return choose(col1, x) * choose(n - col1, row1 - x); };
  const cpp_int observed = weight(a);
  cpp_int tail = 0;
  for (std::uint64_t x = lo; x <= hi; ++x) {
    cpp_int w = weight(x);
    if (w * 10000000 <= observed * 10000001) tail += w;
  }
  using big = boost::multiprecision::cpp_bin_float_50;
  return std::min(1.0, (big(tail) / big(choose(n, row1))).convert_to<double>());
}

Outcome lexstats_oracle() {
  using big = boost::multiprecision::cpp_bin_float_50;
  std::mt19937_64 rng(2022);
  double worst_p = 0, worst_lfc = 0;
  for (int i = 0; i < 200; ++i) {
    const std::uint64_t total = 2 + rng() % 999;
    const std::uint64_t W = 1 + rng() % (total - 1), B = total - W;
    const std::uint64_t w = rng() % (W + 1), b = rng() % (B + 1);
    worst_p = std::max(worst_p, std::abs(term_p_value(w, W, b, B) - exact_two_sided(w, W - w, b, B - b)));
    const std::size_t V = 1 + rng() % 2000;
    const big s = big(1) / 2, sv = s * V;
    const big lfc = boost::multiprecision::log2(((big(w) + s) / (big(W) + sv)) / ((big(b) + s) / (big(B) + sv)));
    worst_lfc = std::max(worst_lfc, std::abs(smoothed_lfc(w, W, b, B, 0.5, V) - lfc.convert_to<double>()));
  }
  return {worst_p <= 1e-6 && worst_lfc <= 1e-9,
          "max |dp| " + fmt("%.2e", worst_p) + ", max |dlfc| " + fmt("%.2e", worst_lfc)};
}

// ---------------------------------------------------------------------------

Outcome injected_anomaly() {
  int hits = 0;
  std::string first_miss;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto c = syn::injected_anomaly_corpus(seed);
    auto window = term_counts(c.records, c.window, 1);
    auto baseline = term_counts(c.records, std::nullopt, 1);
    auto top = analyze_window(window, baseline);
    if (!top.empty() && top[0].term == c.injected) {
      ++hits;
    } else if (first_miss.empty()) {
      first_miss = ", first miss seed " + std::to_string(seed);
    }
  }
  return {hits == 100, std::to_string(hits) + "/100 ranked first" + first_miss};
}

// ---------------------------------------------------------------------------

class CountingTaxonomy : public TaxonomyBackend {
 public:
  explicit CountingTaxonomy(const TaxonomyBackend &inner) : inner_(inner) {}
  std::vector<TaxonomyScores> taxonomy_scores(std::span<const std::string> texts) const override {
    seen.insert(texts.begin(), texts.end());
    calls += texts.size();
    return inner_.taxonomy_scores(texts);
  }
  mutable std::set<std::string> seen;
  mutable std::size_t calls = 0;

 private:
  const TaxonomyBackend &inner_;
};

Outcome routing_invariant() {
  auto train = syn::cards_style_claims(5, 3000);
  std::vector<LabeledClaim> coded;
  for (const auto &c : train) {
    if (binary_of(c.label) == BinaryLabel::contrarian) coded.push_back(c);
  }
  BaselineBinaryBackend binary(std::make_shared<BaselineModel>(train_binary(train)));
  BaselineTaxonomyBackend taxonomy(std::make_shared<BaselineModel>(train_taxonomy(coded)));
  CountingTaxonomy counting(taxonomy);

  auto batch = syn::cards_style_claims(6, 10000);
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < batch.size(); ++i) texts.push_back(std::to_string(i) + " " + batch[i].text);
  auto r = classify_pipeline(binary, counting, texts);

  std::size_t gated = 0, convinced_routed = 0, xor_violations = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto &p = r.predictions[i];
    if (p.binary.decision) {
      ++gated;
    } else if (counting.seen.count(texts[i])) {
      ++convinced_routed;
    }
    if ((p.final_code == kNoClaim) == p.taxonomy_scores.has_value()) ++xor_violations;
  }
  const bool pass = convinced_routed == 0 && xor_violations == 0 && counting.calls == gated &&
                    r.taxonomy_invocations == gated && gated > 0 && gated < texts.size();
  return {pass, std::to_string(gated) + " gated, " + std::to_string(counting.calls) + " taxonomy calls, " +
                    std::to_string(convinced_routed) + " convinced routed, " + std::to_string(xor_violations) +
                    " xor violations"};
}

// ---------------------------------------------------------------------------

Outcome baseline_sanity() {
  auto split = split_dataset(syn::cards_style_claims(21, 5000), {}, 21);
  BaselineBinaryBackend binary(std::make_shared<BaselineModel>(train_binary(split.train)));
  std::vector<std::string> texts;
  std::vector<bool> gold, predicted, majority;
  std::size_t positives = 0;
  for (const auto &c : split.train) positives += binary_of(c.label) == BinaryLabel::contrarian;
  const bool majority_label = 2 * positives > split.train.size();
  for (const auto &c : split.test) {
    texts.push_back(c.text);
    gold.push_back(binary_of(c.label) == BinaryLabel::contrarian);
    majority.push_back(majority_label);
  }
  for (double p : binary.contrarian_probabilities(texts)) predicted.push_back(p >= 0.5);
  // Positive-class F1 alone is 0 for a convinced-majority predictor, so the
  // two-class macro F1 is held to the same margin.
  auto both = [](const std::vector<bool> &p, const std::vector<bool> &g) {
    std::vector<bool> np, ng;
    for (bool x : p) np.push_back(!x);
    for (bool x : g) ng.push_back(!x);
    return std::pair{binary_f1(p, g), (binary_f1(p, g) + binary_f1(np, ng)) / 2};
  };
  auto [f1, macro] = both(predicted, gold);
  auto [f1_major, macro_major] = both(majority, gold);

  auto sep_train = syn::separable_claims(31, 60), sep_test = syn::separable_claims(32, 40);
  auto model = train_taxonomy(sep_train);
  BaselineTaxonomyBackend taxonomy(std::make_shared<BaselineModel>(model));
  std::vector<std::string> sep_texts;
  for (const auto &c : sep_test) sep_texts.push_back(c.text);
  auto scores = taxonomy.taxonomy_scores(sep_texts);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < sep_test.size(); ++i) correct += argmax(scores[i]) == std::get<TaxonomyCode>(sep_test[i].label);
  const double accuracy = static_cast<double>(correct) / static_cast<double>(sep_test.size());

  const bool pass = (f1 - f1_major) * 100 >= 15 && (macro - macro_major) * 100 >= 15 && accuracy == 1.0;
  return {pass, "binary F1 " + fmt("%.1f", f1 * 100) + " vs majority " + fmt("%.1f", f1_major * 100) +
                    ", two-class macro " + fmt("%.1f", macro * 100) + " vs " + fmt("%.1f", macro_major * 100) +
                    ", separable accuracy " + fmt("%.1f", accuracy * 100)};
}

// ---------------------------------------------------------------------------

Outcome trends_and_peaks() {
  syn::Rng rng(90);
  const Date first = syn::day(2022, 6, 1);
  const int days = 90;
  std::vector<double> base(days);
  for (auto &v : base) v = static_cast<double>(rng.between(900, 1100));
  double mean = 0, var = 0;
  for (double v : base) mean += v;
  mean /= days;
  for (double v : base) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / days);
  const std::set<int> injected{20, 55, 56};
  std::vector<std::uint64_t> per_day(days);
  for (int d = 0; d < days; ++d) {
    per_day[d] = static_cast<std::uint64_t>(injected.count(d) ? std::llround(mean + 3 * sd) : base[d]);
  }

  DailyAggregator agg;
  std::uint64_t input = 0;
  for (int d = 0; d < days; ++d) {
    for (std::uint64_t i = 0; i < per_day[d]; ++i, ++input) {
      agg.add(syn::at(first + std::chrono::days{d}, rng.below(86400)),
              rng.chance(0.3) ? kContrarianCodes[rng.below(kContrarianCount)] : kNoClaim);
    }
  }
  auto series = agg.series();
  std::uint64_t total = 0, contrarian = 0, coded = 0;
  for (const auto &d : series) {
    total += d.total;
    contrarian += d.contrarian;
    for (auto n : d.per_code) coded += n;
  }
  const bool conserved = total == input && coded == contrarian && series.size() == days;

  std::vector<double> totals;
  for (const auto &d : series) totals.push_back(static_cast<double>(d.total));
  std::set<int> found;
  auto peaks = detect_peaks(totals);
  for (const auto &p : peaks) {
    for (auto i = p.first; i <= p.last; ++i) found.insert(static_cast<int>(i));
  }
  const bool peaks_ok = found == injected && peaks.size() == 2;

  DailyAggregator share_agg;
  for (int d = 0; d < days; ++d) {
    for (int i = 0; i < 20000; ++i) {
      share_agg.add(syn::at(first + std::chrono::days{d}, i % 86400),
                    rng.chance(0.155) ? parse_code("5.2") : kNoClaim);
    }
  }
  const auto share_series = share_agg.series();
  const double share = *mean_share(share_series);

  return {conserved && peaks_ok && std::abs(share - 15.5) <= 0.1,
          std::string(conserved ? "conserved " : "NOT conserved ") + std::to_string(total) + " tweets, " +
              std::to_string(peaks.size()) + " peak spans over days {" +
              [&] {
                std::string s;
                for (int i : found) s += (s.empty() ? "" : ",") + std::to_string(i);
                return s;
              }() +
              "}, mean share " + fmt("%.3f", share)};
}

// ---------------------------------------------------------------------------

Outcome shift_formula() {
  const auto c17 = parse_code("1.7"), c52 = parse_code("5.2"), c41 = parse_code("4.1");
  DailyAggregator agg;
  for (int d = 0; d < 10; ++d) {
    auto t = syn::at(syn::day(2022, 7, 1) + std::chrono::days{d}, 0);
    int n17 = d == 4 ? 20 : d == 5 ? 0 : 10;
    for (int i = 0; i < n17; ++i) agg.add(t, c17);
    for (int i = 0; i < 70 - n17; ++i) agg.add(t, c52);
    for (int i = 0; i < 30; ++i) agg.add(t, c41);
  }
  auto series = agg.series();
  std::vector<TaxonomyCode> tracked{c17, c52};
  std::vector<TriggerEvent> events{
      {"spike", AnalysisWindow(series[4].date, series[4].date), TriggerType::NaturalEvent},
      {"all", AnalysisWindow(series.front().date, series.back().date), TriggerType::PoliticalEvent}};
  auto spike = category_shift(events, series, TriggerType::NaturalEvent, tracked);
  auto flat = category_shift(events, series, TriggerType::PoliticalEvent, tracked);
  const double doubled = *spike[0].percent_change;
  bool zero = true;
  for (const auto &s : flat) zero = zero && s.percent_change && *s.percent_change == 0.0;
  return {std::abs(doubled - 100.0) <= 1e-9 && zero,
          "doubled share " + fmt("%+.12f", doubled) + (zero ? ", self shift all zero" : ", self shift NOT zero")};
}

// ---------------------------------------------------------------------------

Outcome uniqueness_fixture() {
  const std::size_t total = 1977, distinct = 206;
  std::vector<std::string> forms;
  for (std::size_t i = 0; i < distinct; ++i) {
    forms.push_back("Claim " + std::to_string(i) + " says the caf\xC3\xA9 data is fraud https://t.co/a");
  }
  // Each variant normalizes to the same form as the original.
  auto variant = [](std::string s, std::size_t k) {
    switch (k % 4) {
      case 0:
        for (auto &ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        return s;
      case 1: return "  " + s.replace(s.find(" says"), 5, " \t says") + " ";
      case 2: return s.replace(s.find("https://t.co/a"), 14, "http://t.co/x" + std::to_string(k));
      default: return s.replace(s.find("\xC3\xA9"), 2, "e\xCC\x81");
    }
  };
  ActivityAccumulator acc;
  const auto t = syn::at(syn::day(2022, 7, 19), 0);
  // Each form appears once verbatim, then in cycling variants.
  for (std::size_t k = 0; k < total; ++k) {
    const auto &form = forms[k % distinct];
    acc.add(syn::tweet(std::to_string(k), t, "prolific", k < distinct ? form : variant(form, k)), parse_code("5.3"));
  }
  auto acts = acc.result();
  const bool pass = acts.size() == 1 && acts[0].total == total && acts[0].distinct == distinct &&
                    acts[0].uniqueness_ratio == static_cast<double>(distinct) / static_cast<double>(total);
  return {pass, std::to_string(acts.empty() ? 0 : acts[0].distinct) + " distinct of " +
                    std::to_string(acts.empty() ? 0 : acts[0].total) + ", ratio " +
                    fmt("%.10f", acts.empty() ? 0.0 : acts[0].uniqueness_ratio)};
}

// ---------------------------------------------------------------------------

Outcome throughput() {
  const std::size_t n = 1000000;
  syn::Rng rng(1);
  auto vocab = syn::make_vocabulary(20000);
  std::vector<TweetRecord> corpus;
  std::vector<ClaimPrediction> preds(n);
  corpus.reserve(n);
  const Date first = syn::day(2022, 1, 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::string text = i % 7 ? "RT Climate" : "Look https://t.co/abc";
    for (int k = 0; k < 14; ++k) text += ' ' + rng.pick(vocab);
    corpus.push_back(syn::tweet(std::to_string(i), syn::at(first + std::chrono::days{rng.below(365)}, rng.below(86400)),
                                "u" + std::to_string(rng.below(50000)), std::move(text)));
    preds[i].final_code = rng.chance(0.2) ? kContrarianCodes[rng.below(kContrarianCount)] : kNoClaim;
  }

  const auto start = std::chrono::steady_clock::now();
  std::size_t normalized_bytes = sharded_reduce<std::size_t>(
      n, 0, [] { return std::size_t{0}; }, [&](std::size_t &acc, std::size_t i) { acc += normalize(corpus[i].text).size(); },
      [](std::size_t &a, std::size_t b) { a += b; });
  auto series = sharded_reduce<DailyAggregator>(
      n, 0, [] { return DailyAggregator{}; },
      [&](DailyAggregator &acc, std::size_t i) { acc.add(corpus[i].created_at, preds[i].final_code); },
      [](DailyAggregator &a, const DailyAggregator &b) { a.merge(b); }).series();
  auto terms = term_counts(corpus, std::nullopt, 2, default_stopwords(), 0);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::uint64_t total = 0;
  for (const auto &d : series) total += d.total;
  struct rusage usage {};
  getrusage(RUSAGE_SELF, &usage);
  const double gib = static_cast<double>(usage.ru_maxrss) / (1024.0 * 1024.0);
  const bool pass = seconds <= 120.0 && gib < 4.0 && total == n && normalized_bytes > 0 && terms.total() > 0;
  return {pass, fmt("%.1f s", seconds) + " on " + std::to_string(resolve_jobs(0)) + " threads, peak RSS " +
                    fmt("%.2f GiB", gib) + ", " + std::to_string(terms.size()) + " distinct terms"};
}

// ---------------------------------------------------------------------------

int shell(const std::string &cmd) {
  int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = work_dir / "determinism";
  fs::remove_all(root);
  auto ws = syn::write_workspace(root / "in", 99, 4000);
  auto q = [](const fs::path &p) { return "'" + p.string() + "'"; };
  // Identical command lines twice against the same paths; each run is moved
  // aside before the next.
  const fs::path dir = root / "run";
  const std::string bin = q(binary_path);
  for (const char *run : {"a", "b"}) {
    fs::create_directories(dir);
    if (shell(bin + " train --seed 7 --input cards=" + q(ws.cards) + " --out " + q(dir / "model")) != 0 ||
        shell(bin + " classify --input " + q(ws.tweets) + " --model " + q(dir / "model" / "model.json") + " --out " +
              q(dir / "preds.jsonl")) != 0 ||
        shell(bin + " report --input " + q(ws.tweets) + " --predictions " + q(dir / "preds.jsonl") + " --events " +
              q(ws.events) + " --out " + q(dir / "report")) != 0) {
      return {false, std::string("CLI run ") + run + " failed"};
    }
    fs::rename(dir, root / run);
  }
  std::size_t compared = 0;
  for (const auto &entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    auto rel = fs::relative(entry.path(), root / "a");
    if (slurp(entry.path()) != slurp(root / "b" / rel)) return {false, rel.string() + " differs"};
    ++compared;
  }
  return {compared >= 12, std::to_string(compared) + " files byte-identical across runs"};
}

}  // namespace

int main(int argc, char **argv) {
  if (argc != 3) {
    std::cerr << "usage: claimscope_acceptance CLAIMSCOPE_BINARY WORK_DIR\n";
    return 2;
  }
  binary_path = argv[1];
  work_dir = argv[2];
  fs::create_directories(work_dir);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"macro-average semantics", macro_average},
      {"lexstats oracle equivalence", lexstats_oracle},
      {"injected-anomaly recovery", injected_anomaly},
      {"routing invariant", routing_invariant},
      {"baseline sanity", baseline_sanity},
      {"trends conservation and peaks", trends_and_peaks},
      {"shift formula", shift_formula},
      {"uniqueness fixture", uniqueness_fixture},
      {"throughput", throughput},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto &[name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception &e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " (" << fmt("%.2f s", secs) << ")"
              << std::endl;
  }
  return failures;
}
