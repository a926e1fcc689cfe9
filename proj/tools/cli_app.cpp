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


#include "cli_app.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "CLI11.hpp"

#include "claimscope/claimscope.hpp"

namespace claimscope::cli {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration

ordered_json to_json(const RunConfig &c) {
  ordered_json j;
  j["command"] = c.command;
  j["inputs"] = c.inputs;
  j["format"] = c.format;
  j["backend"] = c.backend;
  j["endpoint"] = c.endpoint;
  j["model"] = c.model;
  j["predictions"] = c.predictions;
  j["events"] = c.events;
  j["out"] = c.out;
  j["threshold"] = c.threshold;
  j["windows"] = c.windows;
  j["alpha"] = c.alpha;
  j["top"] = c.top;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["keyword_filter"] = c.keyword_filter;
  j["keywords"] = c.keywords;
  j["tracked"] = c.tracked;
  j["count_threshold"] = c.count_threshold;
  j["uniqueness_threshold"] = c.uniqueness_threshold;
  j["scope"] = c.scope;
  j["peak_k"] = c.peak_k;
  j["bh"] = c.bh;
  return j;
}

RunConfig config_from_json(const nlohmann::json &j) {
  if (!j.is_object()) throw UsageError("run configuration must be a JSON object");
  RunConfig c;
  const nlohmann::ordered_json known = to_json(c);
  for (const auto &[key, value] : j.items()) {
    if (!known.contains(key)) throw UsageError("unknown configuration key '" + key + "'");
  }
  try {
    c.command = j.at("command").get<std::string>();
    auto get = [&](const char *key, auto &field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("inputs", c.inputs);
    get("format", c.format);
    get("backend", c.backend);
    get("endpoint", c.endpoint);
    get("model", c.model);
    get("predictions", c.predictions);
    get("events", c.events);
    get("out", c.out);
    get("threshold", c.threshold);
    get("windows", c.windows);
    get("alpha", c.alpha);
    get("top", c.top);
    get("seed", c.seed);
    get("jobs", c.jobs);
    get("keyword_filter", c.keyword_filter);
    get("keywords", c.keywords);
    get("tracked", c.tracked);
    get("count_threshold", c.count_threshold);
    get("uniqueness_threshold", c.uniqueness_threshold);
    get("scope", c.scope);
    get("peak_k", c.peak_k);
    get("bh", c.bh);
  } catch (const nlohmann::json::exception &e) {
    throw UsageError(std::string("bad run configuration: ") + e.what());
  }
  return c;
}

namespace {

const std::set<std::string> kCommands{"ingest", "classify", "trends", "lexstats", "shifts",
                                      "accounts", "evaluate", "train", "report"};

struct TaggedPath {
  DatasetTag tag;
  std::string path;
};

TaggedPath parse_tagged(const std::string &spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos) throw UsageError("labeled input '" + spec + "' must look like TAG=PATH");
  try {
    return {parse_dataset_tag(spec.substr(0, eq)), spec.substr(eq + 1)};
  } catch (const std::invalid_argument &e) {
    throw UsageError(e.what());
  }
}

std::vector<AnalysisWindow> parse_windows(const std::vector<std::string> &specs) {
  std::vector<AnalysisWindow> out;
  for (const auto &s : specs) {
    try {
      out.push_back(AnalysisWindow::parse(s));
    } catch (const std::exception &e) {
      throw UsageError("bad --window '" + s + "': " + e.what());
    }
  }
  return out;
}

std::optional<TaxonomyCode> parse_scope(const std::string &scope) {
  if (scope.empty()) return std::nullopt;
  auto code = TaxonomyCode::try_parse(scope);
  if (!code || !code->is_leaf() || !code->is_contrarian()) throw UsageError("--scope must be a contrarian code");
  return code;
}

std::vector<TaxonomyCode> parse_tracked(const std::vector<std::string> &specs) {
  std::vector<TaxonomyCode> out;
  for (const auto &s : specs) {
    auto code = TaxonomyCode::try_parse(s);
    if (!code) throw UsageError("--tracked: unknown code '" + s + "'");
    out.push_back(*code);
  }
  try {
    check_tracked(out);
  } catch (const std::invalid_argument &e) {
    throw UsageError(std::string("--tracked: ") + e.what());
  }
  return out;
}

void require(bool ok, const std::string &what) {
  if (!ok) throw UsageError(what);
}

}  // namespace

void validate(const RunConfig &c) {
  require(kCommands.count(c.command) == 1, "unknown subcommand '" + c.command + "'");
  require(!c.inputs.empty(), c.command + ": --input is required");
  require(!c.out.empty(), c.command + ": --out is required");
  require(c.format.empty() || c.format == "jsonl" || c.format == "csv", "--format must be jsonl or csv");
  require(c.backend == "baseline" || c.backend == "remote", "--backend must be baseline or remote");
  require(c.threshold > 0.0 && c.threshold < 1.0, "--threshold must lie in (0, 1)");
  require(c.alpha > 0.0 && c.alpha <= 1.0, "--alpha must lie in (0, 1]");
  require(c.top > 0, "--top must be positive");
  require(c.peak_k > 0.0, "--peak-k must be positive");
  require(c.count_threshold > 0, "--count-threshold must be positive");
  require(c.uniqueness_threshold > 0.0, "--uniqueness-threshold must be positive");
  parse_windows(c.windows);
  parse_scope(c.scope);
  parse_tracked(c.tracked);

  const bool classifies = c.command == "classify" || c.command == "evaluate";
  if (classifies) {
    if (c.backend == "baseline") {
      require(!c.model.empty(), c.command + ": --model is required with the baseline backend");
    } else {
      require(!c.endpoint.empty(), c.command + ": --endpoint is required with the remote backend");
    }
  }
  if (c.command == "train" || c.command == "evaluate") {
    for (const auto &i : c.inputs) parse_tagged(i);
  }
  if (c.command == "lexstats") require(c.windows.size() == 1, "lexstats: exactly one --window is required");
  if (c.command == "trends" || c.command == "shifts" || c.command == "accounts" || c.command == "report") {
    require(!c.predictions.empty(), c.command + ": --predictions is required");
  }
  if (c.command == "shifts" || c.command == "report") require(!c.events.empty(), c.command + ": --events is required");
}

// ---------------------------------------------------------------------------
// Output staging: everything is written beside its destination and renamed
// into place only when the whole command succeeded.

namespace {

class Outputs {
 public:
  Outputs() = default;
  Outputs(const Outputs &) = delete;
  Outputs &operator=(const Outputs &) = delete;

  ~Outputs() {
    if (committed_) return;
    std::error_code ec;
    for (const auto &[final_path, temp] : staged_) fs::remove(temp, ec);
    for (auto it = created_dirs_.rbegin(); it != created_dirs_.rend(); ++it) {
      if (fs::is_empty(*it, ec)) fs::remove(*it, ec);
    }
  }

  void make_dir(const fs::path &dir) {
    if (dir.empty() || fs::exists(dir)) {
      if (!dir.empty() && !fs::is_directory(dir)) throw IoError(dir.string() + " exists and is not a directory");
      return;
    }
    make_dir(dir.parent_path());
    fs::create_directory(dir);
    created_dirs_.push_back(dir);
  }

  // Path to write instead of final_path.
  std::string stage(const fs::path &final_path) {
    make_dir(final_path.parent_path());
    fs::path temp = final_path;
    temp += ".partial";
    staged_.emplace_back(final_path, temp);
    return temp.string();
  }

  void write(const fs::path &final_path, const std::function<void(std::ostream &)> &fill) {
    std::string temp = stage(final_path);
    std::ofstream out(temp, std::ios::binary);
    if (!out) throw IoError("cannot write " + final_path.string());
    fill(out);
    out.flush();
    if (!out) throw IoError("failed writing " + final_path.string());
  }

  void commit() {
    for (const auto &[final_path, temp] : staged_) fs::rename(temp, final_path);
    committed_ = true;
  }

 private:
  std::vector<std::pair<fs::path, fs::path>> staged_;
  std::vector<fs::path> created_dirs_;
  bool committed_ = false;
};

std::string sibling_config_path(const std::string &out) {
  std::string p = out;
  while (p.size() > 1 && (p.back() == '/' || p.back() == '\\')) p.pop_back();
  return p + ".run.json";
}

void write_run_config(Outputs &outputs, const RunConfig &c) {
  outputs.write(sibling_config_path(c.out), [&](std::ostream &o) { o << to_json(c).dump(2) << '\n'; });
}

// ---------------------------------------------------------------------------
// Inputs

std::vector<TweetRecord> load_corpus(const RunConfig &c, std::ostream &log) {
  std::vector<TweetRecord> records;
  std::unordered_set<std::string> seen;
  for (const auto &path : c.inputs) {
    TweetFormat format = c.format.empty() ? format_from_path(path) : parse_tweet_format(c.format);
    auto corpus = ingest_tweets(path, format);
    std::size_t dup = 0;
    for (auto &r : corpus.records) {
      if (!seen.insert(r.id).second) {
        ++dup;
        continue;
      }
      records.push_back(std::move(r));
    }
    log << path << ": " << corpus.stats.records << " records, " << corpus.stats.skipped << " skipped";
    if (dup) log << ", " << dup << " duplicate ids across inputs";
    log << '\n';
    for (const auto &d : corpus.stats.diagnostics) log << "  " << d << '\n';
  }
  return records;
}

struct StoredPrediction {
  double p_contrarian = 0.0;
  TaxonomyCode final_code;
};

std::vector<StoredPrediction> load_predictions(const std::string &path, const std::vector<TweetRecord> &records) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing predictions file " + path);
  std::unordered_map<std::string, StoredPrediction> by_id;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    auto where = path + ":" + std::to_string(line_no);
    if (j.is_discarded() || !j.is_object()) throw IoError(where + ": not a JSON object");
    try {
      auto code = TaxonomyCode::parse(j.at("code").get<std::string>());
      if (!code.is_leaf()) throw IoError("code " + code.str() + " is not a leaf code");
      StoredPrediction p{j.at("p_contrarian").get<double>(), code};
      if (!by_id.emplace(j.at("id").get<std::string>(), p).second) throw IoError("duplicate id");
    } catch (const std::exception &e) {
      throw IoError(where + ": " + e.what());
    }
  }
  std::vector<StoredPrediction> out;
  out.reserve(records.size());
  for (const auto &r : records) {
    auto it = by_id.find(r.id);
    if (it == by_id.end()) throw IoError("predictions file " + path + " has no entry for tweet " + r.id);
    out.push_back(it->second);
  }
  if (by_id.size() != records.size()) {
    throw IoError("predictions file " + path + " has entries for tweets missing from the input");
  }
  return out;
}

// Iterates (record, prediction) pairs over two parallel vectors.
class Joined {
 public:
  Joined(const std::vector<TweetRecord> &r, const std::vector<StoredPrediction> &p) : records_(r), preds_(p) {}

  class iterator {
   public:
    iterator(const Joined *j, std::size_t i) : j_(j), i_(i) {}
    std::pair<const TweetRecord &, const StoredPrediction &> operator*() const {
      return {j_->records_[i_], j_->preds_[i_]};
    }
    iterator &operator++() {
      ++i_;
      return *this;
    }
    bool operator!=(const iterator &o) const { return i_ != o.i_; }

   private:
    const Joined *j_;
    std::size_t i_;
  };

  iterator begin() const { return {this, 0}; }
  iterator end() const { return {this, records_.size()}; }

 private:
  const std::vector<TweetRecord> &records_;
  const std::vector<StoredPrediction> &preds_;
};

std::vector<DailyAggregate> daily_series(const std::vector<TweetRecord> &records,
                                         const std::vector<StoredPrediction> &preds, unsigned jobs) {
  auto agg = sharded_reduce<DailyAggregator>(
      records.size(), jobs, [] { return DailyAggregator{}; },
      [&](DailyAggregator &a, std::size_t i) { a.add(records[i].created_at, preds[i].final_code); },
      [](DailyAggregator &into, const DailyAggregator &from) { into.merge(from); });
  return agg.series();
}

struct Backends {
  std::shared_ptr<const BinaryBackend> binary;
  std::shared_ptr<const TaxonomyBackend> taxonomy;
  bool parallel_safe = true;
};

Backends make_backends(const RunConfig &c) {
  if (c.backend == "remote") {
    auto remote = std::make_shared<RemoteBackend>(c.endpoint);
    return {remote, remote, false};
  }
  auto bundle = ModelBundle::load(c.model);
  auto bin = std::make_shared<const BaselineModel>(std::move(bundle.binary));
  auto tax = std::make_shared<const BaselineModel>(std::move(bundle.taxonomy));
  return {std::make_shared<BaselineBinaryBackend>(bin), std::make_shared<BaselineTaxonomyBackend>(tax), true};
}

// Order-preserving classification in contiguous chunks across threads.
std::vector<ClaimPrediction> classify_texts(const Backends &b, const std::vector<std::string> &texts, double threshold,
                                            unsigned jobs) {
  std::vector<ClaimPrediction> out(texts.size());
  if (texts.empty()) return out;
  unsigned n = b.parallel_safe ? std::max(1u, std::min<unsigned>(resolve_jobs(jobs), static_cast<unsigned>(texts.size())))
                               : 1u;
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> threads;
    for (unsigned t = 0; t < n; ++t) {
      std::size_t lo = texts.size() * t / n, hi = texts.size() * (t + 1) / n;
      threads.emplace_back([&, t, lo, hi] {
        try {
          std::span<const std::string> slice(texts.data() + lo, hi - lo);
          auto r = classify_pipeline(*b.binary, *b.taxonomy, slice, threshold);
          std::move(r.predictions.begin(), r.predictions.end(), out.begin() + static_cast<std::ptrdiff_t>(lo));
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<TaxonomyCode> resolve_tracked(const RunConfig &c, const std::vector<DailyAggregate> &series) {
  if (!c.tracked.empty()) return parse_tracked(c.tracked);
  return top_codes(series, 5);
}

std::string codes_list(const std::vector<TaxonomyCode> &codes) {
  std::string s;
  for (auto c : codes) s += (s.empty() ? "" : ",") + c.str();
  return s;
}

AnomalyOptions anomaly_options(const RunConfig &c) {
  AnomalyOptions o;
  o.alpha_level = c.alpha;
  o.top = c.top;
  o.benjamini_hochberg = c.bh;
  return o;
}

ordered_json anomaly_json(const std::vector<LexicalAnomaly> &anomalies) {
  ordered_json arr = ordered_json::array();
  for (const auto &a : anomalies) {
    arr.push_back({{"token", a.term},
                   {"log_fold_change", a.lfc},
                   {"p_value", a.p_value},
                   {"window_count", a.window_count},
                   {"baseline_count", a.baseline_count}});
  }
  return arr;
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_ingest(const RunConfig &c, Outputs &outputs, std::ostream &out, std::ostream &log) {
  auto records = load_corpus(c, log);
  std::size_t before = records.size();
  if (c.keyword_filter || !c.keywords.empty()) {
    records = keyword_filter(records, c.keywords.empty() ? default_climate_keywords() : c.keywords);
  }
  outputs.write(c.out, [&](std::ostream &o) {
    for (const auto &r : records) o << to_jsonl(r) << '\n';
  });
  out << "kept " << records.size() << " of " << before << " records\n";
}

void cmd_train(const RunConfig &c, Outputs &outputs, std::ostream &out, std::ostream &log) {
  std::vector<LabeledClaim> binary_train, taxonomy_train;
  fs::path dir = c.out;
  outputs.make_dir(dir);
  std::map<std::string, int> seen_tags;
  for (const auto &spec : c.inputs) {
    auto [tag, path] = parse_tagged(spec);
    auto data = ingest_labeled(path, tag);
    for (const auto &e : data.errors) log << path << ": row " << e.row << ": " << e.message << '\n';
    if (data.claims.empty()) throw TrainingError(path + ": no usable labeled rows");

    DatasetSplit split;
    const bool presplit =
        std::all_of(data.claims.begin(), data.claims.end(), [](const LabeledClaim &x) { return x.split.has_value(); });
    if (presplit) {
      for (const auto &x : data.claims) {
        (*x.split == Split::train ? split.train : *x.split == Split::validation ? split.validation : split.test)
            .push_back(x);
      }
    } else {
      split = split_dataset(data.claims, {}, c.seed);
    }
    for (const auto &w : split.warnings) log << path << ": " << w << '\n';

    std::string name(to_string(tag));
    if (int n = seen_tags[name]++; n > 0) name += "_" + std::to_string(n + 1);
    outputs.write(dir / (name + ".validation.csv"), [&](std::ostream &o) { write_labeled_csv(o, split.validation); });
    outputs.write(dir / (name + ".test.csv"), [&](std::ostream &o) { write_labeled_csv(o, split.test); });

    for (const auto &x : split.train) {
      binary_train.push_back(x);
      const auto *code = std::get_if<TaxonomyCode>(&x.label);
      if (code && code->is_contrarian()) taxonomy_train.push_back(x);
    }
    out << name << ": train " << split.train.size() << ", validation " << split.validation.size() << ", test "
        << split.test.size() << '\n';
  }
  TrainingConfig tc;
  tc.seed = c.seed;
  ModelBundle bundle{train_binary(binary_train, tc), train_taxonomy(taxonomy_train, tc)};
  bundle.save(outputs.stage(dir / "model.json"));
  out << "binary vocabulary " << bundle.binary.vocabulary_size() << ", taxonomy classes "
      << bundle.taxonomy.classes().size() << '\n';
}

void cmd_classify(const RunConfig &c, Outputs &outputs, std::ostream &out, std::ostream &log) {
  auto records = load_corpus(c, log);
  auto backends = make_backends(c);
  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto &r : records) texts.push_back(r.text);
  auto preds = classify_texts(backends, texts, c.threshold, c.jobs);
  std::size_t contrarian = 0;
  outputs.write(c.out, [&](std::ostream &o) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      ordered_json j;
      j["id"] = records[i].id;
      j["p_contrarian"] = preds[i].binary.p_contrarian;
      j["code"] = preds[i].final_code.str();
      contrarian += preds[i].final_code.is_contrarian();
      o << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
  });
  out << "classified " << records.size() << " tweets, " << contrarian << " contrarian\n";
}

void cmd_trends(const RunConfig &c, Outputs &outputs, std::ostream &out, std::ostream &log) {
  auto records = load_corpus(c, log);
  auto preds = load_predictions(c.predictions, records);
  auto series = daily_series(records, preds, c.jobs);
  outputs.write(c.out, [&](std::ostream &o) { write_daily_csv(o, series); });
  if (series.size() >= 7) {
    for (const auto &w : detect_peak_windows(series, c.peak_k)) out << "peak " << w.str() << '\n';
  } else {
    log << "fewer than 7 days: peak detection skipped\n";
  }
  if (auto m = mean_share(series)) out << "mean share " << format_fixed(*m, 3) << '\n';
}

void cmd_lexstats(const RunConfig &c, Outputs &outputs, std::ostream &out, std::ostream &log) {
  auto records = load_corpus(c, log);
  auto window = parse_windows(c.windows).front();
  auto baseline = term_counts(records, std::nullopt, 2, default_stopwords(), c.jobs);
  auto in_window = term_counts(records, window, 2, default_stopwords(), c.jobs);
  if (in_window.total() == 0) log << "window " << window.str() << " has no terms\n";
  auto anomalies = analyze_window(in_window, baseline, anomaly_options(c));
  outputs.write(c.out, [&](std::ostream &o) { write_anomaly_csv(o, anomalies); });
  out << anomalies.size() << " anomalous terms in " << window.str() << '\n';
}

void cmd_shifts(const RunConfig &c, Outputs &outputs, std::ostream &out, std::ostream &log) {
  auto records = load_corpus(c, log);
  auto preds = load_predictions(c.predictions, records);
  auto events = load_events(c.events);
  auto series = daily_series(records, preds, c.jobs);
  auto tracked = resolve_tracked(c, series);
  outputs.write(c.out, [&](std::ostream &o) { write_shift_csv(o, events, series, tracked); });
  out << "tracked " << codes_list(tracked) << '\n';
}

void cmd_accounts(const RunConfig &c, Outputs &outputs, std::ostream &out, std::ostream &log) {
  auto records = load_corpus(c, log);
  auto preds = load_predictions(c.predictions, records);
  auto scope = parse_scope(c.scope);
  ActivityAccumulator acc(scope);
  for (const auto &[r, p] : Joined(records, preds)) acc.add(r, p.final_code);
  auto activity = acc.result();
  auto flags = flag_outliers(activity, c.count_threshold, c.uniqueness_threshold);
  std::map<std::string, const OutlierFlag *> flagged;
  for (const auto &f : flags) flagged[f.author_id] = &f;
  outputs.write(c.out, [&](std::ostream &o) {
    o << "author_id,total,distinct,uniqueness_ratio,flags\n";
    for (const auto &u : activity) {
      std::string rules;
      if (auto it = flagged.find(u.author_id); it != flagged.end()) {
        for (auto r : it->second->rules) rules += (rules.empty() ? "" : ";") + std::string(to_string(r));
      }
      csv::write_row(o, {u.author_id, std::to_string(u.total), std::to_string(u.distinct),
                         format_fixed(u.uniqueness_ratio), rules});
    }
  });
  out << activity.size() << " accounts, " << flags.size() << " flagged\n";
  if (!activity.empty()) {
    out << "uniqueness " << format_fixed(corpus_uniqueness(Joined(records, preds), scope), 4) << '\n';
    out << "repeated-content fraction " << format_fixed(acc.repeated_fraction(), 4) << '\n';
  }
}

void cmd_evaluate(const RunConfig &c, Outputs &outputs, std::ostream &out, std::ostream &log) {
  auto backends = make_backends(c);
  std::vector<LabeledClaim> claims;
  for (const auto &spec : c.inputs) {
    auto [tag, path] = parse_tagged(spec);
    auto data = ingest_labeled(path, tag);
    for (const auto &e : data.errors) log << path << ": row " << e.row << ": " << e.message << '\n';
    claims.insert(claims.end(), data.claims.begin(), data.claims.end());
  }
  if (claims.empty()) throw IoError("no labeled rows to evaluate");
  std::vector<std::string> texts;
  for (const auto &x : claims) texts.push_back(x.text);
  auto preds = classify_texts(backends, texts, c.threshold, c.jobs);

  ConfusionMatrix<std::string> binary({"convinced", "contrarian"});
  ConfusionMatrix<TaxonomyCode> taxonomy(std::vector<TaxonomyCode>(kAllCodes.begin(), kAllCodes.end()));
  for (std::size_t i = 0; i < claims.size(); ++i) {
    binary.add(std::string(to_string(binary_of(claims[i].label))),
               preds[i].binary.decision ? "contrarian" : "convinced");
    if (const auto *gold = std::get_if<TaxonomyCode>(&claims[i].label)) taxonomy.add(*gold, preds[i].final_code);
  }
  fs::path dir = c.out;
  outputs.make_dir(dir);
  auto as_is = [](const std::string &s) { return s; };
  auto code_name = [](TaxonomyCode code) { return code.str(); };
  auto binary_report = metric_report(binary);
  ordered_json j;
  j["binary"] = metric_json(binary_report, as_is);
  j["binary"]["contrarian_f1"] = binary_f1(
      [&] {
        std::vector<bool> v;
        for (const auto &p : preds) v.push_back(p.binary.decision);
        return v;
      }(),
      [&] {
        std::vector<bool> v;
        for (const auto &x : claims) v.push_back(binary_of(x.label) == BinaryLabel::contrarian);
        return v;
      }());
  outputs.write(dir / "binary.csv", [&](std::ostream &o) { write_metric_csv(o, binary_report, as_is); });
  out << "binary macro F1 " << percent_1dp(binary_report.macro_f1) << '\n';
  if (taxonomy.total() > 0) {
    auto report = metric_report(taxonomy);
    j["taxonomy"] = metric_json(report, code_name);
    outputs.write(dir / "taxonomy.csv", [&](std::ostream &o) { write_metric_csv(o, report, code_name); });
    out << "taxonomy macro F1 " << percent_1dp(report.macro_f1) << '\n';
  }
  outputs.write(dir / "metrics.json", [&](std::ostream &o) { o << j.dump(2) << '\n'; });
}

void cmd_report(const RunConfig &c, Outputs &outputs, std::ostream &out, std::ostream &log) {
  auto records = load_corpus(c, log);
  auto preds = load_predictions(c.predictions, records);
  auto events = load_events(c.events);
  auto series = daily_series(records, preds, c.jobs);
  if (series.empty()) throw IoError("report needs at least one tweet");
  auto tracked = resolve_tracked(c, series);
  fs::path dir = c.out;
  outputs.make_dir(dir);

  outputs.write(dir / "daily.csv", [&](std::ostream &o) { write_daily_csv(o, series); });
  auto shares = contrarian_share(series);
  outputs.write(dir / "share.csv", [&](std::ostream &o) {
    o << "date,share\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
      o << format_date(series[i].date) << ',' << (shares[i] ? format_fixed(*shares[i]) : std::string()) << '\n';
    }
  });
  outputs.write(dir / "categories.csv", [&](std::ostream &o) {
    o << "date";
    for (auto code : tracked) o << ',' << code.str();
    o << ",others\n";
    for (const auto &d : series) {
      std::uint64_t rest = d.contrarian;
      o << format_date(d.date);
      for (auto code : tracked) {
        o << ',' << d.count(code);
        rest -= d.count(code);
      }
      o << ',' << rest << '\n';
    }
  });
  const bool any_contrarian =
      std::any_of(series.begin(), series.end(), [](const DailyAggregate &d) { return d.contrarian > 0; });
  outputs.write(dir / "shifts.csv", [&](std::ostream &o) {
    if (any_contrarian) {
      write_shift_csv(o, events, series, tracked);
    } else {
      std::vector<TriggerEvent> none;
      write_shift_csv(o, none, series, tracked);
    }
  });

  ordered_json summary;
  // Output location and thread count do not change results, so they stay out
  // of the bundle.
  auto shown = to_json(c);
  shown.erase("out");
  shown.erase("jobs");
  summary["config"] = shown;
  summary["tweets"] = records.size();
  summary["days"] = series.size();
  summary["first_day"] = format_date(series.front().date);
  summary["last_day"] = format_date(series.back().date);
  std::uint64_t total = 0, contrarian = 0;
  for (const auto &d : series) total += d.total, contrarian += d.contrarian;
  summary["contrarian_tweets"] = contrarian;
  summary["mean_daily_total"] = static_cast<double>(total) / static_cast<double>(series.size());
  auto m = mean_share(series);
  summary["mean_share"] = m ? ordered_json(*m) : ordered_json(nullptr);

  std::vector<AnalysisWindow> peaks;
  if (series.size() >= 7) peaks = detect_peak_windows(series, c.peak_k);
  summary["peaks"] = ordered_json::array();
  for (const auto &w : peaks) {
    std::uint64_t top = 0;
    for (const auto &d : series) {
      if (w.contains(d.date)) top = std::max(top, d.total);
    }
    summary["peaks"].push_back({{"start", format_date(w.start)}, {"end", format_date(w.end)}, {"peak_total", top}});
  }

  summary["tracked"] = ordered_json::array();
  for (auto code : tracked) summary["tracked"].push_back(code.str());
  if (any_contrarian) {
    auto dist = category_distribution(series, std::nullopt, tracked);
    ordered_json d;
    for (std::size_t i = 0; i < tracked.size(); ++i) d[tracked[i].str()] = dist.shares[i];
    d["others"] = dist.others;
    summary["distribution"] = d;
    summary["uniqueness"] = corpus_uniqueness(Joined(records, preds));
    ActivityAccumulator acc;
    for (const auto &[r, p] : Joined(records, preds)) acc.add(r, p.final_code);
    summary["repeated_content_fraction"] = acc.repeated_fraction();
  } else {
    summary["distribution"] = nullptr;
    summary["uniqueness"] = nullptr;
    summary["repeated_content_fraction"] = nullptr;
  }

  // Lexical anomalies for the requested windows, or the three largest peaks.
  std::vector<AnalysisWindow> windows = parse_windows(c.windows);
  if (windows.empty()) windows.assign(peaks.begin(), peaks.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(3, peaks.size())));
  summary["anomalies"] = ordered_json::array();
  if (!windows.empty()) {
    auto baseline = term_counts(records, std::nullopt, 2, default_stopwords(), c.jobs);
    for (const auto &w : windows) {
      auto in_window = term_counts(records, w, 2, default_stopwords(), c.jobs);
      summary["anomalies"].push_back(
          {{"window", w.str()}, {"terms", anomaly_json(analyze_window(in_window, baseline, anomaly_options(c)))}});
    }
  }
  outputs.write(dir / "summary.json", [&](std::ostream &o) {
    o << summary.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  });
  out << "report written to " << c.out << " (" << series.size() << " days, " << peaks.size() << " peaks)\n";
}

}  // namespace

void execute(const RunConfig &c, std::ostream &out, std::ostream &log) {
  validate(c);
  static const std::map<std::string, void (*)(const RunConfig &, Outputs &, std::ostream &, std::ostream &)> table{
      {"ingest", cmd_ingest},     {"train", cmd_train},       {"classify", cmd_classify},
      {"trends", cmd_trends},     {"lexstats", cmd_lexstats}, {"shifts", cmd_shifts},
      {"accounts", cmd_accounts}, {"evaluate", cmd_evaluate}, {"report", cmd_report}};
  Outputs outputs;
  table.at(c.command)(c, outputs, out, log);
  write_run_config(outputs, c);
  outputs.commit();
}

// ---------------------------------------------------------------------------
// Argument parsing

namespace {

void add_io(CLI::App *sub, RunConfig &c, bool tweets) {
  sub->add_option("--input", c.inputs, tweets ? "Tweet files (JSONL or CSV)" : "Labeled datasets as TAG=PATH")
      ->required();
  sub->add_option("--out", c.out, "Output path")->required();
  sub->add_option("--jobs", c.jobs, "Worker threads (0 = one per core)");
  if (tweets) sub->add_option("--format", c.format, "Input format")->check(CLI::IsMember({"jsonl", "csv"}));
}

void add_backend(CLI::App *sub, RunConfig &c) {
  sub->add_option("--backend", c.backend, "Classifier backend")->check(CLI::IsMember({"baseline", "remote"}));
  sub->add_option("--model", c.model, "Baseline model bundle");
  sub->add_option("--endpoint", c.endpoint, "Remote model server, http://host:port");
  sub->add_option("--threshold", c.threshold, "Binary decision threshold");
}

void add_predictions(CLI::App *sub, RunConfig &c) {
  sub->add_option("--predictions", c.predictions, "Predictions JSONL from classify")->required();
}

void add_lexical(CLI::App *sub, RunConfig &c) {
  sub->add_option("--alpha", c.alpha, "Significance level for anomalous terms");
  sub->add_option("--top", c.top, "Number of terms to report");
  sub->add_flag("--bh", c.bh, "Benjamini-Hochberg adjusted p-values");
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"claimscope: contrarian claim classification and trend analysis"};
  app.name("claimscope");
  app.require_subcommand(0, 1);
  std::string replay;
  app.add_option("--config", replay, "Re-run a saved *.run.json configuration");

  RunConfig c;
  auto *ingest = app.add_subcommand("ingest", "Normalize and deduplicate tweet files");
  add_io(ingest, c, true);
  ingest->add_flag("--keyword-filter", c.keyword_filter, "Keep only climate keyword matches");
  ingest->add_option("--keywords", c.keywords, "Replace the default keyword list");

  auto *train = app.add_subcommand("train", "Split labeled data and train the baseline");
  add_io(train, c, false);
  train->add_option("--seed", c.seed, "Split seed");

  auto *classify = app.add_subcommand("classify", "Run the two-stage classifier");
  add_io(classify, c, true);
  add_backend(classify, c);

  auto *trends = app.add_subcommand("trends", "Daily series and peaks");
  add_io(trends, c, true);
  add_predictions(trends, c);
  trends->add_option("--peak-k", c.peak_k, "Peak threshold in standard deviations");

  auto *lexstats = app.add_subcommand("lexstats", "Anomalous terms in a window");
  add_io(lexstats, c, true);
  lexstats->add_option("--window", c.windows, "Window START:END")->required();
  add_lexical(lexstats, c);

  auto *shifts = app.add_subcommand("shifts", "Category shifts by trigger type");
  add_io(shifts, c, true);
  add_predictions(shifts, c);
  shifts->add_option("--events", c.events, "Trigger event registry (JSON)")->required();
  shifts->add_option("--tracked", c.tracked, "Tracked contrarian codes (default: five most frequent)");

  auto *accounts = app.add_subcommand("accounts", "Per-account volume and repetition");
  add_io(accounts, c, true);
  add_predictions(accounts, c);
  accounts->add_option("--scope", c.scope, "Restrict to one contrarian code");
  accounts->add_option("--count-threshold", c.count_threshold, "Volume flag threshold");
  accounts->add_option("--uniqueness-threshold", c.uniqueness_threshold, "Repetition flag threshold");

  auto *evaluate = app.add_subcommand("evaluate", "Score the classifier on labeled data");
  add_io(evaluate, c, false);
  add_backend(evaluate, c);

  auto *report = app.add_subcommand("report", "Plot-ready report bundle");
  add_io(report, c, true);
  add_predictions(report, c);
  report->add_option("--events", c.events, "Trigger event registry (JSON)")->required();
  report->add_option("--window", c.windows, "Anomaly windows START:END (default: largest peaks)");
  report->add_option("--tracked", c.tracked, "Tracked contrarian codes (default: five most frequent)");
  report->add_option("--peak-k", c.peak_k, "Peak threshold in standard deviations");
  add_lexical(report, c);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    err << "claimscope: " << e.what() << "\n" << "run 'claimscope --help' for usage\n";
    return 2;
  }

  try {
    if (!replay.empty()) {
      if (!app.get_subcommands().empty()) throw UsageError("--config replaces the subcommand; give one or the other");
      std::ifstream in(replay, std::ios::binary);
      if (!in) throw UsageError("cannot read configuration " + replay);
      auto j = nlohmann::json::parse(in, nullptr, false);
      if (j.is_discarded()) throw UsageError(replay + ": malformed JSON");
      c = config_from_json(j);
    } else {
      if (app.get_subcommands().empty()) {
        err << app.help();
        return 2;
      }
      c.command = app.get_subcommands().front()->get_name();
    }
    validate(c);
  } catch (const UsageError &e) {
    err << "claimscope: " << e.what() << '\n';
    return 2;
  }

  try {
    execute(c, out, err);
  } catch (const std::exception &e) {
    err << "claimscope: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace claimscope::cli
