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

// Two-stage claim classification: a contrarian/convinced gate followed by
// taxonomy routing of the gated texts. Stages run over pluggable backends;
// the built-in backend is a weighted multinomial term-likelihood model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

#include "claimscope/corpus.hpp"
#include "claimscope/taxonomy.hpp"
#include "claimscope/textproc.hpp"

namespace claimscope {

enum class Stage { binary, taxonomy };

inline std::string_view to_string(Stage s) { return s == Stage::binary ? "binary" : "taxonomy"; }

inline Stage parse_stage(std::string_view s) {
  if (s == "binary") return Stage::binary;
  if (s == "taxonomy") return Stage::taxonomy;
  throw std::invalid_argument("unknown stage '" + std::string(s) + "'");
}

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainingConfig {
  std::uint64_t seed = 0;
  double smoothing = 1.0;
  int max_n = 2;
  // Free-form provenance string copied into the model metadata.
  std::string date;
};

struct ModelMetadata {
  std::uint64_t seed = 0;
  std::vector<std::string> dataset_tags;  // sorted, unique
  std::string date;

  friend bool operator==(const ModelMetadata &, const ModelMetadata &) = default;
};

// Multinomial term-likelihood classifier with additive smoothing.
//
// Each training document adds its term counts to its class, scaled by the
// class weight. With class reweighting every class carries the same total
// weight (N / K per class), which also makes the priors uniform.
class BaselineModel {
 public:
  static constexpr int kFormatVersion = 1;

  Stage stage() const { return stage_; }
  const std::vector<std::string> &classes() const { return classes_; }
  const std::vector<double> &class_weights() const { return class_weights_; }
  const std::vector<std::uint64_t> &documents() const { return documents_; }
  const ModelMetadata &metadata() const { return metadata_; }
  std::size_t vocabulary_size() const { return vocabulary_.size(); }
  const std::vector<std::string> &vocabulary() const { return vocabulary_; }
  double smoothing() const { return smoothing_; }
  int max_n() const { return max_n_; }

  std::vector<double> log_priors() const { return log_priors_; }

  // Posterior over classes(), summing to 1.
  std::vector<double> predict_proba(std::string_view text) const {
    const std::size_t k = classes_.size();
    std::vector<double> score(log_priors_);
    TermVector terms = extract_terms(tokenize(normalize(text)), max_n_);
    for (const auto &[term, n] : terms.counts()) {
      auto it = index_.find(term);
      if (it == index_.end()) continue;
      const double *row = &log_likelihood_[it->second * k];
      for (std::size_t c = 0; c < k; ++c) score[c] += static_cast<double>(n) * row[c];
    }
    double top = *std::max_element(score.begin(), score.end());
    double z = 0.0;
    for (double &s : score) {
      s = std::exp(s - top);
      z += s;
    }
    for (double &s : score) s /= z;
    return score;
  }

  // documents: (class index, text). Classes with no documents are an error.
  static BaselineModel fit(Stage stage, std::vector<std::string> classes,
                           const std::vector<std::pair<std::size_t, std::string_view>> &documents,
                           bool reweight, const TrainingConfig &config, ModelMetadata metadata) {
    if (config.smoothing <= 0) throw TrainingError("smoothing must be positive");
    BaselineModel m;
    m.stage_ = stage;
    m.classes_ = std::move(classes);
    m.smoothing_ = config.smoothing;
    m.max_n_ = config.max_n;
    m.metadata_ = std::move(metadata);
    const std::size_t k = m.classes_.size();
    m.documents_.assign(k, 0);

    std::map<std::string, std::vector<std::uint64_t>> counts;
    for (const auto &[c, text] : documents) {
      if (c >= k) throw TrainingError("class index out of range");
      ++m.documents_[c];
      TermVector terms = extract_terms(tokenize(normalize(text)), m.max_n_);
      for (const auto &[term, n] : terms.counts()) {
        auto &row = counts[term];
        if (row.empty()) row.assign(k, 0);
        row[c] += n;
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (m.documents_[c] == 0) throw TrainingError("class '" + m.classes_[c] + "' has no training examples");
    }
    const double n_docs = static_cast<double>(documents.size());
    m.class_weights_.assign(k, 1.0);
    if (reweight) {
      for (std::size_t c = 0; c < k; ++c) {
        m.class_weights_[c] = n_docs / (static_cast<double>(k) * static_cast<double>(m.documents_[c]));
      }
    }
    m.vocabulary_.reserve(counts.size());
    m.counts_.reserve(counts.size() * k);
    for (auto &[term, row] : counts) {
      m.vocabulary_.push_back(term);
      m.counts_.insert(m.counts_.end(), row.begin(), row.end());
    }
    m.finalize();
    return m;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "claimscope.baseline";
    j["version"] = kFormatVersion;
    j["stage"] = to_string(stage_);
    j["classes"] = classes_;
    j["class_weights"] = class_weights_;
    j["documents"] = documents_;
    j["smoothing"] = smoothing_;
    j["max_n"] = max_n_;
    j["stopwords_version"] = kStopwordListVersion;
    j["metadata"] = {{"seed", metadata_.seed}, {"dataset_tags", metadata_.dataset_tags}, {"date", metadata_.date}};
    const std::size_t k = classes_.size();
    nlohmann::ordered_json vocab = nlohmann::ordered_json::array();
    for (std::size_t t = 0; t < vocabulary_.size(); ++t) {
      nlohmann::ordered_json sparse = nlohmann::ordered_json::array();
      for (std::size_t c = 0; c < k; ++c) {
        if (auto n = counts_[t * k + c]) sparse.push_back(nlohmann::ordered_json::array({c, n}));
      }
      vocab.push_back(nlohmann::ordered_json::array({vocabulary_[t], std::move(sparse)}));
    }
    j["vocabulary"] = std::move(vocab);
    return j;
  }

  static BaselineModel from_json(const nlohmann::json &j) {
    try {
      if (j.at("format").get<std::string>() != "claimscope.baseline") throw ModelFormatError("not a baseline model");
      if (j.at("version").get<int>() != kFormatVersion) {
        throw ModelFormatError("unsupported model version " + j.at("version").dump());
      }
      if (j.at("stopwords_version").get<int>() != kStopwordListVersion) {
        throw ModelFormatError("model was trained with a different stopword list");
      }
      BaselineModel m;
      m.stage_ = parse_stage(j.at("stage").get<std::string>());
      m.classes_ = j.at("classes").get<std::vector<std::string>>();
      m.class_weights_ = j.at("class_weights").get<std::vector<double>>();
      m.documents_ = j.at("documents").get<std::vector<std::uint64_t>>();
      m.smoothing_ = j.at("smoothing").get<double>();
      m.max_n_ = j.at("max_n").get<int>();
      const auto &meta = j.at("metadata");
      m.metadata_.seed = meta.at("seed").get<std::uint64_t>();
      m.metadata_.dataset_tags = meta.at("dataset_tags").get<std::vector<std::string>>();
      m.metadata_.date = meta.at("date").get<std::string>();
      const std::size_t k = m.classes_.size();
      if (k < 2 || m.class_weights_.size() != k || m.documents_.size() != k) {
        throw ModelFormatError("inconsistent class tables");
      }
      const auto &vocab = j.at("vocabulary");
      m.vocabulary_.reserve(vocab.size());
      m.counts_.assign(vocab.size() * k, 0);
      std::size_t t = 0;
      for (const auto &entry : vocab) {
        m.vocabulary_.push_back(entry.at(0).get<std::string>());
        for (const auto &cell : entry.at(1)) {
          auto c = cell.at(0).get<std::size_t>();
          if (c >= k) throw ModelFormatError("class index out of range in vocabulary");
          m.counts_[t * k + c] = cell.at(1).get<std::uint64_t>();
        }
        ++t;
      }
      m.finalize();
      return m;
    } catch (const nlohmann::json::exception &e) {
      throw ModelFormatError(std::string("malformed model: ") + e.what());
    }
  }

  friend bool operator==(const BaselineModel &a, const BaselineModel &b) {
    return a.stage_ == b.stage_ && a.classes_ == b.classes_ && a.class_weights_ == b.class_weights_ &&
           a.documents_ == b.documents_ && a.smoothing_ == b.smoothing_ && a.max_n_ == b.max_n_ &&
           a.metadata_ == b.metadata_ && a.vocabulary_ == b.vocabulary_ && a.counts_ == b.counts_;
  }

 private:
  void finalize() {
    const std::size_t k = classes_.size();
    const std::size_t v = vocabulary_.size();
    std::vector<double> totals(k, 0.0);
    for (std::size_t t = 0; t < v; ++t) {
      for (std::size_t c = 0; c < k; ++c) totals[c] += class_weights_[c] * static_cast<double>(counts_[t * k + c]);
    }
    log_likelihood_.assign(v * k, 0.0);
    for (std::size_t t = 0; t < v; ++t) {
      for (std::size_t c = 0; c < k; ++c) {
        double weighted = class_weights_[c] * static_cast<double>(counts_[t * k + c]);
        log_likelihood_[t * k + c] =
            std::log((weighted + smoothing_) / (totals[c] + smoothing_ * static_cast<double>(v)));
      }
    }
    double mass = 0.0;
    for (std::size_t c = 0; c < k; ++c) mass += class_weights_[c] * static_cast<double>(documents_[c]);
    log_priors_.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
      log_priors_[c] = std::log(class_weights_[c] * static_cast<double>(documents_[c]) / mass);
    }
    index_.clear();
    index_.reserve(v);
    for (std::size_t t = 0; t < v; ++t) index_.emplace(vocabulary_[t], t);
  }

  Stage stage_ = Stage::binary;
  std::vector<std::string> classes_;
  std::vector<double> class_weights_;
  std::vector<std::uint64_t> documents_;
  double smoothing_ = 1.0;
  int max_n_ = 2;
  ModelMetadata metadata_;
  std::vector<std::string> vocabulary_;   // sorted
  std::vector<std::uint64_t> counts_;     // [term][class], unweighted
  std::vector<double> log_likelihood_;    // [term][class]
  std::vector<double> log_priors_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline ModelMetadata metadata_for(const std::vector<LabeledClaim> &claims, const TrainingConfig &config) {
  std::set<std::string> tags;
  for (const auto &c : claims) tags.emplace(to_string(c.dataset_tag));
  return {config.seed, {tags.begin(), tags.end()}, config.date};
}

}  // namespace detail

// Contrarian vs convinced. Taxonomy-coded claims collapse to the binary label;
// datasets are concatenated without per-dataset weighting.
inline BaselineModel train_binary(const std::vector<LabeledClaim> &claims, const TrainingConfig &config = {}) {
  std::vector<std::pair<std::size_t, std::string_view>> docs;
  docs.reserve(claims.size());
  std::size_t positives = 0;
  for (const auto &c : claims) {
    bool contrarian = binary_of(c.label) == BinaryLabel::contrarian;
    positives += contrarian;
    docs.emplace_back(contrarian ? 1 : 0, c.text);
  }
  if (positives == 0 || positives == claims.size()) {
    throw TrainingError("binary training needs both contrarian and convinced examples");
  }
  return BaselineModel::fit(Stage::binary, {"convinced", "contrarian"}, docs, false, config,
                            detail::metadata_for(claims, config));
}

// Routing over the contrarian codes present in the data, with inverse
// class-frequency weighting.
inline BaselineModel train_taxonomy(const std::vector<LabeledClaim> &claims, const TrainingConfig &config = {}) {
  std::set<TaxonomyCode> present;
  for (std::size_t i = 0; i < claims.size(); ++i) {
    const auto *code = std::get_if<TaxonomyCode>(&claims[i].label);
    if (!code) throw TrainingError("taxonomy training example " + std::to_string(i) + " has a binary label");
    if (!code->is_contrarian()) {
      throw TrainingError("taxonomy training example " + std::to_string(i) + " is labeled 0.0");
    }
    present.insert(*code);
  }
  if (present.size() < 2) throw TrainingError("taxonomy training needs at least two distinct codes");
  std::vector<std::string> classes;
  std::map<TaxonomyCode, std::size_t> index;
  for (auto code : present) {
    index[code] = classes.size();
    classes.push_back(code.str());
  }
  std::vector<std::pair<std::size_t, std::string_view>> docs;
  docs.reserve(claims.size());
  for (const auto &c : claims) docs.emplace_back(index.at(std::get<TaxonomyCode>(c.label)), c.text);
  return BaselineModel::fit(Stage::taxonomy, std::move(classes), docs, true, config,
                            detail::metadata_for(claims, config));
}

// Both stages in one file.
struct ModelBundle {
  BaselineModel binary;
  BaselineModel taxonomy;

  void save(const std::string &path) const {
    nlohmann::ordered_json j;
    j["format"] = "claimscope.bundle";
    j["version"] = 1;
    j["binary"] = binary.to_json();
    j["taxonomy"] = taxonomy.to_json();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model " + path);
    out << j.dump() << '\n';
    if (!out) throw IoError("failed writing model " + path);
  }

  static ModelBundle load(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read model " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("format", "") != "claimscope.bundle") {
      throw ModelFormatError(path + " is not a model bundle");
    }
    ModelBundle b{BaselineModel::from_json(j.at("binary")), BaselineModel::from_json(j.at("taxonomy"))};
    if (b.binary.stage() != Stage::binary || b.taxonomy.stage() != Stage::taxonomy) {
      throw ModelFormatError(path + ": stage mismatch");
    }
    return b;
  }
};

// ---------------------------------------------------------------------------
// Backends and the pipeline

using TaxonomyScores = std::map<TaxonomyCode, double>;

class BinaryBackend {
 public:
  virtual ~BinaryBackend() = default;
  // One P(contrarian) per text, in input order.
  virtual std::vector<double> contrarian_probabilities(std::span<const std::string> texts) const = 0;
};

class TaxonomyBackend {
 public:
  virtual ~TaxonomyBackend() = default;
  // One score mapping per text, in input order.
  virtual std::vector<TaxonomyScores> taxonomy_scores(std::span<const std::string> texts) const = 0;
};

class BaselineBinaryBackend : public BinaryBackend {
 public:
  explicit BaselineBinaryBackend(std::shared_ptr<const BaselineModel> model) : model_(std::move(model)) {
    if (model_->stage() != Stage::binary) throw std::invalid_argument("not a binary-stage model");
    contrarian_ = static_cast<std::size_t>(
        std::find(model_->classes().begin(), model_->classes().end(), "contrarian") - model_->classes().begin());
    if (contrarian_ >= model_->classes().size()) throw std::invalid_argument("binary model lacks a contrarian class");
  }

  std::vector<double> contrarian_probabilities(std::span<const std::string> texts) const override {
    std::vector<double> out;
    out.reserve(texts.size());
    for (const auto &t : texts) out.push_back(model_->predict_proba(t)[contrarian_]);
    return out;
  }

 private:
  std::shared_ptr<const BaselineModel> model_;
  std::size_t contrarian_ = 1;
};

class BaselineTaxonomyBackend : public TaxonomyBackend {
 public:
  explicit BaselineTaxonomyBackend(std::shared_ptr<const BaselineModel> model) : model_(std::move(model)) {
    if (model_->stage() != Stage::taxonomy) throw std::invalid_argument("not a taxonomy-stage model");
    for (const auto &c : model_->classes()) codes_.push_back(TaxonomyCode::parse(c));
  }

  std::vector<TaxonomyScores> taxonomy_scores(std::span<const std::string> texts) const override {
    std::vector<TaxonomyScores> out;
    out.reserve(texts.size());
    for (const auto &t : texts) {
      auto p = model_->predict_proba(t);
      TaxonomyScores scores;
      for (std::size_t c = 0; c < codes_.size(); ++c) scores.emplace(codes_[c], p[c]);
      out.push_back(std::move(scores));
    }
    return out;
  }

 private:
  std::shared_ptr<const BaselineModel> model_;
  std::vector<TaxonomyCode> codes_;
};

struct BinaryVerdict {
  double p_contrarian = 0.0;
  bool decision = false;
  double threshold = 0.5;
};

struct ClaimPrediction {
  BinaryVerdict binary;
  std::optional<TaxonomyScores> taxonomy_scores;
  TaxonomyCode final_code;
};

inline void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
}

inline std::vector<BinaryVerdict> predict_binary(const BinaryBackend &backend, std::span<const std::string> texts,
                                                 double threshold = 0.5) {
  check_threshold(threshold);
  if (texts.empty()) throw std::invalid_argument("predict_binary needs a non-empty batch");
  auto probs = backend.contrarian_probabilities(texts);
  if (probs.size() != texts.size()) throw std::runtime_error("binary backend returned a partial batch");
  std::vector<BinaryVerdict> out;
  out.reserve(probs.size());
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::runtime_error("binary backend returned a probability outside [0, 1]");
    out.push_back({p, p >= threshold, threshold});
  }
  return out;
}

inline std::vector<TaxonomyScores> predict_taxonomy(const TaxonomyBackend &backend,
                                                    std::span<const std::string> texts) {
  if (texts.empty()) throw std::invalid_argument("predict_taxonomy needs a non-empty batch");
  auto scores = backend.taxonomy_scores(texts);
  if (scores.size() != texts.size()) throw std::runtime_error("taxonomy backend returned a partial batch");
  for (const auto &s : scores) {
    double sum = 0.0;
    for (const auto &[code, v] : s) {
      if (!code.is_contrarian() || !code.is_leaf()) {
        throw std::runtime_error("taxonomy backend scored non-contrarian code " + code.str());
      }
      sum += v;
    }
    if (s.empty() || std::abs(sum - 1.0) > 1e-6) throw std::runtime_error("taxonomy scores do not sum to 1");
  }
  return scores;
}

// Highest score; ties go to the earlier code in taxonomy order.
inline TaxonomyCode argmax(const TaxonomyScores &scores) {
  auto best = scores.begin();
  for (auto it = scores.begin(); it != scores.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

// Backend failure annotated with the stage that raised it.
class StageError : public std::runtime_error {
 public:
  StageError(Stage stage, const std::string &what)
      : std::runtime_error(std::string(to_string(stage)) + " stage: " + what), stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

struct PipelineResult {
  std::vector<ClaimPrediction> predictions;
  // Texts handed to the taxonomy stage.
  std::size_t taxonomy_invocations = 0;
};

// Gate every text, then route only the contrarian-gated ones.
inline PipelineResult classify_pipeline(const BinaryBackend &binary, const TaxonomyBackend &taxonomy,
                                        std::span<const std::string> texts, double threshold = 0.5) {
  PipelineResult out;
  if (texts.empty()) return out;
  std::vector<BinaryVerdict> verdicts;
  try {
    verdicts = predict_binary(binary, texts, threshold);
  } catch (const std::invalid_argument &) {
    throw;
  } catch (const std::exception &e) {
    throw StageError(Stage::binary, e.what());
  }
  std::vector<std::size_t> gated;
  std::vector<std::string> gated_texts;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (verdicts[i].decision) {
      gated.push_back(i);
      gated_texts.push_back(texts[i]);
    }
  }
  out.predictions.resize(texts.size());
  for (std::size_t i = 0; i < verdicts.size(); ++i) out.predictions[i].binary = verdicts[i];
  if (!gated.empty()) {
    std::vector<TaxonomyScores> scores;
    try {
      scores = predict_taxonomy(taxonomy, gated_texts);
    } catch (const std::exception &e) {
      throw StageError(Stage::taxonomy, e.what());
    }
    out.taxonomy_invocations = gated.size();
    for (std::size_t g = 0; g < gated.size(); ++g) {
      auto &p = out.predictions[gated[g]];
      p.final_code = argmax(scores[g]);
      p.taxonomy_scores = std::move(scores[g]);
    }
  }
  return out;
}

}  // namespace claimscope
