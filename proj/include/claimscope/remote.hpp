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

// Client for a model service speaking the /v1 JSON protocol:
//
//   POST /v1/binary    {"texts": [...]} -> {"probabilities": [...]}
//   POST /v1/taxonomy  {"texts": [...]} -> {"labels": [...], "scores": [[...]], "classes": [...]}
//   GET  /v1/health    -> {"status": "ok", "model": "..."}

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "claimscope/classifier.hpp"
#include "claimscope/taxonomy.hpp"

namespace claimscope {

class RemoteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-2xx reply.
class ProtocolError : public RemoteError {
 public:
  ProtocolError(int status, const std::string &what) : RemoteError(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

// Reply that does not match the wire schema.
class DecodeError : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

// Connection failure or timeout that outlived the retry budget.
class TransportError : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

namespace wire {

inline std::string encode_texts_request(std::span<const std::string> texts) {
  nlohmann::ordered_json j;
  j["texts"] = nlohmann::ordered_json::array();
  for (const auto &t : texts) j["texts"].push_back(t);
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

inline std::vector<std::string> decode_texts_request(std::string_view body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("texts") || !j["texts"].is_array()) {
    throw DecodeError("request body lacks a texts array");
  }
  std::vector<std::string> out;
  for (const auto &t : j["texts"]) {
    if (!t.is_string()) throw DecodeError("texts must be strings");
    out.push_back(t.get<std::string>());
  }
  return out;
}

inline nlohmann::json parse_object(std::string_view body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DecodeError("response is not a JSON object");
  return j;
}

inline std::vector<double> decode_binary_response(std::string_view body, std::size_t expected) {
  auto j = parse_object(body);
  auto it = j.find("probabilities");
  if (it == j.end() || !it->is_array()) throw DecodeError("binary response lacks probabilities");
  if (it->size() != expected) {
    throw DecodeError("binary response has " + std::to_string(it->size()) + " probabilities for " +
                      std::to_string(expected) + " texts");
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const auto &p : *it) {
    if (!p.is_number()) throw DecodeError("probability is not a number");
    double v = p.get<double>();
    if (!(v >= 0.0 && v <= 1.0)) throw DecodeError("probability outside [0, 1]");
    out.push_back(v);
  }
  return out;
}

inline std::string encode_binary_response(const std::vector<double> &probabilities) {
  nlohmann::ordered_json j;
  j["probabilities"] = probabilities;
  return j.dump();
}

struct TaxonomyResponse {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> scores;
  std::vector<std::string> classes;
};

inline std::string encode_taxonomy_response(const TaxonomyResponse &r) {
  nlohmann::ordered_json j;
  j["labels"] = r.labels;
  j["scores"] = r.scores;
  j["classes"] = r.classes;
  return j.dump();
}

// Scores per text must sum to 1 within this tolerance; they are renormalized
// after decoding.
inline constexpr double kScoreSumTolerance = 1e-4;

inline TaxonomyResponse decode_taxonomy_response_raw(std::string_view body, std::size_t expected) {
  auto j = parse_object(body);
  TaxonomyResponse r;
  try {
    r.labels = j.at("labels").get<std::vector<std::string>>();
    r.scores = j.at("scores").get<std::vector<std::vector<double>>>();
    r.classes = j.at("classes").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception &e) {
    throw DecodeError(std::string("taxonomy response: ") + e.what());
  }
  if (r.labels.size() != expected || r.scores.size() != expected) {
    throw DecodeError("taxonomy response length does not match the request (" + std::to_string(expected) +
                      " texts)");
  }
  return r;
}

inline std::vector<TaxonomyScores> decode_taxonomy_response(std::string_view body, std::size_t expected) {
  TaxonomyResponse r = decode_taxonomy_response_raw(body, expected);
  std::vector<TaxonomyCode> codes;
  for (const auto &c : r.classes) {
    auto code = TaxonomyCode::try_parse(c);
    if (!code || !code->is_leaf() || !code->is_contrarian()) {
      throw DecodeError("taxonomy response names invalid class '" + c + "'");
    }
    codes.push_back(*code);
  }
  if (codes.empty()) throw DecodeError("taxonomy response has no classes");
  std::vector<TaxonomyScores> out;
  out.reserve(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    const auto &row = r.scores[i];
    if (row.size() != codes.size()) throw DecodeError("score row width differs from class count");
    double sum = 0.0;
    for (double v : row) {
      if (!(v >= 0.0)) throw DecodeError("negative or NaN score");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kScoreSumTolerance) throw DecodeError("scores do not sum to 1");
    auto label = TaxonomyCode::try_parse(r.labels[i]);
    if (!label || std::find(codes.begin(), codes.end(), *label) == codes.end()) {
      throw DecodeError("label '" + r.labels[i] + "' is not among the classes");
    }
    TaxonomyScores s;
    for (std::size_t c = 0; c < codes.size(); ++c) s[codes[c]] = row[c] / sum;
    out.push_back(std::move(s));
  }
  return out;
}

struct Health {
  std::string status;
  std::string model;
};

inline Health decode_health(std::string_view body) {
  auto j = parse_object(body);
  if (!j.contains("status") || !j["status"].is_string()) throw DecodeError("health response lacks status");
  return {j["status"].get<std::string>(), j.value("model", "")};
}

}  // namespace wire

struct RemoteOptions {
  std::size_t batch_size = 32;
  std::size_t max_chars = 1000;  // code points kept per text before transport
  int max_retries = 2;           // extra attempts after a transport failure
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds backoff{200};
};

// First max_chars code points of a UTF-8 string.
inline std::string truncate_code_points(std::string_view s, std::size_t max_chars) {
  std::size_t count = 0, i = 0;
  while (i < s.size()) {
    if (count == max_chars) return std::string(s.substr(0, i));
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xe ? 3 : (c >> 3) == 0x1e ? 4 : 1;
    i += len;
    ++count;
  }
  return std::string(s);
}

// Both stages served by one endpoint. Calls are independent; the object can
// be shared between threads.
class RemoteBackend : public BinaryBackend, public TaxonomyBackend {
 public:
  explicit RemoteBackend(std::string endpoint, RemoteOptions options = {}) : options_(options) {
    if (options_.batch_size == 0) throw std::invalid_argument("batch size must be positive");
    std::string_view e = endpoint;
    if (!e.starts_with("http://")) throw std::invalid_argument("endpoint must be an http:// URL: " + endpoint);
    auto rest = e.substr(7);
    auto slash = rest.find('/');
    host_ = std::string("http://") + std::string(rest.substr(0, slash));
    if (slash != std::string_view::npos) {
      prefix_ = std::string(rest.substr(slash));
      while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
  }

  wire::Health health() const {
    auto res = send("GET", "/v1/health", "");
    auto h = wire::decode_health(res);
    if (h.status != "ok") throw RemoteError("model service is not healthy (status '" + h.status + "')");
    return h;
  }

  std::vector<double> contrarian_probabilities(std::span<const std::string> texts) const override {
    ensure_healthy();
    std::vector<double> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); i += options_.batch_size) {
      auto batch = prepare(texts.subspan(i, std::min(options_.batch_size, texts.size() - i)));
      auto probs = wire::decode_binary_response(send("POST", "/v1/binary", wire::encode_texts_request(batch)),
                                                batch.size());
      out.insert(out.end(), probs.begin(), probs.end());
    }
    return out;
  }

  std::vector<TaxonomyScores> taxonomy_scores(std::span<const std::string> texts) const override {
    ensure_healthy();
    std::vector<TaxonomyScores> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); i += options_.batch_size) {
      auto batch = prepare(texts.subspan(i, std::min(options_.batch_size, texts.size() - i)));
      auto scores = wire::decode_taxonomy_response(
          send("POST", "/v1/taxonomy", wire::encode_texts_request(batch)), batch.size());
      for (auto &s : scores) out.push_back(std::move(s));
    }
    return out;
  }

 private:
  std::vector<std::string> prepare(std::span<const std::string> texts) const {
    std::vector<std::string> out;
    out.reserve(texts.size());
    for (const auto &t : texts) out.push_back(truncate_code_points(t, options_.max_chars));
    return out;
  }

  void ensure_healthy() const {
    std::call_once(health_once_, [this] { health(); });
  }

  std::string send(const char *method, const std::string &path, const std::string &body) const {
    std::string last_error;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(options_.backoff * attempt);
      httplib::Client client(host_);
      auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
      auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
      client.set_connection_timeout(secs.count(), usecs.count());
      client.set_read_timeout(secs.count(), usecs.count());
      client.set_write_timeout(secs.count(), usecs.count());
      httplib::Result res = std::string_view(method) == "GET"
                                ? client.Get(prefix_ + path)
                                : client.Post(prefix_ + path, body, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status < 200 || res->status >= 300) {
        throw ProtocolError(res->status, std::string(method) + " " + path + " returned HTTP " +
                                             std::to_string(res->status) + ": " + res->body);
      }
      return res->body;
    }
    throw TransportError(std::string(method) + " " + host_ + prefix_ + path + " failed after " +
                         std::to_string(options_.max_retries + 1) + " attempt(s): " + last_error);
  }

  RemoteOptions options_;
  std::string host_;
  std::string prefix_;
  mutable std::once_flag health_once_;
};

}  // namespace claimscope
