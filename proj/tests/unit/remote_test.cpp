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


#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "claimscope/remote.hpp"

namespace claimscope {
namespace {

std::string read_fixture(const std::string &name) {
  std::ifstream in(std::string(CLAIMSCOPE_FIXTURES) + "/remote/" + name, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string s = ss.str();
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

TEST(WireFixtures, BinaryExchangeRoundTripsByteExactly) {
  auto request = read_fixture("binary_request.json");
  auto texts = wire::decode_texts_request(request);
  ASSERT_EQ(texts.size(), 3u);
  EXPECT_EQ(texts[2], "Caf\xC3\xA9 owners say \"the ice is growing\"");
  EXPECT_EQ(wire::encode_texts_request(texts), request);

  auto response = read_fixture("binary_response.json");
  auto probs = wire::decode_binary_response(response, texts.size());
  EXPECT_EQ(probs, (std::vector<double>{0.93, 0.04, 0.71}));
  EXPECT_EQ(wire::encode_binary_response(probs), response);
}

TEST(WireFixtures, TaxonomyExchangeRoundTripsByteExactly) {
  auto request = read_fixture("taxonomy_request.json");
  auto texts = wire::decode_texts_request(request);
  EXPECT_EQ(wire::encode_texts_request(texts), request);

  auto response = read_fixture("taxonomy_response.json");
  auto raw = wire::decode_taxonomy_response_raw(response, texts.size());
  EXPECT_EQ(raw.classes.size(), 18u);
  EXPECT_EQ(wire::encode_taxonomy_response(raw), response);

  auto scores = wire::decode_taxonomy_response(response, texts.size());
  ASSERT_EQ(scores.size(), 2u);
  EXPECT_EQ(argmax(scores[0]), parse_code("5.3"));
  EXPECT_EQ(argmax(scores[1]), parse_code("1.1"));
  for (const auto &s : scores) {
    EXPECT_EQ(s.size(), 18u);
    double sum = 0;
    for (const auto &[c, v] : s) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(WireFixtures, HealthDecodes) {
  auto h = wire::decode_health(read_fixture("health_response.json"));
  EXPECT_EQ(h.status, "ok");
  EXPECT_EQ(h.model, "claim-encoder-v1");
}

TEST(Wire, RejectsContractViolations) {
  EXPECT_THROW(wire::decode_binary_response(R"({"probabilities":[0.5]})", 2), DecodeError);
  EXPECT_THROW(wire::decode_binary_response(R"({"probabilities":[1.5]})", 1), DecodeError);
  EXPECT_THROW(wire::decode_binary_response(R"({"probabilities":["x"]})", 1), DecodeError);
  EXPECT_THROW(wire::decode_binary_response(R"({"probs":[0.5]})", 1), DecodeError);
  EXPECT_THROW(wire::decode_binary_response("[0.5]", 1), DecodeError);
  EXPECT_THROW(wire::decode_binary_response("not json", 1), DecodeError);
  EXPECT_THROW(wire::decode_texts_request(R"({"texts":[1]})"), DecodeError);
  EXPECT_THROW(wire::decode_health(R"({"model":"x"})"), DecodeError);

  const std::string classes = R"("classes":["1.1","5.2"])";
  auto tax = [&](const std::string &labels, const std::string &scores) {
    return "{\"labels\":" + labels + ",\"scores\":" + scores + "," + classes + "}";
  };
  EXPECT_NO_THROW(wire::decode_taxonomy_response(tax(R"(["5.2"])", "[[0.30005,0.7]]"), 1));
  EXPECT_THROW(wire::decode_taxonomy_response(tax(R"(["5.2"])", "[[0.301,0.7]]"), 1), DecodeError);
  EXPECT_THROW(wire::decode_taxonomy_response(tax(R"(["5.2"])", "[[0.3,0.7]]"), 2), DecodeError);
  EXPECT_THROW(wire::decode_taxonomy_response(tax(R"(["4.1"])", "[[0.3,0.7]]"), 1), DecodeError);
  EXPECT_THROW(wire::decode_taxonomy_response(tax(R"(["5.2"])", "[[1.0]]"), 1), DecodeError);
  EXPECT_THROW(wire::decode_taxonomy_response(tax(R"(["5.2"])", "[[-0.3,1.3]]"), 1), DecodeError);
  EXPECT_THROW(wire::decode_taxonomy_response(
                   R"({"labels":["0.0"],"scores":[[0.5,0.5]],"classes":["0.0","5.2"]})", 1),
               DecodeError);
}

TEST(Wire, TruncatesByCodePoint) {
  EXPECT_EQ(truncate_code_points("abcdef", 3), "abc");
  EXPECT_EQ(truncate_code_points("\xC3\xA9\xC3\xA9\xC3\xA9", 2), "\xC3\xA9\xC3\xA9");
  EXPECT_EQ(truncate_code_points("ab", 5), "ab");
  EXPECT_EQ(truncate_code_points("\xF0\x9F\x8C\x8D" "x", 1), "\xF0\x9F\x8C\x8D");
}

// In-process model service speaking the /v1 protocol. P(contrarian) is 0.9
// for texts containing "hoax", 0.1 otherwise; taxonomy always favors 5.2.
class MockService {
 public:
  explicit MockService(std::string prefix = "") {
    server_.Get(prefix + "/v1/health", [this](const httplib::Request &, httplib::Response &res) {
      ++health_calls;
      res.set_content(healthy ? R"({"status":"ok","model":"mock"})" : R"({"status":"loading"})", "application/json");
    });
    server_.Post(prefix + "/v1/binary", [this](const httplib::Request &req, httplib::Response &res) {
      if (fail_status) {
        res.status = fail_status;
        res.set_content(R"({"error":"nope"})", "application/json");
        return;
      }
      auto texts = wire::decode_texts_request(req.body);
      record(texts);
      std::vector<double> p;
      for (const auto &t : texts) p.push_back(t.find("hoax") != std::string::npos ? 0.9 : 0.1);
      if (drop_one && !p.empty()) p.pop_back();
      res.set_content(wire::encode_binary_response(p), "application/json");
    });
    server_.Post(prefix + "/v1/taxonomy", [this](const httplib::Request &req, httplib::Response &res) {
      auto texts = wire::decode_texts_request(req.body);
      record(texts);
      ++taxonomy_calls;
      wire::TaxonomyResponse r;
      r.classes = {"1.1", "5.2", "5.3"};
      for (std::size_t i = 0; i < texts.size(); ++i) {
        r.labels.push_back("5.2");
        r.scores.push_back({0.2, 0.7, 0.1});
      }
      res.set_content(wire::encode_taxonomy_response(r), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockService() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint(const std::string &prefix = "") const {
    return "http://127.0.0.1:" + std::to_string(port_) + prefix;
  }

  std::vector<std::size_t> batch_sizes() {
    std::lock_guard lock(mu_);
    return batches_;
  }
  std::vector<std::string> texts() {
    std::lock_guard lock(mu_);
    return texts_;
  }

  std::atomic<bool> healthy{true};
  std::atomic<int> fail_status{0};
  std::atomic<bool> drop_one{false};
  std::atomic<int> health_calls{0};
  std::atomic<int> taxonomy_calls{0};

 private:
  void record(const std::vector<std::string> &texts) {
    std::lock_guard lock(mu_);
    batches_.push_back(texts.size());
    texts_.insert(texts_.end(), texts.begin(), texts.end());
  }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mu_;
  std::vector<std::size_t> batches_;
  std::vector<std::string> texts_;
};

TEST(RemoteBackend, BatchesAndPreservesOrder) {
  MockService svc;
  RemoteBackend remote(svc.endpoint());
  std::vector<std::string> texts;
  for (int i = 0; i < 70; ++i) texts.push_back((i % 3 == 0 ? "hoax " : "fact ") + std::to_string(i));
  auto p = remote.contrarian_probabilities(texts);
  ASSERT_EQ(p.size(), 70u);
  for (int i = 0; i < 70; ++i) EXPECT_EQ(p[i], i % 3 == 0 ? 0.9 : 0.1) << i;
  EXPECT_EQ(svc.batch_sizes(), (std::vector<std::size_t>{32, 32, 6}));
  EXPECT_EQ(svc.texts(), texts);
  EXPECT_EQ(remote.health().model, "mock");
}

TEST(RemoteBackend, ChecksHealthOnceBeforePredicting) {
  MockService svc;
  RemoteBackend remote(svc.endpoint());
  std::vector<std::string> texts{"a"};
  remote.contrarian_probabilities(texts);
  remote.taxonomy_scores(texts);
  EXPECT_EQ(svc.health_calls.load(), 1);
}

TEST(RemoteBackend, UnhealthyServiceIsRefused) {
  MockService svc;
  svc.healthy = false;
  RemoteBackend remote(svc.endpoint());
  std::vector<std::string> texts{"a"};
  EXPECT_THROW(remote.contrarian_probabilities(texts), RemoteError);
  EXPECT_TRUE(svc.batch_sizes().empty());
}

TEST(RemoteBackend, TruncatesLongTextsBeforeTransport) {
  MockService svc;
  RemoteBackend remote(svc.endpoint());
  std::string long_text;
  for (int i = 0; i < 1500; ++i) long_text += "\xC3\xA9";
  std::vector<std::string> texts{long_text};
  remote.contrarian_probabilities(texts);
  ASSERT_EQ(svc.texts().size(), 1u);
  EXPECT_EQ(svc.texts()[0].size(), 2000u);
}

TEST(RemoteBackend, NonSuccessStatusIsAProtocolError) {
  MockService svc;
  svc.fail_status = 413;
  RemoteBackend remote(svc.endpoint());
  std::vector<std::string> texts{"a"};
  try {
    remote.contrarian_probabilities(texts);
    FAIL();
  } catch (const ProtocolError &e) {
    EXPECT_EQ(e.status(), 413);
  }
}

TEST(RemoteBackend, ShortResponseIsADecodeError) {
  MockService svc;
  svc.drop_one = true;
  RemoteBackend remote(svc.endpoint());
  std::vector<std::string> texts{"a", "b"};
  EXPECT_THROW(remote.contrarian_probabilities(texts), DecodeError);
}

TEST(RemoteBackend, UnreachableEndpointFailsAfterBoundedRetries) {
  int port;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  RemoteOptions opts;
  opts.max_retries = 2;
  opts.backoff = std::chrono::milliseconds(1);
  opts.timeout = std::chrono::milliseconds(500);
  RemoteBackend remote("http://127.0.0.1:" + std::to_string(port), opts);
  std::vector<std::string> texts{"a"};
  try {
    remote.contrarian_probabilities(texts);
    FAIL();
  } catch (const TransportError &e) {
    EXPECT_NE(std::string(e.what()).find("3 attempt"), std::string::npos) << e.what();
  }
}

TEST(RemoteBackend, RejectsNonHttpEndpoints) {
  EXPECT_THROW(RemoteBackend("https://example.org"), std::invalid_argument);
  EXPECT_THROW(RemoteBackend("localhost:8000"), std::invalid_argument);
}

TEST(RemoteBackend, DrivesTheTwoStagePipelineUnderAPathPrefix) {
  MockService svc("/models");
  RemoteBackend remote(svc.endpoint("/models/"));
  std::vector<std::string> texts{"a hoax", "real", "another hoax", "fine"};
  auto r = classify_pipeline(remote, remote, texts);
  EXPECT_EQ(r.taxonomy_invocations, 2u);
  EXPECT_EQ(svc.taxonomy_calls.load(), 1);
  EXPECT_EQ(r.predictions[0].final_code, parse_code("5.2"));
  EXPECT_EQ(r.predictions[1].final_code, kNoClaim);
  EXPECT_EQ(r.predictions[2].final_code, parse_code("5.2"));
  EXPECT_NEAR(r.predictions[2].taxonomy_scores->at(parse_code("5.2")), 0.7, 1e-12);
}

}  // namespace
}  // namespace claimscope
