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

// The claimscope command line, kept in a library so tests can drive it
// in-process.

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace claimscope::cli {

// Bad flags or an inconsistent configuration. Exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything a subcommand needs. Serialized next to every output and
// accepted back through --config.
struct RunConfig {
  std::string command;
  std::vector<std::string> inputs;
  std::string format;  // jsonl or csv; empty means from the file extension
  std::string backend = "baseline";
  std::string endpoint;
  std::string model;
  std::string predictions;
  std::string events;
  std::string out;
  double threshold = 0.5;
  std::vector<std::string> windows;
  double alpha = 0.05;
  std::size_t top = 10;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  bool keyword_filter = false;
  std::vector<std::string> keywords;
  std::vector<std::string> tracked;
  std::uint64_t count_threshold = 100;
  double uniqueness_threshold = 0.25;
  std::string scope;
  double peak_k = 2.0;
  bool bh = false;

  friend bool operator==(const RunConfig &, const RunConfig &) = default;
};

nlohmann::ordered_json to_json(const RunConfig &config);
RunConfig config_from_json(const nlohmann::json &j);

// Throws UsageError when the configuration cannot run.
void validate(const RunConfig &config);

// Runs a validated configuration. Results go to out, diagnostics to log.
// Throws on failure; partial outputs are removed before the exception leaves.
void execute(const RunConfig &config, std::ostream &out, std::ostream &log);

// Full entry point. Returns 0 on success, 1 on a runtime failure and 2 on a
// usage error.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace claimscope::cli
