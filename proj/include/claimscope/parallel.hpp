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

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace claimscope {

// 0 means one job per hardware thread.
inline unsigned resolve_jobs(unsigned jobs) {
  if (jobs != 0) return jobs;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Splits [0, n) into contiguous shards, folds each shard into its own
// accumulator with add(acc, index) and merges the shard accumulators in shard
// order with merge(into, from). The result does not depend on the job count
// as long as merge is associative and commutative over shard contents.
template <class Acc, class Make, class Add, class Merge>
Acc sharded_reduce(std::size_t n, unsigned jobs, Make &&make, Add &&add, Merge &&merge) {
  jobs = std::max(1u, std::min<unsigned>(resolve_jobs(jobs), static_cast<unsigned>(std::max<std::size_t>(1, n / 1024))));
  if (jobs == 1) {
    Acc acc = make();
    for (std::size_t i = 0; i < n; ++i) add(acc, i);
    return acc;
  }
  std::vector<Acc> shards;
  shards.reserve(jobs);
  for (unsigned j = 0; j < jobs; ++j) shards.push_back(make());
  std::vector<std::exception_ptr> errors(jobs);
  {
    std::vector<std::jthread> threads;
    for (unsigned j = 0; j < jobs; ++j) {
      std::size_t lo = n * j / jobs, hi = n * (j + 1) / jobs;
      threads.emplace_back([&, j, lo, hi] {
        try {
          for (std::size_t i = lo; i < hi; ++i) add(shards[j], i);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      });
    }
  }
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Acc out = std::move(shards[0]);
  for (unsigned j = 1; j < jobs; ++j) merge(out, shards[j]);
  return out;
}

}  // namespace claimscope
