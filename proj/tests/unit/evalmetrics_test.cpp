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


#include <sstream>

#include <gtest/gtest.h>

#include "claimscope/evalmetrics.hpp"
#include "claimscope/taxonomy.hpp"

namespace claimscope {
namespace {

std::vector<TaxonomyCode> universe() { return {kAllCodes.begin(), kAllCodes.end()}; }

TEST(MacroF1, AugmentedColumnAveragesOverAllNineteenClasses) {
  const std::vector<double> f1{81.5, 70.4, 44.4, 48.6, 65.6, 59.7, 52,   69.4, 25,  34.8,
                               74.6, 65.4, 49.4, 28.6, 54.5, 39.4, 38.2, 53.5, 62.9};
  std::map<TaxonomyCode, double> per_class;
  for (std::size_t i = 0; i < f1.size(); ++i) per_class[kAllCodes[i]] = f1[i];
  EXPECT_NEAR(macro_f1(per_class, universe()), 53.57, 0.01);
}

TEST(MacroF1, MissingClassCountsAsZero) {
  const std::vector<double> f1{70.9, 60.5, 40, 37, 62.1, 56.7, 46.4, 68.1, 36.7,
                               38.5, 61,   54.2, 38.5, 37.6, 30.8, 19.7, 32.8, 38.6};
  std::map<TaxonomyCode, double> per_class;
  for (std::size_t i = 0; i < f1.size(); ++i) per_class[kAllCodes[i]] = f1[i];
  ASSERT_FALSE(per_class.count(parse_code("5.3")));
  EXPECT_NEAR(macro_f1(per_class, universe()), 43.69, 0.01);
}

TEST(MacroF1, RejectsScoresOutsideTheUniverseAndEmptyUniverses) {
  std::map<int, double> per_class{{1, 0.5}, {7, 0.5}};
  EXPECT_THROW(macro_f1(per_class, std::vector<int>{1, 2}), std::invalid_argument);
  EXPECT_THROW(macro_f1(std::map<int, double>{}, std::vector<int>{}), std::invalid_argument);
}

TEST(Confusion, CountsAndScoresMatchHandComputation) {
  // gold:  a a a b b c
  // pred:  a a b b c c
  std::vector<char> gold{'a', 'a', 'a', 'b', 'b', 'c'}, pred{'a', 'a', 'b', 'b', 'c', 'c'};
  auto cm = confusion(pred, gold, {'a', 'b', 'c', 'd'});
  EXPECT_EQ(cm.at(0, 0), 2u);
  EXPECT_EQ(cm.at(0, 1), 1u);
  EXPECT_EQ(cm.at(1, 2), 1u);
  EXPECT_EQ(cm.total(), 6u);
  auto r = metric_report(cm);
  // a: p=1 r=2/3; b: p=1/2 r=1/2; c: p=1/2 r=1; d: 0.
  EXPECT_DOUBLE_EQ(r.per_class['a'].f1, 0.8);
  EXPECT_DOUBLE_EQ(r.per_class['b'].f1, 0.5);
  EXPECT_DOUBLE_EQ(r.per_class['c'].f1, 2.0 / 3.0);
  EXPECT_EQ(r.per_class['d'].f1, 0.0);
  EXPECT_EQ(r.per_class['d'].support, 0u);
  EXPECT_DOUBLE_EQ(r.macro_f1, (0.8 + 0.5 + 2.0 / 3.0) / 4.0);
}

TEST(Confusion, RejectsUnknownLabelsDuplicatesAndLengthMismatch) {
  std::vector<int> a{1, 2}, b{1};
  EXPECT_THROW(confusion(a, b, {1, 2}), std::invalid_argument);
  EXPECT_THROW(confusion(a, a, {1}), std::invalid_argument);
  EXPECT_THROW(ConfusionMatrix<int>({1, 1}), std::invalid_argument);
}

TEST(Confusion, MergeEqualsWholeMatrix) {
  std::vector<int> gold{0, 1, 1, 2, 0, 2, 1}, pred{0, 1, 2, 2, 1, 2, 1};
  auto whole = confusion(pred, gold, {0, 1, 2});
  auto left = confusion(std::vector<int>(pred.begin(), pred.begin() + 3),
                        std::vector<int>(gold.begin(), gold.begin() + 3), {0, 1, 2});
  auto right = confusion(std::vector<int>(pred.begin() + 3, pred.end()),
                         std::vector<int>(gold.begin() + 3, gold.end()), {0, 1, 2});
  left.merge(right);
  EXPECT_EQ(left, whole);
  EXPECT_THROW(left.merge(ConfusionMatrix<int>({0, 1})), std::invalid_argument);
}

TEST(BinaryF1, PositiveClassOnly) {
  std::vector<bool> gold{true, true, false, false, true}, pred{true, false, true, false, true};
  EXPECT_DOUBLE_EQ(binary_f1(pred, gold), 2.0 / 3.0);
  std::vector<bool> none(5, false);
  EXPECT_EQ(binary_f1(none, gold), 0.0);
}

TEST(MetricCsv, FormatsPercentagesAtOneDecimal) {
  auto cm = confusion(std::vector<int>{1, 1, 0}, std::vector<int>{1, 0, 0}, {0, 1});
  std::ostringstream out;
  write_metric_csv(out, metric_report(cm), [](int l) { return std::to_string(l); });
  EXPECT_EQ(out.str(),
            "category,precision,recall,f1,support\n"
            "0,100.0,50.0,66.7,2\n"
            "1,50.0,100.0,66.7,1\n"
            "macro_average,,,66.7,3\n");
}

}  // namespace
}  // namespace claimscope
