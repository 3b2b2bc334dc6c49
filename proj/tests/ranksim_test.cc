// Copyright 2026 The pbc-rerank Authors
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

#include "pbc/ranksim.h"

#include <gtest/gtest.h>

#include "pbc/error.h"

namespace pbc {
namespace {

TEST(RankSimTest, Nonreciprocal) {
  EXPECT_EQ(r_nonreciprocal(1), 1.0);
  EXPECT_EQ(r_nonreciprocal(4), 0.25);
  EXPECT_DOUBLE_EQ(r_nonreciprocal(200), 0.005);
  EXPECT_THROW(r_nonreciprocal(0), ValidationError);
}

TEST(RankSimTest, ReciprocalMaxConflatesOneThreeAndTwoThree) {
  EXPECT_NEAR(r_reciprocal_max({1, 3}), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(r_reciprocal_max({2, 3}), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(r_reciprocal_max({1, 3}), r_reciprocal_max({2, 3}));
  EXPECT_EQ(r_reciprocal_max({1, 1}), 1.0);
  EXPECT_EQ(r_reciprocal_max({4, 4}), 0.25);
  EXPECT_THROW(r_reciprocal_max({0, 0}), ValidationError);
}

TEST(RankSimTest, ReciprocalSumConflatesOneSevenAndFourFour) {
  EXPECT_EQ(r_reciprocal_sum({1, 7}), 0.125);
  EXPECT_EQ(r_reciprocal_sum({4, 4}), 0.125);
  EXPECT_EQ(r_reciprocal_sum({1, 1}), 0.5);
  EXPECT_DOUBLE_EQ(r_reciprocal_sum({2, 3}), 0.2);
  EXPECT_THROW(r_reciprocal_sum({0, 3}), ValidationError);
}

TEST(RankSimTest, CombinedSeparatesBothCounterexamples) {
  EXPECT_NEAR(r_combined({1, 3}), 1.0 / 7.0, 1e-15);
  EXPECT_NEAR(r_combined({2, 3}), 1.0 / 8.0, 1e-15);
  EXPECT_NEAR(r_combined({1, 7}), 1.0 / 15.0, 1e-15);
  EXPECT_NEAR(r_combined({4, 4}), 1.0 / 12.0, 1e-15);
  EXPECT_GT(r_combined({1, 3}), r_combined({2, 3}));
  EXPECT_LT(r_combined({1, 7}), r_combined({4, 4}));
}

TEST(RankSimTest, CombinedSelfPairIsCapped) {
  EXPECT_EQ(r_combined({0, 0}), 1.0);
  EXPECT_GT(r_combined({0, 0}), r_combined({1, 1}));
  EXPECT_THROW(r_combined({0, 2}), ValidationError);
  EXPECT_THROW(r_combined({5, 0}), ValidationError);
}

TEST(RankSimTest, SymmetryHoldsExhaustively) {
  for (std::uint32_t a = 1; a <= 100; ++a) {
    for (std::uint32_t b = 1; b <= 100; ++b) {
      ASSERT_EQ(r_reciprocal_max({a, b}), r_reciprocal_max({b, a}));
      ASSERT_EQ(r_reciprocal_sum({a, b}), r_reciprocal_sum({b, a}));
      ASSERT_EQ(r_combined({a, b}), r_combined({b, a}));
    }
  }
}

TEST(RankSimTest, StrictlyDecreasingInEachComponent) {
  for (std::uint32_t fixed = 1; fixed <= 60; ++fixed) {
    for (std::uint32_t a = 1; a < 60; ++a) {
      ASSERT_GT(r_nonreciprocal(a), r_nonreciprocal(a + 1));
      ASSERT_GT(r_reciprocal_sum({a, fixed}), r_reciprocal_sum({a + 1, fixed}));
      ASSERT_GT(r_combined({a, fixed}), r_combined({a + 1, fixed}));
      ASSERT_GT(r_combined({fixed, a}), r_combined({fixed, a + 1}));
      // max only falls once the varying component dominates.
      if (a >= fixed) ASSERT_GT(r_reciprocal_max({a, fixed}), r_reciprocal_max({a + 1, fixed}));
    }
  }
}

TEST(RankSimTest, CombinedBoundedByOneThird) {
  for (std::uint32_t a = 1; a <= 100; ++a) {
    for (std::uint32_t b = 1; b <= 100; ++b) {
      double r = r_combined({a, b});
      ASSERT_GT(r, 0.0);
      if (a == 1 && b == 1) {
        ASSERT_EQ(r, 1.0 / 3.0);
      } else {
        ASSERT_LT(r, 1.0 / 3.0);
      }
    }
  }
}

TEST(RankSimTest, DispatchAppliesSelfRuleForEveryMeasure) {
  for (auto m : {MeasureKind::nonreciprocal, MeasureKind::reciprocal_max,
                 MeasureKind::reciprocal_sum, MeasureKind::combined}) {
    EXPECT_EQ(rank_similarity(m, {0, 0}), kSelfPairSimilarity);
    EXPECT_EQ(parse_measure(to_string(m)), m);
  }
  EXPECT_EQ(rank_similarity(MeasureKind::nonreciprocal, {4, 9}), 0.25);
  EXPECT_EQ(rank_similarity(MeasureKind::reciprocal_max, {4, 8}), 0.125);
  EXPECT_THROW(parse_measure("cosine"), ValidationError);
}

}  // namespace
}  // namespace pbc
