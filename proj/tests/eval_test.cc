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

#include "pbc/eval.h"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "pbc/error.h"
#include "test_util.h"

namespace pbc {
namespace {

GroundTruth single(std::vector<std::uint32_t> pos, std::vector<std::uint32_t> junk = {}) {
  return GroundTruth{{ProbeTruth{std::move(pos), std::move(junk)}}};
}

TEST(CmcTest, FirstPositiveAtTwo) {
  RankedLists lists = {{7, 3, 8, 9, 4, 5}};
  auto cmc = cmc_curve(lists, single({3, 4}), 6);
  EXPECT_EQ(cmc, (std::vector<double>{0, 1, 1, 1, 1, 1}));
}

TEST(CmcTest, JunkIsRemovedBeforeCounting) {
  RankedLists lists = {{7, 3, 8}};
  EXPECT_EQ(cmc_curve(lists, single({3}, {7}), 2), (std::vector<double>{1, 1}));
  EXPECT_EQ(cmc_curve(lists, single({8}, {7}), 3), (std::vector<double>{0, 1, 1}));
}

TEST(CmcTest, AllTopOneCorrect) {
  RankedLists lists = {{1, 0, 2}, {2, 1, 0}, {0, 2, 1}};
  GroundTruth gt{{{{1}, {}}, {{2}, {}}, {{0}, {}}}};
  EXPECT_EQ(cmc_curve(lists, gt, 1)[0], 1.0);
}

TEST(CmcTest, ProbesWithoutPositivesAreExcluded) {
  RankedLists lists = {{1, 0}, {0, 1}};
  GroundTruth gt{{{{1}, {}}, {{}, {}}}};
  auto report = evaluate(lists, gt, 2);
  EXPECT_EQ(report.scored_probes, 1U);
  EXPECT_EQ(report.excluded_probes, 1U);
  EXPECT_EQ(report.cmc, (std::vector<double>{1, 1}));
  EXPECT_FALSE(report.ap[1].has_value());
}

TEST(ApTest, RelevancePatternOneZeroOne) {
  std::vector<std::uint32_t> list = {4, 9, 6};
  auto ap = average_precision(list, {{4, 6}, {}});
  ASSERT_TRUE(ap.has_value());
  EXPECT_NEAR(*ap, 5.0 / 6.0, 1e-15);
}

TEST(ApTest, ContiguousPositivesGiveOne) {
  std::vector<std::uint32_t> list = {2, 0, 1, 3, 4};
  EXPECT_EQ(*average_precision(list, {{0, 1, 2}, {}}), 1.0);
}

TEST(ApTest, MissingPositivesCountAsZero) {
  std::vector<std::uint32_t> list = {5, 1};
  EXPECT_DOUBLE_EQ(*average_precision(list, {{5, 9}, {}}), 0.5);
  EXPECT_FALSE(average_precision(list, {{}, {}}).has_value());
}

TEST(ApTest, JunkContentsDoNotMatterOnceRemoved) {
  std::vector<std::uint32_t> a = {8, 4, 9, 6};
  std::vector<std::uint32_t> b = {4, 7, 9, 6};
  EXPECT_EQ(*average_precision(a, {{4, 6}, {8}}), *average_precision(b, {{4, 6}, {7}}));
  EXPECT_NEAR(*average_precision(a, {{4, 6}, {8}}), 5.0 / 6.0, 1e-15);
}

TEST(GroundTruthTest, ValidateRejectsOverlap) {
  EXPECT_THROW(single({1, 2}, {2}).validate(), ValidationError);
  EXPECT_NO_THROW(single({1, 2}, {3}).validate());
}

TEST(EvalOracleTest, MatchesNaiveImplementation) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = static_cast<std::uint32_t>(5 + rng() % 96);
    const std::uint32_t probes = 20;
    RankedLists lists;
    GroundTruth gt;
    std::vector<std::set<std::uint32_t>> pos(probes);
    std::vector<std::set<std::uint32_t>> junk(probes);
    for (std::uint32_t q = 0; q < probes; ++q) {
      std::vector<std::uint32_t> order(n);
      std::iota(order.begin(), order.end(), 0U);
      std::shuffle(order.begin(), order.end(), rng);
      ProbeTruth t;
      for (std::uint32_t g = 0; g < n; ++g) {
        const auto roll = rng() % 10;
        if (roll == 0) {
          t.positives.push_back(g);
          pos[q].insert(g);
        } else if (roll == 1) {
          t.junk.push_back(g);
          junk[q].insert(g);
        }
      }
      if (t.positives.empty()) {
        t.positives.push_back(order[n - 1]);
        pos[q].insert(order[n - 1]);
        t.junk.erase(std::remove(t.junk.begin(), t.junk.end(), order[n - 1]), t.junk.end());
        junk[q].erase(order[n - 1]);
      }
      lists.push_back(order);
      gt.probes.push_back(std::move(t));
    }
    EXPECT_EQ(cmc_curve(lists, gt, n), oracle::cmc(lists, pos, junk, n));
    double naive = 0.0;
    for (std::uint32_t q = 0; q < probes; ++q) naive += oracle::ap(lists[q], pos[q], junk[q]);
    naive /= probes;
    EXPECT_NEAR(mean_average_precision(lists, gt), naive, 1e-12);
    auto cmc = cmc_curve(lists, gt, n);
    for (std::size_t k = 1; k < cmc.size(); ++k) EXPECT_GE(cmc[k], cmc[k - 1]);
    EXPECT_EQ(cmc.back(), 1.0);
  }
}

TEST(GroundTruthTest, FromLabelsSameCameraRule) {
  std::vector<SampleInfo> gi = {{"a", 0, "x"}, {"b", 1, "x"}, {"c", 1, "y"}, {"d", 2, "x"}};
  FeatureSet gallery(gi, std::vector<float>(4, 0.0F), 1);
  std::vector<SampleInfo> pi = {{"p", 1, "x"}, {"q", 0, "z"}};
  FeatureSet probes(pi, std::vector<float>(2, 0.0F), 1);
  auto gt = ground_truth_from_labels(gallery, probes, JunkRule::same_camera);
  EXPECT_EQ(gt.probes[0].positives, (std::vector<std::uint32_t>{0, 3}));
  EXPECT_EQ(gt.probes[0].junk, (std::vector<std::uint32_t>{1}));
  EXPECT_TRUE(gt.probes[1].positives.empty());
  auto plain = ground_truth_from_labels(gallery, probes, JunkRule::none);
  EXPECT_EQ(plain.probes[0].positives, (std::vector<std::uint32_t>{0, 1, 3}));
  EXPECT_TRUE(plain.probes[0].junk.empty());
}

TEST(TimingTest, MeanMedianAndTotal) {
  std::vector<double> us = {1000, 3000};
  auto t = timing_report(1.5, us);
  ASSERT_TRUE(t.online_micros.has_value());
  EXPECT_EQ(t.online_micros->mean, 2000.0);
  EXPECT_EQ(t.online_micros->median, 2000.0);
  EXPECT_EQ(t.online_micros->total, 4000.0);
  EXPECT_EQ(t.online_micros->count, 2U);
  EXPECT_EQ(*t.offline_seconds, 1.5);
}

TEST(TimingTest, EmptyListHasNoOnlineStats) {
  auto t = timing_report(std::nullopt, {});
  EXPECT_FALSE(t.online_micros.has_value());
  EXPECT_FALSE(t.offline_seconds.has_value());
  std::ostringstream kv;
  write_report_keyvalues(kv, EvalReport{{1.0}, 1.0, {}, 1, 0, t});
  EXPECT_EQ(kv.str().find("online_mean_us"), std::string::npos);
}

TEST(TimingTest, PerQueryScaleToTotal) {
  // 3368 probes at 6.5 ms (two significant digits) add up to about 22 s.
  std::vector<double> us(3368, 6500.0);
  auto t = timing_report(std::nullopt, us);
  EXPECT_NEAR(t.online_micros->total / 1e6, 22.0, 0.2);
}

TEST(TimingTest, PercentileIsNearestRank) {
  std::vector<double> us;
  for (int i = 1; i <= 100; ++i) us.push_back(i);
  auto t = timing_report(std::nullopt, us);
  EXPECT_EQ(t.online_micros->p95, 95.0);
  EXPECT_EQ(t.online_micros->median, 50.5);
}

TEST(ReportTest, TableAndKeyValues) {
  RankedLists lists = {{0, 1, 2}, {2, 0, 1}};
  GroundTruth gt{{{{0}, {}}, {{0}, {}}}};
  std::vector<double> us = {10.0, 30.0};
  auto r = evaluate(lists, gt, 20, timing_report(2.0, us));
  EXPECT_EQ(r.cmc.size(), 20U);
  std::ostringstream table;
  write_report_table(table, r);
  EXPECT_NE(table.str().find("Rank-1"), std::string::npos);
  EXPECT_NE(table.str().find("mAP"), std::string::npos);
  std::ostringstream kv;
  write_report_keyvalues(kv, r);
  EXPECT_NE(kv.str().find("cmc_rank1=0.5"), std::string::npos);
  EXPECT_NE(kv.str().find("map=0.75"), std::string::npos);
  EXPECT_NE(kv.str().find("online_mean_us=20"), std::string::npos);
  EXPECT_NE(kv.str().find("offline_seconds=2"), std::string::npos);
}

TEST(FileFormatTest, GroundTruthRoundTrip) {
  testing::TempDir dir;
  NamedGroundTruth gt{{"p1", "p2"}, {{"g1", "g2"}, {}}, {{"g3"}, {"g1"}}};
  save_ground_truth(gt, dir / "gt.txt");
  auto back = load_ground_truth(dir / "gt.txt");
  EXPECT_EQ(back.probe_ids, gt.probe_ids);
  EXPECT_EQ(back.positives, gt.positives);
  EXPECT_EQ(back.junk, gt.junk);
  std::ifstream in(dir / "gt.txt");
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "p1 | pos: g1,g2 | junk: g3");
}

TEST(FileFormatTest, MalformedGroundTruthNamesTheLine) {
  testing::TempDir dir;
  std::ofstream(dir / "bad.txt") << "p1 | pos: g1 | junk:\np2 pos g1\n";
  try {
    load_ground_truth(dir / "bad.txt");
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.txt:2:"), std::string::npos) << e.what();
  }
}

TEST(FileFormatTest, RankingsRoundTripAndResolve) {
  auto g = testing::random_features(6, 2, 50);
  auto ix = build_index(g, Metric::euclidean, [] {
    PbcParams p;
    p.k0 = 1;
    p.k = 2;
    p.L = 6;
    return p;
  }(), 1);
  Reranker r(ix);
  r.attach_gallery(g);
  auto probes = testing::random_features(2, 2, 51, "p");
  auto results = r.rerank_all(probes, 1);
  std::ostringstream out;
  write_rankings(out, results, ix.gallery_ids(), 0);
  testing::TempDir dir;
  std::ofstream(dir / "r.txt") << out.str();
  auto named = load_rankings(dir / "r.txt");
  ASSERT_EQ(named.probe_ids, (std::vector<std::string>{"p0", "p1"}));
  ASSERT_EQ(named.lists[0].size(), 6U);

  std::ostringstream top;
  write_rankings(top, results, ix.gallery_ids(), 3);
  const std::string top_text = top.str();
  EXPECT_EQ(std::count(top_text.begin(), top_text.end(), ' '), 6);

  NamedGroundTruth gt{{"p1", "p0", "p9"}, {{"s2"}, {"s4"}, {"s1"}}, {{}, {"s0"}, {}}};
  auto resolved = resolve(named, gt);
  ASSERT_EQ(resolved.lists.size(), 3U);
  EXPECT_EQ(resolved.lists[0].size(), 6U);
  EXPECT_TRUE(resolved.lists[2].empty());
  auto direct = mean_average_precision(results, GroundTruth{{{{4}, {0}}, {{2}, {}}}});
  auto via_files = mean_average_precision(
      RankedLists{resolved.lists[1], resolved.lists[0]},
      GroundTruth{{resolved.truth.probes[1], resolved.truth.probes[0]}});
  EXPECT_DOUBLE_EQ(direct, via_files);
}

}  // namespace
}  // namespace pbc
