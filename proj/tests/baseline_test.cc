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

#include "pbc/baseline.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "pbc/error.h"
#include "test_util.h"

namespace pbc {
namespace {

void expect_valid(const RankingList& list, std::uint32_t n) {
  std::vector<std::uint32_t> seen;
  for (auto g : list.order) seen.push_back(g);
  std::sort(seen.begin(), seen.end());
  std::vector<std::uint32_t> expected;
  for (std::uint32_t g = 0; g < n; ++g) {
    if (!list.anchor || *list.anchor != g) expected.push_back(g);
  }
  EXPECT_EQ(seen, expected);
  for (std::uint32_t i = 0; i < list.order.size(); ++i) {
    EXPECT_EQ(list.positions[list.order[i]], i + 1);
  }
  if (list.anchor) EXPECT_EQ(list.positions[*list.anchor], 0U);
}

TEST(GalleryRankingsTest, CollinearPoints) {
  auto g = testing::from_rows({{0}, {1}, {10}});
  auto r = compute_gallery_rankings(g, Metric::euclidean);
  EXPECT_EQ(r.lists[0].order, (std::vector<std::uint32_t>{1, 2}));
  EXPECT_EQ(r.positions(2, 0), 2U);  // l_c(R_a)
  EXPECT_EQ(r.positions(1, 0), 1U);
  EXPECT_EQ(r.positions(0, 0), 0U);
  EXPECT_EQ(r.lists[2].order, (std::vector<std::uint32_t>{1, 0}));
}

TEST(GalleryRankingsTest, IdenticalPointsFallBackToIndexOrder) {
  auto g = testing::from_rows({{1, 1}, {1, 1}, {1, 1}, {1, 1}});
  auto r = compute_gallery_rankings(g, Metric::euclidean);
  EXPECT_EQ(r.lists[0].order, (std::vector<std::uint32_t>{1, 2, 3}));
  EXPECT_EQ(r.lists[2].order, (std::vector<std::uint32_t>{0, 1, 3}));
  EXPECT_EQ(r.lists[3].order, (std::vector<std::uint32_t>{0, 1, 2}));
}

TEST(GalleryRankingsTest, NeedsTwoSamples) {
  auto g = testing::from_rows({{0}});
  EXPECT_THROW(compute_gallery_rankings(g, Metric::euclidean), ValidationError);
}

TEST(GalleryRankingsTest, MatchesSelectionSortOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto g = testing::random_features(20, 8, seed);
    auto r = compute_gallery_rankings(g, Metric::euclidean);
    auto og = oracle::gallery_from_scores(testing::oracle_gallery_scores(g));
    for (std::uint32_t a = 0; a < 20; ++a) {
      expect_valid(r.lists[a], 20);
      EXPECT_EQ(r.lists[a].order, og.lists[a]);
      for (std::uint32_t b = 0; b < 20; ++b) EXPECT_EQ(r.positions(a, b), og.l(a, b));
    }
  }
}

TEST(GalleryRankingsTest, UniqueNearestNeighborHasPositionOne) {
  auto g = testing::random_features(30, 4, 9);
  auto r = compute_gallery_rankings(g, Metric::euclidean);
  for (std::uint32_t b = 0; b < 30; ++b) {
    auto nn = r.lists[b].order[0];
    EXPECT_EQ(r.positions(nn, b), 1U);
  }
}

TEST(GalleryRankingsTest, DepthCapUsesSentinel) {
  auto g = testing::random_features(12, 3, 4);
  auto full = compute_gallery_rankings(g, Metric::euclidean);
  auto capped = compute_gallery_rankings(g, Metric::euclidean, 4);
  EXPECT_EQ(capped.positions.sentinel(), 5U);
  for (std::uint32_t a = 0; a < 12; ++a) {
    for (std::uint32_t b = 0; b < 12; ++b) {
      auto f = full.positions(a, b);
      EXPECT_EQ(capped.positions(a, b), f > 4 ? 5U : f);
    }
  }
}

TEST(ProbeRankingTest, ExactMatchComesFirst) {
  auto g = testing::random_features(10, 6, 5);
  auto list = compute_probe_ranking(g.row(5), g, Metric::euclidean);
  EXPECT_EQ(list.order[0], 5U);
  EXPECT_EQ(list.size(), 10U);
  expect_valid(list, 10);
}

TEST(ProbeRankingTest, EquidistantPointsKeepIndexOrder) {
  auto g = testing::from_rows({{2}, {0}, {1}});
  std::vector<float> probe = {1.0F};
  auto list = compute_probe_ranking(probe, g, Metric::euclidean);
  EXPECT_EQ(list.order, (std::vector<std::uint32_t>{2, 0, 1}));
}

TEST(ProbeRankingTest, MatchesOracleOnRandomInstance) {
  auto g = testing::random_features(50, 7, 21);
  auto probes = testing::random_features(5, 7, 22, "p");
  for (std::uint32_t p = 0; p < 5; ++p) {
    auto list = compute_probe_ranking(probes.row(p), g, Metric::euclidean);
    auto expected = oracle::selection_rank(
        testing::oracle_probe_scores(g, testing::row_vec(probes, p)), std::nullopt);
    EXPECT_EQ(list.order, expected);
  }
}

TEST(ProbeRankingTest, DimensionMismatchIsAnError) {
  auto g = testing::random_features(5, 3, 1);
  std::vector<float> probe = {1.0F, 2.0F};
  EXPECT_THROW(compute_probe_ranking(probe, g, Metric::euclidean), ValidationError);
}

TEST(ProbeRankingTest, CosineRanksByAngle) {
  auto g = testing::from_rows({{1, 0}, {0, 1}, {1, 1}});
  std::vector<float> probe = {10.0F, 9.0F};
  auto list = compute_probe_ranking(probe, g, Metric::cosine);
  EXPECT_EQ(list.order, (std::vector<std::uint32_t>{2, 0, 1}));
}

TEST(IngestTest, NegatedDistanceMatrixReproducesFeatureRankings) {
  auto g = testing::random_features(25, 5, 31);
  auto from_features = compute_gallery_rankings(g, Metric::euclidean);
  std::vector<double> values;
  for (std::uint32_t a = 0; a < g.size(); ++a) {
    for (std::uint32_t b = 0; b < g.size(); ++b) {
      values.push_back(similarity(g.row(a), g.row(b), Metric::euclidean));
    }
  }
  auto from_matrix = ingest_gallery_scores(ScoreMatrix(25, 25, values));
  EXPECT_EQ(from_matrix.positions, from_features.positions);
  for (std::uint32_t a = 0; a < 25; ++a) {
    EXPECT_EQ(from_matrix.lists[a].order, from_features.lists[a].order);
  }
}

TEST(IngestTest, MonotoneTransformPreservesEveryPermutation) {
  auto g = testing::random_features(25, 5, 32);
  auto base = testing::oracle_gallery_scores(g);
  auto transformed = base;
  for (auto& row : transformed) {
    for (double& v : row) v = v * v * v;  // strictly increasing, keeps sign
  }
  auto a = ingest_gallery_scores(testing::to_score_matrix(base));
  auto b = ingest_gallery_scores(testing::to_score_matrix(transformed));
  EXPECT_EQ(a.positions, b.positions);
  for (std::uint32_t i = 0; i < 25; ++i) EXPECT_EQ(a.lists[i].order, b.lists[i].order);

  auto pa = ingest_probe_scores(ScoreMatrix(1, 25, base[3]));
  auto pb = ingest_probe_scores(ScoreMatrix(1, 25, transformed[3]));
  EXPECT_EQ(pa[0].order, pb[0].order);
}

TEST(IngestTest, NonFiniteEntriesAreRejected) {
  std::vector<double> v = {0, 1, 2, 3, 0, std::numeric_limits<double>::quiet_NaN(), 1, 2, 0};
  EXPECT_THROW(ingest_gallery_scores(ScoreMatrix(3, 3, v)), ValidationError);
  std::vector<double> p = {1, std::numeric_limits<double>::infinity()};
  EXPECT_THROW(ingest_probe_scores(ScoreMatrix(1, 2, p)), ValidationError);
}

TEST(IngestTest, DiagonalIsIgnored) {
  std::vector<double> v = {1e9, 1, 2, 3, -1e9, 5, 1, 2, 7};
  auto r = ingest_gallery_scores(ScoreMatrix(3, 3, v));
  EXPECT_EQ(r.lists[0].order, (std::vector<std::uint32_t>{2, 1}));
  EXPECT_EQ(r.lists[1].order, (std::vector<std::uint32_t>{2, 0}));
}

TEST(ScoreFileTest, RoundTripAndTruncation) {
  testing::TempDir dir;
  ScoreMatrix m(2, 3, {0.5, -1.25, 3, 4, 5, 6});
  save_scores(m, dir / "s.pbcs");
  auto back = load_scores(dir / "s.pbcs");
  EXPECT_EQ(back.values(), m.values());
  EXPECT_EQ(back.rows(), 2U);
  std::filesystem::resize_file(dir / "s.pbcs", 20);
  EXPECT_THROW(load_scores(dir / "s.pbcs"), LoadError);
}

TEST(RankingDumpTest, WritesOneLinePerAnchor) {
  auto g = testing::from_rows({{0}, {1}, {10}});
  auto r = compute_gallery_rankings(g, Metric::euclidean);
  std::vector<std::string> ids = {"a", "b", "c"};
  std::ostringstream out;
  write_ranking_dump(out, r.lists, ids, ids);
  EXPECT_EQ(out.str(), "a: b c\nb: a c\nc: b a\n");
}

TEST(RankScoresTest, MixedSignsZerosAndTies) {
  std::vector<double> scores = {-0.0, 3.5, -2.0, 0.0, 3.5, -1e300, 1e-300, -2.0};
  auto r = rank_scores(scores);
  EXPECT_EQ(r.order, (std::vector<std::uint32_t>{1, 4, 6, 0, 3, 2, 7, 5}));
  auto want = oracle::selection_rank(scores, std::nullopt);
  EXPECT_EQ(r.order, want);
}

TEST(RankScoresTest, LargeRandomRowsMatchSelectionOracle) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> coarse(-20, 20);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> scores(700);
    for (auto& v : scores) v = coarse(rng) * 0.25;  // many exact ties
    const std::uint32_t skip = static_cast<std::uint32_t>(rng() % 700);
    EXPECT_EQ(rank_scores(scores, skip).order, oracle::selection_rank(scores, skip));
  }
}

TEST(SimilarityTest, FloatAndDoubleKernelsAgree) {
  auto g = testing::random_features(2, 37, 78);
  std::vector<double> a(g.row(0).begin(), g.row(0).end());
  std::vector<double> b(g.row(1).begin(), g.row(1).end());
  EXPECT_EQ(neg_euclidean(g.row(0), g.row(1)), neg_euclidean(std::span<const double>(a),
                                                             std::span<const double>(b)));
  EXPECT_NEAR(neg_euclidean(g.row(0), g.row(1)),
              oracle::neg_euclidean(testing::row_vec(g, 0), testing::row_vec(g, 1)), 1e-12);
}

}  // namespace
}  // namespace pbc
