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

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pbc/baseline.h"
#include "pbc/context.h"
#include "pbc/dataset.h"
#include "pbc/index.h"

namespace pbc {

struct ScoredCandidate {
  std::uint32_t gallery_index = 0;
  // 1-based position in the list the stage (or query) started from.
  std::uint32_t initial_position = 0;
  // Score of the first stage that ran; for a progressive query this is the
  // second-order score.
  double stage1_score = 0.0;
  // Score of the first-order refinement when both stages ran.
  std::optional<double> stage2_score;
};

struct QueryResult {
  std::string probe_id;
  // Re-ranked top-L followed by the untouched initial tail.
  std::vector<std::uint32_t> final_order;
  // The L candidates in final order.
  std::vector<ScoredCandidate> candidates;
  // Re-ranking time, excluding the initial ranking.
  double online_micros = 0.0;
  // Time spent computing the initial ranking, when the engine did it.
  double initial_micros = 0.0;
  // Set when L exceeded the gallery size and was clamped to N.
  bool l_clamped = false;
};

// S_{p,C_g}: a context of gallery samples scored against the probe's
// current list with the nonreciprocal measure.
double probe_to_context_score(std::span<const std::uint32_t> probe_positions,
                              std::span<const std::uint32_t> context,
                              std::span<const double> weights);
double probe_to_context_score(std::span<const std::uint32_t> probe_positions,
                              const ContextSet& context);

// S_{g,C_p}: a context scored against gallery sample g through the offline
// position table, with the self-pair rule when g is itself in the context.
double gallery_to_context_score(const PositionTable& positions, std::uint32_t g,
                                std::span<const std::uint32_t> context,
                                std::span<const double> weights, MeasureKind measure);
double gallery_to_context_score(const PositionTable& positions, std::uint32_t g,
                                const ContextSet& context, MeasureKind measure);

// bilateral: sum; gallery_only: S_{p,C_g}; probe_only: S_{g,C_p}.
double bilateral_score(double probe_vs_gallery_context, double gallery_vs_probe_context,
                       ContextSide side);

// Probe-side context built from the probe's current list, weighted per mode.
ContextSet probe_context(const RankingList& current, const GalleryIndex& index,
                         ContextOrder order, WeightingMode weighting);

// Scores `candidates` (in incoming order) with one context order and returns
// them sorted by descending score, ties kept in incoming order.
std::vector<ScoredCandidate> stage_rerank(const RankingList& current, const GalleryIndex& index,
                                          std::span<const std::uint32_t> candidates,
                                          ContextOrder order, const PbcParams& params);

// Initial ranking in, re-ranked list out. params.k0, params.k and
// params.depth must match the index; the rest are query-time choices.
QueryResult progressive_rerank(const RankingList& initial, const GalleryIndex& index,
                               const PbcParams& params);

// Online engine bound to an index and a set of query-time parameters.
// Const member functions are safe to call concurrently.
class Reranker {
 public:
  explicit Reranker(const GalleryIndex& index);
  Reranker(const GalleryIndex& index, PbcParams params);

  // Lets rerank() accept raw probe features. Verifies the fingerprint.
  void attach_gallery(const FeatureSet& gallery);

  const PbcParams& params() const { return params_; }

  QueryResult rerank(const RankingList& initial, std::string probe_id = {}) const;
  QueryResult rerank(std::span<const float> probe, std::string probe_id = {}) const;
  QueryResult rerank_scores(std::span<const double> probe_scores,
                            std::string probe_id = {}) const;

  // Batch over a probe feature set or score matrix; results follow input order.
  std::vector<QueryResult> rerank_all(const FeatureSet& probes, unsigned threads = 0) const;
  std::vector<QueryResult> rerank_all(const ScoreMatrix& probe_scores,
                                      std::span<const std::string> probe_ids,
                                      unsigned threads = 0) const;

 private:
  const GalleryIndex& index_;
  PbcParams params_;
  const FeatureSet* gallery_ = nullptr;
};

}  // namespace pbc
