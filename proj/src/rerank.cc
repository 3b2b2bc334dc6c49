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

#include "pbc/rerank.h"

#include <algorithm>
#include <chrono>

#include "pbc/error.h"
#include "pbc/parallel.h"
#include "pbc/ranksim.h"

namespace pbc {
namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point start) {
  return std::chrono::duration<double, std::micro>(Clock::now() - start).count();
}

void check_index_params(const GalleryIndex& index, const PbcParams& params) {
  params.validate();
  const auto& built = index.params();
  if (params.k0 != built.k0 || params.k != built.k || params.depth != built.depth) {
    throw ValidationError("query parameters k0/k/depth differ from the index (built with k0=" +
                          std::to_string(built.k0) + ", k=" + std::to_string(built.k) + ")");
  }
}

// Current ranking after a stage: re-scored candidates first, then the rest of
// `previous` in its own order.
RankingList merge_ranking(const RankingList& previous,
                          std::span<const ScoredCandidate> rescored) {
  RankingList next;
  next.order.reserve(previous.order.size());
  for (const auto& c : rescored) next.order.push_back(c.gallery_index);
  next.order.insert(next.order.end(), previous.order.begin() + rescored.size(),
                    previous.order.end());
  next.positions = previous.positions;
  for (std::uint32_t i = 0; i < rescored.size(); ++i) next.positions[next.order[i]] = i + 1;
  return next;
}

}  // namespace

double probe_to_context_score(std::span<const std::uint32_t> probe_positions,
                              std::span<const std::uint32_t> context,
                              std::span<const double> weights) {
  double score = 0.0;
  for (std::size_t i = 0; i < context.size(); ++i) {
    score += weights[i] * r_nonreciprocal(probe_positions[context[i]]);
  }
  return score;
}

double probe_to_context_score(std::span<const std::uint32_t> probe_positions,
                              const ContextSet& context) {
  double score = 0.0;
  for (const auto& e : context.entries) {
    score += e.weight * r_nonreciprocal(probe_positions[e.gallery_index]);
  }
  return score;
}

double gallery_to_context_score(const PositionTable& positions, std::uint32_t g,
                                std::span<const std::uint32_t> context,
                                std::span<const double> weights, MeasureKind measure) {
  double score = 0.0;
  for (std::size_t i = 0; i < context.size(); ++i) {
    const auto x = context[i];
    score += weights[i] * rank_similarity(measure, {positions(x, g), positions(g, x)});
  }
  return score;
}

double gallery_to_context_score(const PositionTable& positions, std::uint32_t g,
                                const ContextSet& context, MeasureKind measure) {
  double score = 0.0;
  for (const auto& e : context.entries) {
    const auto x = e.gallery_index;
    score += e.weight * rank_similarity(measure, {positions(x, g), positions(g, x)});
  }
  return score;
}

double bilateral_score(double probe_vs_gallery_context, double gallery_vs_probe_context,
                       ContextSide side) {
  switch (side) {
    case ContextSide::bilateral: return probe_vs_gallery_context + gallery_vs_probe_context;
    case ContextSide::gallery_only: return probe_vs_gallery_context;
    case ContextSide::probe_only: return gallery_vs_probe_context;
  }
  return 0.0;
}

ContextSet probe_context(const RankingList& current, const GalleryIndex& index,
                         ContextOrder order, WeightingMode weighting) {
  const auto& p = index.params();
  if (order == ContextOrder::first) {
    auto c = first_order_context(current.order, p.k);
    return weighting == WeightingMode::uniform ? weight_uniform(std::move(c))
                                               : weight_first_order_online(std::move(c));
  }
  auto c = second_order_context(current.order, index.neighbors(), p.k0, p.k);
  switch (weighting) {
    case WeightingMode::uniform:
      return weight_uniform(std::move(c));
    case WeightingMode::rank:
      return weight_by_rank_online(std::move(c), current.positions);
    case WeightingMode::reliability:
      return weight_second_order(std::move(c), index.reliability(),
                                 std::span(current.order).first(p.k0));
  }
  return c;
}

std::vector<ScoredCandidate> stage_rerank(const RankingList& current, const GalleryIndex& index,
                                          std::span<const std::uint32_t> candidates,
                                          ContextOrder order, const PbcParams& params) {
  check_index_params(index, params);
  if (current.positions.size() != index.size()) {
    throw ValidationError("probe ranking covers " + std::to_string(current.positions.size()) +
                          " gallery samples, index has " + std::to_string(index.size()));
  }

  const ContextSet pc = probe_context(current, index, order, params.weighting);
  std::vector<std::uint32_t> pc_entries;
  std::vector<double> pc_weights;
  pc_entries.reserve(pc.entries.size());
  pc_weights.reserve(pc.entries.size());
  for (const auto& e : pc.entries) {
    pc_entries.push_back(e.gallery_index);
    pc_weights.push_back(e.weight);
  }
  const std::vector<double> ones(static_cast<std::size_t>(params.k0) * params.k, 1.0);

  const bool need_gallery_ctx = params.context_side != ContextSide::probe_only;
  const bool need_probe_ctx = params.context_side != ContextSide::gallery_only;

  std::vector<ScoredCandidate> out;
  out.reserve(candidates.size());
  for (const auto g : candidates) {
    double vs_gallery_ctx = 0.0;
    double vs_probe_ctx = 0.0;
    if (need_gallery_ctx) {
      std::span<const std::uint32_t> ctx;
      std::span<const double> w;
      if (order == ContextOrder::first) {
        ctx = index.first_context(g);
        w = params.weighting == WeightingMode::uniform ? std::span<const double>(ones)
                                                       : index.first_weights(g);
      } else {
        ctx = index.second_context(g);
        switch (params.weighting) {
          case WeightingMode::uniform: w = ones; break;
          case WeightingMode::rank: w = index.second_rank_weights(g); break;
          case WeightingMode::reliability: w = index.second_reliability_weights(g); break;
        }
      }
      vs_gallery_ctx = probe_to_context_score(current.positions, ctx, w.first(ctx.size()));
    }
    if (need_probe_ctx) {
      vs_probe_ctx =
          gallery_to_context_score(index.positions(), g, pc_entries, pc_weights, params.measure);
    }
    out.push_back({g, current.positions[g],
                   bilateral_score(vs_gallery_ctx, vs_probe_ctx, params.context_side),
                   std::nullopt});
  }
  std::stable_sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    return a.stage1_score > b.stage1_score;
  });
  return out;
}

QueryResult progressive_rerank(const RankingList& initial, const GalleryIndex& index,
                               const PbcParams& params) {
  const auto start = Clock::now();
  check_index_params(index, params);
  const std::uint32_t n = index.size();
  if (initial.order.size() != n || initial.positions.size() != n) {
    throw ValidationError("initial probe ranking must cover all " + std::to_string(n) +
                          " gallery samples");
  }

  QueryResult result;
  result.l_clamped = params.L > n;
  const std::uint32_t l = std::min(params.L, n);
  const std::span<const std::uint32_t> candidates(initial.order.data(), l);

  std::vector<ScoredCandidate> scored;
  switch (params.stages) {
    case StageMode::first_only:
      scored = stage_rerank(initial, index, candidates, ContextOrder::first, params);
      break;
    case StageMode::second_only:
      scored = stage_rerank(initial, index, candidates, ContextOrder::second, params);
      break;
    case StageMode::progressive: {
      auto first_pass = stage_rerank(initial, index, candidates, ContextOrder::second, params);
      const RankingList intermediate = merge_ranking(initial, first_pass);
      const std::span<const std::uint32_t> stage1_order(intermediate.order.data(), l);
      scored = stage_rerank(intermediate, index, stage1_order, ContextOrder::first, params);
      // Carry the stage-1 score and the initial position alongside.
      std::vector<double> stage1_score(n);
      for (const auto& c : first_pass) stage1_score[c.gallery_index] = c.stage1_score;
      for (auto& c : scored) {
        c.stage2_score = c.stage1_score;
        c.stage1_score = stage1_score[c.gallery_index];
        c.initial_position = initial.positions[c.gallery_index];
      }
      break;
    }
  }

  result.final_order.reserve(n);
  for (const auto& c : scored) result.final_order.push_back(c.gallery_index);
  result.final_order.insert(result.final_order.end(), initial.order.begin() + l,
                            initial.order.end());
  result.candidates = std::move(scored);
  result.online_micros = micros_since(start);
  return result;
}

Reranker::Reranker(const GalleryIndex& index) : Reranker(index, index.params()) {}

Reranker::Reranker(const GalleryIndex& index, PbcParams params)
    : index_(index), params_(params) {
  check_index_params(index_, params_);
}

void Reranker::attach_gallery(const FeatureSet& gallery) {
  index_.verify_gallery(gallery);
  gallery_ = &gallery;
}

QueryResult Reranker::rerank(const RankingList& initial, std::string probe_id) const {
  auto result = progressive_rerank(initial, index_, params_);
  result.probe_id = std::move(probe_id);
  return result;
}

QueryResult Reranker::rerank(std::span<const float> probe, std::string probe_id) const {
  if (gallery_ == nullptr) {
    throw ValidationError("feature queries need the gallery features (attach_gallery)");
  }
  const auto start = Clock::now();
  auto initial = compute_probe_ranking(probe, *gallery_, index_.metric());
  const double initial_micros = micros_since(start);
  auto result = rerank(initial, std::move(probe_id));
  result.initial_micros = initial_micros;
  return result;
}

QueryResult Reranker::rerank_scores(std::span<const double> probe_scores,
                                    std::string probe_id) const {
  if (probe_scores.size() != index_.size()) {
    throw ValidationError("probe score row has " + std::to_string(probe_scores.size()) +
                          " columns, gallery has " + std::to_string(index_.size()));
  }
  const auto start = Clock::now();
  auto initial = rank_scores(probe_scores);
  const double initial_micros = micros_since(start);
  auto result = rerank(initial, std::move(probe_id));
  result.initial_micros = initial_micros;
  return result;
}

std::vector<QueryResult> Reranker::rerank_all(const FeatureSet& probes, unsigned threads) const {
  std::vector<QueryResult> results(probes.size());
  parallel_for(probes.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (auto i = static_cast<std::uint32_t>(begin); i < end; ++i) {
      results[i] = rerank(probes.row(i), probes.sample(i).id);
    }
  });
  return results;
}

std::vector<QueryResult> Reranker::rerank_all(const ScoreMatrix& probe_scores,
                                              std::span<const std::string> probe_ids,
                                              unsigned threads) const {
  if (probe_ids.size() != probe_scores.rows()) {
    throw ValidationError("expected one probe id per score row");
  }
  std::vector<QueryResult> results(probe_scores.rows());
  parallel_for(probe_scores.rows(), threads, [&](std::size_t begin, std::size_t end) {
    for (auto i = static_cast<std::uint32_t>(begin); i < end; ++i) {
      results[i] = rerank_scores(probe_scores.row(i), probe_ids[i]);
    }
  });
  return results;
}

}  // namespace pbc
