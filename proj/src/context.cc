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

#include "pbc/context.h"

#include <algorithm>
#include <string>

#include "pbc/error.h"
#include "pbc/ranksim.h"

namespace pbc {

std::string_view to_string(WeightingMode m) {
  switch (m) {
    case WeightingMode::uniform: return "uniform";
    case WeightingMode::rank: return "rank";
    case WeightingMode::reliability: return "reliability";
  }
  return "?";
}

WeightingMode parse_weighting(std::string_view s) {
  if (s == "uniform") return WeightingMode::uniform;
  if (s == "rank") return WeightingMode::rank;
  if (s == "reliability") return WeightingMode::reliability;
  throw ValidationError("unknown weighting '" + std::string(s) +
                        "' (expected uniform|rank|reliability)");
}

NeighborTable::NeighborTable(std::uint32_t n, std::uint32_t width)
    : n_(n), width_(width), data_(static_cast<std::size_t>(n) * width, 0) {}

NeighborTable NeighborTable::from_rankings(std::span<const RankingList> lists,
                                           std::uint32_t width) {
  NeighborTable table(static_cast<std::uint32_t>(lists.size()), width);
  for (std::uint32_t g = 0; g < lists.size(); ++g) {
    if (lists[g].size() < width) {
      throw ValidationError("ranking list of gallery sample " + std::to_string(g) +
                            " is shorter than " + std::to_string(width));
    }
    std::copy_n(lists[g].order.begin(), width, table.mutable_row(g).begin());
  }
  return table;
}

ContextSet first_order_context(std::span<const std::uint32_t> order, std::uint32_t k,
                               std::optional<std::uint32_t> anchor) {
  if (k == 0) throw ValidationError("context size k must be >= 1");
  if (k > order.size()) {
    throw ValidationError("k = " + std::to_string(k) + " exceeds ranking length " +
                          std::to_string(order.size()));
  }
  ContextSet c;
  c.anchor = anchor;
  c.order = ContextOrder::first;
  c.k = k;
  c.entries.reserve(k);
  for (std::uint32_t i = 0; i < k; ++i) c.entries.push_back({order[i], i + 1, std::nullopt, 0.0});
  return c;
}

ContextSet first_order_context(const RankingList& ranking, std::uint32_t k) {
  return first_order_context(ranking.order, k, ranking.anchor);
}

ContextSet second_order_context(std::span<const std::uint32_t> anchor_order,
                                const NeighborTable& neighbors, std::uint32_t k0,
                                std::uint32_t k, std::optional<std::uint32_t> anchor) {
  if (k0 == 0 || k == 0) throw ValidationError("k0 and k must be >= 1");
  if (k0 > anchor_order.size()) {
    throw ValidationError("k0 = " + std::to_string(k0) + " exceeds ranking length " +
                          std::to_string(anchor_order.size()));
  }
  if (k > neighbors.width()) {
    throw ValidationError("k = " + std::to_string(k) + " exceeds stored neighbor depth " +
                          std::to_string(neighbors.width()));
  }
  ContextSet c;
  c.anchor = anchor;
  c.order = ContextOrder::second;
  c.k = k;
  c.k0 = k0;
  c.entries.reserve(static_cast<std::size_t>(k0) * k);
  for (std::uint32_t j = 0; j < k0; ++j) {
    const auto block_anchor = anchor_order[j];
    if (block_anchor >= neighbors.size()) {
      throw ValidationError("no ranking list for gallery sample " + std::to_string(block_anchor));
    }
    auto row = neighbors.row(block_anchor);
    for (std::uint32_t i = 0; i < k; ++i) c.entries.push_back({row[i], i + 1, j + 1, 0.0});
  }
  return c;
}

ContextSet second_order_context(const RankingList& anchor_ranking,
                                std::span<const RankingList> gallery_rankings, std::uint32_t k0,
                                std::uint32_t k) {
  if (k0 > anchor_ranking.size()) {
    throw ValidationError("k0 = " + std::to_string(k0) + " exceeds ranking length " +
                          std::to_string(anchor_ranking.size()));
  }
  // Only the k0 block anchors need lists; build a sparse table over them.
  NeighborTable table(static_cast<std::uint32_t>(gallery_rankings.size()), k);
  for (std::uint32_t j = 0; j < k0; ++j) {
    const auto g = anchor_ranking.order[j];
    if (g >= gallery_rankings.size()) {
      throw ValidationError("missing ranking list for gallery sample " + std::to_string(g));
    }
    const auto& list = gallery_rankings[g];
    if (list.size() < k) {
      throw ValidationError("ranking list of gallery sample " + std::to_string(g) +
                            " is shorter than k");
    }
    std::copy_n(list.order.begin(), k, table.mutable_row(g).begin());
  }
  return second_order_context(anchor_ranking.order, table, k0, k, anchor_ranking.anchor);
}

double reliability_kappa(std::span<const std::uint32_t> anchor_order,
                         const NeighborTable& neighbors, std::uint32_t k,
                         std::optional<std::uint32_t> anchor) {
  if (k == 0) throw ValidationError("reliability k must be >= 1");
  if (k > anchor_order.size() || k > neighbors.width()) {
    throw ValidationError("reliability k = " + std::to_string(k) + " exceeds available depth");
  }
  std::vector<std::uint32_t> members(anchor_order.begin(), anchor_order.begin() + k);
  if (anchor) members.push_back(*anchor);
  std::sort(members.begin(), members.end());

  double hits = 0.0;
  double total = 0.0;
  for (std::uint32_t i = 0; i < k; ++i) {
    const double w = 1.0 / static_cast<double>(i + 1);
    for (auto member : neighbors.row(anchor_order[i]).first(k)) {
      total += w;
      if (std::binary_search(members.begin(), members.end(), member)) hits += w;
    }
  }
  return hits / total;
}

double reliability_kappa(const RankingList& anchor_ranking,
                         std::span<const RankingList> gallery_rankings, std::uint32_t k) {
  if (k > anchor_ranking.size()) {
    throw ValidationError("reliability k = " + std::to_string(k) + " exceeds available depth");
  }
  NeighborTable table(static_cast<std::uint32_t>(gallery_rankings.size()), k);
  for (std::uint32_t i = 0; i < k; ++i) {
    const auto g = anchor_ranking.order[i];
    if (gallery_rankings[g].size() < k) {
      throw ValidationError("reliability k = " + std::to_string(k) + " exceeds available depth");
    }
    std::copy_n(gallery_rankings[g].order.begin(), k, table.mutable_row(g).begin());
  }
  return reliability_kappa(anchor_ranking.order, table, k, anchor_ranking.anchor);
}

ReliabilityTable compute_reliability(const NeighborTable& neighbors, std::uint32_t k) {
  ReliabilityTable table;
  table.k_used = k;
  table.kappa.resize(neighbors.size());
  for (std::uint32_t g = 0; g < neighbors.size(); ++g) {
    table.kappa[g] = reliability_kappa(neighbors.row(g), neighbors, k, g);
  }
  return table;
}

ContextSet weight_first_order_offline(ContextSet c, const PositionTable& positions) {
  if (!c.anchor) throw ValidationError("offline weights need a gallery anchor");
  const auto g = *c.anchor;
  for (auto& e : c.entries) {
    RankPair pair{positions(e.gallery_index, g), positions(g, e.gallery_index)};
    if (pair.is_self()) throw ValidationError("anchor appears in its own first-order context");
    e.weight = r_combined(pair);
  }
  return c;
}

ContextSet weight_first_order_online(ContextSet c) {
  for (auto& e : c.entries) e.weight = r_nonreciprocal(e.rank);
  return c;
}

ContextSet weight_second_order(ContextSet c, const ReliabilityTable& reliability,
                               std::span<const std::uint32_t> block_anchors) {
  if (c.order != ContextOrder::second) {
    throw ValidationError("reliability weights apply to second-order contexts only");
  }
  for (auto& e : c.entries) {
    const auto block = e.source_block.value_or(0);
    if (block == 0 || block > block_anchors.size()) {
      throw ValidationError("context entry has no matching block anchor");
    }
    const auto g = block_anchors[block - 1];
    if (g >= reliability.kappa.size()) {
      throw ValidationError("missing reliability for gallery sample " + std::to_string(g));
    }
    e.weight = reliability.kappa[g];
  }
  return c;
}

ContextSet weight_uniform(ContextSet c) {
  for (auto& e : c.entries) e.weight = 1.0;
  return c;
}

ContextSet weight_by_rank_offline(ContextSet c, const PositionTable& positions) {
  if (!c.anchor) throw ValidationError("offline weights need a gallery anchor");
  const auto g = *c.anchor;
  for (auto& e : c.entries) {
    e.weight = r_combined({positions(e.gallery_index, g), positions(g, e.gallery_index)});
  }
  return c;
}

ContextSet weight_by_rank_online(ContextSet c, std::span<const std::uint32_t> probe_positions) {
  for (auto& e : c.entries) e.weight = r_nonreciprocal(probe_positions[e.gallery_index]);
  return c;
}

}  // namespace pbc
