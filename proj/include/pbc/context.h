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
#include <string_view>
#include <vector>

#include "pbc/baseline.h"

namespace pbc {

enum class ContextOrder { first, second };

// uniform: every weight 1.
// rank: first-order style rank weights for both orders, no reliability.
// reliability: rank weights for first order, block reliability for second.
enum class WeightingMode { uniform, rank, reliability };

std::string_view to_string(WeightingMode m);
WeightingMode parse_weighting(std::string_view s);

struct ContextEntry {
  std::uint32_t gallery_index = 0;
  // 1-based position in the ranking list the entry was taken from. For a
  // second-order entry this is the position inside its block anchor's list.
  std::uint32_t rank = 0;
  // 1..k0 for second-order entries.
  std::optional<std::uint32_t> source_block;
  double weight = 0.0;
};

// A weighted multiset of gallery samples around an anchor.
struct ContextSet {
  // Gallery index of the anchor; empty when the anchor is a probe.
  std::optional<std::uint32_t> anchor;
  ContextOrder order = ContextOrder::first;
  std::uint32_t k = 0;
  std::optional<std::uint32_t> k0;
  std::vector<ContextEntry> entries;
};

// The first `width` entries of every gallery sample's ranking list.
class NeighborTable {
 public:
  NeighborTable() = default;
  NeighborTable(std::uint32_t n, std::uint32_t width);

  static NeighborTable from_rankings(std::span<const RankingList> lists, std::uint32_t width);

  std::uint32_t size() const { return n_; }
  std::uint32_t width() const { return width_; }
  std::span<const std::uint32_t> row(std::uint32_t g) const {
    return {data_.data() + static_cast<std::size_t>(g) * width_, width_};
  }
  std::span<std::uint32_t> mutable_row(std::uint32_t g) {
    return {data_.data() + static_cast<std::size_t>(g) * width_, width_};
  }
  const std::vector<std::uint32_t>& raw() const { return data_; }
  std::vector<std::uint32_t>& mutable_raw() { return data_; }

  friend bool operator==(const NeighborTable&, const NeighborTable&) = default;

 private:
  std::uint32_t n_ = 0;
  std::uint32_t width_ = 0;
  std::vector<std::uint32_t> data_;
};

struct ReliabilityTable {
  std::vector<double> kappa;
  std::uint32_t k_used = 0;

  friend bool operator==(const ReliabilityTable&, const ReliabilityTable&) = default;
};

// Top-k of `order`, weights unset.
ContextSet first_order_context(std::span<const std::uint32_t> order, std::uint32_t k,
                               std::optional<std::uint32_t> anchor = std::nullopt);
ContextSet first_order_context(const RankingList& ranking, std::uint32_t k);

// Concatenation, block j = 1..k0, of the first-order contexts of the top-k0
// samples of `anchor_order`. Duplicates are kept.
ContextSet second_order_context(std::span<const std::uint32_t> anchor_order,
                                const NeighborTable& neighbors, std::uint32_t k0,
                                std::uint32_t k,
                                std::optional<std::uint32_t> anchor = std::nullopt);
ContextSet second_order_context(const RankingList& anchor_ranking,
                                std::span<const RankingList> gallery_rankings, std::uint32_t k0,
                                std::uint32_t k);

// Cohesion of the top-k of a ranking list: each neighbor q_i (weight 1/i)
// scores a hit for every member of its own top-k that lies in the anchor's
// top-k or is the anchor itself. Returns hits / total, in [0, 1].
double reliability_kappa(std::span<const std::uint32_t> anchor_order,
                         const NeighborTable& neighbors, std::uint32_t k,
                         std::optional<std::uint32_t> anchor);
double reliability_kappa(const RankingList& anchor_ranking,
                         std::span<const RankingList> gallery_rankings, std::uint32_t k);

// kappa of every gallery sample.
ReliabilityTable compute_reliability(const NeighborTable& neighbors, std::uint32_t k);

// Gallery anchor: weight = r_combined(l_entry(R_anchor), l_anchor(R_entry)).
ContextSet weight_first_order_offline(ContextSet c, const PositionTable& positions);
// Probe anchor: weight = 1 / rank.
ContextSet weight_first_order_online(ContextSet c);
// Entry of block j gets the kappa of block_anchors[j - 1].
ContextSet weight_second_order(ContextSet c, const ReliabilityTable& reliability,
                               std::span<const std::uint32_t> block_anchors);
ContextSet weight_uniform(ContextSet c);

// Rank weights for entries of any order. Offline: r_combined against a
// gallery anchor, using the self-pair rule. Online: 1 / position of the entry
// in the probe's list.
ContextSet weight_by_rank_offline(ContextSet c, const PositionTable& positions);
ContextSet weight_by_rank_online(ContextSet c, std::span<const std::uint32_t> probe_positions);

}  // namespace pbc
