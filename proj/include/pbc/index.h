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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pbc/baseline.h"
#include "pbc/context.h"
#include "pbc/dataset.h"
#include "pbc/ranksim.h"

namespace pbc {

// Which context sets enter the pair score.
enum class ContextSide { probe_only, gallery_only, bilateral };
// Which re-ranking stages run.
enum class StageMode { first_only, second_only, progressive };

std::string_view to_string(ContextSide s);
ContextSide parse_context_side(std::string_view s);  // probe | gallery | bilateral
std::string_view to_string(StageMode s);
StageMode parse_stages(std::string_view s);  // first | second | progressive

struct PbcParams {
  std::uint32_t k0 = 2;
  std::uint32_t k = 10;
  std::uint32_t L = 200;
  MeasureKind measure = MeasureKind::combined;
  WeightingMode weighting = WeightingMode::reliability;
  ContextSide context_side = ContextSide::bilateral;
  StageMode stages = StageMode::progressive;
  // Position-table depth cap; empty means full lists.
  std::optional<std::uint32_t> depth;

  // k0 >= 1, k >= 1, L >= k, depth >= max(k, k0) when set.
  void validate() const;

  friend bool operator==(const PbcParams&, const PbcParams&) = default;
};

inline constexpr std::uint32_t kIndexFormatVersion = 1;

// Everything derived from the gallery alone. Immutable once built; share it
// by const reference between any number of concurrent queries.
//
// Per gallery sample g the index keeps:
//   - row g of the position table (l_a(R_g) for every a),
//   - the head of R_g (max(k, k0) entries); its first k form C1(g, k),
//   - C1 weights r_combined(l_x(R_g), l_g(R_x)),
//   - C2(g, k0, k) as a flat k0*k block list, with per-entry reliability
//     weights and the cached r_combined of every entry against g,
//   - kappa of R_g.
class GalleryIndex {
 public:
  const PbcParams& params() const { return params_; }
  Metric metric() const { return metric_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  std::uint32_t size() const { return positions_.size(); }
  const std::vector<std::string>& gallery_ids() const { return gallery_ids_; }

  const PositionTable& positions() const { return positions_; }
  const NeighborTable& neighbors() const { return neighbors_; }
  const ReliabilityTable& reliability() const { return reliability_; }
  double kappa(std::uint32_t g) const { return reliability_.kappa[g]; }

  std::span<const std::uint32_t> first_context(std::uint32_t g) const {
    return neighbors_.row(g).first(params_.k);
  }
  std::span<const double> first_weights(std::uint32_t g) const {
    return slice(first_weights_, g, params_.k);
  }
  std::span<const std::uint32_t> second_context(std::uint32_t g) const {
    return slice(second_entries_, g, second_width());
  }
  std::span<const double> second_reliability_weights(std::uint32_t g) const {
    return slice(second_kappa_weights_, g, second_width());
  }
  // Cached r_combined between g and each entry of C2(g); the rank weights.
  std::span<const double> second_rank_weights(std::uint32_t g) const {
    return slice(second_pair_similarity_, g, second_width());
  }

  // Materialized views with reliability-mode weights.
  ContextSet first_order_context(std::uint32_t g) const;
  ContextSet second_order_context(std::uint32_t g) const;

  // Full R_g rebuilt from the position table. Needs depth = full.
  RankingList ranking(std::uint32_t g) const;

  // Throws FingerprintMismatchError unless built from exactly this gallery.
  void verify_gallery(const FeatureSet& gallery) const;
  void verify_gallery(const ScoreMatrix& gallery_scores) const;

  friend bool operator==(const GalleryIndex&, const GalleryIndex&) = default;

 private:
  friend class IndexBuilder;
  friend GalleryIndex load_index(const std::filesystem::path& path);
  friend void save_index(const GalleryIndex& index, const std::filesystem::path& path);

  std::uint32_t second_width() const { return params_.k0 * params_.k; }
  template <typename T>
  static std::span<const T> slice(const std::vector<T>& v, std::uint32_t g, std::uint32_t w) {
    return {v.data() + static_cast<std::size_t>(g) * w, w};
  }

  PbcParams params_;
  Metric metric_ = Metric::euclidean;
  std::uint64_t fingerprint_ = 0;
  std::vector<std::string> gallery_ids_;
  PositionTable positions_;
  NeighborTable neighbors_;
  std::vector<double> first_weights_;
  std::vector<std::uint32_t> second_entries_;
  std::vector<double> second_kappa_weights_;
  std::vector<double> second_pair_similarity_;
  ReliabilityTable reliability_;
};

// Offline phase over the gallery only. `threads` = 0 uses every core; the
// result does not depend on it.
GalleryIndex build_index(const FeatureSet& gallery, Metric metric, const PbcParams& params,
                         unsigned threads = 0);
// Same, from an N x N score matrix. `gallery_ids` defaults to g0..g{N-1}.
GalleryIndex build_index(const ScoreMatrix& gallery_scores, const PbcParams& params,
                         std::vector<std::string> gallery_ids = {}, unsigned threads = 0);

void save_index(const GalleryIndex& index, const std::filesystem::path& path);
// Throws IndexVersionError for an unknown version and IndexCorruptError for
// a bad magic, truncation, inconsistent tables or checksum mismatch.
GalleryIndex load_index(const std::filesystem::path& path);

}  // namespace pbc
