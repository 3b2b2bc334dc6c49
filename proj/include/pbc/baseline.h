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
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pbc/dataset.h"

namespace pbc {

// All scores are "greater is more similar"; euclidean distances are negated.
enum class Metric { euclidean, cosine, precomputed };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

// Negated Euclidean distance of equal-length vectors. Float inputs and
// their exact double conversions give identical results.
double neg_euclidean(std::span<const float> a, std::span<const float> b);
double neg_euclidean(std::span<const double> a, std::span<const double> b);

double similarity(std::span<const float> a, std::span<const float> b, Metric m);

// out[g] = similarity(query, gallery.row(g)).
void similarity_row(const FeatureSet& gallery, std::span<const float> query, Metric m,
                    std::span<double> out);

// An ordered permutation of gallery indices plus its inverse.
//
// `positions` has one slot per gallery sample and holds the 1-based position
// of that sample in `order`. For a gallery anchor the anchor is excluded from
// `order` and positions[anchor] == 0.
struct RankingList {
  std::optional<std::uint32_t> anchor;
  std::vector<std::uint32_t> order;
  std::vector<std::uint32_t> positions;

  std::uint32_t size() const { return static_cast<std::uint32_t>(order.size()); }
  std::uint32_t position(std::uint32_t g) const { return positions[g]; }
};

// Sorts `scores` descending; ties go to the lower index. `exclude`, when set,
// is left out of the order and gets position 0. Rejects non-finite scores.
RankingList rank_scores(std::span<const double> scores,
                        std::optional<std::uint32_t> exclude = std::nullopt);

// Same ordering as rank_scores, written into `order` (size N or N-1).
// `scratch` is reused across calls to avoid reallocation.
struct RankScratch {
  std::vector<std::uint64_t> keys;
  std::vector<std::uint64_t> key_tmp;
  std::vector<std::uint32_t> idx_tmp;
};
void rank_scores_into(std::span<const double> scores, std::optional<std::uint32_t> exclude,
                      RankScratch& scratch, std::span<std::uint32_t> order);

// l_a(R_b): 1-based position of gallery sample a in gallery sample b's list.
// The diagonal is the self sentinel 0. With a depth cap D, every position
// beyond D is stored as D + 1.
class PositionTable {
 public:
  PositionTable() = default;
  PositionTable(std::uint32_t n, std::optional<std::uint32_t> depth);

  std::uint32_t size() const { return n_; }
  std::optional<std::uint32_t> depth() const { return depth_; }
  std::uint32_t sentinel() const { return depth_ ? *depth_ + 1 : 0; }

  // Position of `a` in the ranking list of `b`.
  std::uint32_t operator()(std::uint32_t a, std::uint32_t b) const {
    return data_[static_cast<std::size_t>(b) * n_ + a];
  }

  // Fills row `anchor` from that anchor's self-excluded order.
  void set_row(std::uint32_t anchor, std::span<const std::uint32_t> order);

  std::span<const std::uint32_t> row(std::uint32_t anchor) const {
    return {data_.data() + static_cast<std::size_t>(anchor) * n_, n_};
  }
  const std::vector<std::uint32_t>& raw() const { return data_; }
  std::vector<std::uint32_t>& mutable_raw() { return data_; }

  friend bool operator==(const PositionTable&, const PositionTable&) = default;

 private:
  std::uint32_t n_ = 0;
  std::optional<std::uint32_t> depth_;
  std::vector<std::uint32_t> data_;
};

struct GalleryRankings {
  std::vector<RankingList> lists;
  PositionTable positions;
};

// Requires N >= 2. Each list has N - 1 entries (self excluded).
GalleryRankings compute_gallery_rankings(const FeatureSet& gallery, Metric metric,
                                         std::optional<std::uint32_t> depth = std::nullopt);

RankingList compute_probe_ranking(std::span<const float> probe, const FeatureSet& gallery,
                                  Metric metric);

// Row-major score matrix, read from and written to the PBCS format.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::uint32_t rows, std::uint32_t cols, std::vector<double> values);

  std::uint32_t rows() const { return rows_; }
  std::uint32_t cols() const { return cols_; }
  std::span<const double> row(std::uint32_t r) const {
    return {values_.data() + static_cast<std::size_t>(r) * cols_, cols_};
  }
  const std::vector<double>& values() const { return values_; }

  // FNV-1a over the shape and the 32-bit float encoding of every value.
  std::uint64_t fingerprint() const;

 private:
  std::uint32_t rows_ = 0;
  std::uint32_t cols_ = 0;
  std::vector<double> values_;
};

ScoreMatrix load_scores(const std::filesystem::path& path);
// Values are narrowed to 32-bit floats on disk.
void save_scores(const ScoreMatrix& m, const std::filesystem::path& path);

// N x N gallery scores; the diagonal is ignored.
GalleryRankings ingest_gallery_scores(const ScoreMatrix& gallery_scores,
                                      std::optional<std::uint32_t> depth = std::nullopt);
// One full ranking per row of a probes x N matrix.
std::vector<RankingList> ingest_probe_scores(const ScoreMatrix& probe_scores);

// Debug dump: `anchor_id: id1 id2 ...`, one line per list.
void write_ranking_dump(std::ostream& out, std::span<const RankingList> lists,
                        std::span<const std::string> anchor_ids,
                        std::span<const std::string> gallery_ids);

}  // namespace pbc
