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

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>

#include "pbc/binary_io.h"
#include "pbc/error.h"

namespace pbc {
namespace {

constexpr char kScoreMagic[4] = {'P', 'B', 'C', 'S'};
constexpr std::uint32_t kScoreVersion = 1;

// Maps a finite double to an unsigned key that sorts in descending score
// order. -0.0 and 0.0 share a key.
std::uint64_t descending_key(double v) {
  if (v == 0.0) v = 0.0;
  const auto bits = std::bit_cast<std::uint64_t>(v);
  const std::uint64_t ascending = (bits >> 63) != 0 ? ~bits : bits | (1ULL << 63);
  return ~ascending;
}

// Stable LSD radix sort of `idx` by `keys`, 11 bits per pass. Stability
// keeps ascending index order among equal scores.
void radix_sort(std::vector<std::uint64_t>& keys, std::span<std::uint32_t> idx,
                RankScratch& scratch) {
  constexpr int kBits = 11;
  constexpr std::size_t kBuckets = std::size_t{1} << kBits;
  const std::size_t n = keys.size();
  scratch.key_tmp.resize(n);
  scratch.idx_tmp.resize(n);
  std::uint64_t* src_k = keys.data();
  std::uint32_t* src_i = idx.data();
  std::uint64_t* dst_k = scratch.key_tmp.data();
  std::uint32_t* dst_i = scratch.idx_tmp.data();
  std::array<std::size_t, kBuckets> count{};
  for (int shift = 0; shift < 64; shift += kBits) {
    count.fill(0);
    for (std::size_t i = 0; i < n; ++i) ++count[(src_k[i] >> shift) & (kBuckets - 1)];
    // Passes where every key shares the digit change nothing.
    if (count[(src_k[0] >> shift) & (kBuckets - 1)] == n) continue;
    std::size_t sum = 0;
    for (auto& c : count) {
      const std::size_t next = sum + c;
      c = sum;
      sum = next;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t pos = count[(src_k[i] >> shift) & (kBuckets - 1)]++;
      dst_k[pos] = src_k[i];
      dst_i[pos] = src_i[i];
    }
    std::swap(src_k, dst_k);
    std::swap(src_i, dst_i);
  }
  if (src_i != idx.data()) std::copy_n(src_i, n, idx.data());
}

// Four partial sums so the loop pipelines; fixed order, deterministic.
template <typename T>
double neg_euclidean_kernel(const T* a, const T* b, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      const double d = static_cast<double>(a[j + l]) - static_cast<double>(b[j + l]);
      s[l] += d * d;
    }
  }
  for (; j < n; ++j) {
    const double d = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    s[0] += d * d;
  }
  return -std::sqrt((s[0] + s[1]) + (s[2] + s[3]));
}

}  // namespace

double neg_euclidean(std::span<const float> a, std::span<const float> b) {
  return neg_euclidean_kernel(a.data(), b.data(), a.size());
}

double neg_euclidean(std::span<const double> a, std::span<const double> b) {
  return neg_euclidean_kernel(a.data(), b.data(), a.size());
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::euclidean: return "euclidean";
    case Metric::cosine: return "cosine";
    case Metric::precomputed: return "precomputed";
  }
  return "?";
}

Metric parse_metric(std::string_view s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "cosine") return Metric::cosine;
  if (s == "precomputed") return Metric::precomputed;
  throw ValidationError("unknown metric '" + std::string(s) + "'");
}

double similarity(std::span<const float> a, std::span<const float> b, Metric m) {
  if (a.size() != b.size()) {
    throw ValidationError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  switch (m) {
    case Metric::euclidean: {
      return neg_euclidean(a, b);
    }
    case Metric::cosine: {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t j = 0; j < a.size(); ++j) {
        dot += static_cast<double>(a[j]) * b[j];
        na += static_cast<double>(a[j]) * a[j];
        nb += static_cast<double>(b[j]) * b[j];
      }
      if (na == 0.0 || nb == 0.0) return 0.0;
      return dot / (std::sqrt(na) * std::sqrt(nb));
    }
    case Metric::precomputed:
      break;
  }
  throw ValidationError("precomputed metric has no feature-space similarity");
}

void similarity_row(const FeatureSet& gallery, std::span<const float> query, Metric m,
                    std::span<double> out) {
  if (query.size() != gallery.dim()) {
    throw ValidationError("probe dimension " + std::to_string(query.size()) +
                          " does not match gallery dimension " + std::to_string(gallery.dim()));
  }
  for (std::uint32_t g = 0; g < gallery.size(); ++g) out[g] = similarity(query, gallery.row(g), m);
}

void rank_scores_into(std::span<const double> scores, std::optional<std::uint32_t> exclude,
                      RankScratch& scratch, std::span<std::uint32_t> order) {
  auto& keys = scratch.keys;
  keys.clear();
  keys.reserve(scores.size());
  std::size_t out = 0;
  for (std::uint32_t i = 0; i < scores.size(); ++i) {
    if (exclude && *exclude == i) continue;
    if (!std::isfinite(scores[i])) {
      throw ValidationError("non-finite score at column " + std::to_string(i));
    }
    keys.push_back(descending_key(scores[i]));
    order[out++] = i;
  }
  if (!keys.empty()) radix_sort(keys, order.first(keys.size()), scratch);
}

RankingList rank_scores(std::span<const double> scores, std::optional<std::uint32_t> exclude) {
  const auto n = static_cast<std::uint32_t>(scores.size());
  if (exclude && *exclude >= n) throw ValidationError("excluded index out of range");
  RankingList list;
  list.anchor = exclude;
  list.order.resize(exclude ? n - 1 : n);
  RankScratch scratch;
  rank_scores_into(scores, exclude, scratch, list.order);
  list.positions.assign(n, 0);
  for (std::uint32_t i = 0; i < list.order.size(); ++i) list.positions[list.order[i]] = i + 1;
  return list;
}

PositionTable::PositionTable(std::uint32_t n, std::optional<std::uint32_t> depth)
    : n_(n), depth_(depth), data_(static_cast<std::size_t>(n) * n, 0) {
  if (depth_ && *depth_ == 0) throw ValidationError("position table depth must be >= 1");
  if (depth_ && n_ > 0 && *depth_ >= n_ - 1) depth_.reset();
}

void PositionTable::set_row(std::uint32_t anchor, std::span<const std::uint32_t> order) {
  auto* row = data_.data() + static_cast<std::size_t>(anchor) * n_;
  const std::uint32_t cap = depth_ ? *depth_ : n_;
  for (std::uint32_t i = 0; i < order.size(); ++i) row[order[i]] = i < cap ? i + 1 : cap + 1;
  row[anchor] = 0;
}

GalleryRankings compute_gallery_rankings(const FeatureSet& gallery, Metric metric,
                                         std::optional<std::uint32_t> depth) {
  const std::uint32_t n = gallery.size();
  if (n < 2) throw ValidationError("gallery rankings need N >= 2");
  GalleryRankings out{{}, PositionTable(n, depth)};
  out.lists.reserve(n);
  std::vector<double> scores(n);
  for (std::uint32_t g = 0; g < n; ++g) {
    similarity_row(gallery, gallery.row(g), metric, scores);
    out.lists.push_back(rank_scores(scores, g));
    out.positions.set_row(g, out.lists.back().order);
  }
  return out;
}

RankingList compute_probe_ranking(std::span<const float> probe, const FeatureSet& gallery,
                                  Metric metric) {
  std::vector<double> scores(gallery.size());
  similarity_row(gallery, probe, metric, scores);
  return rank_scores(scores);
}

ScoreMatrix::ScoreMatrix(std::uint32_t rows, std::uint32_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(rows_) * cols_) {
    throw ValidationError("score matrix data size does not match rows x cols");
  }
}

std::uint64_t ScoreMatrix::fingerprint() const {
  io::Fnv1a h;
  h.update_value(rows_);
  h.update_value(cols_);
  for (double v : values_) h.update_value(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return h.digest();
}

ScoreMatrix load_scores(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string where = path.string() + ": ";
  io::BinaryReader r(in);
  try {
    if (r.get_bytes(4) != std::string_view(kScoreMagic, 4)) {
      throw LoadError(where + "bad magic, not a PBCS score file");
    }
    auto version = r.get<std::uint32_t>();
    if (version != kScoreVersion) {
      throw LoadError(where + "unsupported score file version " + std::to_string(version));
    }
    auto rows = r.get<std::uint32_t>();
    auto cols = r.get<std::uint32_t>();
    const auto payload = static_cast<std::uintmax_t>(rows) * cols * sizeof(float);
    if (std::filesystem::file_size(path) != 16 + payload) {
      throw LoadError(where + "file size does not match a " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " matrix");
    }
    std::vector<float> raw(static_cast<std::size_t>(rows) * cols);
    r.get_array(std::span<float>(raw));
    if (!r.at_end()) throw LoadError(where + "trailing bytes after matrix");
    return ScoreMatrix(rows, cols, std::vector<double>(raw.begin(), raw.end()));
  } catch (const io::TruncatedError&) {
    throw LoadError(where + "truncated score matrix");
  }
}

void save_scores(const ScoreMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  io::BinaryWriter w(out);
  w.put_bytes(std::string_view(kScoreMagic, 4));
  w.put(kScoreVersion);
  w.put(m.rows());
  w.put(m.cols());
  for (double v : m.values()) w.put(static_cast<float>(v));
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

GalleryRankings ingest_gallery_scores(const ScoreMatrix& gallery_scores,
                                      std::optional<std::uint32_t> depth) {
  const std::uint32_t n = gallery_scores.rows();
  if (gallery_scores.cols() != n) throw ValidationError("gallery score matrix must be square");
  if (n < 2) throw ValidationError("gallery rankings need N >= 2");
  GalleryRankings out{{}, PositionTable(n, depth)};
  out.lists.reserve(n);
  for (std::uint32_t g = 0; g < n; ++g) {
    try {
      out.lists.push_back(rank_scores(gallery_scores.row(g), g));
    } catch (const ValidationError& e) {
      throw ValidationError("gallery score row " + std::to_string(g) + ": " + e.what());
    }
    out.positions.set_row(g, out.lists.back().order);
  }
  return out;
}

std::vector<RankingList> ingest_probe_scores(const ScoreMatrix& probe_scores) {
  std::vector<RankingList> lists;
  lists.reserve(probe_scores.rows());
  for (std::uint32_t p = 0; p < probe_scores.rows(); ++p) {
    try {
      lists.push_back(rank_scores(probe_scores.row(p)));
    } catch (const ValidationError& e) {
      throw ValidationError("probe score row " + std::to_string(p) + ": " + e.what());
    }
  }
  return lists;
}

void write_ranking_dump(std::ostream& out, std::span<const RankingList> lists,
                        std::span<const std::string> anchor_ids,
                        std::span<const std::string> gallery_ids) {
  for (std::size_t i = 0; i < lists.size(); ++i) {
    out << anchor_ids[i] << ':';
    for (auto g : lists[i].order) out << ' ' << gallery_ids[g];
    out << '\n';
  }
}

}  // namespace pbc
