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

#include "pbc/index.h"

#include <algorithm>
#include <fstream>
#include <functional>

#include "pbc/binary_io.h"
#include "pbc/error.h"
#include "pbc/parallel.h"

namespace pbc {
namespace {

constexpr char kIndexMagic[4] = {'P', 'B', 'C', 'I'};

template <typename E>
E checked_enum(std::uint8_t raw, std::uint8_t max, const char* what) {
  if (raw > max) throw IndexCorruptError(std::string("invalid ") + what + " code in index header");
  return static_cast<E>(raw);
}

}  // namespace

std::string_view to_string(ContextSide s) {
  switch (s) {
    case ContextSide::probe_only: return "probe";
    case ContextSide::gallery_only: return "gallery";
    case ContextSide::bilateral: return "bilateral";
  }
  return "?";
}

ContextSide parse_context_side(std::string_view s) {
  if (s == "probe") return ContextSide::probe_only;
  if (s == "gallery") return ContextSide::gallery_only;
  if (s == "bilateral") return ContextSide::bilateral;
  throw ValidationError("unknown context side '" + std::string(s) +
                        "' (expected probe|gallery|bilateral)");
}

std::string_view to_string(StageMode s) {
  switch (s) {
    case StageMode::first_only: return "first";
    case StageMode::second_only: return "second";
    case StageMode::progressive: return "progressive";
  }
  return "?";
}

StageMode parse_stages(std::string_view s) {
  if (s == "first") return StageMode::first_only;
  if (s == "second") return StageMode::second_only;
  if (s == "progressive") return StageMode::progressive;
  throw ValidationError("unknown stage mode '" + std::string(s) +
                        "' (expected first|second|progressive)");
}

void PbcParams::validate() const {
  if (k0 < 1) throw ValidationError("k0 must be >= 1 (got " + std::to_string(k0) + ")");
  if (k < 1) throw ValidationError("k must be >= 1 (got " + std::to_string(k) + ")");
  if (L < k) {
    throw ValidationError("L must be >= k (got L=" + std::to_string(L) +
                          ", k=" + std::to_string(k) + ")");
  }
  if (depth && *depth < std::max(k, k0)) {
    throw ValidationError("depth must be >= max(k, k0) (got " + std::to_string(*depth) + ")");
  }
}

ContextSet GalleryIndex::first_order_context(std::uint32_t g) const {
  auto c = pbc::first_order_context(neighbors_.row(g), params_.k, g);
  auto w = first_weights(g);
  for (std::size_t i = 0; i < c.entries.size(); ++i) c.entries[i].weight = w[i];
  return c;
}

ContextSet GalleryIndex::second_order_context(std::uint32_t g) const {
  auto c = pbc::second_order_context(neighbors_.row(g), neighbors_, params_.k0, params_.k, g);
  auto w = second_reliability_weights(g);
  for (std::size_t i = 0; i < c.entries.size(); ++i) c.entries[i].weight = w[i];
  return c;
}

RankingList GalleryIndex::ranking(std::uint32_t g) const {
  if (positions_.depth()) throw ValidationError("full rankings need an index with depth = full");
  const auto n = size();
  RankingList list;
  list.anchor = g;
  list.positions.assign(positions_.row(g).begin(), positions_.row(g).end());
  list.order.resize(n - 1);
  for (std::uint32_t a = 0; a < n; ++a) {
    if (a != g) list.order[list.positions[a] - 1] = a;
  }
  return list;
}

void GalleryIndex::verify_gallery(const FeatureSet& gallery) const {
  if (gallery.fingerprint() != fingerprint_) {
    throw FingerprintMismatchError("gallery does not match the index (fingerprint differs)");
  }
}

void GalleryIndex::verify_gallery(const ScoreMatrix& gallery_scores) const {
  if (gallery_scores.fingerprint() != fingerprint_) {
    throw FingerprintMismatchError("gallery scores do not match the index (fingerprint differs)");
  }
}

class IndexBuilder {
 public:
  using RowFn = std::function<void(std::uint32_t, std::span<double>)>;

  static GalleryIndex build(std::uint32_t n, const RowFn& row_scores, Metric metric,
                            std::uint64_t fingerprint, std::vector<std::string> ids,
                            const PbcParams& params, unsigned threads) {
    params.validate();
    if (n < 2) throw ValidationError("index build needs a gallery of N >= 2");
    const std::uint32_t width = std::max(params.k, params.k0);
    if (width > n - 1) {
      throw ValidationError("gallery of N = " + std::to_string(n) +
                            " is too small for max(k, k0) = " + std::to_string(width));
    }
    GalleryIndex ix;
    ix.params_ = params;
    ix.metric_ = metric;
    ix.fingerprint_ = fingerprint;
    ix.gallery_ids_ = std::move(ids);
    ix.positions_ = PositionTable(n, params.depth);
    ix.neighbors_ = NeighborTable(n, width);

    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
      std::vector<double> scores(n);
      std::vector<std::uint32_t> order(n - 1);
      RankScratch scratch;
      for (auto a = static_cast<std::uint32_t>(begin); a < end; ++a) {
        row_scores(a, scores);
        try {
          rank_scores_into(scores, a, scratch, order);
        } catch (const ValidationError& e) {
          throw ValidationError("gallery row " + std::to_string(a) + ": " + e.what());
        }
        ix.positions_.set_row(a, order);
        std::copy_n(order.begin(), width, ix.neighbors_.mutable_row(a).begin());
      }
    });

    ix.reliability_.k_used = params.k;
    ix.reliability_.kappa.resize(n);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
      for (auto g = static_cast<std::uint32_t>(begin); g < end; ++g) {
        ix.reliability_.kappa[g] = reliability_kappa(ix.neighbors_.row(g), ix.neighbors_, params.k, g);
      }
    });

    const std::uint32_t k = params.k;
    const std::uint32_t s = params.k0 * params.k;
    ix.first_weights_.resize(static_cast<std::size_t>(n) * k);
    ix.second_entries_.resize(static_cast<std::size_t>(n) * s);
    ix.second_kappa_weights_.resize(static_cast<std::size_t>(n) * s);
    ix.second_pair_similarity_.resize(static_cast<std::size_t>(n) * s);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
      for (auto g = static_cast<std::uint32_t>(begin); g < end; ++g) {
        const auto head = ix.neighbors_.row(g);
        auto c1 = weight_first_order_offline(pbc::first_order_context(head, k, g), ix.positions_);
        for (std::uint32_t i = 0; i < k; ++i) {
          ix.first_weights_[static_cast<std::size_t>(g) * k + i] = c1.entries[i].weight;
        }
        auto c2 = pbc::second_order_context(head, ix.neighbors_, params.k0, k, g);
        auto by_kappa = weight_second_order(c2, ix.reliability_, head.first(params.k0));
        auto by_rank = weight_by_rank_offline(std::move(c2), ix.positions_);
        const std::size_t base = static_cast<std::size_t>(g) * s;
        for (std::uint32_t i = 0; i < s; ++i) {
          ix.second_entries_[base + i] = by_rank.entries[i].gallery_index;
          ix.second_kappa_weights_[base + i] = by_kappa.entries[i].weight;
          ix.second_pair_similarity_[base + i] = by_rank.entries[i].weight;
        }
      }
    });
    return ix;
  }
};

GalleryIndex build_index(const FeatureSet& gallery, Metric metric, const PbcParams& params,
                         unsigned threads) {
  if (metric == Metric::precomputed) {
    throw ValidationError("feature-based index build needs euclidean or cosine metric");
  }
  std::vector<std::string> ids;
  ids.reserve(gallery.size());
  for (const auto& s : gallery.samples()) ids.push_back(s.id);
  if (metric == Metric::euclidean) {
    // One widened copy avoids converting every gallery row N times.
    const std::vector<double> wide(gallery.data().begin(), gallery.data().end());
    const std::size_t d = gallery.dim();
    auto row = [&](std::uint32_t a, std::span<double> out) {
      const std::span<const double> anchor(wide.data() + a * d, d);
      for (std::uint32_t b = 0; b < out.size(); ++b) {
        out[b] = neg_euclidean(anchor, std::span<const double>(wide.data() + b * d, d));
      }
    };
    return IndexBuilder::build(gallery.size(), row, metric, gallery.fingerprint(),
                               std::move(ids), params, threads);
  }
  auto row = [&](std::uint32_t a, std::span<double> out) {
    similarity_row(gallery, gallery.row(a), metric, out);
  };
  return IndexBuilder::build(gallery.size(), row, metric, gallery.fingerprint(), std::move(ids),
                             params, threads);
}

GalleryIndex build_index(const ScoreMatrix& gallery_scores, const PbcParams& params,
                         std::vector<std::string> gallery_ids, unsigned threads) {
  const std::uint32_t n = gallery_scores.rows();
  if (gallery_scores.cols() != n) throw ValidationError("gallery score matrix must be square");
  if (gallery_ids.empty()) {
    for (std::uint32_t g = 0; g < n; ++g) gallery_ids.push_back("g" + std::to_string(g));
  }
  if (gallery_ids.size() != n) {
    throw ValidationError("expected " + std::to_string(n) + " gallery ids, got " +
                          std::to_string(gallery_ids.size()));
  }
  auto row = [&](std::uint32_t a, std::span<double> out) {
    auto src = gallery_scores.row(a);
    std::copy(src.begin(), src.end(), out.begin());
  };
  return IndexBuilder::build(n, row, Metric::precomputed, gallery_scores.fingerprint(),
                             std::move(gallery_ids), params, threads);
}

void save_index(const GalleryIndex& ix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  io::BinaryWriter w(out);
  io::Fnv1a checksum;
  w.put_bytes(std::string_view(kIndexMagic, 4));
  w.put(kIndexFormatVersion);
  w.attach_hash(&checksum);

  const auto& p = ix.params();
  w.put(p.k0);
  w.put(p.k);
  w.put(p.L);
  w.put(static_cast<std::uint8_t>(p.measure));
  w.put(static_cast<std::uint8_t>(p.weighting));
  w.put(static_cast<std::uint8_t>(p.context_side));
  w.put(static_cast<std::uint8_t>(p.stages));
  w.put(p.depth.value_or(0));
  w.put(static_cast<std::uint8_t>(ix.metric()));
  w.put(ix.fingerprint());
  w.put(ix.size());
  w.put(ix.neighbors().width());
  w.put(static_cast<std::uint8_t>(ix.positions().depth().has_value()));
  for (const auto& id : ix.gallery_ids()) w.put_short_string(id);

  w.put_array(std::span<const std::uint32_t>(ix.positions().raw()));
  w.put_array(std::span<const std::uint32_t>(ix.neighbors().raw()));
  w.put_array(std::span<const double>(ix.first_weights_));
  w.put_array(std::span<const std::uint32_t>(ix.second_entries_));
  w.put_array(std::span<const double>(ix.second_kappa_weights_));
  w.put_array(std::span<const double>(ix.second_pair_similarity_));
  w.put_array(std::span<const double>(ix.reliability().kappa));
  w.put(ix.reliability().k_used);

  w.attach_hash(nullptr);
  w.put(checksum.digest());
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

GalleryIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string where = path.string() + ": ";
  std::uintmax_t file_size = std::filesystem::file_size(path);
  io::BinaryReader r(in);
  io::Fnv1a checksum;
  GalleryIndex ix;
  try {
    if (r.get_bytes(4) != std::string_view(kIndexMagic, 4)) {
      throw IndexCorruptError(where + "bad magic, not a PBCI index file");
    }
    auto version = r.get<std::uint32_t>();
    if (version != kIndexFormatVersion) {
      throw IndexVersionError(where + "index format version " + std::to_string(version) +
                              " is not supported (expected " +
                              std::to_string(kIndexFormatVersion) + ")");
    }
    r.attach_hash(&checksum);

    PbcParams p;
    p.k0 = r.get<std::uint32_t>();
    p.k = r.get<std::uint32_t>();
    p.L = r.get<std::uint32_t>();
    p.measure = checked_enum<MeasureKind>(r.get<std::uint8_t>(), 3, "measure");
    p.weighting = checked_enum<WeightingMode>(r.get<std::uint8_t>(), 2, "weighting");
    p.context_side = checked_enum<ContextSide>(r.get<std::uint8_t>(), 2, "context side");
    p.stages = checked_enum<StageMode>(r.get<std::uint8_t>(), 2, "stage");
    if (auto depth = r.get<std::uint32_t>(); depth != 0) p.depth = depth;
    try {
      p.validate();
    } catch (const ValidationError& e) {
      throw IndexCorruptError(where + "invalid stored parameters: " + e.what());
    }
    ix.params_ = p;
    ix.metric_ = checked_enum<Metric>(r.get<std::uint8_t>(), 2, "metric");
    ix.fingerprint_ = r.get<std::uint64_t>();
    const auto n = r.get<std::uint32_t>();
    const auto width = r.get<std::uint32_t>();
    const bool capped = r.get<std::uint8_t>() != 0;
    if (n < 2 || width != std::max(p.k, p.k0) || width > n - 1) {
      throw IndexCorruptError(where + "inconsistent table dimensions in header");
    }
    if (capped && !p.depth) throw IndexCorruptError(where + "inconsistent depth flags");
    // Every id takes at least its 2-byte length prefix.
    if (static_cast<std::uintmax_t>(n) * 2 > file_size) {
      throw IndexCorruptError(where + "truncated index file");
    }
    ix.gallery_ids_.reserve(n);
    for (std::uint32_t g = 0; g < n; ++g) ix.gallery_ids_.push_back(r.get_short_string());

    const std::uintmax_t nn = n;
    const std::uintmax_t s = static_cast<std::uintmax_t>(p.k0) * p.k;
    const std::uintmax_t expected = nn * nn * 4 + nn * width * 4 + nn * p.k * 8 + nn * s * 4 +
                                    nn * s * 16 + nn * 8 + 4 + 8;
    const auto consumed = static_cast<std::uintmax_t>(in.tellg());
    if (consumed + expected != file_size) {
      throw IndexCorruptError(where + (consumed + expected > file_size
                                           ? "truncated index file"
                                           : "trailing bytes after index tables"));
    }

    ix.positions_ = PositionTable(n, capped ? p.depth : std::nullopt);
    r.get_array(std::span<std::uint32_t>(ix.positions_.mutable_raw()));
    ix.neighbors_ = NeighborTable(n, width);
    r.get_array(std::span<std::uint32_t>(ix.neighbors_.mutable_raw()));
    ix.first_weights_.resize(n * static_cast<std::size_t>(p.k));
    r.get_array(std::span<double>(ix.first_weights_));
    ix.second_entries_.resize(n * s);
    r.get_array(std::span<std::uint32_t>(ix.second_entries_));
    ix.second_kappa_weights_.resize(n * s);
    r.get_array(std::span<double>(ix.second_kappa_weights_));
    ix.second_pair_similarity_.resize(n * s);
    r.get_array(std::span<double>(ix.second_pair_similarity_));
    ix.reliability_.kappa.resize(n);
    r.get_array(std::span<double>(ix.reliability_.kappa));
    ix.reliability_.k_used = r.get<std::uint32_t>();

    r.attach_hash(nullptr);
    if (r.get<std::uint64_t>() != checksum.digest()) {
      throw IndexCorruptError(where + "checksum mismatch, index file is corrupt");
    }
  } catch (const io::TruncatedError&) {
    throw IndexCorruptError(where + "truncated index file");
  } catch (const ValidationError& e) {
    throw IndexCorruptError(where + e.what());
  }

  for (auto v : ix.neighbors_.raw()) {
    if (v >= ix.size()) throw IndexCorruptError(where + "neighbor index out of range");
  }
  for (auto v : ix.second_entries_) {
    if (v >= ix.size()) throw IndexCorruptError(where + "context entry out of range");
  }
  return ix;
}

}  // namespace pbc
