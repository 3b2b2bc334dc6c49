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

#include "pbc/ranksim.h"

#include <algorithm>
#include <string>

#include "pbc/error.h"

namespace pbc {
namespace {

void require_non_self(RankPair p, const char* measure) {
  if (p.l_ab == 0 || p.l_ba == 0) {
    throw ValidationError(std::string(measure) + " needs both positions >= 1, got (" +
                          std::to_string(p.l_ab) + ", " + std::to_string(p.l_ba) + ")");
  }
}

}  // namespace

std::string_view to_string(MeasureKind m) {
  switch (m) {
    case MeasureKind::nonreciprocal: return "nonreciprocal";
    case MeasureKind::reciprocal_max: return "max";
    case MeasureKind::reciprocal_sum: return "sum";
    case MeasureKind::combined: return "combined";
  }
  return "?";
}

MeasureKind parse_measure(std::string_view s) {
  if (s == "nonreciprocal") return MeasureKind::nonreciprocal;
  if (s == "max") return MeasureKind::reciprocal_max;
  if (s == "sum") return MeasureKind::reciprocal_sum;
  if (s == "combined") return MeasureKind::combined;
  throw ValidationError("unknown measure '" + std::string(s) +
                        "' (expected nonreciprocal|max|sum|combined)");
}

double r_nonreciprocal(std::uint32_t l_ab) {
  if (l_ab == 0) throw ValidationError("nonreciprocal similarity needs a position >= 1");
  return 1.0 / static_cast<double>(l_ab);
}

double r_reciprocal_max(RankPair p) {
  require_non_self(p, "reciprocal-max similarity");
  return 1.0 / static_cast<double>(std::max(p.l_ab, p.l_ba));
}

double r_reciprocal_sum(RankPair p) {
  require_non_self(p, "reciprocal-sum similarity");
  return 1.0 / (static_cast<double>(p.l_ab) + static_cast<double>(p.l_ba));
}

double r_combined(RankPair p) {
  if (p.is_self()) return kSelfPairSimilarity;
  require_non_self(p, "combined similarity");
  const double a = p.l_ab;
  const double b = p.l_ba;
  return 1.0 / (a + b + std::max(a, b));
}

double rank_similarity(MeasureKind kind, RankPair p) {
  if (p.is_self()) return kSelfPairSimilarity;
  switch (kind) {
    case MeasureKind::nonreciprocal: return r_nonreciprocal(p.l_ab);
    case MeasureKind::reciprocal_max: return r_reciprocal_max(p);
    case MeasureKind::reciprocal_sum: return r_reciprocal_sum(p);
    case MeasureKind::combined: return r_combined(p);
  }
  return 0.0;
}

}  // namespace pbc
