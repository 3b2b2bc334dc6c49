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
#include <string_view>

namespace pbc {

// The two mutual rank positions of a pair (a, b): where a sits in b's list
// and where b sits in a's list. (0, 0) is the self pair.
struct RankPair {
  std::uint32_t l_ab = 0;
  std::uint32_t l_ba = 0;

  bool is_self() const { return l_ab == 0 && l_ba == 0; }
};

enum class MeasureKind { nonreciprocal, reciprocal_max, reciprocal_sum, combined };

std::string_view to_string(MeasureKind m);
// Accepts the CLI spellings: nonreciprocal | max | sum | combined.
MeasureKind parse_measure(std::string_view s);

// Similarity assigned to the self pair by every measure. Strictly above the
// largest non-self value of any measure except nonreciprocal, where it ties
// with position 1.
inline constexpr double kSelfPairSimilarity = 1.0;

// 1 / l. Requires l >= 1.
double r_nonreciprocal(std::uint32_t l_ab);
// 1 / max(l_ab, l_ba). Requires both >= 1.
double r_reciprocal_max(RankPair p);
// 1 / (l_ab + l_ba). Requires both >= 1.
double r_reciprocal_sum(RankPair p);
// 1 / (l_ab + l_ba + max(l_ab, l_ba)), or kSelfPairSimilarity for (0, 0).
double r_combined(RankPair p);

// Dispatches on `kind`, applying the self-pair rule for every measure.
// The nonreciprocal measure reads only l_ab.
double rank_similarity(MeasureKind kind, RankPair p);

}  // namespace pbc
