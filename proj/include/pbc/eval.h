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
#include <vector>

#include "pbc/dataset.h"
#include "pbc/rerank.h"

namespace pbc {

// Per probe: positive gallery indices and junk indices that are removed from
// the list before scoring. The two sets are disjoint.
struct ProbeTruth {
  std::vector<std::uint32_t> positives;
  std::vector<std::uint32_t> junk;
};

struct GroundTruth {
  std::vector<ProbeTruth> probes;

  void validate() const;
};

enum class JunkRule {
  none,
  // Same label and same camera is junk; same label on another camera is a
  // positive.
  same_camera,
};

// Ground truth from label/camera metadata. Probes and gallery samples without
// labels have no positives.
GroundTruth ground_truth_from_labels(const FeatureSet& gallery, const FeatureSet& probes,
                                     JunkRule rule);

struct RateSummary {
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  double total = 0.0;
  std::size_t count = 0;
};

struct TimingReport {
  std::optional<double> offline_seconds;
  // Absent when no per-query measurements exist.
  std::optional<RateSummary> online_micros;
};

TimingReport timing_report(std::optional<double> build_seconds,
                           std::span<const double> per_query_micros);

struct EvalReport {
  // cmc[k - 1] is the Rank-k rate.
  std::vector<double> cmc;
  double map = 0.0;
  // Average precision per probe; absent for probes without positives.
  std::vector<std::optional<double>> ap;
  std::size_t scored_probes = 0;
  std::size_t excluded_probes = 0;
  TimingReport timing;
};

// Ranked gallery lists, one per probe, aligned with GroundTruth::probes. A
// list may be truncated; positives missing from it count as never found.
using RankedLists = std::vector<std::vector<std::uint32_t>>;

RankedLists ranked_lists(std::span<const QueryResult> results);

// Rank-k rates for k = 1..max_k over probes with at least one positive.
std::vector<double> cmc_curve(const RankedLists& lists, const GroundTruth& gt,
                              std::uint32_t max_k);
std::vector<double> cmc_curve(std::span<const QueryResult> results, const GroundTruth& gt,
                              std::uint32_t max_k);

// AP of one probe: mean over its positives of precision at the positive's
// junk-cleaned position. Positives absent from the list contribute 0.
std::optional<double> average_precision(std::span<const std::uint32_t> list,
                                        const ProbeTruth& truth);
double mean_average_precision(const RankedLists& lists, const GroundTruth& gt);
double mean_average_precision(std::span<const QueryResult> results, const GroundTruth& gt);

EvalReport evaluate(const RankedLists& lists, const GroundTruth& gt, std::uint32_t max_k,
                    TimingReport timing = {});

// Table with Rank-1/5/10/20 and mAP in percent, followed by timings.
void write_report_table(std::ostream& out, const EvalReport& report);
// key=value lines.
void write_report_keyvalues(std::ostream& out, const EvalReport& report);

// Ground-truth file: `probe_id | pos: g1,g2 | junk: g3,...`.
struct NamedGroundTruth {
  std::vector<std::string> probe_ids;
  std::vector<std::vector<std::string>> positives;
  std::vector<std::vector<std::string>> junk;
};
NamedGroundTruth load_ground_truth(const std::filesystem::path& path);
void save_ground_truth(const NamedGroundTruth& gt, const std::filesystem::path& path);
NamedGroundTruth name_ground_truth(const GroundTruth& gt, const FeatureSet& gallery,
                                   const FeatureSet& probes);

// Rankings file: `probe_id: g1 g2 ...`.
struct NamedRankings {
  std::vector<std::string> probe_ids;
  std::vector<std::vector<std::string>> lists;
};
NamedRankings load_rankings(const std::filesystem::path& path);
void write_rankings(std::ostream& out, std::span<const QueryResult> results,
                    std::span<const std::string> gallery_ids, std::size_t top_k);

// Resolves names to indices over one shared gallery-id table. Ranking lists
// are matched to ground-truth probes by probe id; a probe without a list is
// scored as an empty list.
struct ResolvedEvaluation {
  RankedLists lists;
  GroundTruth truth;
};
ResolvedEvaluation resolve(const NamedRankings& rankings, const NamedGroundTruth& gt);

}  // namespace pbc
