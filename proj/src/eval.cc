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

#include "pbc/eval.h"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "pbc/error.h"

namespace pbc {
namespace {

// Shortest text that reads back to the same double.
std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

bool contains(std::span<const std::uint32_t> sorted, std::uint32_t v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

std::vector<std::uint32_t> sorted_copy(const std::vector<std::uint32_t>& v) {
  std::vector<std::uint32_t> s = v;
  std::sort(s.begin(), s.end());
  return s;
}

// 1-based junk-cleaned position of the first positive, 0 when none appears.
std::uint32_t first_hit(std::span<const std::uint32_t> list, std::span<const std::uint32_t> pos,
                        std::span<const std::uint32_t> junk) {
  std::uint32_t position = 0;
  for (auto g : list) {
    if (contains(junk, g)) continue;
    ++position;
    if (contains(pos, g)) return position;
  }
  return 0;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_ids(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    auto token = trim(s.substr(start, end - start));
    if (!token.empty()) out.emplace_back(token);
    start = end + 1;
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

std::string join(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ',';
    out += ids[i];
  }
  return out;
}

}  // namespace

void GroundTruth::validate() const {
  for (std::size_t p = 0; p < probes.size(); ++p) {
    auto pos = sorted_copy(probes[p].positives);
    for (auto j : probes[p].junk) {
      if (contains(pos, j)) {
        throw ValidationError("probe " + std::to_string(p) +
                              ": gallery sample is both positive and junk");
      }
    }
  }
}

GroundTruth ground_truth_from_labels(const FeatureSet& gallery, const FeatureSet& probes,
                                     JunkRule rule) {
  GroundTruth gt;
  gt.probes.resize(probes.size());
  for (std::uint32_t p = 0; p < probes.size(); ++p) {
    const auto& probe = probes.sample(p);
    if (!probe.label) continue;
    for (std::uint32_t g = 0; g < gallery.size(); ++g) {
      const auto& gs = gallery.sample(g);
      if (gs.label != probe.label) continue;
      const bool same_camera = probe.camera && gs.camera && *probe.camera == *gs.camera;
      if (rule == JunkRule::same_camera && same_camera) {
        gt.probes[p].junk.push_back(g);
      } else {
        gt.probes[p].positives.push_back(g);
      }
    }
  }
  return gt;
}

TimingReport timing_report(std::optional<double> build_seconds,
                           std::span<const double> per_query_micros) {
  TimingReport report;
  report.offline_seconds = build_seconds;
  if (per_query_micros.empty()) return report;
  std::vector<double> v(per_query_micros.begin(), per_query_micros.end());
  std::sort(v.begin(), v.end());
  RateSummary s;
  s.count = v.size();
  s.total = std::accumulate(v.begin(), v.end(), 0.0);
  s.mean = s.total / static_cast<double>(v.size());
  const std::size_t mid = v.size() / 2;
  s.median = v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  // Nearest-rank percentile.
  auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size())));
  s.p95 = v[std::max<std::size_t>(rank, 1) - 1];
  report.online_micros = s;
  return report;
}

RankedLists ranked_lists(std::span<const QueryResult> results) {
  RankedLists lists;
  lists.reserve(results.size());
  for (const auto& r : results) lists.push_back(r.final_order);
  return lists;
}

std::vector<double> cmc_curve(const RankedLists& lists, const GroundTruth& gt,
                              std::uint32_t max_k) {
  if (lists.size() != gt.probes.size()) {
    throw ValidationError("got " + std::to_string(lists.size()) + " ranked lists for " +
                          std::to_string(gt.probes.size()) + " probes");
  }
  std::vector<double> hits(max_k, 0.0);
  std::size_t scored = 0;
  for (std::size_t p = 0; p < lists.size(); ++p) {
    if (gt.probes[p].positives.empty()) continue;
    ++scored;
    auto pos = sorted_copy(gt.probes[p].positives);
    auto junk = sorted_copy(gt.probes[p].junk);
    const auto at = first_hit(lists[p], pos, junk);
    if (at == 0 || at > max_k) continue;
    for (std::uint32_t k = at; k <= max_k; ++k) hits[k - 1] += 1.0;
  }
  if (scored > 0) {
    for (double& h : hits) h /= static_cast<double>(scored);
  }
  return hits;
}

std::vector<double> cmc_curve(std::span<const QueryResult> results, const GroundTruth& gt,
                              std::uint32_t max_k) {
  return cmc_curve(ranked_lists(results), gt, max_k);
}

std::optional<double> average_precision(std::span<const std::uint32_t> list,
                                        const ProbeTruth& truth) {
  if (truth.positives.empty()) return std::nullopt;
  auto pos = sorted_copy(truth.positives);
  auto junk = sorted_copy(truth.junk);
  std::uint32_t position = 0;
  std::uint32_t found = 0;
  double precision_sum = 0.0;
  for (auto g : list) {
    if (contains(junk, g)) continue;
    ++position;
    if (contains(pos, g)) {
      ++found;
      precision_sum += static_cast<double>(found) / static_cast<double>(position);
      if (found == pos.size()) break;
    }
  }
  return precision_sum / static_cast<double>(pos.size());
}

double mean_average_precision(const RankedLists& lists, const GroundTruth& gt) {
  if (lists.size() != gt.probes.size()) {
    throw ValidationError("got " + std::to_string(lists.size()) + " ranked lists for " +
                          std::to_string(gt.probes.size()) + " probes");
  }
  double sum = 0.0;
  std::size_t scored = 0;
  for (std::size_t p = 0; p < lists.size(); ++p) {
    if (auto ap = average_precision(lists[p], gt.probes[p])) {
      sum += *ap;
      ++scored;
    }
  }
  return scored ? sum / static_cast<double>(scored) : 0.0;
}

double mean_average_precision(std::span<const QueryResult> results, const GroundTruth& gt) {
  return mean_average_precision(ranked_lists(results), gt);
}

EvalReport evaluate(const RankedLists& lists, const GroundTruth& gt, std::uint32_t max_k,
                    TimingReport timing) {
  gt.validate();
  EvalReport report;
  report.cmc = cmc_curve(lists, gt, max_k);
  report.map = mean_average_precision(lists, gt);
  report.ap.reserve(lists.size());
  for (std::size_t p = 0; p < lists.size(); ++p) {
    report.ap.push_back(average_precision(lists[p], gt.probes[p]));
    if (report.ap.back()) {
      ++report.scored_probes;
    } else {
      ++report.excluded_probes;
    }
  }
  report.timing = std::move(timing);
  return report;
}

void write_report_table(std::ostream& out, const EvalReport& report) {
  auto rate = [&](std::uint32_t k) -> std::string {
    if (k > report.cmc.size()) return "-";
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * report.cmc[k - 1]);
    return buf;
  };
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %-8s %-8s %-8s %-8s\n", "Rank-1", "Rank-5", "Rank-10",
                "Rank-20", "mAP");
  out << line;
  std::snprintf(line, sizeof(line), "%-8s %-8s %-8s %-8s %-8.1f\n", rate(1).c_str(),
                rate(5).c_str(), rate(10).c_str(), rate(20).c_str(), 100.0 * report.map);
  out << line;
  out << "probes scored: " << report.scored_probes;
  if (report.excluded_probes) out << " (" << report.excluded_probes << " without positives excluded)";
  out << '\n';
  if (report.timing.offline_seconds) {
    std::snprintf(line, sizeof(line), "offline: %.3f s\n", *report.timing.offline_seconds);
    out << line;
  }
  if (const auto& s = report.timing.online_micros) {
    std::snprintf(line, sizeof(line),
                  "online-single: mean %.3f ms, median %.3f ms, p95 %.3f ms\n"
                  "online-total: %.3f s over %zu probes\n",
                  s->mean / 1e3, s->median / 1e3, s->p95 / 1e3, s->total / 1e6, s->count);
    out << line;
  }
}

void write_report_keyvalues(std::ostream& out, const EvalReport& report) {
  for (std::size_t k = 0; k < report.cmc.size(); ++k) {
    out << "cmc_rank" << (k + 1) << '=' << shortest(report.cmc[k]) << '\n';
  }
  out << "map=" << shortest(report.map) << '\n';
  out << "scored_probes=" << report.scored_probes << '\n';
  out << "excluded_probes=" << report.excluded_probes << '\n';
  if (report.timing.offline_seconds) {
    out << "offline_seconds=" << shortest(*report.timing.offline_seconds) << '\n';
  }
  if (const auto& s = report.timing.online_micros) {
    out << "online_mean_us=" << shortest(s->mean) << '\n';
    out << "online_median_us=" << shortest(s->median) << '\n';
    out << "online_p95_us=" << shortest(s->p95) << '\n';
    out << "online_total_us=" << shortest(s->total) << '\n';
    out << "online_count=" << s->count << '\n';
  }
}

NamedGroundTruth load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  NamedGroundTruth gt;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const std::string at = path.string() + ":" + std::to_string(line_no) + ": ";
    auto parts = split_ids(view, '|');
    if (parts.size() != 3 || !trim(parts[1]).starts_with("pos:") ||
        !trim(parts[2]).starts_with("junk:")) {
      throw LoadError(at + "expected 'probe_id | pos: ids | junk: ids'");
    }
    gt.probe_ids.push_back(parts[0]);
    gt.positives.push_back(split_ids(trim(parts[1]).substr(4), ','));
    gt.junk.push_back(split_ids(trim(parts[2]).substr(5), ','));
  }
  return gt;
}

void save_ground_truth(const NamedGroundTruth& gt, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t p = 0; p < gt.probe_ids.size(); ++p) {
    out << gt.probe_ids[p] << " | pos: " << join(gt.positives[p]) << " | junk: "
        << join(gt.junk[p]) << '\n';
  }
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

NamedGroundTruth name_ground_truth(const GroundTruth& gt, const FeatureSet& gallery,
                                   const FeatureSet& probes) {
  NamedGroundTruth named;
  for (std::uint32_t p = 0; p < probes.size(); ++p) {
    named.probe_ids.push_back(probes.sample(p).id);
    auto& pos = named.positives.emplace_back();
    for (auto g : gt.probes[p].positives) pos.push_back(gallery.sample(g).id);
    auto& junk = named.junk.emplace_back();
    for (auto g : gt.probes[p].junk) junk.push_back(gallery.sample(g).id);
  }
  return named;
}

NamedRankings load_rankings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  NamedRankings r;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = trim(line);
    if (view.empty()) continue;
    auto colon = view.find(':');
    if (colon == std::string_view::npos || colon == 0) {
      throw LoadError(path.string() + ":" + std::to_string(line_no) +
                      ": expected 'probe_id: g1 g2 ...'");
    }
    r.probe_ids.emplace_back(trim(view.substr(0, colon)));
    r.lists.push_back(split_whitespace(view.substr(colon + 1)));
  }
  return r;
}

void write_rankings(std::ostream& out, std::span<const QueryResult> results,
                    std::span<const std::string> gallery_ids, std::size_t top_k) {
  for (const auto& r : results) {
    out << r.probe_id << ':';
    const std::size_t n = top_k == 0 ? r.final_order.size() : std::min(top_k, r.final_order.size());
    for (std::size_t i = 0; i < n; ++i) out << ' ' << gallery_ids[r.final_order[i]];
    out << '\n';
  }
}

ResolvedEvaluation resolve(const NamedRankings& rankings, const NamedGroundTruth& gt) {
  std::unordered_map<std::string, std::uint32_t> gallery;
  auto index_of = [&](const std::string& id) {
    auto [it, inserted] = gallery.try_emplace(id, static_cast<std::uint32_t>(gallery.size()));
    return it->second;
  };
  std::unordered_map<std::string, std::size_t> ranking_of;
  for (std::size_t i = 0; i < rankings.probe_ids.size(); ++i) {
    if (!ranking_of.emplace(rankings.probe_ids[i], i).second) {
      throw LoadError("duplicate probe id '" + rankings.probe_ids[i] + "' in rankings");
    }
  }
  ResolvedEvaluation out;
  for (std::size_t p = 0; p < gt.probe_ids.size(); ++p) {
    ProbeTruth truth;
    for (const auto& id : gt.positives[p]) truth.positives.push_back(index_of(id));
    for (const auto& id : gt.junk[p]) truth.junk.push_back(index_of(id));
    out.truth.probes.push_back(std::move(truth));
    auto& list = out.lists.emplace_back();
    if (auto it = ranking_of.find(gt.probe_ids[p]); it != ranking_of.end()) {
      for (const auto& id : rankings.lists[it->second]) list.push_back(index_of(id));
    }
  }
  return out;
}

}  // namespace pbc
