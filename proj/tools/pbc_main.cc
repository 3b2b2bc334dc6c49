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

// pbc: synthetic data, index build, re-ranking and evaluation from the
// command line.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pbc/baseline.h"
#include "pbc/dataset.h"
#include "pbc/error.h"
#include "pbc/eval.h"
#include "pbc/index.h"
#include "pbc/parallel.h"
#include "pbc/rerank.h"

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Pulls `--config FILE` out of argv and appends every key=value line of FILE
// as `--key value`, unless the flag was already given on the command line.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<std::string> config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw pbc::ValidationError("--config needs a file argument");
      config = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (!config) return args;

  std::ifstream in(*config);
  if (!in) throw pbc::IoError("cannot open config file " + *config);
  auto given = [&](const std::string& flag) {
    return std::ranges::any_of(args, [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw pbc::LoadError(*config + ":" + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    const std::string flag = "--" + key;
    if (key.empty() || given(flag)) continue;
    if (value == "true") {
      args.push_back(flag);
    } else if (value != "false") {
      args.push_back(flag);
      args.push_back(value);
    }
  }
  return args;
}

// Resolved configuration, echoed to stderr before any work starts.
class Echo {
 public:
  explicit Echo(std::string command) : command_(std::move(command)) {}
  template <typename T>
  Echo& add(const std::string& key, const T& value) {
    std::ostringstream s;
    s << value;
    entries_.emplace_back(key, s.str());
    return *this;
  }
  void print() const {
    std::cerr << "# pbc " << command_ << " configuration\n";
    for (const auto& [k, v] : entries_) std::cerr << k << "=" << v << "\n";
  }

 private:
  std::string command_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

bool is_score_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pbc::IoError("cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && std::string(magic, 4) == "PBCS";
}

std::vector<std::string> load_id_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw pbc::IoError("cannot open " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

std::vector<std::string> default_ids(const std::string& prefix, std::uint32_t n) {
  std::vector<std::string> ids;
  for (std::uint32_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

std::string optional_path(const std::string& s) { return s.empty() ? "-" : s; }

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  return fs::path(p.string() + suffix);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw pbc::IoError("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw pbc::IoError("write failed for " + path.string());
}

std::map<std::string, std::vector<double>> read_timing(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw pbc::IoError("cannot open timing file " + path.string());
  std::map<std::string, std::vector<double>> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    try {
      if (eq == std::string::npos) throw std::invalid_argument("no '='");
      values[line.substr(0, eq)].push_back(std::stod(line.substr(eq + 1)));
    } catch (const std::exception&) {
      throw pbc::LoadError(path.string() + ":" + std::to_string(line_no) +
                           ": expected key=number");
    }
  }
  return values;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  pbc::SynthConfig cfg;
  std::string out_dir;
  std::string format = "binary";
  std::string junk = "same-camera";
};

void run_synth(const SynthArgs& a) {
  const auto format = a.format == "csv" ? pbc::FeatureFormat::csv : pbc::FeatureFormat::binary;
  const auto rule = a.junk == "none" ? pbc::JunkRule::none : pbc::JunkRule::same_camera;
  const std::string ext = format == pbc::FeatureFormat::csv ? ".csv" : ".pbcf";
  const fs::path dir(a.out_dir);
  Echo("synth")
      .add("out-dir", a.out_dir)
      .add("format", a.format)
      .add("num-ids", a.cfg.num_ids)
      .add("gallery-per-id", a.cfg.gallery_per_id)
      .add("probes-per-id", a.cfg.probes_per_id)
      .add("dim", a.cfg.dim)
      .add("noise", a.cfg.intra_id_noise)
      .add("camera-offset", a.cfg.camera_offset_scale)
      .add("num-cameras", a.cfg.num_cameras)
      .add("seed", a.cfg.seed)
      .add("junk", a.junk)
      .print();

  const auto data = pbc::generate_synthetic(a.cfg);
  fs::create_directories(dir);
  pbc::save_features(data.gallery, dir / ("gallery" + ext), format);
  pbc::save_features(data.probes, dir / ("probes" + ext), format);
  const auto gt = pbc::ground_truth_from_labels(data.gallery, data.probes, rule);
  pbc::save_ground_truth(pbc::name_ground_truth(gt, data.gallery, data.probes), dir / "gt.txt");
  std::cout << "wrote " << (dir / ("gallery" + ext)).string() << " (" << data.gallery.size()
            << "), " << (dir / ("probes" + ext)).string() << " (" << data.probes.size()
            << "), " << (dir / "gt.txt").string() << "\n";
}

// ---------------------------------------------------------------------------

struct BuildArgs {
  std::string gallery;
  std::string gallery_ids;
  std::string metric = "euclidean";
  std::string out;
  pbc::PbcParams params;
  std::string measure = "combined";
  std::string weighting = "reliability";
  std::string side = "bilateral";
  std::string stages = "progressive";
  std::uint32_t depth = 0;
  unsigned threads = 0;
};

void run_build(BuildArgs a) {
  a.params.measure = pbc::parse_measure(a.measure);
  a.params.weighting = pbc::parse_weighting(a.weighting);
  a.params.context_side = pbc::parse_context_side(a.side);
  a.params.stages = pbc::parse_stages(a.stages);
  if (a.depth > 0) a.params.depth = a.depth;
  a.params.validate();
  const bool scores = is_score_file(a.gallery);
  const auto metric = scores ? pbc::Metric::precomputed : pbc::parse_metric(a.metric);
  if (!scores && metric == pbc::Metric::precomputed) {
    throw pbc::ValidationError("--metric precomputed needs a PBCS score matrix as --gallery");
  }
  Echo("build-index")
      .add("gallery", a.gallery)
      .add("gallery-ids", optional_path(a.gallery_ids))
      .add("metric", pbc::to_string(metric))
      .add("k0", a.params.k0)
      .add("k", a.params.k)
      .add("L", a.params.L)
      .add("measure", pbc::to_string(a.params.measure))
      .add("weighting", pbc::to_string(a.params.weighting))
      .add("context-side", pbc::to_string(a.params.context_side))
      .add("stages", pbc::to_string(a.params.stages))
      .add("depth", a.depth == 0 ? std::string("full") : std::to_string(a.depth))
      .add("threads", pbc::resolve_threads(a.threads))
      .add("out", a.out)
      .print();

  const auto start = Clock::now();
  pbc::GalleryIndex index = [&] {
    if (scores) {
      auto m = pbc::load_scores(a.gallery);
      std::vector<std::string> ids;
      if (!a.gallery_ids.empty()) ids = load_id_list(a.gallery_ids);
      return pbc::build_index(m, a.params, std::move(ids), a.threads);
    }
    const auto g = pbc::load_features(a.gallery, pbc::feature_format_from_path(a.gallery));
    return pbc::build_index(g, metric, a.params, a.threads);
  }();
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  pbc::save_index(index, a.out);
  std::ostringstream timing;
  timing << "build_seconds=" << seconds << "\n";
  write_file(with_suffix(a.out, ".timing"), timing.str());
  std::cout << "indexed " << index.size() << " gallery samples in " << seconds << " s -> "
            << a.out << "\n";
}

// ---------------------------------------------------------------------------

struct RerankArgs {
  std::string index;
  std::string queries;
  std::string gallery;
  std::string probe_ids;
  std::string out;
  std::string scores_out;
  std::string L;
  std::string stages;
  std::string measure;
  std::string weighting;
  std::string side;
  std::size_t topk_out = 0;
  bool baseline_only = false;
  unsigned threads = 0;
};

void run_rerank(const RerankArgs& a) {
  const auto index = pbc::load_index(a.index);
  pbc::PbcParams p = index.params();
  if (!a.L.empty()) p.L = static_cast<std::uint32_t>(std::stoul(a.L));
  if (!a.stages.empty()) p.stages = pbc::parse_stages(a.stages);
  if (!a.measure.empty()) p.measure = pbc::parse_measure(a.measure);
  if (!a.weighting.empty()) p.weighting = pbc::parse_weighting(a.weighting);
  if (!a.side.empty()) p.context_side = pbc::parse_context_side(a.side);
  p.validate();
  const bool scores = is_score_file(a.queries);
  Echo("rerank")
      .add("index", a.index)
      .add("queries", a.queries)
      .add("gallery", optional_path(a.gallery))
      .add("probe-ids", optional_path(a.probe_ids))
      .add("metric", pbc::to_string(index.metric()))
      .add("k0", p.k0)
      .add("k", p.k)
      .add("L", p.L)
      .add("stages", pbc::to_string(p.stages))
      .add("measure", pbc::to_string(p.measure))
      .add("weighting", pbc::to_string(p.weighting))
      .add("context-side", pbc::to_string(p.context_side))
      .add("topk-out", a.topk_out)
      .add("baseline-only", a.baseline_only ? "true" : "false")
      .add("threads", pbc::resolve_threads(a.threads))
      .add("out", a.out)
      .add("scores-out", optional_path(a.scores_out))
      .print();

  const pbc::Reranker reranker(index, p);
  std::vector<pbc::QueryResult> results;
  std::optional<pbc::FeatureSet> gallery;
  if (scores) {
    if (index.metric() != pbc::Metric::precomputed) {
      throw pbc::ValidationError("score-matrix queries need an index built from gallery scores");
    }
    const auto m = pbc::load_scores(a.queries);
    const auto ids = a.probe_ids.empty() ? default_ids("p", m.rows()) : load_id_list(a.probe_ids);
    if (ids.size() != m.rows()) throw pbc::ValidationError("one probe id per score row expected");
    if (a.baseline_only) {
      if (m.cols() != index.size()) {
        throw pbc::ValidationError("probe score rows must have one column per gallery sample");
      }
      results.resize(m.rows());
      pbc::parallel_for(m.rows(), a.threads, [&](std::size_t b, std::size_t e) {
        for (auto q = static_cast<std::uint32_t>(b); q < e; ++q) {
          const auto start = Clock::now();
          results[q].final_order = pbc::rank_scores(m.row(q)).order;
          results[q].initial_micros =
              std::chrono::duration<double, std::micro>(Clock::now() - start).count();
          results[q].probe_id = ids[q];
        }
      });
    } else {
      results = reranker.rerank_all(m, ids, a.threads);
    }
  } else {
    if (index.metric() == pbc::Metric::precomputed) {
      throw pbc::ValidationError("index was built from scores; pass probe scores as --queries");
    }
    if (a.gallery.empty()) throw pbc::ValidationError("feature queries need --gallery");
    gallery = pbc::load_features(a.gallery, pbc::feature_format_from_path(a.gallery));
    index.verify_gallery(*gallery);
    const auto probes = pbc::load_features(a.queries, pbc::feature_format_from_path(a.queries));
    if (a.baseline_only) {
      results.resize(probes.size());
      pbc::parallel_for(probes.size(), a.threads, [&](std::size_t b, std::size_t e) {
        for (auto q = static_cast<std::uint32_t>(b); q < e; ++q) {
          const auto start = Clock::now();
          results[q].final_order =
              pbc::compute_probe_ranking(probes.row(q), *gallery, index.metric()).order;
          results[q].initial_micros =
              std::chrono::duration<double, std::micro>(Clock::now() - start).count();
          results[q].probe_id = probes.sample(q).id;
        }
      });
    } else {
      pbc::Reranker bound(index, p);
      bound.attach_gallery(*gallery);
      results = bound.rerank_all(probes, a.threads);
    }
  }

  std::ostringstream rankings;
  pbc::write_rankings(rankings, results, index.gallery_ids(), a.topk_out);
  write_file(a.out, rankings.str());

  std::ostringstream timing;
  for (const auto& r : results) {
    timing << "online_us=" << r.online_micros << "\n"
           << "initial_us=" << r.initial_micros << "\n";
  }
  write_file(with_suffix(a.out, ".timing"), timing.str());

  if (!a.scores_out.empty()) {
    std::ostringstream dump;
    for (const auto& r : results) {
      for (const auto& c : r.candidates) {
        dump << r.probe_id << ' ' << index.gallery_ids()[c.gallery_index] << ' '
             << c.stage1_score << ' ';
        if (c.stage2_score) {
          dump << *c.stage2_score;
        } else {
          dump << '-';
        }
        dump << '\n';
      }
    }
    write_file(a.scores_out, dump.str());
  }
  const bool clamped = std::ranges::any_of(results, [](const auto& r) { return r.l_clamped; });
  if (clamped) {
    std::cerr << "warning: L=" << p.L << " exceeds the gallery size " << index.size()
              << "; re-ranked all " << index.size() << " samples\n";
  }
  std::cout << (a.baseline_only ? "ranked " : "re-ranked ") << results.size() << " probes -> "
            << a.out << "\n";
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string rankings;
  std::string gt;
  std::string timing;
  std::string build_timing;
  std::string out;
  std::uint32_t max_rank = 20;
};

void run_evaluate(const EvaluateArgs& a) {
  Echo("evaluate")
      .add("rankings", a.rankings)
      .add("gt", a.gt)
      .add("timing", optional_path(a.timing))
      .add("build-timing", optional_path(a.build_timing))
      .add("max-rank", a.max_rank)
      .add("out", optional_path(a.out))
      .print();
  if (a.max_rank < 1) throw pbc::ValidationError("--max-rank must be >= 1");
  const auto resolved = pbc::resolve(pbc::load_rankings(a.rankings), pbc::load_ground_truth(a.gt));

  std::optional<double> build_seconds;
  if (!a.build_timing.empty()) {
    const auto t = read_timing(a.build_timing);
    if (auto it = t.find("build_seconds"); it != t.end() && !it->second.empty()) {
      build_seconds = it->second.front();
    }
  }
  std::vector<double> online;
  if (!a.timing.empty()) {
    const auto t = read_timing(a.timing);
    if (auto it = t.find("online_us"); it != t.end()) online = it->second;
  }
  const auto report = pbc::evaluate(resolved.lists, resolved.truth, a.max_rank,
                                    pbc::timing_report(build_seconds, online));
  if (report.excluded_probes > 0) {
    std::cerr << "warning: " << report.excluded_probes
              << " probe(s) without positives were excluded\n";
  }
  pbc::write_report_table(std::cout, report);
  std::cout << "\n";
  pbc::write_report_keyvalues(std::cout, report);
  if (!a.out.empty()) {
    std::ostringstream kv;
    pbc::write_report_keyvalues(kv, report);
    write_file(a.out, kv.str());
  }
}

std::string version_text() {
  return std::string("pbc ") + PBC_VERSION + " (index format " +
         std::to_string(pbc::kIndexFormatVersion) + ", feature format 1, score format 1)";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progressive bilateral-context re-ranking"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_text());
  app.add_option("--config", "key=value file; command-line flags take precedence");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic gallery, probes and ground truth");
  s->add_option("--out-dir", synth.out_dir, "Output directory")->required();
  s->add_option("--format", synth.format, "Feature file format")
      ->check(CLI::IsMember({"csv", "binary"}))
      ->capture_default_str();
  s->add_option("--num-ids", synth.cfg.num_ids)->capture_default_str();
  s->add_option("--gallery-per-id", synth.cfg.gallery_per_id)->capture_default_str();
  s->add_option("--probes-per-id", synth.cfg.probes_per_id)->capture_default_str();
  s->add_option("--dim", synth.cfg.dim)->capture_default_str();
  s->add_option("--noise", synth.cfg.intra_id_noise, "Intra-identity noise")
      ->capture_default_str();
  s->add_option("--camera-offset", synth.cfg.camera_offset_scale)->capture_default_str();
  s->add_option("--num-cameras", synth.cfg.num_cameras)->capture_default_str();
  s->add_option("--seed", synth.cfg.seed)->capture_default_str();
  s->add_option("--junk", synth.junk, "Junk rule for the ground truth")
      ->check(CLI::IsMember({"none", "same-camera"}))
      ->capture_default_str();

  BuildArgs build;
  auto* b = app.add_subcommand("build-index", "Offline phase: index a gallery");
  b->add_option("--gallery", build.gallery, "Gallery features (csv/PBCF) or PBCS score matrix")
      ->required()
      ->check(CLI::ExistingFile);
  b->add_option("--gallery-ids", build.gallery_ids, "Ids for a score-matrix gallery")
      ->check(CLI::ExistingFile);
  b->add_option("--metric", build.metric, "euclidean | cosine | precomputed")
      ->capture_default_str();
  b->add_option("--out", build.out, "Index file")->required();
  b->add_option("--k0", build.params.k0)->capture_default_str();
  b->add_option("--k", build.params.k)->capture_default_str();
  b->add_option("--L", build.params.L, "Default candidate count")->capture_default_str();
  b->add_option("--measure", build.measure)->capture_default_str();
  b->add_option("--weighting", build.weighting)->capture_default_str();
  b->add_option("--context-side", build.side)->capture_default_str();
  b->add_option("--stages", build.stages)->capture_default_str();
  b->add_option("--depth", build.depth, "Position-table depth cap, 0 = full")
      ->capture_default_str();
  b->add_option("--threads", build.threads, "0 = all cores")->capture_default_str();

  RerankArgs rr;
  auto* r = app.add_subcommand("rerank", "Online phase: re-rank probes against an index");
  r->add_option("--index", rr.index)->required()->check(CLI::ExistingFile);
  r->add_option("--queries", rr.queries, "Probe features (csv/PBCF) or PBCS score matrix")
      ->required()
      ->check(CLI::ExistingFile);
  r->add_option("--gallery", rr.gallery, "Gallery features, for feature queries")
      ->check(CLI::ExistingFile);
  r->add_option("--probe-ids", rr.probe_ids, "Ids for score-matrix queries")
      ->check(CLI::ExistingFile);
  r->add_option("--out", rr.out, "Rankings file")->required();
  r->add_option("--scores-out", rr.scores_out, "Per-candidate stage scores");
  r->add_option("--L", rr.L, "Candidates to re-rank (default from index)");
  r->add_option("--stages", rr.stages, "first | second | progressive");
  r->add_option("--measure", rr.measure, "nonreciprocal | max | sum | combined");
  r->add_option("--weighting", rr.weighting, "uniform | rank | reliability");
  r->add_option("--context-side", rr.side, "probe | gallery | bilateral");
  r->add_option("--topk-out", rr.topk_out, "Entries written per probe, 0 = all")
      ->capture_default_str();
  r->add_flag("--baseline-only", rr.baseline_only, "Write the initial rankings unchanged");
  r->add_option("--threads", rr.threads, "0 = all cores")->capture_default_str();

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "CMC, mAP and timing report");
  e->add_option("--rankings", ev.rankings)->required()->check(CLI::ExistingFile);
  e->add_option("--gt", ev.gt)->required()->check(CLI::ExistingFile);
  e->add_option("--timing", ev.timing, "Timing file written by rerank")
      ->check(CLI::ExistingFile);
  e->add_option("--build-timing", ev.build_timing, "Timing file written by build-index")
      ->check(CLI::ExistingFile);
  e->add_option("--max-rank", ev.max_rank)->capture_default_str();
  e->add_option("--out", ev.out, "Also write key=value report here");

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }

  try {
    if (*s) run_synth(synth);
    if (*b) run_build(build);
    if (*r) run_rerank(rr);
    if (*e) run_evaluate(ev);
  } catch (const pbc::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
