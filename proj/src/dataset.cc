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

#include "pbc/dataset.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string_view>
#include <unordered_set>

#include "pbc/binary_io.h"
#include "pbc/error.h"

namespace pbc {
namespace {

constexpr char kFeatureMagic[4] = {'P', 'B', 'C', 'F'};
constexpr std::uint32_t kFeatureVersion = 1;
constexpr std::uint8_t kHasCamera = 0x1;
constexpr std::uint8_t kHasLabel = 0x2;
// Binary encoding of "no camera" inside a set where some samples have one.
constexpr std::int32_t kAbsentCamera = std::numeric_limits<std::int32_t>::min();

bool is_token_safe(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c == ',' || c == ':' || c == '|' || c == ' ' || c == '\t' ||
        c == '\n' || c == '\r') {
      return false;
    }
  }
  return true;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_float(float v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Deterministic standard normal draws from a mt19937_64 stream. The
// distributions in <random> are implementation-defined, so the generator
// spells out its own transform.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

  double uniform_open() {
    // 53 random bits mapped into (0, 1).
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform_open();
    double u2 = uniform_open();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::vector<double> unit_vector(NormalSource& rng, std::uint32_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace

FeatureSet::FeatureSet(std::vector<SampleInfo> samples, std::vector<float> data,
                       std::uint32_t dim)
    : samples_(std::move(samples)), data_(std::move(data)), dim_(dim) {
  if (samples_.empty()) throw ValidationError("feature set must hold at least one sample");
  if (dim_ == 0) throw ValidationError("feature dimension must be >= 1");
  if (data_.size() != static_cast<std::size_t>(samples_.size()) * dim_) {
    throw ValidationError("feature data size does not match N x d");
  }
  std::unordered_set<std::string_view> seen;
  seen.reserve(samples_.size());
  for (const auto& s : samples_) {
    if (!is_token_safe(s.id)) {
      throw ValidationError("invalid sample id '" + s.id +
                            "' (must be non-empty, no whitespace or ',:|')");
    }
    if (s.label && (!is_token_safe(*s.label) || *s.label == "-")) {
      throw ValidationError("invalid label '" + *s.label + "' for sample " + s.id);
    }
    if (s.camera && *s.camera == kAbsentCamera) {
      throw ValidationError("camera id out of range for sample " + s.id);
    }
    if (!seen.insert(s.id).second) {
      throw ValidationError("duplicate sample id '" + s.id + "'");
    }
  }
}

bool FeatureSet::has_cameras() const {
  for (const auto& s : samples_) {
    if (s.camera) return true;
  }
  return false;
}

bool FeatureSet::has_labels() const {
  for (const auto& s : samples_) {
    if (s.label) return true;
  }
  return false;
}

std::uint64_t FeatureSet::fingerprint() const {
  io::Fnv1a h;
  h.update_value(size());
  h.update_value(dim_);
  for (const auto& s : samples_) {
    h.update(s.id);
    h.update_value<std::uint8_t>(0);
    h.update_value(s.camera.value_or(kAbsentCamera));
    h.update(s.label.value_or(""));
    h.update_value<std::uint8_t>(0);
  }
  for (float f : data_) h.update_value(std::bit_cast<std::uint32_t>(f));
  return h.digest();
}

FeatureFormat feature_format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? FeatureFormat::csv : FeatureFormat::binary;
}

namespace {

FeatureSet load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string where = path.string() + ":";
  std::string line;
  if (!std::getline(in, line)) throw LoadError(where + "1: missing header");
  auto header = split_commas(trim(line));
  std::uint32_t dim = 0;
  if (header.size() != 4 || trim(header[0]) != "id" || trim(header[1]) != "camera" ||
      trim(header[2]) != "label" || !trim(header[3]).starts_with("d=") ||
      !parse_number(trim(header[3]).substr(2), dim) || dim == 0) {
    throw LoadError(where + "1: malformed header, expected 'id,camera,label,d=<D>'");
  }

  std::vector<SampleInfo> samples;
  std::vector<float> data;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    const std::string at = where + std::to_string(line_no) + ": ";
    auto cols = split_commas(view);
    if (cols.size() != 3 + static_cast<std::size_t>(dim)) {
      throw LoadError(at + "expected " + std::to_string(3 + dim) + " columns, found " +
                      std::to_string(cols.size()));
    }
    SampleInfo info;
    info.id = std::string(trim(cols[0]));
    if (!seen.insert(info.id).second) {
      throw LoadError(at + "duplicate sample id '" + info.id + "'");
    }
    if (auto cam = trim(cols[1]); cam != "-") {
      std::int32_t c = 0;
      if (!parse_number(cam, c)) throw LoadError(at + "bad camera id '" + std::string(cam) + "'");
      info.camera = c;
    }
    if (auto label = trim(cols[2]); label != "-") info.label = std::string(label);
    for (std::uint32_t j = 0; j < dim; ++j) {
      float v = 0.0F;
      if (!parse_number(cols[3 + j], v)) {
        throw LoadError(at + "bad feature value '" + std::string(trim(cols[3 + j])) + "'");
      }
      data.push_back(v);
    }
    samples.push_back(std::move(info));
  }
  if (samples.empty()) throw LoadError(where + " no samples");
  try {
    return FeatureSet(std::move(samples), std::move(data), dim);
  } catch (const ValidationError& e) {
    throw LoadError(where + " " + e.what());
  }
}

FeatureSet load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string where = path.string() + ": ";
  io::BinaryReader r(in);
  std::uint32_t record = 0;
  try {
    if (r.get_bytes(4) != std::string_view(kFeatureMagic, 4)) {
      throw LoadError(where + "bad magic, not a PBCF feature file");
    }
    auto version = r.get<std::uint32_t>();
    if (version != kFeatureVersion) {
      throw LoadError(where + "unsupported feature file version " + std::to_string(version));
    }
    auto n = r.get<std::uint32_t>();
    auto dim = r.get<std::uint32_t>();
    auto flags = r.get<std::uint8_t>();
    if (n == 0 || dim == 0) throw LoadError(where + "header declares N=0 or D=0");
    if ((flags & ~(kHasCamera | kHasLabel)) != 0) {
      throw LoadError(where + "unknown flag bits in header");
    }
    std::vector<SampleInfo> samples;
    std::vector<float> data;
    std::unordered_set<std::string> seen;
    for (record = 0; record < n; ++record) {
      SampleInfo info;
      info.id = r.get_short_string();
      if (!seen.insert(info.id).second) {
        throw LoadError(where + "record " + std::to_string(record) + ": duplicate sample id '" +
                        info.id + "'");
      }
      if (flags & kHasCamera) {
        auto cam = r.get<std::int32_t>();
        if (cam != kAbsentCamera) info.camera = cam;
      }
      if (flags & kHasLabel) {
        auto label = r.get_short_string();
        if (!label.empty()) info.label = std::move(label);
      }
      std::size_t offset = data.size();
      data.resize(offset + dim);
      r.get_array(std::span<float>(data.data() + offset, dim));
      samples.push_back(std::move(info));
    }
    if (!r.at_end()) throw LoadError(where + "trailing bytes after last record");
    return FeatureSet(std::move(samples), std::move(data), dim);
  } catch (const io::TruncatedError&) {
    throw LoadError(where + "truncated at record " + std::to_string(record));
  } catch (const ValidationError& e) {
    throw LoadError(where + e.what());
  }
}

}  // namespace

FeatureSet load_features(const std::filesystem::path& path, FeatureFormat format) {
  return format == FeatureFormat::csv ? load_csv(path) : load_binary(path);
}

void save_features(const FeatureSet& fs, const std::filesystem::path& path,
                   FeatureFormat format) {
  if (format == FeatureFormat::csv) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "id,camera,label,d=" << fs.dim() << '\n';
    for (std::uint32_t i = 0; i < fs.size(); ++i) {
      const auto& s = fs.sample(i);
      out << s.id << ',';
      if (s.camera) out << *s.camera; else out << '-';
      out << ',' << s.label.value_or("-");
      for (float v : fs.row(i)) out << ',' << format_float(v);
      out << '\n';
    }
    if (!out.flush()) throw IoError("write failed for " + path.string());
    return;
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  io::BinaryWriter w(out);
  std::uint8_t flags = (fs.has_cameras() ? kHasCamera : 0) | (fs.has_labels() ? kHasLabel : 0);
  w.put_bytes(std::string_view(kFeatureMagic, 4));
  w.put(kFeatureVersion);
  w.put(fs.size());
  w.put(fs.dim());
  w.put(flags);
  for (std::uint32_t i = 0; i < fs.size(); ++i) {
    const auto& s = fs.sample(i);
    w.put_short_string(s.id);
    if (flags & kHasCamera) w.put(s.camera.value_or(kAbsentCamera));
    if (flags & kHasLabel) w.put_short_string(s.label.value_or(""));
    w.put_array(fs.row(i));
  }
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

void SynthConfig::validate() const {
  if (num_ids < 2) throw ValidationError("num_ids must be >= 2");
  if (gallery_per_id < 1) throw ValidationError("gallery_per_id must be >= 1");
  if (probes_per_id < 1) throw ValidationError("probes_per_id must be >= 1");
  if (dim < 2) throw ValidationError("dim must be >= 2");
  if (num_cameras < 2) throw ValidationError("num_cameras must be >= 2");
  if (!(intra_id_noise >= 0.0) || !std::isfinite(intra_id_noise)) {
    throw ValidationError("intra_id_noise must be a finite value >= 0");
  }
  if (!(camera_offset_scale >= 0.0) || !std::isfinite(camera_offset_scale)) {
    throw ValidationError("camera_offset_scale must be a finite value >= 0");
  }
}

SyntheticData generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  NormalSource rng(cfg.seed);
  const std::uint32_t dim = cfg.dim;
  const double noise_sd = cfg.intra_id_noise / std::sqrt(static_cast<double>(dim));

  std::vector<std::vector<double>> camera_offsets;
  for (std::uint32_t c = 0; c < cfg.num_cameras; ++c) {
    auto v = unit_vector(rng, dim);
    for (double& x : v) x *= cfg.camera_offset_scale;
    camera_offsets.push_back(std::move(v));
  }
  std::vector<std::vector<double>> centroids;
  for (std::uint32_t i = 0; i < cfg.num_ids; ++i) centroids.push_back(unit_vector(rng, dim));

  auto sample = [&](std::uint32_t id, std::uint32_t camera, std::vector<float>& data) {
    for (std::uint32_t j = 0; j < dim; ++j) {
      double v = centroids[id][j] + camera_offsets[camera][j] + noise_sd * rng.normal();
      data.push_back(static_cast<float>(v));
    }
  };
  auto label_of = [](std::uint32_t id) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "id%05u", id);
    return std::string(buf);
  };

  std::vector<SampleInfo> gallery_info;
  std::vector<float> gallery_data;
  for (std::uint32_t id = 0; id < cfg.num_ids; ++id) {
    for (std::uint32_t j = 0; j < cfg.gallery_per_id; ++j) {
      auto camera = (id + j) % cfg.num_cameras;
      sample(id, camera, gallery_data);
      gallery_info.push_back({"g_" + label_of(id) + "_" + std::to_string(j),
                              static_cast<std::int32_t>(camera), label_of(id)});
    }
  }

  std::vector<SampleInfo> probe_info;
  std::vector<float> probe_data;
  for (std::uint32_t id = 0; id < cfg.num_ids; ++id) {
    const std::uint32_t first_gallery_camera = id % cfg.num_cameras;
    for (std::uint32_t j = 0; j < cfg.probes_per_id; ++j) {
      auto shift = 1 + static_cast<std::uint32_t>(rng.below(cfg.num_cameras - 1));
      auto camera = (first_gallery_camera + shift) % cfg.num_cameras;
      sample(id, camera, probe_data);
      probe_info.push_back({"p_" + label_of(id) + "_" + std::to_string(j),
                            static_cast<std::int32_t>(camera), label_of(id)});
    }
  }
  return {FeatureSet(std::move(gallery_info), std::move(gallery_data), dim),
          FeatureSet(std::move(probe_info), std::move(probe_data), dim)};
}

}  // namespace pbc
