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
#include <utility>
#include <vector>

namespace pbc {

struct SampleInfo {
  std::string id;
  std::optional<std::int32_t> camera;
  std::optional<std::string> label;

  friend bool operator==(const SampleInfo&, const SampleInfo&) = default;
};

// Dense row-major N x d matrix of 32-bit features plus per-sample metadata.
// Construction validates: N >= 1, d >= 1, unique ids, data.size() == N * d.
class FeatureSet {
 public:
  FeatureSet(std::vector<SampleInfo> samples, std::vector<float> data,
             std::uint32_t dim);

  std::uint32_t size() const { return static_cast<std::uint32_t>(samples_.size()); }
  std::uint32_t dim() const { return dim_; }

  std::span<const float> row(std::uint32_t i) const {
    return {data_.data() + static_cast<std::size_t>(i) * dim_, dim_};
  }
  const SampleInfo& sample(std::uint32_t i) const { return samples_[i]; }
  const std::vector<SampleInfo>& samples() const { return samples_; }
  const std::vector<float>& data() const { return data_; }

  bool has_cameras() const;
  bool has_labels() const;

  // FNV-1a over ids, metadata and raw feature bits.
  std::uint64_t fingerprint() const;

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  std::vector<SampleInfo> samples_;
  std::vector<float> data_;
  std::uint32_t dim_;
};

enum class FeatureFormat { csv, binary };

// Picks csv for a ".csv" extension, binary otherwise.
FeatureFormat feature_format_from_path(const std::filesystem::path& path);

FeatureSet load_features(const std::filesystem::path& path, FeatureFormat format);
void save_features(const FeatureSet& fs, const std::filesystem::path& path,
                   FeatureFormat format);

struct SynthConfig {
  std::uint32_t num_ids = 100;
  std::uint32_t gallery_per_id = 6;
  std::uint32_t probes_per_id = 1;
  std::uint32_t dim = 32;
  double intra_id_noise = 0.8;
  double camera_offset_scale = 0.3;
  std::uint32_t num_cameras = 6;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticData {
  FeatureSet gallery;
  FeatureSet probes;
};

// Identity centroids on the unit sphere, plus a fixed offset per camera,
// plus isotropic Gaussian noise whose expected norm is intra_id_noise.
// Gallery image j of identity i is taken by camera (i + j) mod num_cameras.
// Each probe uses a camera other than the one of the identity's first
// gallery image. Pure function of the config.
SyntheticData generate_synthetic(const SynthConfig& cfg);

}  // namespace pbc
