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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "pbc/baseline.h"
#include "pbc/error.h"
#include "test_util.h"

namespace pbc {
namespace {

using testing::TempDir;

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

TEST(FeatureSetTest, RejectsDuplicateIdsAndBadShapes) {
  EXPECT_THROW(FeatureSet({{"a", {}, {}}, {"a", {}, {}}}, {1, 2}, 1), ValidationError);
  EXPECT_THROW(FeatureSet({{"a", {}, {}}}, {1, 2}, 1), ValidationError);
  EXPECT_THROW(FeatureSet({}, {}, 1), ValidationError);
  EXPECT_THROW(FeatureSet({{"a", {}, {}}}, {}, 0), ValidationError);
  EXPECT_THROW(FeatureSet({{"a b", {}, {}}}, {1}, 1), ValidationError);
}

TEST(CsvFormatTest, ParsesThreeRowsOfDimTwo) {
  TempDir dir;
  write_text(dir / "f.csv",
             "id,camera,label,d=2\n"
             "a,1,x,0.5,1\n"
             "b,-,-,2,-3.25\n"
             "c,7,y,1e-3,4\n");
  auto fs = load_features(dir / "f.csv", FeatureFormat::csv);
  ASSERT_EQ(fs.size(), 3U);
  EXPECT_EQ(fs.dim(), 2U);
  EXPECT_EQ(fs.sample(0).camera, 1);
  EXPECT_EQ(fs.sample(0).label, "x");
  EXPECT_FALSE(fs.sample(1).camera.has_value());
  EXPECT_FALSE(fs.sample(1).label.has_value());
  EXPECT_FLOAT_EQ(fs.row(1)[1], -3.25F);
  EXPECT_FLOAT_EQ(fs.row(2)[0], 1e-3F);
}

TEST(CsvFormatTest, WrongColumnCountNamesTheLine) {
  TempDir dir;
  write_text(dir / "f.csv", "id,camera,label,d=2\na,1,x,0.5,1\nb,1,x,1,2,3\n");
  try {
    load_features(dir / "f.csv", FeatureFormat::csv);
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(CsvFormatTest, MalformedHeaderAndDuplicateIds) {
  TempDir dir;
  write_text(dir / "h.csv", "id,label,d=2\na,1,2\n");
  EXPECT_THROW(load_features(dir / "h.csv", FeatureFormat::csv), LoadError);
  write_text(dir / "d.csv", "id,camera,label,d=1\na,1,x,0.5\na,2,x,1\n");
  try {
    load_features(dir / "d.csv", FeatureFormat::csv);
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos);
  }
  write_text(dir / "v.csv", "id,camera,label,d=1\na,1,x,zero\n");
  EXPECT_THROW(load_features(dir / "v.csv", FeatureFormat::csv), LoadError);
}

TEST(SaveFeaturesTest, SingleValueRoundTripsInBothFormats) {
  TempDir dir;
  FeatureSet fs({{"only", {}, {}}}, {0.5F}, 1);
  save_features(fs, dir / "one.csv", FeatureFormat::csv);
  save_features(fs, dir / "one.bin", FeatureFormat::binary);
  EXPECT_EQ(load_features(dir / "one.csv", FeatureFormat::csv), fs);
  EXPECT_EQ(load_features(dir / "one.bin", FeatureFormat::binary), fs);
}

TEST(SaveFeaturesTest, BinaryRoundTripIsBitExactOnRandomSets) {
  TempDir dir;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SynthConfig cfg;
    cfg.num_ids = 3 + static_cast<std::uint32_t>(seed % 4);
    cfg.gallery_per_id = 1 + static_cast<std::uint32_t>(seed % 3);
    cfg.dim = 2 + static_cast<std::uint32_t>(seed % 7);
    cfg.seed = seed;
    auto data = generate_synthetic(cfg);
    save_features(data.gallery, dir / "g.bin", FeatureFormat::binary);
    auto back = load_features(dir / "g.bin", FeatureFormat::binary);
    EXPECT_EQ(back, data.gallery);
    EXPECT_EQ(back.fingerprint(), data.gallery.fingerprint());
  }
}

TEST(SaveFeaturesTest, MixedMetadataSurvivesBinary) {
  TempDir dir;
  FeatureSet fs({{"a", 3, std::nullopt}, {"b", std::nullopt, "lab"}, {"c", -2, "lab"}},
                {1, 2, 3, 4, 5, 6}, 2);
  save_features(fs, dir / "m.bin", FeatureFormat::binary);
  EXPECT_EQ(load_features(dir / "m.bin", FeatureFormat::binary), fs);
}

TEST(SaveFeaturesTest, CsvRoundTripWithinTolerance) {
  TempDir dir;
  auto fs = testing::random_features(40, 9, 77);
  save_features(fs, dir / "r.csv", FeatureFormat::csv);
  auto back = load_features(dir / "r.csv", FeatureFormat::csv);
  ASSERT_EQ(back.size(), fs.size());
  EXPECT_EQ(back.samples(), fs.samples());
  for (std::size_t i = 0; i < fs.data().size(); ++i) {
    EXPECT_NEAR(back.data()[i], fs.data()[i], 1e-9);
  }
}

TEST(SaveFeaturesTest, UnwritablePathIsIoError) {
  FeatureSet fs({{"a", {}, {}}}, {1.0F}, 1);
  EXPECT_THROW(save_features(fs, "/nonexistent-dir/x.bin", FeatureFormat::binary), IoError);
  EXPECT_THROW(load_features("/nonexistent-dir/x.bin", FeatureFormat::binary), IoError);
}

TEST(BinaryFormatTest, HeaderLayoutMatchesTheDocumentedEncoding) {
  TempDir dir;
  FeatureSet fs({{"ab", 5, "L"}}, {1.0F, -2.0F}, 2);
  save_features(fs, dir / "x.bin", FeatureFormat::binary);
  std::ifstream in(dir / "x.bin", std::ios::binary);
  std::vector<unsigned char> b((std::istreambuf_iterator<char>(in)), {});
  const std::vector<unsigned char> expected = {
      'P', 'B', 'C', 'F', 1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 0x3,  // header
      2, 0, 'a', 'b',                                              // id
      5, 0, 0, 0,                                                  // camera
      1, 0, 'L',                                                   // label
      0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0};             // 1.0f, -2.0f
  EXPECT_EQ(b, expected);
}

TEST(BinaryFormatTest, TruncatedAndForeignFilesAreLoadErrors) {
  TempDir dir;
  auto fs = testing::random_features(5, 3, 3);
  save_features(fs, dir / "x.bin", FeatureFormat::binary);
  std::filesystem::resize_file(dir / "x.bin", std::filesystem::file_size(dir / "x.bin") - 3);
  EXPECT_THROW(load_features(dir / "x.bin", FeatureFormat::binary), LoadError);
  write_text(dir / "y.bin", "NOPE and more bytes");
  EXPECT_THROW(load_features(dir / "y.bin", FeatureFormat::binary), LoadError);
}

TEST(SyntheticTest, ZeroNoiseProbesFindTheirOwnIdentityFirst) {
  SynthConfig cfg;
  cfg.num_ids = 2;
  cfg.gallery_per_id = 1;
  cfg.probes_per_id = 1;
  cfg.intra_id_noise = 0.0;
  cfg.camera_offset_scale = 0.0;
  cfg.dim = 8;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    auto d = generate_synthetic(cfg);
    for (std::uint32_t p = 0; p < d.probes.size(); ++p) {
      auto list = compute_probe_ranking(d.probes.row(p), d.gallery, Metric::euclidean);
      EXPECT_EQ(d.gallery.sample(list.order[0]).label, d.probes.sample(p).label);
    }
  }
}

TEST(SyntheticTest, FixedSeedIsBitIdentical) {
  SynthConfig cfg;
  cfg.seed = 12345;
  auto a = generate_synthetic(cfg);
  auto b = generate_synthetic(cfg);
  EXPECT_EQ(a.gallery, b.gallery);
  EXPECT_EQ(a.probes, b.probes);
  cfg.seed = 12346;
  EXPECT_NE(generate_synthetic(cfg).gallery, a.gallery);
}

TEST(SyntheticTest, ShapeMetadataAndLabelCoverage) {
  SynthConfig cfg;
  cfg.num_ids = 7;
  cfg.gallery_per_id = 3;
  cfg.probes_per_id = 2;
  cfg.dim = 5;
  cfg.num_cameras = 4;
  auto d = generate_synthetic(cfg);
  EXPECT_EQ(d.gallery.size(), 21U);
  EXPECT_EQ(d.probes.size(), 14U);
  std::set<std::string> gallery_labels;
  for (const auto& s : d.gallery.samples()) {
    ASSERT_TRUE(s.label && s.camera);
    gallery_labels.insert(*s.label);
  }
  for (const auto& p : d.probes.samples()) {
    ASSERT_TRUE(p.label && p.camera);
    EXPECT_TRUE(gallery_labels.count(*p.label));
    // Some gallery image of the same identity comes from another camera.
    bool other_camera = false;
    for (const auto& g : d.gallery.samples()) {
      if (g.label == p.label && g.camera != p.camera) other_camera = true;
    }
    EXPECT_TRUE(other_camera) << p.id;
  }
}

TEST(SyntheticTest, CentroidsAreUnitNormAtZeroNoise) {
  SynthConfig cfg;
  cfg.intra_id_noise = 0.0;
  cfg.camera_offset_scale = 0.0;
  cfg.num_ids = 4;
  cfg.dim = 16;
  auto d = generate_synthetic(cfg);
  for (std::uint32_t i = 0; i < d.gallery.size(); ++i) {
    double norm = 0.0;
    for (float v : d.gallery.row(i)) norm += static_cast<double>(v) * v;
    EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-6);
  }
}

TEST(SyntheticTest, InvalidConfigsAreRejected) {
  SynthConfig cfg;
  cfg.num_ids = 1;
  EXPECT_THROW(generate_synthetic(cfg), ValidationError);
  cfg = {};
  cfg.dim = 1;
  EXPECT_THROW(generate_synthetic(cfg), ValidationError);
  cfg = {};
  cfg.gallery_per_id = 0;
  EXPECT_THROW(generate_synthetic(cfg), ValidationError);
  cfg = {};
  cfg.intra_id_noise = -1;
  EXPECT_THROW(generate_synthetic(cfg), ValidationError);
}

}  // namespace
}  // namespace pbc
