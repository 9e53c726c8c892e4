// Copyright 2026 The Chiralis Authors
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


#include "chiralis/feature_io.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "chiralis/error.hpp"

namespace chiralis {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / "chiralis_feature_io_test";
  fs::create_directories(dir);
  return dir;
}

std::vector<FeatureMap> random_maps(int n, int h, int w, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<FeatureMap> maps;
  for (int i = 0; i < n; ++i) {
    FeatureMap m(h, w, c);
    for (int r = 0; r < h; ++r)
      for (int col = 0; col < w; ++col) {
        if ((r + col + i) % 3 == 0) continue;
        m.set_foreground(r, col, true);
        for (auto& v : m.pixel(r, col)) v = u(rng);
      }
    maps.push_back(std::move(m));
  }
  return maps;
}

TEST(Container, ViewMapsRoundTrip) {
  const auto maps = random_maps(3, 5, 4, 2, 1);
  const auto c = FeatureContainer::from_maps(maps);
  EXPECT_EQ(c.kind, ContainerKind::view_maps);
  EXPECT_EQ(c.dims, (std::vector<std::uint32_t>{3, 5, 4, 2}));
  const auto back = decode_container(encode_container(c));
  EXPECT_EQ(back, c);
  const auto again = back.to_maps();
  ASSERT_EQ(again.size(), maps.size());
  for (std::size_t i = 0; i < maps.size(); ++i) EXPECT_TRUE(again[i] == maps[i]);
}

TEST(Container, VertexFeaturesRoundTripThroughFloat32) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd m(1 + t, 1 + t % 7);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    const auto c = FeatureContainer::from_matrix(m);
    const auto bytes = encode_container(c);
    EXPECT_EQ(bytes.size(), 4 + 4 + 4 + 8 + 4 * static_cast<std::size_t>(m.size()) + 4);
    const Eigen::MatrixXd back = decode_container(bytes).to_matrix();
    EXPECT_EQ(back, m.cast<float>().cast<double>());
  }
}

TEST(Container, FileRoundTripAndErrors) {
  const auto path = scratch_dir() / "f.cfv";
  const auto c = FeatureContainer::from_matrix(Eigen::MatrixXd::Constant(4, 3, 0.25));
  write_container(path, c);
  EXPECT_EQ(read_container(path), c);

  auto bytes = encode_container(c);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 6);
  try {
    decode_container(truncated);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("size mismatch"), std::string::npos) << e.what();
  }
  auto corrupt = bytes;
  corrupt[bytes.size() - 10] ^= 0x01;
  try {
    decode_container(corrupt);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum mismatch"), std::string::npos) << e.what();
  }
  auto version = bytes;
  version[4] = 9;
  EXPECT_THROW(decode_container(version), IoError);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(decode_container(magic), IoError);
  EXPECT_THROW(read_container(scratch_dir() / "missing.cfv"), IoError);
}

TEST(PairManifest, FilesRoundTrip) {
  const auto dir = scratch_dir() / "pair";
  fs::create_directories(dir);
  const TriangleMesh mesh = make_bilateral_mesh(3, 6, 10);
  SyntheticSpec spec;
  const auto syn = generate_synthetic_pair(mesh, spec);
  save_off(dir / "shape.off", mesh);
  PairManifest m;
  m.shape_id = "shape";
  m.mesh = dir / "shape.off";
  m.provenance = "synthetic";
  m.config = {{"seed", 42}};
  write_pair_files(dir / "shape.pair.json", syn.pair, m);
  const auto back = read_pair_manifest(dir / "shape.pair.json");
  EXPECT_EQ(back.shape_id, "shape");
  EXPECT_EQ(back.config["seed"], 42);
  EXPECT_EQ(fs::canonical(back.mesh), fs::canonical(dir / "shape.off"));
  const ChiralPair p = read_pair_files(back);
  EXPECT_EQ(p.features, syn.pair.features.cast<float>().cast<double>());
  EXPECT_EQ(p.features_flipped, syn.pair.features_flipped.cast<float>().cast<double>());
  EXPECT_EQ(p.view_count, syn.pair.view_count);
}

TEST(PairManifest, MissingFieldIsAFormatError) {
  const auto path = scratch_dir() / "bad.pair.json";
  {
    std::ofstream o(path);
    o << R"({"format":"chiralis-pair","version":1,"shape_id":"x"})";
  }
  EXPECT_THROW(read_pair_manifest(path), FormatError);
}

TEST(ViewMapsManifest, OptionalSidecar) {
  const auto path = scratch_dir() / "views.json";
  ViewMapsManifest m;
  m.shape_id = "s";
  m.camera_manifest = scratch_dir() / "cams.json";
  m.provenance = "exporter";
  m.channel_groups = {384, 384};
  write_view_maps_manifest(path, m);
  const auto back = read_view_maps_manifest(path);
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(back->channel_groups, m.channel_groups);
  EXPECT_FALSE(read_view_maps_manifest(scratch_dir() / "nope.json").has_value());
}

TEST(Synthetic, NoiselessStructure) {
  const TriangleMesh mesh = make_bilateral_mesh(1);
  SyntheticSpec spec;
  spec.noise = 0.0;
  const auto syn = generate_synthetic_pair(mesh, spec);
  const auto& F = syn.pair.features;
  const auto& Fb = syn.pair.features_flipped;
  ASSERT_EQ(F.cols(), 10);
  EXPECT_EQ(F.leftCols(8), Fb.leftCols(8));
  EXPECT_EQ(F.rightCols(2), -Fb.rightCols(2));
  EXPECT_EQ(F, syn.clean_features);
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    const double x = mesh.vertices()(static_cast<Eigen::Index>(v), 0);
    if (syn.on_plane[v]) continue;
    EXPECT_EQ(syn.labels.labels[v], x > 0 ? 1 : -1);
    EXPECT_GT(F(static_cast<Eigen::Index>(v), 8) * syn.labels.labels[v], 0.0);
  }
}

TEST(Synthetic, MirrorTwinsShareSymmetricChannels) {
  // Reflecting a vertex across the plane leaves the symmetric channels unchanged.
  Coords pts(2, 3);
  pts << 0.4, 0.2, -0.3, -0.4, 0.2, -0.3;
  Coords tri(3, 3);
  tri << 0.4, 0.2, -0.3, -0.4, 0.2, -0.3, 0.0, 0.9, 0.0;
  const TriangleMesh mesh(tri, {{0, 1, 2}});
  SyntheticSpec spec;
  spec.noise = 0.0;
  const auto syn = generate_synthetic_pair(mesh, spec);
  EXPECT_NEAR((syn.pair.features.row(0).head(8) - syn.pair.features.row(1).head(8)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((syn.pair.features.row(0).tail(2) + syn.pair.features.row(1).tail(2)).norm(), 0.0, 1e-12);
}

TEST(Synthetic, LabelsBalanced) {
  const TriangleMesh mesh = make_bilateral_mesh(4);
  const auto syn = generate_synthetic_pair(mesh, {});
  long plus = 0, minus = 0, plane = 0;
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    if (syn.on_plane[v]) {
      ++plane;
      continue;
    }
    (syn.labels.labels[v] > 0 ? plus : minus) += 1;
  }
  EXPECT_LE(std::abs(plus - minus), plane);
}

TEST(Synthetic, ChiralChannelSeparatesSidesLinearly) {
  const TriangleMesh mesh = make_bilateral_mesh(6);
  const auto syn = generate_synthetic_pair(mesh, {});
  std::size_t correct = 0, counted = 0;
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    if (syn.on_plane[v]) continue;
    ++counted;
    if ((syn.pair.features(static_cast<Eigen::Index>(v), 8) > 0 ? 1 : -1) == syn.labels.labels[v]) ++correct;
  }
  EXPECT_EQ(correct, counted);
}

TEST(Synthetic, DeterministicPerSeedAndStream) {
  const TriangleMesh mesh = make_bilateral_mesh(2, 8, 12);
  SyntheticSpec a;
  const auto x = generate_synthetic_pair(mesh, a);
  const auto y = generate_synthetic_pair(mesh, a);
  EXPECT_EQ(x.pair.features, y.pair.features);
  SyntheticSpec b = a;
  b.noise_stream = 1;
  EXPECT_NE(generate_synthetic_pair(mesh, b).pair.features, x.pair.features);
}

TEST(Synthetic, SpecValidation) {
  SyntheticSpec s;
  s.noise = -1.0;
  EXPECT_THROW(s.validate(), ParameterError);
  s = {};
  s.plane_normal = Eigen::Vector3d::Zero();
  EXPECT_THROW(s.validate(), ParameterError);
}

TEST(BilateralMesh, IsMirrorSymmetric) {
  const TriangleMesh mesh = make_bilateral_mesh(7);
  EXPECT_EQ(mesh.vertex_count(), 25u * 40u + 2u);
  const auto& V = mesh.vertices();
  EXPECT_LE(V.rowwise().norm().maxCoeff(), 1.0 + 1e-12);
  for (Eigen::Index i = 0; i < V.rows(); ++i) {
    Eigen::RowVector3d m = V.row(i);
    m(0) = -m(0);
    EXPECT_LT((V.rowwise() - m).rowwise().norm().minCoeff(), 1e-12);
  }
}

TEST(RenderSyntheticViews, FlippedImagesNegateChiralChannels) {
  const TriangleMesh mesh = make_bilateral_mesh(5, 10, 16);
  const auto views = generate_camera_ring(2, 2.0, std::vector<double>{0.0}, RingOptions{24, 24, 65.0});
  const auto syn = generate_synthetic_pair(mesh, {});
  const std::vector<int> neg{8, 9};
  const auto out = render_synthetic_views(mesh, views, syn.pair.features, neg);
  ASSERT_EQ(out.original.size(), views.size());
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto flipped = flip_feature_map_horizontal(out.original[i]);
    const auto& fi = out.flipped_images[i];
    for (int r = 0; r < fi.height(); ++r)
      for (int c = 0; c < fi.width(); ++c) {
        ASSERT_EQ(fi.foreground(r, c), flipped.foreground(r, c));
        const auto a = fi.pixel(r, c), b = flipped.pixel(r, c);
        for (int ch = 0; ch < 10; ++ch) EXPECT_EQ(a[ch], (ch >= 8 ? -1.0f : 1.0f) * b[ch]);
      }
  }
}

}  // namespace
}  // namespace chiralis
