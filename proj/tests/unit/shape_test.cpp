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


#include "chiralis/shape.hpp"

#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "chiralis/error.hpp"
#include "chiralis/feature_io.hpp"
#include "support/oracles.hpp"

namespace chiralis {
namespace {

TEST(LoadMesh, SingleTriangleHasThreeEdges) {
  std::istringstream in("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
  const TriangleMesh m = parse_off(in);
  EXPECT_EQ(m.vertex_count(), 3u);
  EXPECT_EQ(m.edges().size(), 3u);
}

TEST(LoadMesh, TetrahedronHasSixEdges) {
  std::istringstream in(
      "# tetra\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
      "f 1 2 3\nf 1 2 4\nf 1/1 3/1 4/1\nf 2//1 3//1 4//1\n");
  const TriangleMesh m = parse_obj(in);
  EXPECT_EQ(m.edges().size(), 6u);
  for (const Edge& e : m.edges()) EXPECT_LT(e[0], e[1]);
}

TEST(LoadMesh, OutOfRangeFaceIndexIsValidationError) {
  std::istringstream in("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 9\n");
  EXPECT_THROW(parse_off(in), ValidationError);
}

TEST(LoadMesh, QuadIsRejectedWithLineNumber) {
  std::istringstream in("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  try {
    parse_obj(in);
    FAIL() << "quad accepted";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 5u);
  }
}

TEST(LoadMesh, ParseErrorReportsLine) {
  std::istringstream in("OFF\n3 1 0\n0 0 0\n1 zero 0\n0 1 0\n3 0 1 2\n");
  try {
    parse_off(in);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(LoadMesh, NegativeObjIndicesAreRelative) {
  std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n");
  const TriangleMesh m = parse_obj(in);
  EXPECT_EQ(m.faces()[0], (Face{0, 1, 2}));
}

TEST(LoadMesh, FileRoundTripThroughOff) {
  const auto path = std::filesystem::temp_directory_path() / "chiralis_shape_rt.off";
  const TriangleMesh m = make_bilateral_mesh(3, 6, 8);
  save_off(path, m);
  const TriangleMesh back = load_mesh(path);
  EXPECT_EQ(back.faces(), m.faces());
  EXPECT_EQ(back.vertices(), m.vertices());
  std::filesystem::remove(path);
}

TEST(MeshEdges, ExtractionIsIdempotentAndBackedByFaces) {
  const TriangleMesh m = make_bilateral_mesh(11, 8, 12);
  EXPECT_EQ(edges_from_faces(m.faces()), m.edges());
  std::set<Edge> from_faces;
  for (const Face& f : m.faces())
    for (int k = 0; k < 3; ++k)
      from_faces.insert({std::min(f[k], f[(k + 1) % 3]), std::max(f[k], f[(k + 1) % 3])});
  EXPECT_EQ(from_faces.size(), m.edges().size());
  for (const Edge& e : m.edges()) EXPECT_TRUE(from_faces.count(e));
}

TEST(KnnGraph, CollinearTieResolvesToLowerIndex) {
  Coords p(3, 3);
  p << 0, 0, 0, 1, 0, 0, 2, 0, 0;
  const auto edges = build_knn_graph(p, 1);
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_EQ(edges[0], (Edge{0, 1}));
}

TEST(KnnGraph, SeparatedPairsGiveOneEdgeEach) {
  Coords p(4, 3);
  p << 0, 0, 0, 0.1, 0, 0, 100, 0, 0, 100.1, 0, 0;
  const auto edges = build_knn_graph(p, 1);
  EXPECT_EQ(edges, (std::vector<Edge>{{0, 1}, {2, 3}}));
}

TEST(KnnGraph, RandomCloudMatchesBruteForce) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Coords p(100, 3);
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (int c = 0; c < 3; ++c) p(i, c) = u(rng);
  const auto edges = build_knn_graph(p, 5);
  const auto expected = oracle::mutual_knn(p, 5);
  EXPECT_EQ(std::set<Edge>(edges.begin(), edges.end()), expected);
  EXPECT_FALSE(edges.empty());
}

TEST(KnnGraph, RejectsBadK) {
  Coords p(3, 3);
  p.setRandom();
  EXPECT_THROW(build_knn_graph(p, 3), ParameterError);
  EXPECT_THROW(build_knn_graph(p, 0), ParameterError);
}

TEST(Annotations, ParsesOneLabelPerLine) {
  std::istringstream in("1\n1\n-1\n-1\n");
  EXPECT_EQ(parse_annotations(in, 4).labels, (std::vector<int>{1, 1, -1, -1}));
}

TEST(Annotations, LengthMismatch) {
  std::istringstream in("1\n1\n-1\n");
  EXPECT_THROW(parse_annotations(in, 4), ValidationError);
}

TEST(Annotations, ZeroIsNotALabel) {
  std::istringstream in("0\n");
  EXPECT_THROW(parse_annotations(in, 1), ValidationError);
}

}  // namespace
}  // namespace chiralis
