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


#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace chiralis {

using VertexIndex = std::uint32_t;
using Face = std::array<VertexIndex, 3>;
/// Undirected edge stored canonically with first < second.
using Edge = std::array<VertexIndex, 2>;
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Triangle mesh with a derived, sorted, unique undirected edge set.
/// Immutable after construction.
class TriangleMesh {
 public:
  TriangleMesh() = default;

  /// Validates face indices and derives the edge set. Throws ValidationError on
  /// out-of-range or degenerate (repeated-index) faces and non-finite coordinates.
  TriangleMesh(Coords vertices, std::vector<Face> faces);

  const Coords& vertices() const noexcept { return vertices_; }
  const std::vector<Face>& faces() const noexcept { return faces_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t vertex_count() const noexcept { return static_cast<std::size_t>(vertices_.rows()); }

 private:
  Coords vertices_;
  std::vector<Face> faces_;
  std::vector<Edge> edges_;
};

/// Distinct undirected edges induced by the faces, sorted lexicographically.
std::vector<Edge> edges_from_faces(std::span<const Face> faces);

/// Point set with optional mutual k-NN connectivity.
struct PointCloud {
  Coords points;
  std::vector<Edge> knn_edges;
};

/// Mutual k-nearest-neighbour edges. A pair (u, v) is kept iff each is among the
/// other's k nearest points; distance ties resolve to the lower index.
/// Throws ParameterError when k == 0 or k >= |V|, ValidationError on non-finite points.
std::vector<Edge> build_knn_graph(const Coords& points, std::size_t k);

/// Per-vertex left/right ground truth in {-1, +1}.
struct ChiralityAnnotation {
  std::vector<int> labels;
};

/// Reads OFF or OBJ (chosen by extension, falling back to content sniffing).
/// Only triangles are accepted; any other polygon is a FormatError.
TriangleMesh load_mesh(const std::filesystem::path& path);
TriangleMesh parse_off(std::istream& in);
TriangleMesh parse_obj(std::istream& in);
void save_off(const std::filesystem::path& path, const TriangleMesh& mesh);

/// One signed integer per line, exactly |V| lines, each -1 or +1.
ChiralityAnnotation load_annotations(const std::filesystem::path& path, const TriangleMesh& mesh);
ChiralityAnnotation parse_annotations(std::istream& in, std::size_t vertex_count);
void save_annotations(const std::filesystem::path& path, const ChiralityAnnotation& annotation);

}  // namespace chiralis
