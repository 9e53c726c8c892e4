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

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>

#include "chiralis/error.hpp"

namespace chiralis {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view strip_comment(std::string_view line) {
  auto pos = line.find('#');
  return pos == std::string_view::npos ? line : line.substr(0, pos);
}

double parse_double(std::string_view tok, std::size_t line) {
  // from_chars for double is available in libstdc++ 11.
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw FormatError("invalid number '" + std::string(tok) + "'", line);
  return v;
}

long long parse_int(std::string_view tok, std::size_t line) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw FormatError("invalid integer '" + std::string(tok) + "'", line);
  return v;
}

VertexIndex checked_index(long long idx, std::size_t line) {
  if (idx < 0 || idx > static_cast<long long>(std::numeric_limits<VertexIndex>::max()))
    throw ValidationError("face index " + std::to_string(idx) + " out of range at line " +
                          std::to_string(line));
  return static_cast<VertexIndex>(idx);
}

}  // namespace

std::vector<Edge> edges_from_faces(std::span<const Face> faces) {
  std::vector<Edge> edges;
  edges.reserve(faces.size() * 3);
  for (const Face& f : faces) {
    for (int k = 0; k < 3; ++k) {
      VertexIndex a = f[k], b = f[(k + 1) % 3];
      edges.push_back({std::min(a, b), std::max(a, b)});
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

TriangleMesh::TriangleMesh(Coords vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  if (!vertices_.allFinite()) throw ValidationError("mesh has non-finite vertex coordinates");
  const auto n = vertex_count();
  for (std::size_t i = 0; i < faces_.size(); ++i) {
    const Face& f = faces_[i];
    for (VertexIndex idx : f) {
      if (idx >= n)
        throw ValidationError("face " + std::to_string(i) + " references vertex " +
                              std::to_string(idx) + " but mesh has " + std::to_string(n) +
                              " vertices");
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
      throw ValidationError("face " + std::to_string(i) + " repeats a vertex index");
  }
  edges_ = edges_from_faces(faces_);
}

TriangleMesh parse_off(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;

  // Yields non-empty, comment-stripped token lists one line at a time. Views
  // point into `raw` and are invalidated by the next call.
  auto next_tokens = [&](std::vector<std::string_view>& toks) -> bool {
    while (std::getline(in, raw)) {
      ++line_no;
      toks = split_ws(strip_comment(raw));
      if (!toks.empty()) return true;
    }
    return false;
  };

  std::vector<std::string_view> toks;
  if (!next_tokens(toks)) throw FormatError("empty OFF file", line_no);
  if (toks[0] != "OFF") throw FormatError("missing OFF header", line_no);
  toks.erase(toks.begin());
  if (toks.empty() && !next_tokens(toks)) throw FormatError("missing OFF counts", line_no);
  if (toks.size() < 2) throw FormatError("OFF counts line needs vertex and face counts", line_no);
  const long long nv = parse_int(toks[0], line_no);
  const long long nf = parse_int(toks[1], line_no);
  if (nv < 0 || nf < 0) throw FormatError("negative OFF counts", line_no);

  Coords verts(nv, 3);
  for (long long i = 0; i < nv; ++i) {
    if (!next_tokens(toks)) throw FormatError("unexpected end of file in vertex block", line_no);
    if (toks.size() < 3) throw FormatError("vertex needs 3 coordinates", line_no);
    for (int c = 0; c < 3; ++c) verts(i, c) = parse_double(toks[c], line_no);
  }
  std::vector<Face> faces;
  faces.reserve(static_cast<std::size_t>(nf));
  for (long long i = 0; i < nf; ++i) {
    if (!next_tokens(toks)) throw FormatError("unexpected end of file in face block", line_no);
    const long long arity = parse_int(toks[0], line_no);
    if (arity != 3)
      throw FormatError("only triangular faces are supported, got " + std::to_string(arity) +
                            "-gon",
                        line_no);
    if (toks.size() < 4) throw FormatError("face needs 3 indices", line_no);
    Face f{};
    for (int c = 0; c < 3; ++c) f[c] = checked_index(parse_int(toks[c + 1], line_no), line_no);
    faces.push_back(f);
  }
  return TriangleMesh(std::move(verts), std::move(faces));
}

TriangleMesh parse_obj(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;
  std::vector<std::array<double, 3>> verts;
  struct RawFace {
    std::array<long long, 3> idx;
    std::size_t line;
  };
  std::vector<RawFace> raw_faces;

  while (std::getline(in, raw)) {
    ++line_no;
    auto toks = split_ws(strip_comment(raw));
    if (toks.empty()) continue;
    if (toks[0] == "v") {
      if (toks.size() < 4) throw FormatError("vertex needs 3 coordinates", line_no);
      verts.push_back({parse_double(toks[1], line_no), parse_double(toks[2], line_no),
                       parse_double(toks[3], line_no)});
    } else if (toks[0] == "f") {
      if (toks.size() != 4)
        throw FormatError("only triangular faces are supported, got " +
                              std::to_string(toks.size() - 1) + "-gon",
                          line_no);
      RawFace f{{}, line_no};
      for (int c = 0; c < 3; ++c) {
        std::string_view t = toks[c + 1];
        t = t.substr(0, t.find('/'));
        const long long idx = parse_int(t, line_no);
        if (idx == 0) throw FormatError("OBJ indices are 1-based; got 0", line_no);
        // Negative indices are relative to the vertices defined so far.
        f.idx[c] = idx > 0 ? idx - 1 : static_cast<long long>(verts.size()) + idx;
      }
      raw_faces.push_back(f);
    }
    // vt, vn, o, g, s, usemtl, mtllib and other statements carry nothing we need.
  }

  Coords coords(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (int c = 0; c < 3; ++c) coords(static_cast<Eigen::Index>(i), c) = verts[i][c];
  std::vector<Face> faces;
  faces.reserve(raw_faces.size());
  for (const RawFace& f : raw_faces) {
    Face out{};
    for (int c = 0; c < 3; ++c) out[c] = checked_index(f.idx[c], f.line);
    faces.push_back(out);
  }
  return TriangleMesh(std::move(coords), std::move(faces));
}

TriangleMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file " + path.string());
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".off") return parse_off(in);
  if (ext == ".obj") return parse_obj(in);
  std::string first;
  std::getline(in, first);
  in.seekg(0);
  if (first.rfind("OFF", 0) == 0) return parse_off(in);
  return parse_obj(in);
}

void save_off(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write mesh file " + path.string());
  out.precision(17);
  out << "OFF\n" << mesh.vertex_count() << ' ' << mesh.faces().size() << " 0\n";
  const auto& v = mesh.vertices();
  for (Eigen::Index i = 0; i < v.rows(); ++i) out << v(i, 0) << ' ' << v(i, 1) << ' ' << v(i, 2) << '\n';
  for (const Face& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

std::vector<Edge> build_knn_graph(const Coords& points, std::size_t k) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0) throw ParameterError("k must be positive");
  if (k >= n)
    throw ParameterError("k = " + std::to_string(k) + " must be smaller than the point count " +
                         std::to_string(n));
  if (!points.allFinite()) throw ValidationError("point cloud has non-finite coordinates");

  // neighbours[i] holds the k nearest of i sorted by (distance, index).
  std::vector<std::vector<VertexIndex>> neighbours(n);
  std::vector<std::pair<double, VertexIndex>> cand(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      cand[m++] = {(points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j)))
                       .squaredNorm(),
                   static_cast<VertexIndex>(j)};
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    auto& nb = neighbours[i];
    nb.resize(k);
    for (std::size_t q = 0; q < k; ++q) nb[q] = cand[q].second;
    std::sort(nb.begin(), nb.end());
  }

  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (VertexIndex v : neighbours[u]) {
      if (v <= u) continue;
      const auto& back = neighbours[v];
      if (std::binary_search(back.begin(), back.end(), static_cast<VertexIndex>(u)))
        edges.push_back({static_cast<VertexIndex>(u), v});
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

ChiralityAnnotation parse_annotations(std::istream& in, std::size_t vertex_count) {
  ChiralityAnnotation ann;
  ann.labels.reserve(vertex_count);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto toks = split_ws(raw);
    if (toks.empty()) continue;
    if (toks.size() != 1) throw FormatError("expected one integer per line", line_no);
    const long long v = parse_int(toks[0], line_no);
    if (v != 1 && v != -1)
      throw ValidationError("annotation value " + std::to_string(v) + " at line " +
                            std::to_string(line_no) + " is not -1 or +1");
    ann.labels.push_back(static_cast<int>(v));
  }
  if (ann.labels.size() != vertex_count)
    throw ValidationError("annotation has " + std::to_string(ann.labels.size()) +
                          " labels but mesh has " + std::to_string(vertex_count) + " vertices");
  return ann;
}

ChiralityAnnotation load_annotations(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotation file " + path.string());
  return parse_annotations(in, mesh.vertex_count());
}

void save_annotations(const std::filesystem::path& path, const ChiralityAnnotation& annotation) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write annotation file " + path.string());
  for (int l : annotation.labels) out << l << '\n';
}

}  // namespace chiralis
