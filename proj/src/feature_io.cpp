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

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "binary.hpp"
#include "chiralis/error.hpp"

namespace chiralis {

namespace fs = std::filesystem;

namespace {

std::size_t dims_for(ContainerKind kind) {
  switch (kind) {
    case ContainerKind::view_maps:
      return 4;
    case ContainerKind::vertex_features:
      return 2;
  }
  throw IoError("container: unknown kind " + std::to_string(static_cast<int>(kind)));
}

std::size_t product(std::span<const std::uint32_t> dims) {
  std::size_t p = 1;
  for (auto d : dims) p *= d;
  return p;
}

fs::path resolve(const fs::path& base_dir, const fs::path& p) {
  if (p.empty() || p.is_absolute()) return p;
  return base_dir / p;
}

fs::path relative_to(const fs::path& base_dir, const fs::path& p) {
  if (p.empty()) return p;
  std::error_code ec;
  auto rel = fs::relative(p, base_dir.empty() ? fs::path(".") : base_dir, ec);
  return ec || rel.empty() ? p : rel;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace

void FeatureContainer::validate() const {
  if (dims.size() != dims_for(kind))
    throw ValidationError("container declares " + std::to_string(dims.size()) + " dims, kind needs " +
                          std::to_string(dims_for(kind)));
  if (product(dims) != payload.size())
    throw ValidationError("container dims describe " + std::to_string(product(dims)) + " values but payload has " +
                          std::to_string(payload.size()));
}

FeatureContainer FeatureContainer::from_maps(std::span<const FeatureMap> maps) {
  if (maps.empty()) throw ParameterError("view_maps container needs at least one map");
  const auto& f = maps.front();
  FeatureContainer c;
  c.kind = ContainerKind::view_maps;
  c.dims = {static_cast<std::uint32_t>(maps.size()), static_cast<std::uint32_t>(f.height()),
            static_cast<std::uint32_t>(f.width()), static_cast<std::uint32_t>(f.channels())};
  c.payload.reserve(product(c.dims));
  for (std::size_t j = 0; j < maps.size(); ++j) {
    const auto& m = maps[j];
    if (m.height() != f.height() || m.width() != f.width() || m.channels() != f.channels())
      throw ValidationError("view map " + std::to_string(j) + " dimensions differ from view map 0");
    for (int r = 0; r < m.height(); ++r) {
      for (int col = 0; col < m.width(); ++col) {
        auto px = m.pixel(r, col);
        if (m.foreground(r, col))
          c.payload.insert(c.payload.end(), px.begin(), px.end());
        else
          c.payload.insert(c.payload.end(), px.size(), 0.0f);
      }
    }
  }
  return c;
}

FeatureContainer FeatureContainer::from_matrix(const Eigen::MatrixXd& rows) {
  FeatureContainer c;
  c.kind = ContainerKind::vertex_features;
  c.dims = {static_cast<std::uint32_t>(rows.rows()), static_cast<std::uint32_t>(rows.cols())};
  c.payload.reserve(static_cast<std::size_t>(rows.size()));
  for (Eigen::Index r = 0; r < rows.rows(); ++r)
    for (Eigen::Index k = 0; k < rows.cols(); ++k) c.payload.push_back(static_cast<float>(rows(r, k)));
  return c;
}

std::vector<FeatureMap> FeatureContainer::to_maps() const {
  validate();
  if (kind != ContainerKind::view_maps) throw ValidationError("container does not hold view maps");
  const int h = static_cast<int>(dims[1]), w = static_cast<int>(dims[2]), ch = static_cast<int>(dims[3]);
  std::vector<FeatureMap> maps;
  maps.reserve(dims[0]);
  std::size_t k = 0;
  for (std::uint32_t j = 0; j < dims[0]; ++j) {
    FeatureMap m(h, w, ch);
    for (int r = 0; r < h; ++r) {
      for (int col = 0; col < w; ++col) {
        auto px = m.pixel(r, col);
        bool any = false;
        for (auto& v : px) {
          v = payload[k++];
          any |= v != 0.0f;
        }
        m.set_foreground(r, col, any);
      }
    }
    m.validate();
    maps.push_back(std::move(m));
  }
  return maps;
}

Eigen::MatrixXd FeatureContainer::to_matrix() const {
  validate();
  if (kind != ContainerKind::vertex_features) throw ValidationError("container does not hold vertex features");
  Eigen::MatrixXd m(dims[0], dims[1]);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = payload[k++];
  return m;
}

std::vector<std::uint8_t> encode_container(const FeatureContainer& c) {
  c.validate();
  detail::ByteWriter w;
  w.tag("CFV1");
  w.u32(FeatureContainer::kVersion);
  w.u8(static_cast<std::uint8_t>(c.kind));
  w.u8(0);
  w.u8(0);
  w.u8(0);
  for (auto d : c.dims) w.u32(d);
  w.raw(c.payload.data(), c.payload.size() * sizeof(float));
  w.seal();
  return w.take();
}

FeatureContainer decode_container(std::span<const std::uint8_t> bytes) {
  const std::string what = "feature container";
  // Structural checks first so that truncation reports a size mismatch rather
  // than a checksum failure.
  detail::ByteReader head(bytes, what);
  char magic[4];
  head.copy(magic, 4);
  if (std::string_view(magic, 4) != "CFV1") throw IoError(what + ": bad magic");
  const std::uint32_t version = head.u32();
  if (version != FeatureContainer::kVersion) throw IoError(what + ": unsupported version " + std::to_string(version));
  const std::uint8_t kind = head.u8();
  if (kind != 1 && kind != 2) throw IoError(what + ": unknown kind " + std::to_string(kind));
  head.skip(3);
  FeatureContainer c;
  c.kind = static_cast<ContainerKind>(kind);
  c.dims.resize(dims_for(c.kind));
  for (auto& d : c.dims) d = head.u32();
  const std::size_t values = product(c.dims);
  if (head.remaining() != values * sizeof(float) + 4)
    throw IoError(what + ": size mismatch (dims need " + std::to_string(values * sizeof(float) + 4) +
                  " payload bytes, file has " + std::to_string(head.remaining()) + ")");

  const auto body = detail::check_crc(bytes, what);
  detail::ByteReader r(body, what);
  r.skip(12 + 4 * c.dims.size());
  c.payload.resize(values);
  r.copy(c.payload.data(), values * sizeof(float));
  return c;
}

void write_container(const fs::path& path, const FeatureContainer& c) { detail::write_file(path, encode_container(c)); }

FeatureContainer read_container(const fs::path& path) { return decode_container(detail::read_file(path)); }

void write_pair_manifest(const fs::path& path, const PairManifest& m) {
  const fs::path dir = path.parent_path();
  nlohmann::json doc;
  doc["format"] = "chiralis-pair";
  doc["version"] = 1;
  doc["shape_id"] = m.shape_id;
  doc["mesh"] = relative_to(dir, m.mesh).generic_string();
  doc["features"] = relative_to(dir, m.features).generic_string();
  doc["features_flipped"] = relative_to(dir, m.features_flipped).generic_string();
  doc["view_count"] = relative_to(dir, m.view_count).generic_string();
  doc["camera_manifest"] = relative_to(dir, m.camera_manifest).generic_string();
  if (!m.annotations.empty()) doc["annotations"] = relative_to(dir, m.annotations).generic_string();
  doc["provenance"] = m.provenance;
  doc["config"] = m.config;
  write_json(path, doc);
}

PairManifest read_pair_manifest(const fs::path& path) {
  const nlohmann::json doc = read_json(path);
  const fs::path dir = path.parent_path();
  try {
    PairManifest m;
    m.shape_id = doc.value("shape_id", std::string());
    m.mesh = resolve(dir, doc.at("mesh").get<std::string>());
    m.features = resolve(dir, doc.at("features").get<std::string>());
    m.features_flipped = resolve(dir, doc.at("features_flipped").get<std::string>());
    m.view_count = resolve(dir, doc.at("view_count").get<std::string>());
    m.camera_manifest = resolve(dir, doc.value("camera_manifest", std::string()));
    m.annotations = resolve(dir, doc.value("annotations", std::string()));
    m.provenance = doc.value("provenance", std::string());
    m.config = doc.value("config", nlohmann::json::object());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_pair_files(const fs::path& manifest_path, const ChiralPair& pair, PairManifest manifest) {
  pair.validate();
  std::string stem = manifest_path.filename().string();
  if (const auto pos = stem.rfind(".json"); pos != std::string::npos && pos + 5 == stem.size()) stem.resize(pos);
  const fs::path dir = manifest_path.parent_path();
  manifest.features = dir / (stem + ".F.cfv");
  manifest.features_flipped = dir / (stem + ".Fbar.cfv");
  manifest.view_count = dir / (stem + ".count.cfv");
  write_container(manifest.features, FeatureContainer::from_matrix(pair.features));
  write_container(manifest.features_flipped, FeatureContainer::from_matrix(pair.features_flipped));
  Eigen::MatrixXd counts(static_cast<Eigen::Index>(pair.view_count.size()), 1);
  for (std::size_t v = 0; v < pair.view_count.size(); ++v) counts(static_cast<Eigen::Index>(v), 0) = pair.view_count[v];
  write_container(manifest.view_count, FeatureContainer::from_matrix(counts));
  write_pair_manifest(manifest_path, manifest);
}

ChiralPair read_pair_files(const PairManifest& manifest) {
  ChiralPair pair;
  pair.features = read_container(manifest.features).to_matrix();
  pair.features_flipped = read_container(manifest.features_flipped).to_matrix();
  const Eigen::MatrixXd counts = read_container(manifest.view_count).to_matrix();
  if (counts.cols() != 1 || counts.rows() != pair.features.rows())
    throw ValidationError("view count container does not match the feature container");
  pair.view_count.resize(static_cast<std::size_t>(counts.rows()));
  for (Eigen::Index v = 0; v < counts.rows(); ++v) pair.view_count[static_cast<std::size_t>(v)] = static_cast<int>(counts(v, 0));
  pair.validate();
  return pair;
}

void write_view_maps_manifest(const fs::path& path, const ViewMapsManifest& m) {
  nlohmann::json doc;
  doc["format"] = "chiralis-view-maps";
  doc["version"] = 1;
  doc["shape_id"] = m.shape_id;
  doc["camera_manifest"] = relative_to(path.parent_path(), m.camera_manifest).generic_string();
  doc["provenance"] = m.provenance;
  if (!m.channel_groups.empty()) doc["channel_groups"] = m.channel_groups;
  write_json(path, doc);
}

std::optional<ViewMapsManifest> read_view_maps_manifest(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  const nlohmann::json doc = read_json(path);
  try {
    ViewMapsManifest m;
    m.shape_id = doc.value("shape_id", std::string());
    m.camera_manifest = resolve(path.parent_path(), doc.value("camera_manifest", std::string()));
    m.provenance = doc.value("provenance", std::string());
    m.channel_groups = doc.value("channel_groups", std::vector<int>{});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void SyntheticSpec::validate() const {
  if (chiral_channels < 1 || symmetric_channels < 1) throw ParameterError("synthetic channel counts must be >= 1");
  if (!(noise >= 0.0)) throw ParameterError("synthetic noise must be non-negative");
  if (!(plane_normal.norm() > 0.0) || !plane_normal.allFinite()) throw ParameterError("plane normal must be non-zero");
}

SyntheticPair generate_synthetic_pair(const TriangleMesh& mesh, const SyntheticSpec& spec) {
  spec.validate();
  const Eigen::Vector3d n = spec.plane_normal.normalized();
  const int ns = spec.symmetric_channels, nc = spec.chiral_channels, d = spec.dim();

  // Field: random sinusoids of mirror-invariant coordinates (|s|, foot point).
  std::mt19937_64 field_rng(spec.seed);
  std::normal_distribution<double> freq(0.0, 2.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  Eigen::MatrixXd w(d, 4);
  Eigen::VectorXd b(d);
  for (int c = 0; c < d; ++c) {
    for (int k = 0; k < 4; ++k) w(c, k) = freq(field_rng);
    b(c) = phase(field_rng);
  }

  std::seed_seq noise_seed{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                           static_cast<std::uint32_t>(spec.noise_stream),
                           static_cast<std::uint32_t>(spec.noise_stream >> 32), 0x6e6f6973u};
  std::mt19937_64 noise_rng(noise_seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  const auto nv = static_cast<Eigen::Index>(mesh.vertex_count());
  SyntheticPair out;
  out.pair.features.resize(nv, d);
  out.pair.features_flipped.resize(nv, d);
  out.pair.view_count.assign(static_cast<std::size_t>(nv), 1);
  out.clean_features.resize(nv, d);
  out.labels.labels.resize(static_cast<std::size_t>(nv));
  out.on_plane.assign(static_cast<std::size_t>(nv), false);

  for (Eigen::Index v = 0; v < nv; ++v) {
    const Eigen::Vector3d p = mesh.vertices().row(v).transpose();
    const double s = n.dot(p) - spec.plane_offset;
    const Eigen::Vector3d foot = p - s * n;
    const Eigen::Vector4d q(std::abs(s), foot.x(), foot.y(), foot.z());
    int label = s > 0.0 ? 1 : -1;
    if (std::abs(s) < 1e-9) {
      label = 1;
      out.on_plane[static_cast<std::size_t>(v)] = true;
    }
    out.labels.labels[static_cast<std::size_t>(v)] = label;
    for (int c = 0; c < d; ++c) {
      const double wave = std::sin(w.row(c).dot(q) + b(c));
      if (c < ns) {
        out.clean_features(v, c) = wave;
        out.pair.features(v, c) = wave;
        out.pair.features_flipped(v, c) = wave;
      } else {
        const double mag = 0.6 + 0.3 * wave;
        out.clean_features(v, c) = mag * label;
        out.pair.features(v, c) = mag * label;
        out.pair.features_flipped(v, c) = -mag * label;
      }
    }
    if (spec.noise > 0.0) {
      for (int c = 0; c < d; ++c) out.pair.features(v, c) += spec.noise * noise(noise_rng);
      for (int c = 0; c < d; ++c) out.pair.features_flipped(v, c) += spec.noise * noise(noise_rng);
    }
  }
  (void)nc;
  return out;
}

TriangleMesh make_bilateral_mesh(std::uint64_t seed, int rings, int segments) {
  if (rings < 2 || segments < 4 || segments % 2 != 0)
    throw ParameterError("bilateral mesh needs rings >= 2 and an even segment count >= 4");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-0.15, 0.15), wave(0.5, 3.0), ph(0.0, 2.0 * std::numbers::pi),
      axis(0.6, 1.0);
  struct Bump {
    double a, kx, ky, kz, py, pz;
  };
  std::vector<Bump> bumps(4);
  for (auto& bp : bumps) bp = {amp(rng), wave(rng), wave(rng), wave(rng), ph(rng), ph(rng)};
  const Eigen::Vector3d scale(axis(rng), axis(rng), axis(rng));

  auto radius = [&](const Eigen::Vector3d& dir) {
    double r = 1.0;
    // cos(kx * x) keeps the radius even in x.
    for (const auto& bp : bumps)
      r += bp.a * std::cos(bp.kx * dir.x()) * std::cos(bp.ky * dir.y() + bp.py) * std::cos(bp.kz * dir.z() + bp.pz);
    return r;
  };

  const int nv = rings * segments + 2;
  Coords verts(nv, 3);
  auto put = [&](int idx, const Eigen::Vector3d& dir) {
    verts.row(idx) = (radius(dir) * dir).cwiseProduct(scale).transpose();
  };
  put(0, Eigen::Vector3d::UnitZ());
  for (int i = 0; i < rings; ++i) {
    const double theta = std::numbers::pi * (i + 1) / (rings + 1);
    for (int j = 0; j < segments; ++j) {
      const double phi = 2.0 * std::numbers::pi * (j + 0.5) / segments;
      put(1 + i * segments + j,
          Eigen::Vector3d(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)));
    }
  }
  put(nv - 1, -Eigen::Vector3d::UnitZ());
  // The poles sit exactly on the plane; pin x to 0 so rounding does not move them off it.
  verts(0, 0) = 0.0;
  verts(nv - 1, 0) = 0.0;
  verts /= verts.rowwise().norm().maxCoeff();

  auto ring_vertex = [&](int i, int j) { return static_cast<VertexIndex>(1 + i * segments + (j % segments)); };
  std::vector<Face> faces;
  faces.reserve(static_cast<std::size_t>(2 * segments * rings));
  for (int j = 0; j < segments; ++j) faces.push_back({0, ring_vertex(0, j), ring_vertex(0, j + 1)});
  for (int i = 0; i + 1 < rings; ++i) {
    for (int j = 0; j < segments; ++j) {
      faces.push_back({ring_vertex(i, j), ring_vertex(i + 1, j), ring_vertex(i + 1, j + 1)});
      faces.push_back({ring_vertex(i, j), ring_vertex(i + 1, j + 1), ring_vertex(i, j + 1)});
    }
  }
  const auto south = static_cast<VertexIndex>(nv - 1);
  for (int j = 0; j < segments; ++j) faces.push_back({south, ring_vertex(rings - 1, j + 1), ring_vertex(rings - 1, j)});
  return TriangleMesh(std::move(verts), std::move(faces));
}

SyntheticViews render_synthetic_views(const TriangleMesh& mesh, std::span<const CameraView> views,
                                      const Eigen::MatrixXd& vertex_features, std::span<const int> negated_channels) {
  if (static_cast<std::size_t>(vertex_features.rows()) != mesh.vertex_count())
    throw ValidationError("vertex feature rows do not match the mesh");
  const int ch = static_cast<int>(vertex_features.cols());
  for (int c : negated_channels)
    if (c < 0 || c >= ch) throw ParameterError("negated channel " + std::to_string(c) + " out of range");
  SyntheticViews out;
  for (const auto& view : views) {
    const Raster raster = rasterize(mesh, view);
    FeatureMap m(view.height, view.width, ch);
    for (int r = 0; r < view.height; ++r) {
      for (int c = 0; c < view.width; ++c) {
        const std::size_t idx = raster.at(r, c);
        if (raster.face[idx] < 0) continue;
        const Face& f = mesh.faces()[static_cast<std::size_t>(raster.face[idx])];
        const auto& bw = raster.barycentric[idx];
        auto px = m.pixel(r, c);
        for (int k = 0; k < ch; ++k)
          px[static_cast<std::size_t>(k)] = static_cast<float>(bw[0] * vertex_features(f[0], k) +
                                                               bw[1] * vertex_features(f[1], k) +
                                                               bw[2] * vertex_features(f[2], k));
        m.set_foreground(r, c, true);
      }
    }
    FeatureMap flipped = flip_feature_map_horizontal(m);
    for (int r = 0; r < view.height; ++r)
      for (int c = 0; c < view.width; ++c)
        for (int k : negated_channels) flipped.pixel(r, c)[static_cast<std::size_t>(k)] *= -1.0f;
    out.original.push_back(std::move(m));
    out.flipped_images.push_back(std::move(flipped));
  }
  return out;
}

}  // namespace chiralis
