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


#include "chiralis/view.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Geometry>
#include <json.hpp>

#include "chiralis/error.hpp"
#include "chiralis/parallel.hpp"

namespace chiralis {

namespace {

constexpr double kNormGuard = 1e-12;
constexpr double kNearPlane = 1e-9;

double guarded_norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::max(std::sqrt(s), kNormGuard);
}

}  // namespace

void CameraView::validate() const {
  if (height <= 0 || width <= 0) throw ValidationError("camera image size must be positive");
  const double residual = (rotation * rotation.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(residual < 1e-6))
    throw ValidationError("camera " + std::to_string(index) + " rotation is not orthonormal (residual " +
                          std::to_string(residual) + ")");
  if (!translation.allFinite() || !std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(cx) ||
      !std::isfinite(cy) || fx <= 0 || fy <= 0)
    throw ValidationError("camera " + std::to_string(index) + " has invalid intrinsics");
}

FeatureMap::FeatureMap(int height, int width, int channels)
    : height_(height), width_(width), channels_(channels) {
  if (height <= 0 || width <= 0 || channels <= 0)
    throw ParameterError("feature map dimensions must be positive");
  data_.assign(static_cast<std::size_t>(height) * width * channels, 0.0f);
  mask_.assign(static_cast<std::size_t>(height) * width, 0);
}

void FeatureMap::validate() const {
  for (float v : data_)
    if (!std::isfinite(v)) throw ValidationError("feature map contains non-finite values");
}

std::vector<CameraView> generate_camera_ring(std::size_t n_views, double radius,
                                             std::span<const double> elevations_deg,
                                             const RingOptions& options) {
  if (n_views == 0) throw ParameterError("camera ring needs at least one view");
  if (!(radius > 0.0)) throw ParameterError("camera radius must be positive");
  if (elevations_deg.empty()) throw ParameterError("camera ring needs at least one elevation");
  if (options.height <= 0 || options.width <= 0) throw ParameterError("image size must be positive");
  if (!(options.fov_deg > 0.0 && options.fov_deg < 180.0)) throw ParameterError("fov must be in (0, 180)");

  const double deg = std::numbers::pi / 180.0;
  const double focal = 0.5 * options.width / std::tan(0.5 * options.fov_deg * deg);
  const Eigen::Vector3d up(0.0, 1.0, 0.0);

  std::vector<CameraView> views;
  views.reserve(n_views * elevations_deg.size());
  for (double elevation : elevations_deg) {
    if (!(std::abs(elevation) < 90.0)) throw ParameterError("elevation must lie strictly within (-90, 90)");
    for (std::size_t j = 0; j < n_views; ++j) {
      const double az = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n_views);
      const double el = elevation * deg;
      const Eigen::Vector3d eye(radius * std::cos(el) * std::sin(az), radius * std::sin(el),
                                radius * std::cos(el) * std::cos(az));
      const Eigen::Vector3d forward = (-eye).normalized();
      const Eigen::Vector3d right = forward.cross(up).normalized();
      const Eigen::Vector3d down = forward.cross(right);

      CameraView v;
      v.index = views.size();
      v.rotation.row(0) = right.transpose();
      v.rotation.row(1) = down.transpose();
      v.rotation.row(2) = forward.transpose();
      v.translation = -v.rotation * eye;
      v.fx = v.fy = focal;
      v.cx = 0.5 * options.width;
      v.cy = 0.5 * options.height;
      v.height = options.height;
      v.width = options.width;
      views.push_back(v);
    }
  }
  return views;
}

Raster rasterize(const TriangleMesh& mesh, const CameraView& view) {
  Raster r;
  r.height = view.height;
  r.width = view.width;
  const std::size_t npix = static_cast<std::size_t>(view.height) * view.width;
  r.depth.assign(npix, std::numeric_limits<double>::infinity());
  r.face.assign(npix, -1);
  r.barycentric.assign(npix, {0.0, 0.0, 0.0});

  const auto& verts = mesh.vertices();
  const auto& faces = mesh.faces();
  for (std::size_t fi = 0; fi < faces.size(); ++fi) {
    std::array<Eigen::Vector3d, 3> cam;
    std::array<Eigen::Vector2d, 3> scr;
    bool behind = false;
    for (int k = 0; k < 3; ++k) {
      cam[k] = view.to_camera(verts.row(faces[fi][k]).transpose());
      if (cam[k].z() <= kNearPlane) {
        behind = true;
        break;
      }
      scr[k] = {view.fx * cam[k].x() / cam[k].z() + view.cx, view.fy * cam[k].y() / cam[k].z() + view.cy};
    }
    // Triangles crossing the near plane are dropped; cameras sit outside the shape.
    if (behind) continue;

    auto edge = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p) {
      return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
    };
    const double area = edge(scr[0], scr[1], scr[2]);
    if (std::abs(area) < 1e-18) continue;

    const double umin = std::min({scr[0].x(), scr[1].x(), scr[2].x()});
    const double umax = std::max({scr[0].x(), scr[1].x(), scr[2].x()});
    const double vmin = std::min({scr[0].y(), scr[1].y(), scr[2].y()});
    const double vmax = std::max({scr[0].y(), scr[1].y(), scr[2].y()});
    const int c0 = std::max(0, static_cast<int>(std::ceil(umin - 0.5)));
    const int c1 = std::min(view.width - 1, static_cast<int>(std::floor(umax - 0.5)));
    const int r0 = std::max(0, static_cast<int>(std::ceil(vmin - 0.5)));
    const int r1 = std::min(view.height - 1, static_cast<int>(std::floor(vmax - 0.5)));

    for (int row = r0; row <= r1; ++row) {
      for (int col = c0; col <= c1; ++col) {
        const Eigen::Vector2d p(col + 0.5, row + 0.5);
        const double w0 = edge(scr[1], scr[2], p) / area;
        const double w1 = edge(scr[2], scr[0], p) / area;
        const double w2 = 1.0 - w0 - w1;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        const double inv_z = w0 / cam[0].z() + w1 / cam[1].z() + w2 / cam[2].z();
        const double z = 1.0 / inv_z;
        const std::size_t idx = r.at(row, col);
        if (z < r.depth[idx]) {
          r.depth[idx] = z;
          r.face[idx] = static_cast<std::int64_t>(fi);
          r.barycentric[idx] = {w0 / cam[0].z() * z, w1 / cam[1].z() * z, w2 / cam[2].z() * z};
        }
      }
    }
  }
  return r;
}

std::vector<std::optional<PixelCoord>> visible_vertex_pixels(const TriangleMesh& mesh,
                                                             const CameraView& view,
                                                             double depth_tolerance) {
  view.validate();
  const Raster raster = rasterize(mesh, view);
  const auto& verts = mesh.vertices();
  const auto& faces = mesh.faces();
  std::vector<std::optional<PixelCoord>> out(mesh.vertex_count());
  for (std::size_t v = 0; v < out.size(); ++v) {
    const Eigen::Vector3d p = view.to_camera(verts.row(static_cast<Eigen::Index>(v)).transpose());
    if (p.z() <= kNearPlane) continue;
    const double u = view.fx * p.x() / p.z() + view.cx;
    const double w = view.fy * p.y() / p.z() + view.cy;
    if (!(u >= 0.0 && w >= 0.0 && u < view.width && w < view.height)) continue;
    const PixelCoord px{static_cast<int>(w), static_cast<int>(u)};
    const std::size_t idx = raster.at(px.row, px.col);
    const std::int64_t f = raster.face[idx];
    bool visible = f < 0 || p.z() <= raster.depth[idx] + depth_tolerance;
    if (!visible) {
      const Face& face = faces[static_cast<std::size_t>(f)];
      visible = std::find(face.begin(), face.end(), static_cast<VertexIndex>(v)) != face.end();
    }
    if (visible) out[v] = px;
  }
  return out;
}

FeatureMap flip_feature_map_horizontal(const FeatureMap& map) {
  FeatureMap out(map.height(), map.width(), map.channels());
  const int w = map.width();
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < w; ++c) {
      auto src = map.pixel(r, w - 1 - c);
      std::copy(src.begin(), src.end(), out.pixel(r, c).begin());
      out.set_foreground(r, c, map.foreground(r, w - 1 - c));
    }
  }
  return out;
}

FeatureMap normalize_concat(const FeatureMap& a, const FeatureMap& b) {
  if (a.height() != b.height() || a.width() != b.width())
    throw ValidationError("normalize_concat needs maps of identical height and width");
  FeatureMap out(a.height(), a.width(), a.channels() + b.channels());
  for (int r = 0; r < a.height(); ++r) {
    for (int c = 0; c < a.width(); ++c) {
      if (!a.foreground(r, c) || !b.foreground(r, c)) continue;
      auto pa = a.pixel(r, c);
      auto pb = b.pixel(r, c);
      const double na = guarded_norm(pa), nb = guarded_norm(pb);
      std::vector<double> joint;
      joint.reserve(pa.size() + pb.size());
      for (float x : pa) joint.push_back(x / na);
      for (float x : pb) joint.push_back(x / nb);
      double s = 0.0;
      for (double x : joint) s += x * x;
      const double n = std::max(std::sqrt(s), kNormGuard);
      auto po = out.pixel(r, c);
      for (std::size_t k = 0; k < joint.size(); ++k) po[k] = static_cast<float>(joint[k] / n);
      out.set_foreground(r, c, true);
    }
  }
  return out;
}

FeatureMap normalize_concat_groups(const FeatureMap& map, std::span<const int> group_widths) {
  int total = 0;
  for (int g : group_widths) {
    if (g <= 0) throw ParameterError("channel group widths must be positive");
    total += g;
  }
  if (group_widths.empty() || total != map.channels())
    throw ValidationError("channel groups sum to " + std::to_string(total) + " but map has " +
                          std::to_string(map.channels()) + " channels");
  FeatureMap out(map.height(), map.width(), map.channels());
  std::vector<double> joint(static_cast<std::size_t>(map.channels()));
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (!map.foreground(r, c)) continue;
      auto p = map.pixel(r, c);
      std::size_t off = 0;
      for (int g : group_widths) {
        const double n = guarded_norm(p.subspan(off, static_cast<std::size_t>(g)));
        for (int k = 0; k < g; ++k) joint[off + k] = p[off + k] / n;
        off += static_cast<std::size_t>(g);
      }
      double s = 0.0;
      for (double x : joint) s += x * x;
      const double n = std::max(std::sqrt(s), kNormGuard);
      auto po = out.pixel(r, c);
      for (std::size_t k = 0; k < joint.size(); ++k) po[k] = static_cast<float>(joint[k] / n);
      out.set_foreground(r, c, true);
    }
  }
  return out;
}

VisibilityTable compute_visibility(const TriangleMesh& mesh, std::span<const CameraView> views,
                                   double depth_tolerance) {
  VisibilityTable table(views.size());
  parallel_for(views.size(), [&](std::size_t j) {
    table[j] = visible_vertex_pixels(mesh, views[j], depth_tolerance);
  });
  return table;
}

Aggregation aggregate_visible(const VisibilityTable& visibility, std::span<const FeatureMap> maps,
                              std::span<const FeatureMap> mask_source) {
  if (maps.size() != visibility.size())
    throw ValidationError("got " + std::to_string(maps.size()) + " feature maps for " +
                          std::to_string(visibility.size()) + " views");
  if (maps.empty()) throw ParameterError("aggregation needs at least one view");
  if (!mask_source.empty() && mask_source.size() != maps.size())
    throw ValidationError("mask source count does not match map count");
  if (mask_source.empty()) mask_source = maps;
  const int channels = maps.front().channels();
  for (std::size_t j = 0; j < maps.size(); ++j) {
    if (maps[j].channels() != channels)
      throw ValidationError("feature map " + std::to_string(j) + " has " + std::to_string(maps[j].channels()) +
                            " channels, expected " + std::to_string(channels));
    if (mask_source[j].height() != maps[j].height() || mask_source[j].width() != maps[j].width())
      throw ValidationError("mask source size differs from feature map " + std::to_string(j));
  }
  const std::size_t nv = visibility.front().size();

  Aggregation agg;
  agg.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nv), channels);
  agg.view_count.assign(nv, 0);
  // Per-vertex sums run over views in index order, so results do not depend on
  // the worker count.
  parallel_for(nv, [&](std::size_t v) {
    auto row = agg.features.row(static_cast<Eigen::Index>(v));
    int count = 0;
    for (std::size_t j = 0; j < maps.size(); ++j) {
      const auto& px = visibility[j][v];
      if (!px) continue;
      const FeatureMap& m = maps[j];
      if (px->row >= m.height() || px->col >= m.width())
        throw ValidationError("visible pixel outside feature map " + std::to_string(j));
      if (!mask_source[j].foreground(px->row, px->col)) continue;
      auto f = m.pixel(px->row, px->col);
      for (int c = 0; c < channels; ++c) row(c) += f[static_cast<std::size_t>(c)];
      ++count;
    }
    if (count > 0) row /= static_cast<double>(count);
    agg.view_count[v] = count;
  });
  return agg;
}

Aggregation backproject_aggregate(const TriangleMesh& mesh, std::span<const CameraView> views,
                                  std::span<const FeatureMap> maps, double depth_tolerance) {
  if (views.size() != maps.size())
    throw ValidationError("got " + std::to_string(maps.size()) + " feature maps for " +
                          std::to_string(views.size()) + " views");
  if (views.empty()) throw ParameterError("aggregation needs at least one view");
  for (std::size_t j = 0; j < views.size(); ++j) {
    if (maps[j].height() != views[j].height || maps[j].width() != views[j].width)
      throw ValidationError("feature map " + std::to_string(j) + " size does not match its camera");
  }
  return aggregate_visible(compute_visibility(mesh, views, depth_tolerance), maps);
}

ChiralPair build_chiral_pair(const TriangleMesh& mesh, std::span<const CameraView> views,
                             std::span<const FeatureMap> maps_original,
                             std::span<const FeatureMap> maps_flipped_images,
                             double depth_tolerance) {
  if (views.empty()) throw ParameterError("chiral pair needs at least one view");
  if (maps_original.size() != views.size() || maps_flipped_images.size() != views.size())
    throw ValidationError("view count mismatch: " + std::to_string(views.size()) + " cameras, " +
                          std::to_string(maps_original.size()) + " original maps, " +
                          std::to_string(maps_flipped_images.size()) + " flipped maps");
  for (std::size_t j = 0; j < views.size(); ++j) {
    const auto& a = maps_original[j];
    const auto& b = maps_flipped_images[j];
    if (a.height() != views[j].height || a.width() != views[j].width || b.height() != a.height() ||
        b.width() != a.width() || b.channels() != a.channels())
      throw ValidationError("feature map " + std::to_string(j) + " dimensions are inconsistent");
  }

  std::vector<FeatureMap> aligned;
  aligned.reserve(maps_flipped_images.size());
  for (const auto& m : maps_flipped_images) aligned.push_back(flip_feature_map_horizontal(m));

  const VisibilityTable visibility = compute_visibility(mesh, views, depth_tolerance);
  Aggregation original = aggregate_visible(visibility, maps_original);
  Aggregation flipped = aggregate_visible(visibility, aligned, maps_original);

  ChiralPair pair;
  pair.features = std::move(original.features);
  pair.features_flipped = std::move(flipped.features);
  pair.view_count = std::move(original.view_count);
  return pair;
}

double default_depth_tolerance(const TriangleMesh& mesh) {
  const double r = mesh.vertex_count() ? mesh.vertices().rowwise().norm().maxCoeff() : 1.0;
  return 1e-3 * (r > 0.0 ? r : 1.0);
}

void write_camera_manifest(const std::filesystem::path& path, std::span<const CameraView> views) {
  nlohmann::json doc;
  doc["format"] = "chiralis-cameras";
  doc["version"] = 1;
  auto& arr = doc["views"] = nlohmann::json::array();
  for (const auto& v : views) {
    nlohmann::json jv;
    jv["index"] = v.index;
    std::vector<double> rot;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rot.push_back(v.rotation(r, c));
    jv["rotation"] = rot;
    jv["translation"] = {v.translation.x(), v.translation.y(), v.translation.z()};
    jv["fx"] = v.fx;
    jv["fy"] = v.fy;
    jv["cx"] = v.cx;
    jv["cy"] = v.cy;
    jv["height"] = v.height;
    jv["width"] = v.width;
    arr.push_back(std::move(jv));
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write camera manifest " + path.string());
  out << doc.dump(2) << '\n';
}

std::vector<CameraView> read_camera_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open camera manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    std::vector<CameraView> views;
    for (const auto& jv : doc.at("views")) {
      CameraView v;
      v.index = jv.at("index").get<std::size_t>();
      const auto rot = jv.at("rotation").get<std::vector<double>>();
      const auto tr = jv.at("translation").get<std::vector<double>>();
      if (rot.size() != 9 || tr.size() != 3) throw FormatError("camera rotation/translation has wrong length");
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) v.rotation(r, c) = rot[static_cast<std::size_t>(r * 3 + c)];
      v.translation = {tr[0], tr[1], tr[2]};
      v.fx = jv.at("fx").get<double>();
      v.fy = jv.at("fy").get<double>();
      v.cx = jv.at("cx").get<double>();
      v.cy = jv.at("cy").get<double>();
      v.height = jv.at("height").get<int>();
      v.width = jv.at("width").get<int>();
      v.validate();
      views.push_back(v);
    }
    return views;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("camera manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace chiralis
