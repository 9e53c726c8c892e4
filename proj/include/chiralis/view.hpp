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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "chiralis/pair.hpp"
#include "chiralis/shape.hpp"

namespace chiralis {

/// Pinhole camera. World points map to camera coordinates by
/// p_cam = rotation * p_world + translation; x right, y down, z forward.
struct CameraView {
  std::size_t index = 0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
  int height = 1, width = 1;

  /// Orthonormality within 1e-6 and positive image size, else ValidationError.
  void validate() const;
  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const { return rotation * world + translation; }
  /// Camera centre in world coordinates.
  Eigen::Vector3d center() const { return -rotation.transpose() * translation; }
};

/// Dense H x W x C float feature image with a foreground mask.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int height, int width, int channels);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }

  std::span<float> pixel(int row, int col) {
    return {data_.data() + offset(row, col), static_cast<std::size_t>(channels_)};
  }
  std::span<const float> pixel(int row, int col) const {
    return {data_.data() + offset(row, col), static_cast<std::size_t>(channels_)};
  }
  bool foreground(int row, int col) const { return mask_[static_cast<std::size_t>(row) * width_ + col] != 0; }
  void set_foreground(int row, int col, bool fg) { mask_[static_cast<std::size_t>(row) * width_ + col] = fg; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  /// Throws ValidationError if any value is non-finite.
  void validate() const;

  bool operator==(const FeatureMap&) const = default;

 private:
  std::size_t offset(int row, int col) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_;
  }

  int height_ = 0, width_ = 0, channels_ = 0;
  std::vector<float> data_;
  std::vector<std::uint8_t> mask_;
};

struct RingOptions {
  int height = 128;
  int width = 128;
  /// Full horizontal field of view in degrees.
  double fov_deg = 65.0;
};

/// n_views cameras per elevation ring, azimuths j * 360 / n_views starting at 0,
/// all looking at the origin with world +y up. Views are ordered ring by ring.
/// Throws ParameterError for n_views == 0, radius <= 0, an empty elevation list,
/// or |elevation| >= 90 degrees.
std::vector<CameraView> generate_camera_ring(std::size_t n_views, double radius,
                                             std::span<const double> elevations_deg,
                                             const RingOptions& options = {});

/// Z-buffer of a mesh seen from one view at the view's resolution. Depth is camera
/// z, interpolated perspective-correctly; face is -1 where no triangle covers the
/// pixel centre.
struct Raster {
  int height = 0, width = 0;
  std::vector<double> depth;
  std::vector<std::int64_t> face;
  /// Perspective-correct barycentric weights of the covering face.
  std::vector<std::array<double, 3>> barycentric;

  std::size_t at(int row, int col) const { return static_cast<std::size_t>(row) * width + col; }
};

Raster rasterize(const TriangleMesh& mesh, const CameraView& view);

struct PixelCoord {
  int row = 0, col = 0;
  bool operator==(const PixelCoord&) const = default;
};

/// Nearest pixel of every vertex that survives the visibility test, nullopt otherwise.
/// A vertex is visible if it projects inside the image in front of the camera and
/// the pixel is empty, is covered by one of the vertex's own faces, or has
/// rasterized depth >= vertex depth - depth_tolerance.
std::vector<std::optional<PixelCoord>> visible_vertex_pixels(const TriangleMesh& mesh,
                                                             const CameraView& view,
                                                             double depth_tolerance);

/// out(r, c) = in(r, W - 1 - c) for both data and mask.
FeatureMap flip_feature_map_horizontal(const FeatureMap& map);

/// Per foreground pixel: L2-normalise each part, concatenate, L2-normalise the
/// result. A pixel is foreground only if both inputs mark it so; background
/// pixels are zero. Norms are guarded by max(norm, 1e-12).
FeatureMap normalize_concat(const FeatureMap& a, const FeatureMap& b);

/// Same procedure over consecutive channel groups of one map. Group widths must
/// sum to the channel count.
FeatureMap normalize_concat_groups(const FeatureMap& map, std::span<const int> group_widths);

/// Visibility-by-view table; entry [j][v] is the pixel of vertex v in view j.
using VisibilityTable = std::vector<std::vector<std::optional<PixelCoord>>>;

VisibilityTable compute_visibility(const TriangleMesh& mesh, std::span<const CameraView> views,
                                   double depth_tolerance);

struct Aggregation {
  Eigen::MatrixXd features;
  std::vector<int> view_count;
};

/// Mean of each vertex's visible foreground pixel features over all views,
/// summed in view order. Unseen vertices get a zero row and view_count 0.
Aggregation backproject_aggregate(const TriangleMesh& mesh, std::span<const CameraView> views,
                                  std::span<const FeatureMap> maps, double depth_tolerance);

/// Aggregation with a precomputed visibility table. Pixels are sampled from
/// `maps`; the foreground test is taken from `mask_source` (defaults to `maps`).
Aggregation aggregate_visible(const VisibilityTable& visibility, std::span<const FeatureMap> maps,
                              std::span<const FeatureMap> mask_source = {});

/// Features from maps_original; counterpart from each flipped-image map flipped
/// back and sampled at the original views' visible pixels.
ChiralPair build_chiral_pair(const TriangleMesh& mesh, std::span<const CameraView> views,
                             std::span<const FeatureMap> maps_original,
                             std::span<const FeatureMap> maps_flipped_images,
                             double depth_tolerance);

/// Default depth tolerance: 1e-3 of the largest vertex distance from the origin.
double default_depth_tolerance(const TriangleMesh& mesh);

void write_camera_manifest(const std::filesystem::path& path, std::span<const CameraView> views);
std::vector<CameraView> read_camera_manifest(const std::filesystem::path& path);

}  // namespace chiralis
