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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "chiralis/pair.hpp"
#include "chiralis/shape.hpp"
#include "chiralis/view.hpp"

namespace chiralis {

enum class ContainerKind : std::uint8_t { view_maps = 1, vertex_features = 2 };

/// Binary feature container:
///   "CFV1" | u32 version | u8 kind | 3 reserved bytes | dims (u32 each) |
///   f32 payload, row-major | u32 CRC32 of all preceding bytes.
/// view_maps dims are (N, H, W, C) with payload N x H x W x C; vertex_features
/// dims are (|V|, D). All integers and floats little-endian.
struct FeatureContainer {
  static constexpr std::uint32_t kVersion = 1;

  ContainerKind kind = ContainerKind::vertex_features;
  std::vector<std::uint32_t> dims;
  std::vector<float> payload;

  /// Pixels whose channels are all zero are stored as background; on reading,
  /// a pixel is foreground iff any channel is non-zero.
  static FeatureContainer from_maps(std::span<const FeatureMap> maps);
  static FeatureContainer from_matrix(const Eigen::MatrixXd& rows);

  std::vector<FeatureMap> to_maps() const;
  Eigen::MatrixXd to_matrix() const;

  /// Declared dims must match the payload length, else ValidationError.
  void validate() const;
  bool operator==(const FeatureContainer&) const = default;
};

std::vector<std::uint8_t> encode_container(const FeatureContainer& c);
/// Throws IoError on bad magic, unsupported version, size mismatch or checksum mismatch.
FeatureContainer decode_container(std::span<const std::uint8_t> bytes);
void write_container(const std::filesystem::path& path, const FeatureContainer& c);
FeatureContainer read_container(const std::filesystem::path& path);

/// JSON sidecar describing one shape's chiral pair on disk. Relative paths are
/// resolved against the manifest's directory.
struct PairManifest {
  std::string shape_id;
  std::filesystem::path mesh;
  std::filesystem::path features;
  std::filesystem::path features_flipped;
  std::filesystem::path view_count;
  std::filesystem::path camera_manifest;
  std::filesystem::path annotations;  // optional
  std::string provenance;
  nlohmann::json config = nlohmann::json::object();
};

void write_pair_manifest(const std::filesystem::path& path, const PairManifest& manifest);
/// Returned paths are resolved to absolute-or-manifest-relative form.
PairManifest read_pair_manifest(const std::filesystem::path& path);

/// Writes <stem>.F.cfv, <stem>.Fbar.cfv, <stem>.count.cfv next to manifest_path and
/// the manifest itself; fills the feature paths of `manifest`.
void write_pair_files(const std::filesystem::path& manifest_path, const ChiralPair& pair, PairManifest manifest);
ChiralPair read_pair_files(const PairManifest& manifest);

/// View-map container sidecar: shape id, camera manifest, provenance and the
/// optional per-model channel widths used by normalize_concat_groups.
struct ViewMapsManifest {
  std::string shape_id;
  std::filesystem::path camera_manifest;
  std::string provenance;
  std::vector<int> channel_groups;
};

void write_view_maps_manifest(const std::filesystem::path& path, const ViewMapsManifest& manifest);
std::optional<ViewMapsManifest> read_view_maps_manifest(const std::filesystem::path& path);

/// Parameters of the synthetic chiral-feature oracle.
struct SyntheticSpec {
  Eigen::Vector3d plane_normal = Eigen::Vector3d::UnitX();
  double plane_offset = 0.0;
  int chiral_channels = 2;
  int symmetric_channels = 8;
  double noise = 0.01;
  /// Seeds the feature field (shared by all shapes generated with the same seed).
  std::uint64_t seed = 42;
  /// Decorrelates noise between shapes generated from one field.
  std::uint64_t noise_stream = 0;

  void validate() const;
  int dim() const { return symmetric_channels + chiral_channels; }
};

struct SyntheticPair {
  ChiralPair pair;
  ChiralityAnnotation labels;
  /// Vertices within 1e-9 of the plane; labelled +1 by convention.
  std::vector<bool> on_plane;
  /// Noise-free rows [s(v) | c(v) * label]; what a renderer would paint.
  Eigen::MatrixXd clean_features;
};

/// labels = sign of the signed plane distance; F = [s | c * label] + noise,
/// F_bar = [s | -c * label] + independent noise, with s mirror-invariant and
/// c in [0.3, 0.9]. Every vertex gets view_count 1.
SyntheticPair generate_synthetic_pair(const TriangleMesh& mesh, const SyntheticSpec& spec);

/// Seeded closed surface, mirror-symmetric about x = 0: a deformed UV sphere with
/// `rings` latitude rings of `segments` vertices plus two poles, scaled into the
/// unit ball. Longitudes are offset by half a step so only the poles lie on the plane.
TriangleMesh make_bilateral_mesh(std::uint64_t seed, int rings = 25, int segments = 40);

/// Paints per-vertex features onto each view by perspective-correct barycentric
/// interpolation, and builds the matching flipped-image maps: the mirrored image
/// with the given channels negated.
struct SyntheticViews {
  std::vector<FeatureMap> original;
  std::vector<FeatureMap> flipped_images;
};
SyntheticViews render_synthetic_views(const TriangleMesh& mesh, std::span<const CameraView> views,
                                      const Eigen::MatrixXd& vertex_features, std::span<const int> negated_channels);

}  // namespace chiralis
