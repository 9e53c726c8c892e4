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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "chiralis/net.hpp"
#include "chiralis/shape.hpp"

namespace chiralis {

/// Fraction of sign agreements per shape, averaged over shapes, folded once
/// globally with the fraction of strict disagreements (the larger wins). This is
/// max(acc, 1 - acc) when no included vertex has chi = 0, and is exactly
/// invariant to a global sign flip. Excluded vertices are skipped; sign(0)
/// matches neither label.
double chirality_accuracy(std::span<const ChiralityField> fields, std::span<const ChiralityAnnotation> annotations);

/// The unfolded mean of per-shape accuracies (before max(acc, 1 - acc)).
double chirality_agreement(std::span<const ChiralityField> fields, std::span<const ChiralityAnnotation> annotations);

/// Row-normalised base features with weight * chi appended as one extra column.
Eigen::MatrixXd augment_features(const Eigen::MatrixXd& base, std::span<const double> chi, double weight);

struct MatchResult {
  std::vector<VertexIndex> correspondence;
  std::vector<double> similarity;
};

/// Cosine nearest neighbour per source row, ties to the lower target index.
MatchResult match_nearest(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target);

/// Largest pairwise Euclidean distance among the target points.
double max_pairwise_distance(const Coords& points);

/// Mean distance between predicted and ground-truth target points.
double matching_error(const MatchResult& match, std::span<const VertexIndex> ground_truth, const Coords& target);

/// Fraction of source vertices with error strictly below epsilon * d, d being
/// the target's maximal pairwise distance.
double matching_accuracy(const MatchResult& match, std::span<const VertexIndex> ground_truth, const Coords& target,
                         double epsilon);

struct PckCurve {
  std::vector<double> tolerances;
  std::vector<double> accuracies;
  double auc = 0.0;
};

/// Accuracy at each tolerance; AUC is the trapezoid integral divided by the grid
/// span (the single accuracy when the grid has one point).
PckCurve pck_curve(const MatchResult& match, std::span<const VertexIndex> ground_truth, const Coords& target,
                   std::span<const double> tolerance_grid);

/// Trapezoid AUC of an arbitrary curve normalised by its tolerance span.
double normalized_auc(std::span<const double> tolerances, std::span<const double> accuracies);

/// n uniform points on [lo, hi].
std::vector<double> uniform_grid(double lo, double hi, std::size_t n);

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;
  /// Within-cluster sum of squares after each assignment step.
  std::vector<double> objective;
  std::size_t iterations = 0;
};

/// Lloyd iterations from a seeded k-means++ start, stopping when no centroid moves
/// more than 1e-9 or after max_iters. Empty clusters are re-seeded with the point
/// farthest from its centroid.
KMeansResult kmeans_segment(const Eigen::MatrixXd& features, std::size_t k, std::uint64_t seed,
                            std::size_t max_iters = 300);

std::vector<VertexIndex> load_correspondence(const std::filesystem::path& path, std::size_t source_count,
                                             std::size_t target_count);

void write_pck_csv(const std::filesystem::path& path, const PckCurve& curve);
PckCurve read_pck_csv(const std::filesystem::path& path);
/// Polyline plot of one or more PCK curves.
void write_pck_svg(const std::filesystem::path& path, std::span<const PckCurve> curves,
                   std::span<const std::string> labels);

}  // namespace chiralis
