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

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace chiralis {

/// Per-vertex feature pair. Row v of `features` aggregates the original views,
/// row v of `features_flipped` the re-aligned flipped views. Rows whose
/// view_count is zero carry no observation and are excluded downstream.
struct ChiralPair {
  Eigen::MatrixXd features;
  Eigen::MatrixXd features_flipped;
  std::vector<int> view_count;

  std::size_t vertex_count() const noexcept { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(features.cols()); }
  bool included(std::size_t v) const noexcept { return view_count[v] > 0; }

  /// Throws ValidationError on shape mismatch or non-finite populated rows.
  void validate() const;
};

}  // namespace chiralis
