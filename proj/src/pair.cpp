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


#include "chiralis/pair.hpp"

#include <string>

#include "chiralis/error.hpp"

namespace chiralis {

void ChiralPair::validate() const {
  if (features.rows() != features_flipped.rows() || features.cols() != features_flipped.cols())
    throw ValidationError("F is " + std::to_string(features.rows()) + "x" + std::to_string(features.cols()) +
                          " but F_bar is " + std::to_string(features_flipped.rows()) + "x" +
                          std::to_string(features_flipped.cols()));
  if (view_count.size() != vertex_count())
    throw ValidationError("view_count has " + std::to_string(view_count.size()) + " entries for " +
                          std::to_string(vertex_count()) + " vertices");
  for (std::size_t v = 0; v < vertex_count(); ++v) {
    if (view_count[v] < 0) throw ValidationError("negative view count at vertex " + std::to_string(v));
    if (!included(v)) continue;
    const auto r = static_cast<Eigen::Index>(v);
    if (!features.row(r).allFinite() || !features_flipped.row(r).allFinite())
      throw ValidationError("non-finite feature at vertex " + std::to_string(v));
  }
}

}  // namespace chiralis
