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


// Independent reference computations used only by the tests. Nothing here
// calls into the code paths it checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <vector>

#include <Eigen/Core>

#include "chiralis/shape.hpp"

namespace chiralis::oracle {

/// All-pairs distances; neighbour sets by full sort with (distance, index) order.
inline std::set<Edge> mutual_knn(const Coords& pts, std::size_t k) {
  const auto n = static_cast<std::size_t>(pts.rows());
  std::vector<std::set<std::size_t>> nb(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = 0;
      for (int c = 0; c < 3; ++c) {
        const double t = pts(static_cast<Eigen::Index>(i), c) - pts(static_cast<Eigen::Index>(j), c);
        d += t * t;
      }
      all.emplace_back(d, j);
    }
    std::sort(all.begin(), all.end());
    for (std::size_t q = 0; q < k; ++q) nb[i].insert(all[q].second);
  }
  std::set<Edge> out;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v : nb[u])
      if (u < v && nb[v].count(u)) out.insert({static_cast<VertexIndex>(u), static_cast<VertexIndex>(v)});
  return out;
}

/// Explicit cosine similarity matrix, argmax with first-index ties.
inline std::vector<VertexIndex> cosine_argmax(const Eigen::MatrixXd& src, const Eigen::MatrixXd& tgt) {
  std::vector<VertexIndex> out;
  for (Eigen::Index i = 0; i < src.rows(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    VertexIndex arg = 0;
    for (Eigen::Index j = 0; j < tgt.rows(); ++j) {
      double dot = 0, na = 0, nb = 0;
      for (Eigen::Index c = 0; c < src.cols(); ++c) {
        dot += src(i, c) * tgt(j, c);
        na += src(i, c) * src(i, c);
        nb += tgt(j, c) * tgt(j, c);
      }
      const double cs = dot / (std::sqrt(na) * std::sqrt(nb));
      if (cs > best) {
        best = cs;
        arg = static_cast<VertexIndex>(j);
      }
    }
    out.push_back(arg);
  }
  return out;
}

/// Exhaustive minimum within-cluster sum of squares over all 2-partitions
/// (n <= ~16). Returns labels with point 0 in cluster 0.
inline std::vector<int> optimal_two_partition(const Eigen::MatrixXd& pts) {
  const auto n = static_cast<std::size_t>(pts.rows());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_labels;
  for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << n); ++mask) {
    if (mask & 1) continue;  // point 0 always in cluster 0
    double cost = 0;
    for (int cl = 0; cl < 2; ++cl) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(pts.cols());
      int cnt = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (((mask >> i) & 1) == static_cast<std::size_t>(cl)) {
          mean += pts.row(static_cast<Eigen::Index>(i));
          ++cnt;
        }
      mean /= cnt;
      for (std::size_t i = 0; i < n; ++i)
        if (((mask >> i) & 1) == static_cast<std::size_t>(cl))
          cost += (pts.row(static_cast<Eigen::Index>(i)) - mean).squaredNorm();
    }
    if (cost < best) {
      best = cost;
      best_labels.assign(n, 0);
      for (std::size_t i = 0; i < n; ++i) best_labels[i] = static_cast<int>((mask >> i) & 1);
    }
  }
  return best_labels;
}

/// Central differences of f over every coordinate of x.
inline std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                               std::vector<double> x, double step) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double fp = f(x);
    x[i] = orig - step;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

/// |a - n| / max(|a|, |n|), with agreements below `abs_floor` counted as exact.
inline double relative_error(double analytic, double numeric, double abs_floor = 1e-9) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_floor) return 0.0;
  return diff / std::max(std::abs(analytic), std::abs(numeric));
}

/// Loop-level evaluation of the full objective from a flat row-major parameter
/// vector (encoder w1,b1,w2,b2 | projection | decoder w1,b1,w2,b2), all rows
/// included. Written from the loss definitions, not from the library code.
inline double naive_total_loss(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Fb, const std::vector<Edge>& edges,
                               const std::vector<double>& theta, double l1, double l2, double l3, bool tanh_head) {
  const auto D = static_cast<std::size_t>(F.cols());
  const std::size_t n = static_cast<std::size_t>(F.rows());
  std::size_t off = 0;
  auto take = [&](std::size_t count) {
    const double* p = theta.data() + off;
    off += count;
    return p;
  };
  const double* ew1 = take(D * D);
  const double* eb1 = take(D);
  const double* ew2 = take(D * D);
  const double* eb2 = take(D);
  const double* A = take(D * D);
  const double* dw1 = take(D * D);
  const double* db1 = take(D);
  const double* dw2 = take(D * D);
  const double* db2 = take(D);

  auto mlp = [D](const std::vector<double>& x, const double* w1, const double* b1, const double* w2, const double* b2) {
    std::vector<double> h(D), y(D);
    for (std::size_t i = 0; i < D; ++i) {
      double s = b1[i];
      for (std::size_t j = 0; j < D; ++j) s += w1[i * D + j] * x[j];
      h[i] = s > 0 ? s : 0;
    }
    for (std::size_t i = 0; i < D; ++i) {
      double s = b2[i];
      for (std::size_t j = 0; j < D; ++j) s += w2[i * D + j] * h[j];
      y[i] = s;
    }
    return y;
  };

  std::vector<double> chi(n), chib(n);
  double recon = 0;
  for (int which = 0; which < 2; ++which) {
    const Eigen::MatrixXd& X = which == 0 ? F : Fb;
    auto& out = which == 0 ? chi : chib;
    for (std::size_t r = 0; r < n; ++r) {
      std::vector<double> x(D);
      for (std::size_t c = 0; c < D; ++c) x[c] = X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      const auto g = mlp(x, ew1, eb1, ew2, eb2);
      std::vector<double> p(D, 0.0);
      for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j) p[i] += A[i * D + j] * g[j];
      if (tanh_head) {
        out[r] = std::tanh(p[0]);
      } else {
        double nn = 0;
        for (double v : p) nn += v * v;
        out[r] = p[0] / std::max(std::sqrt(nn), 1e-12);
      }
      const auto xr = mlp(g, dw1, db1, dw2, db2);
      for (std::size_t c = 0; c < D; ++c) recon += (x[c] - xr[c]) * (x[c] - xr[c]);
    }
  }
  const double sn = std::sqrt(static_cast<double>(n));
  double diff = 0;
  for (std::size_t i = 0; i < n; ++i) diff += (chi[i] - chib[i]) * (chi[i] - chib[i]);
  const double dis = -std::sqrt(diff) / sn;
  const double inv = std::sqrt(recon) / sn;
  double var = 0;
  for (const auto& e : edges) var += std::abs(chi[e[0]] - chi[e[1]]) + std::abs(chib[e[0]] - chib[e[1]]);
  var = edges.empty() ? 0.0 : var / static_cast<double>(edges.size());
  auto fif1 = [](const std::vector<double>& v) {
    double s = 0, m = 0;
    for (double x : v) {
      s += x;
      m = std::max(m, std::abs(x));
    }
    return std::abs(s) / std::max(m, 1e-12);
  };
  const double fif = (fif1(chi) + fif1(chib)) / static_cast<double>(n);
  return dis + l1 * inv + l2 * var + l3 * fif;
}

}  // namespace chiralis::oracle
