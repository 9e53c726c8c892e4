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


#include "chiralis/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "chiralis/error.hpp"
#include "chiralis/parallel.hpp"

namespace chiralis {

namespace {

constexpr double kGuard = 1e-12;

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = m;
  for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) /= std::max(out.row(r).norm(), kGuard);
  return out;
}

void check_match_inputs(const MatchResult& match, std::span<const VertexIndex> gt, const Coords& target) {
  if (match.correspondence.size() != gt.size())
    throw ValidationError("match has " + std::to_string(match.correspondence.size()) + " entries but ground truth has " +
                          std::to_string(gt.size()));
  if (gt.empty()) throw ValidationError("matching metrics need at least one source vertex");
  const auto nt = static_cast<std::size_t>(target.rows());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (match.correspondence[i] >= nt || gt[i] >= nt)
      throw ValidationError("correspondence index out of range at source vertex " + std::to_string(i));
  }
}

double match_distance(const MatchResult& match, std::span<const VertexIndex> gt, const Coords& target, std::size_t i) {
  return (target.row(match.correspondence[i]) - target.row(gt[i])).norm();
}

}  // namespace

namespace {

struct SignCounts {
  double agree = 0.0;
  double disagree = 0.0;
};

// Mean over shapes of the fraction of included vertices whose sign agrees
// (resp. strictly disagrees) with the label. sign(0) counts as neither.
SignCounts sign_fractions(std::span<const ChiralityField> fields, std::span<const ChiralityAnnotation> annotations) {
  if (fields.empty()) throw ParameterError("chirality accuracy needs at least one shape");
  if (fields.size() != annotations.size())
    throw ValidationError(std::to_string(fields.size()) + " fields but " + std::to_string(annotations.size()) +
                          " annotations");
  SignCounts out;
  for (std::size_t s = 0; s < fields.size(); ++s) {
    const auto& f = fields[s];
    const auto& labels = annotations[s].labels;
    if (f.chi.size() != labels.size())
      throw ValidationError("shape " + std::to_string(s) + ": field has " + std::to_string(f.chi.size()) +
                            " vertices but annotation has " + std::to_string(labels.size()));
    std::size_t counted = 0, agree = 0, disagree = 0;
    for (std::size_t v = 0; v < labels.size(); ++v) {
      if (!f.included.empty() && !f.included[v]) continue;
      ++counted;
      const int sg = (f.chi[v] > 0.0) - (f.chi[v] < 0.0);
      agree += sg == labels[v];
      disagree += sg == -labels[v];
    }
    if (counted == 0) throw ValidationError("shape " + std::to_string(s) + " has no included vertices");
    out.agree += static_cast<double>(agree) / static_cast<double>(counted);
    out.disagree += static_cast<double>(disagree) / static_cast<double>(counted);
  }
  out.agree /= static_cast<double>(fields.size());
  out.disagree /= static_cast<double>(fields.size());
  return out;
}

}  // namespace

double chirality_agreement(std::span<const ChiralityField> fields, std::span<const ChiralityAnnotation> annotations) {
  return sign_fractions(fields, annotations).agree;
}

double chirality_accuracy(std::span<const ChiralityField> fields, std::span<const ChiralityAnnotation> annotations) {
  const SignCounts c = sign_fractions(fields, annotations);
  return std::max(c.agree, c.disagree);
}

Eigen::MatrixXd augment_features(const Eigen::MatrixXd& base, std::span<const double> chi, double weight) {
  if (static_cast<std::size_t>(base.rows()) != chi.size())
    throw ValidationError("base has " + std::to_string(base.rows()) + " rows but chi has " +
                          std::to_string(chi.size()) + " entries");
  Eigen::MatrixXd out(base.rows(), base.cols() + 1);
  out.leftCols(base.cols()) = normalize_rows(base);
  for (Eigen::Index r = 0; r < base.rows(); ++r) out(r, base.cols()) = weight * chi[static_cast<std::size_t>(r)];
  return out;
}

MatchResult match_nearest(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target) {
  if (target.rows() == 0) throw ValidationError("cannot match against an empty target");
  if (source.cols() != target.cols())
    throw ValidationError("source dimension " + std::to_string(source.cols()) + " differs from target dimension " +
                          std::to_string(target.cols()));
  const Eigen::MatrixXd src = normalize_rows(source);
  const Eigen::MatrixXd tgt = normalize_rows(target);
  MatchResult out;
  const auto ns = static_cast<std::size_t>(src.rows());
  out.correspondence.assign(ns, 0);
  out.similarity.assign(ns, 0.0);
  parallel_for(ns, [&](std::size_t i) {
    const Eigen::VectorXd sims = tgt * src.row(static_cast<Eigen::Index>(i)).transpose();
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < sims.size(); ++j)
      if (sims(j) > sims(best)) best = j;
    out.correspondence[i] = static_cast<VertexIndex>(best);
    out.similarity[i] = sims(best);
  });
  return out;
}

double max_pairwise_distance(const Coords& points) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = i + 1; j < points.rows(); ++j) best = std::max(best, (points.row(i) - points.row(j)).squaredNorm());
  return std::sqrt(best);
}

double matching_error(const MatchResult& match, std::span<const VertexIndex> ground_truth, const Coords& target) {
  check_match_inputs(match, ground_truth, target);
  double s = 0.0;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) s += match_distance(match, ground_truth, target, i);
  return s / static_cast<double>(ground_truth.size());
}

namespace {

double accuracy_with_diameter(const MatchResult& match, std::span<const VertexIndex> gt, const Coords& target,
                              double epsilon, double diameter) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ParameterError("tolerance must lie in [0, 1]");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) hits += match_distance(match, gt, target, i) < epsilon * diameter;
  return static_cast<double>(hits) / static_cast<double>(gt.size());
}

}  // namespace

double matching_accuracy(const MatchResult& match, std::span<const VertexIndex> ground_truth, const Coords& target,
                         double epsilon) {
  check_match_inputs(match, ground_truth, target);
  return accuracy_with_diameter(match, ground_truth, target, epsilon, max_pairwise_distance(target));
}

double normalized_auc(std::span<const double> tolerances, std::span<const double> accuracies) {
  if (tolerances.empty() || tolerances.size() != accuracies.size())
    throw ParameterError("AUC needs matching, non-empty tolerance and accuracy lists");
  if (tolerances.size() == 1) return accuracies.front();
  const double span = tolerances.back() - tolerances.front();
  if (!(span > 0.0)) throw ParameterError("tolerance grid must span a positive range");
  double area = 0.0;
  for (std::size_t i = 1; i < tolerances.size(); ++i)
    area += 0.5 * (accuracies[i] + accuracies[i - 1]) * (tolerances[i] - tolerances[i - 1]);
  return area / span;
}

PckCurve pck_curve(const MatchResult& match, std::span<const VertexIndex> ground_truth, const Coords& target,
                   std::span<const double> tolerance_grid) {
  if (tolerance_grid.empty()) throw ParameterError("PCK needs a non-empty tolerance grid");
  for (std::size_t i = 1; i < tolerance_grid.size(); ++i)
    if (!(tolerance_grid[i] > tolerance_grid[i - 1])) throw ParameterError("tolerance grid must be strictly ascending");
  check_match_inputs(match, ground_truth, target);
  const double d = max_pairwise_distance(target);
  PckCurve curve;
  curve.tolerances.assign(tolerance_grid.begin(), tolerance_grid.end());
  for (double eps : tolerance_grid) curve.accuracies.push_back(accuracy_with_diameter(match, ground_truth, target, eps, d));
  curve.auc = normalized_auc(curve.tolerances, curve.accuracies);
  return curve;
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
  if (n == 0) throw ParameterError("grid needs at least one point");
  if (n == 1) return {lo};
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  g.back() = hi;
  return g;
}

KMeansResult kmeans_segment(const Eigen::MatrixXd& features, std::size_t k, std::uint64_t seed,
                            std::size_t max_iters) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (k == 0) throw ParameterError("k must be positive");
  if (k > n) throw ParameterError("k = " + std::to_string(k) + " exceeds the point count " + std::to_string(n));
  if (!features.allFinite()) throw ValidationError("k-means features contain non-finite values");
  const auto d = features.cols();
  const auto ki = static_cast<Eigen::Index>(k);

  // k-means++ seeding.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd centroids(ki, d);
  centroids.row(0) = features.row(static_cast<Eigen::Index>(std::min<std::size_t>(n - 1, static_cast<std::size_t>(unit(rng) * n))));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (Eigen::Index c = 1; c < ki; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], (features.row(static_cast<Eigen::Index>(i)) - centroids.row(c - 1)).squaredNorm());
      total += nearest[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += nearest[i];
        if (acc > target && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::min<std::size_t>(n - 1, static_cast<std::size_t>(unit(rng) * n));
    }
    centroids.row(c) = features.row(static_cast<Eigen::Index>(pick));
  }

  KMeansResult res;
  res.labels.assign(n, 0);
  std::vector<double> dist(n, 0.0);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = features.row(static_cast<Eigen::Index>(i));
      int best = 0;
      double bd = (row - centroids.row(0)).squaredNorm();
      for (Eigen::Index c = 1; c < ki; ++c) {
        const double dc = (row - centroids.row(c)).squaredNorm();
        if (dc < bd) {
          bd = dc;
          best = static_cast<int>(c);
        }
      }
      res.labels[i] = best;
      dist[i] = bd;
      objective += bd;
    }
    res.objective.push_back(objective);
    res.iterations = iter + 1;

    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(ki, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      next.row(res.labels[i]) += features.row(static_cast<Eigen::Index>(i));
      ++counts[static_cast<std::size_t>(res.labels[i])];
    }
    for (Eigen::Index c = 0; c < ki; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
        continue;
      }
      // Empty cluster: take over the point farthest from its current centroid.
      const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
      next.row(c) = features.row(static_cast<Eigen::Index>(far));
      dist[far] = 0.0;
    }
    const double shift = (next - centroids).rowwise().norm().maxCoeff();
    centroids = std::move(next);
    if (shift < 1e-9) break;
  }
  res.centroids = std::move(centroids);
  return res;
}

std::vector<VertexIndex> load_correspondence(const std::filesystem::path& path, std::size_t source_count,
                                             std::size_t target_count) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open correspondence file " + path.string());
  std::vector<VertexIndex> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    long long v;
    if (!(ss >> v)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw FormatError("expected a target index", line_no);
    }
    std::string rest;
    if (ss >> rest) throw FormatError("expected one index per line", line_no);
    if (v < 0 || static_cast<std::size_t>(v) >= target_count)
      throw ValidationError("correspondence index " + std::to_string(v) + " at line " + std::to_string(line_no) +
                            " out of range for target with " + std::to_string(target_count) + " vertices");
    out.push_back(static_cast<VertexIndex>(v));
  }
  if (out.size() != source_count)
    throw ValidationError("correspondence has " + std::to_string(out.size()) + " lines for " +
                          std::to_string(source_count) + " source vertices");
  return out;
}

void write_pck_csv(const std::filesystem::path& path, const PckCurve& curve) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "tolerance,accuracy\n";
  for (std::size_t i = 0; i < curve.tolerances.size(); ++i) out << curve.tolerances[i] << ',' << curve.accuracies[i] << '\n';
}

PckCurve read_pck_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line.rfind("tolerance,accuracy", 0) != 0) throw FormatError("missing PCK CSV header", 1);
  PckCurve c;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("expected tolerance,accuracy", line_no);
    try {
      c.tolerances.push_back(std::stod(line.substr(0, comma)));
      c.accuracies.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw FormatError("invalid number in PCK CSV", line_no);
    }
  }
  if (c.tolerances.empty()) throw FormatError("PCK CSV has no rows", line_no);
  c.auc = normalized_auc(c.tolerances, c.accuracies);
  return c;
}

void write_pck_svg(const std::filesystem::path& path, std::span<const PckCurve> curves,
                   std::span<const std::string> labels) {
  if (curves.empty()) throw ParameterError("nothing to plot");
  constexpr double W = 480, H = 360, L = 60, R = 20, T = 20, B = 50;
  double xmax = 0.0;
  for (const auto& c : curves)
    if (!c.tolerances.empty()) xmax = std::max(xmax, c.tolerances.back());
  if (!(xmax > 0.0)) xmax = 1.0;
  auto px = [&](double x) { return L + (W - L - R) * x / xmax; };
  auto py = [&](double y) { return T + (H - T - B) * (1.0 - y); };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << py(0) << "\" x2=\"" << px(xmax) << "\" y2=\"" << py(0)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << py(0) << "\" x2=\"" << L << "\" y2=\"" << py(1) << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double y = t / 4.0, x = xmax * t / 4.0;
    out << "<text x=\"" << L - 8 << "\" y=\"" << py(y) + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << y * 100
        << "</text>\n";
    out << "<text x=\"" << px(x) << "\" y=\"" << py(0) + 16 << "\" font-size=\"11\" text-anchor=\"middle\">" << x
        << "</text>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10
      << "\" font-size=\"12\" text-anchor=\"middle\">error tolerance</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    const char* color = kColors[i % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < c.tolerances.size(); ++k) out << px(c.tolerances[k]) << ',' << py(c.accuracies[k]) << ' ';
    out << "\"/>\n";
    const std::string label = i < labels.size() ? labels[i] : "curve " + std::to_string(i);
    out << "<text x=\"" << px(xmax) - 4 << "\" y=\"" << py(0) - 10 - 16.0 * static_cast<double>(curves.size() - 1 - i)
        << "\" font-size=\"12\" text-anchor=\"end\" fill=\"" << color << "\">" << label << " ("
        << std::round(c.auc * 1000.0) / 10.0 << ")</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace chiralis
