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


#include "chiralis/net.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "chiralis/error.hpp"
#include "chiralis/eval.hpp"
#include "chiralis/feature_io.hpp"
#include "support/oracles.hpp"

namespace chiralis {

void PrintTo(HeadMode mode, std::ostream* os) { *os << head_mode_name(mode); }

namespace {

NetworkParams identity_network(std::size_t d) {
  NetworkParams p = NetworkParams::zeros(d);
  const auto n = static_cast<Eigen::Index>(d);
  p.encoder.first.weight = Eigen::MatrixXd::Identity(n, n);
  p.encoder.second.weight = Eigen::MatrixXd::Identity(n, n);
  p.decoder.first.weight = Eigen::MatrixXd::Identity(n, n);
  p.decoder.second.weight = Eigen::MatrixXd::Identity(n, n);
  p.projection = Eigen::MatrixXd::Identity(n, n);
  return p;
}

ChiralPair random_pair(std::size_t nv, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  ChiralPair p;
  p.features.resize(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(d));
  p.features_flipped.resize(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < p.features.size(); ++i) p.features.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < p.features.size(); ++i) p.features_flipped.data()[i] = g(rng);
  p.view_count.assign(nv, 1);
  return p;
}

std::vector<Edge> random_edges(std::size_t nv, std::size_t ne, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<VertexIndex> u(0, static_cast<VertexIndex>(nv - 1));
  std::vector<Edge> e;
  while (e.size() < ne) {
    VertexIndex a = u(rng), b = u(rng);
    if (a != b) e.push_back({std::min(a, b), std::max(a, b)});
  }
  return e;
}

TEST(Encode, ZeroNetworkGivesZero) {
  const auto p = NetworkParams::zeros(4);
  EXPECT_EQ(encode(p, Eigen::Vector4d(1, -2, 3, 4)), Eigen::VectorXd::Zero(4));
}

TEST(Encode, IdentityLayersPassPositiveInputs) {
  const auto p = identity_network(3);
  const Eigen::Vector3d f(0.5, 2.0, 1.0);
  EXPECT_EQ(encode(p, f), Eigen::VectorXd(f));
}

TEST(Encode, ReluZeroesNegatives) {
  const auto p = identity_network(3);
  EXPECT_EQ(encode(p, Eigen::Vector3d(-1.0, 2.0, -3.0)), Eigen::VectorXd(Eigen::Vector3d(0.0, 2.0, 0.0)));
}

TEST(Encode, DimensionMismatchThrows) {
  EXPECT_THROW(encode(NetworkParams::zeros(3), Eigen::Vector4d::Ones()), ValidationError);
}

TEST(ChiralityValue, NormalizedHeadExamples) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(4);
  p(0) = 1.0;
  EXPECT_EQ(head_value(p, HeadMode::normalized), 1.0);
  p.setZero();
  p(1) = 1.0;
  EXPECT_EQ(head_value(p, HeadMode::normalized), 0.0);
  p.setZero();
  p(0) = -3.0;
  p(1) = 4.0;
  EXPECT_NEAR(head_value(p, HeadMode::normalized), -0.6, 1e-15);
  EXPECT_NEAR(head_value(p, HeadMode::tanh), std::tanh(-3.0), 1e-15);
}

TEST(ChiralityValue, ThroughNetworkMatchesHead) {
  const auto p = identity_network(3);
  EXPECT_NEAR(chirality_value(p, Eigen::Vector3d(3.0, 4.0, 0.0), HeadMode::normalized), 0.6, 1e-15);
}

TEST(ChiralityValue, NormalizedHeadInvariantToScalingProjection) {
  auto p = NetworkParams::random(6, 3);
  Eigen::VectorXd f = Eigen::VectorXd::LinSpaced(6, -1.0, 2.0);
  const double base = chirality_value(p, f, HeadMode::normalized);
  for (double c : {0.01, 3.0, 250.0}) {
    auto q = p;
    q.projection *= c;
    EXPECT_NEAR(chirality_value(q, f, HeadMode::normalized), base, 1e-12);
  }
}

TEST(ChiralityValue, BothHeadsStayInRange) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 50.0);
  for (int t = 0; t < 200; ++t) {
    const auto p = NetworkParams::random(5, static_cast<std::uint64_t>(t));
    Eigen::VectorXd f(5);
    for (auto& v : f) v = g(rng);
    for (auto mode : {HeadMode::normalized, HeadMode::tanh}) {
      const double c = chirality_value(p, f, mode);
      EXPECT_GE(c, -1.0);
      EXPECT_LE(c, 1.0);
    }
  }
}

TEST(Losses, DissimilarityExamples) {
  const std::vector<double> a{0.3, -0.2, 0.9}, ones(4, 1.0), neg(4, -1.0);
  EXPECT_EQ(loss_dis(a, a), 0.0);
  EXPECT_NEAR(loss_dis(ones, neg), -2.0, 1e-12);
  EXPECT_THROW(loss_dis(a, ones), ValidationError);
}

TEST(Losses, DissimilarityBounds) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(17), b(17);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    const double l = loss_dis(a, b);
    EXPECT_LE(l, 0.0);
    EXPECT_GE(l, -2.0);
  }
}

TEST(Losses, InvertibilityExamples) {
  Eigen::MatrixXd f(1, 2);
  f << 3.0, 0.0;
  EXPECT_NEAR(loss_inv(f, f, NetworkParams::zeros(2)), 4.242641, 1e-6);
  EXPECT_NEAR(loss_inv(f, f, NetworkParams::zeros(2)), std::sqrt(18.0), 1e-12);
  Eigen::MatrixXd pos = Eigen::MatrixXd::Random(5, 3).cwiseAbs();
  EXPECT_EQ(loss_inv(pos, pos, identity_network(3)), 0.0);
}

TEST(Losses, InvertibilityInvariantToRowPermutation) {
  const auto p = NetworkParams::random(4, 5);
  const ChiralPair pr = random_pair(6, 4, 2);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
  perm.indices() << 3, 1, 5, 0, 2, 4;
  EXPECT_NEAR(loss_inv(pr.features, pr.features_flipped, p),
              loss_inv(perm * pr.features, perm * pr.features_flipped, p), 1e-12);
}

TEST(Losses, TotalVariationExamples) {
  const std::vector<double> c(3, 0.4);
  const std::vector<Edge> edges{{0, 1}, {1, 2}};
  EXPECT_EQ(loss_var(c, c, edges), 0.0);
  const std::vector<double> chi{1.0, -1.0}, chib{0.0, 0.0};
  const std::vector<Edge> one{{0, 1}};
  EXPECT_NEAR(loss_var(chi, chib, one), 2.0, 1e-12);
  const std::vector<Edge> doubled{{0, 1}, {0, 1}};
  EXPECT_NEAR(loss_var(chi, chib, doubled), 2.0, 1e-12);
  EXPECT_THROW(loss_var(chi, chib, {}), ParameterError);
}

TEST(Losses, FiftyFiftyExamples) {
  const std::vector<double> bal{0.7, -0.7, 0.7, -0.7};
  EXPECT_EQ(loss_fif(bal, bal), 0.0);
  const std::vector<double> ones{1.0, 1.0};
  EXPECT_NEAR(loss_fif(ones, ones), 2.0, 1e-12);
  const std::vector<double> a{0.3, -0.1, 0.5}, b{-0.2, -0.6, 0.1};
  std::vector<double> a5 = a, b3 = b;
  for (auto& x : a5) x *= 5.0;
  for (auto& x : b3) x *= 0.3;
  EXPECT_NEAR(loss_fif(a, b), loss_fif(a5, b3), 1e-12);
}

TEST(TotalLoss, WeightsCombineLinearly) {
  const auto p = NetworkParams::random(5, 8);
  const ChiralPair pr = random_pair(12, 5, 3);
  const auto edges = random_edges(12, 20, 4);
  const auto zero = total_loss(pr, edges, p, {0, 0, 0});
  EXPECT_EQ(zero.total, zero.dis);
  const auto inv_only = total_loss(pr, edges, p, {1, 0, 0});
  EXPECT_NEAR(inv_only.total, inv_only.dis + inv_only.inv, 1e-12);
  const LossWeights w{0.3, 1.7, 0.9};
  const auto l = total_loss(pr, edges, p, w);
  EXPECT_NEAR(l.total, l.dis + w.lambda1 * l.inv + w.lambda2 * l.var + w.lambda3 * l.fif, 1e-12);
}

TEST(TotalLoss, MatchesLoopOracle) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = NetworkParams::random(6, s);
    const ChiralPair pr = random_pair(15, 6, s + 10);
    const auto edges = random_edges(15, 25, s + 20);
    for (auto mode : {HeadMode::normalized, HeadMode::tanh}) {
      const double lib = total_loss(pr, edges, p, {0.7, 1.1, 0.4}, mode).total;
      const double ref = oracle::naive_total_loss(pr.features, pr.features_flipped, edges, p.flatten(), 0.7, 1.1, 0.4,
                                                  mode == HeadMode::tanh);
      EXPECT_NEAR(lib, ref, 1e-12);
    }
  }
}

TEST(TotalLoss, ExcludedVerticesDropOut) {
  ChiralPair pr = random_pair(10, 4, 5);
  auto edges = random_edges(10, 18, 6);
  const auto p = NetworkParams::random(4, 1);
  pr.view_count[3] = 0;
  pr.view_count[7] = 0;
  // Reference: physically remove rows 3 and 7 and the edges touching them.
  ChiralPair kept;
  std::vector<int> remap(10, -1);
  int k = 0;
  for (int v = 0; v < 10; ++v)
    if (pr.view_count[v]) remap[v] = k++;
  kept.features.resize(k, 4);
  kept.features_flipped.resize(k, 4);
  kept.view_count.assign(k, 1);
  for (int v = 0; v < 10; ++v)
    if (remap[v] >= 0) {
      kept.features.row(remap[v]) = pr.features.row(v);
      kept.features_flipped.row(remap[v]) = pr.features_flipped.row(v);
    }
  std::vector<Edge> kept_edges;
  for (const auto& e : edges)
    if (remap[e[0]] >= 0 && remap[e[1]] >= 0)
      kept_edges.push_back({static_cast<VertexIndex>(remap[e[0]]), static_cast<VertexIndex>(remap[e[1]])});
  EXPECT_NEAR(total_loss(pr, edges, p, {}).total, total_loss(kept, kept_edges, p, {}).total, 1e-12);
}

class GradientCheck : public ::testing::TestWithParam<HeadMode> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  const HeadMode mode = GetParam();
  std::size_t total = 0, bad = 0;
  for (std::uint64_t s = 0; s < 4; ++s) {
    const std::size_t d = 8, nv = 20;
    const auto p = NetworkParams::random(d, 100 + s);
    const ChiralPair pr = random_pair(nv, d, 200 + s);
    const auto edges = random_edges(nv, 40, 300 + s);
    const LossWeights w{1.0, 1.0, 1.0};
    const auto analytic = gradients(pr, edges, p, w, mode).grad.flatten();
    const auto numeric = oracle::central_differences(
        [&](const std::vector<double>& theta) {
          return oracle::naive_total_loss(pr.features, pr.features_flipped, edges, theta, 1.0, 1.0, 1.0,
                                          mode == HeadMode::tanh);
        },
        p.flatten(), 1e-4);
    ASSERT_EQ(analytic.size(), numeric.size());
    std::vector<double> fine;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      ++total;
      if (oracle::relative_error(analytic[i], numeric[i]) <= 1e-3) continue;
      ++bad;
      // A miss must be a kink straddle: it has to vanish at a much smaller step.
      if (fine.empty())
        fine = oracle::central_differences(
            [&](const std::vector<double>& theta) {
              return oracle::naive_total_loss(pr.features, pr.features_flipped, edges, theta, 1.0, 1.0, 1.0,
                                              mode == HeadMode::tanh);
            },
            p.flatten(), 1e-7);
      EXPECT_LE(oracle::relative_error(analytic[i], fine[i]), 1e-4) << "entry " << i << " seed " << s;
    }
  }
  EXPECT_LE(static_cast<double>(bad), 0.001 * static_cast<double>(total)) << bad << " of " << total;
}

INSTANTIATE_TEST_SUITE_P(Heads, GradientCheck, ::testing::Values(HeadMode::normalized, HeadMode::tanh),
                         [](const auto& info) { return std::string(head_mode_name(info.param)); });

TEST(Gradients, DeadNetworkGivesZeroProjectionGradient) {
  auto p = NetworkParams::random(6, 4);
  // All first-layer pre-activations negative on non-negative inputs, zero output bias.
  p.encoder.first.weight = -p.encoder.first.weight.cwiseAbs();
  p.encoder.first.bias.setConstant(-1.0);
  p.encoder.second.bias.setZero();
  ChiralPair pr = random_pair(10, 6, 7);
  pr.features = pr.features.cwiseAbs();
  pr.features_flipped = pr.features_flipped.cwiseAbs();
  const auto g = gradients(pr, random_edges(10, 15, 8), p, {1, 1, 1});
  EXPECT_EQ(g.grad.projection.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gradients, AreDeterministic) {
  const auto p = NetworkParams::random(5, 1);
  const ChiralPair pr = random_pair(30, 5, 2);
  const auto e = random_edges(30, 50, 3);
  EXPECT_TRUE(gradients(pr, e, p, {}).grad == gradients(pr, e, p, {}).grad);
}

TEST(Adam, ZeroGradientLeavesParamsButAdvancesStep) {
  auto p = NetworkParams::random(3, 1);
  const auto before = p;
  auto st = AdamState::zeros(3);
  adam_step(p, NetworkParams::zeros(3), st, TrainConfig{});
  EXPECT_TRUE(p == before);
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, FirstStepIsSignLike) {
  auto p = NetworkParams::zeros(2);
  auto g = NetworkParams::zeros(2);
  g.projection << 0.5, -2.0, 1e-3, 0.0;
  auto st = AdamState::zeros(2);
  TrainConfig cfg;
  adam_step(p, g, st, cfg);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double gi = g.projection.data()[i];
    EXPECT_NEAR(p.projection.data()[i], -cfg.learning_rate * gi / (std::abs(gi) + cfg.epsilon), 1e-15);
  }
}

TEST(Adam, IdenticalCallsAreBitIdentical) {
  auto p1 = NetworkParams::random(4, 2), p2 = p1;
  const auto g = NetworkParams::random(4, 3);
  auto s1 = AdamState::zeros(4), s2 = AdamState::zeros(4);
  for (int i = 0; i < 3; ++i) {
    adam_step(p1, g, s1, {});
    adam_step(p2, g, s2, {});
  }
  EXPECT_TRUE(p1 == p2);
  EXPECT_TRUE(s1.second_moment == s2.second_moment);
}

std::vector<TrainingShape> synthetic_shapes(int count, std::uint64_t first_seed, int rings, int segments,
                                            std::vector<ChiralityAnnotation>* labels = nullptr) {
  std::vector<TrainingShape> shapes;
  for (int i = 0; i < count; ++i) {
    const TriangleMesh mesh = make_bilateral_mesh(first_seed + static_cast<std::uint64_t>(i), rings, segments);
    SyntheticSpec spec;
    spec.noise_stream = first_seed + static_cast<std::uint64_t>(i);
    SyntheticPair syn = generate_synthetic_pair(mesh, spec);
    if (labels) labels->push_back(syn.labels);
    shapes.push_back({std::move(syn.pair), mesh.edges()});
  }
  return shapes;
}

TEST(Train, ZeroIterationsReturnsInitialParams) {
  const auto shapes = synthetic_shapes(1, 1, 5, 8);
  TrainConfig cfg;
  cfg.iterations = 0;
  const auto res = train(shapes, cfg, {});
  EXPECT_TRUE(res.params == NetworkParams::random(10, cfg.seed));
  EXPECT_TRUE(res.history.empty());
}

TEST(Train, SmallSyntheticRunSeparatesHalves) {
  std::vector<ChiralityAnnotation> labels;
  const auto shapes = synthetic_shapes(2, 50, 10, 16, &labels);
  TrainConfig cfg;
  cfg.iterations = 1500;
  const auto res = train(shapes, cfg, {});
  ASSERT_EQ(res.history.size(), 1500u);
  // L_dis trend: last 10% no worse than first 10%.
  double first = 0, last = 0;
  for (std::size_t i = 0; i < 150; ++i) {
    first += res.history[i].dis;
    last += res.history[1350 + i].dis;
  }
  EXPECT_LE(last, first);
  std::vector<ChiralityField> fields;
  for (const auto& s : shapes) fields.push_back(infer_field(res.params, s.pair, cfg.head));
  EXPECT_GE(chirality_accuracy(fields, labels), 0.95);
}

TEST(Train, IsDeterministicForASeed) {
  const auto shapes = synthetic_shapes(2, 3, 6, 8);
  TrainConfig cfg;
  cfg.iterations = 50;
  EXPECT_TRUE(train(shapes, cfg, {}).params == train(shapes, cfg, {}).params);
}

TEST(Train, DimensionMismatchAcrossShapes) {
  auto shapes = synthetic_shapes(2, 3, 5, 8);
  shapes[1].pair.features.conservativeResize(Eigen::NoChange, 9);
  shapes[1].pair.features_flipped.conservativeResize(Eigen::NoChange, 9);
  EXPECT_THROW(train(shapes, {}, {}), ValidationError);
}

TEST(Train, NonFiniteLossAborts) {
  auto shapes = synthetic_shapes(1, 3, 5, 8);
  TrainConfig cfg;
  cfg.iterations = 10;
  cfg.learning_rate = 1e300;
  // A huge step overflows the weights on the first update.
  EXPECT_THROW(train(shapes, cfg, {}), NumericError);
}

TEST(InferField, RangeSymmetryAndPermutation) {
  const auto p = NetworkParams::random(5, 2);
  ChiralPair pr = random_pair(8, 5, 3);
  pr.view_count[2] = 0;
  const auto f = infer_field(p, pr, HeadMode::normalized);
  for (std::size_t v = 0; v < 8; ++v) {
    EXPECT_LE(std::abs(f.chi[v]), 1.0);
    EXPECT_LE(std::abs(f.chi_bar[v]), 1.0);
  }
  EXPECT_FALSE(f.included[2]);
  EXPECT_EQ(f.chi[2], 0.0);

  ChiralPair same = pr;
  same.features_flipped = same.features;
  const auto fs = infer_field(p, same, HeadMode::normalized);
  EXPECT_EQ(fs.chi, fs.chi_bar);

  ChiralPair rev = pr;
  rev.features = pr.features.colwise().reverse();
  rev.features_flipped = pr.features_flipped.colwise().reverse();
  std::reverse(rev.view_count.begin(), rev.view_count.end());
  const auto fr = infer_field(p, rev, HeadMode::normalized);
  for (std::size_t v = 0; v < 8; ++v) EXPECT_EQ(fr.chi[7 - v], f.chi[v]);
}

TEST(Checkpoint, RoundTripsThroughFloat32) {
  const auto p = NetworkParams::random(7, 11);
  const auto bytes = encode_checkpoint(p);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CHIR");
  EXPECT_EQ(bytes.size(), 12 + 4 * p.parameter_count() + 4);
  const auto back = decode_checkpoint(bytes);
  const auto a = p.flatten(), b = back.flatten();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(b[i], static_cast<double>(static_cast<float>(a[i])));
  EXPECT_EQ(encode_checkpoint(back), bytes);
}

TEST(Checkpoint, DetectsCorruptionAndTruncation) {
  auto bytes = encode_checkpoint(NetworkParams::random(3, 1));
  auto corrupt = bytes;
  corrupt[20] ^= 0x40;
  EXPECT_THROW(decode_checkpoint(corrupt), IoError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 9);
  EXPECT_THROW(decode_checkpoint(truncated), IoError);
}

}  // namespace
}  // namespace chiralis
