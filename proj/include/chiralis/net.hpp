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
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "chiralis/pair.hpp"
#include "chiralis/shape.hpp"

namespace chiralis {

enum class HeadMode { normalized, tanh };

HeadMode parse_head_mode(std::string_view name);
std::string_view head_mode_name(HeadMode mode);

/// Affine map y = weight * x + bias.
struct Layer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

/// second(relu(first(x))).
struct Perceptron {
  Layer first;
  Layer second;
};

/// Named view over one parameter tensor, row-major element order.
template <typename T>
struct TensorRef {
  std::string_view name;
  T* values;
  std::size_t size;
};

/// Encoder, chirality projection and decoder, all D x D. Gradients use the same type.
struct NetworkParams {
  Perceptron encoder;
  Eigen::MatrixXd projection;
  Perceptron decoder;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(projection.rows()); }
  std::size_t parameter_count() const noexcept;

  static NetworkParams zeros(std::size_t dim);
  /// Every weight and bias uniform in [-1/sqrt(D), 1/sqrt(D)], drawn in tensor order.
  static NetworkParams random(std::size_t dim, std::uint64_t seed);

  /// Fixed tensor order: encoder.{w1,b1,w2,b2}, projection, decoder.{w1,b1,w2,b2}.
  /// Eigen storage is column-major, so the views expose storage order; use
  /// flatten() for row-major serialisation.
  std::vector<TensorRef<double>> tensors();
  std::vector<TensorRef<const double>> tensors() const;

  /// Row-major concatenation in tensor order, and its inverse.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  /// Dimension consistency and finiteness, else ValidationError.
  void validate() const;

  bool operator==(const NetworkParams& other) const;
};

struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  void validate() const;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t iterations = 20000;
  std::uint64_t seed = 42;
  HeadMode head = HeadMode::normalized;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  void validate(bool allow_zero_iterations = true) const;
};

/// Per-vertex chirality of the original and flipped features. Excluded
/// (unseen) vertices carry chi = chi_bar = 0 and included = false.
struct ChiralityField {
  std::vector<double> chi;
  std::vector<double> chi_bar;
  std::vector<bool> included;
};

Eigen::VectorXd encode(const NetworkParams& params, const Eigen::VectorXd& f);
Eigen::VectorXd decode(const NetworkParams& params, const Eigen::VectorXd& z);

/// Head applied to an already projected vector p = A g(f): p_0 / max(|p|, 1e-12)
/// or tanh(p_0).
double head_value(const Eigen::VectorXd& projected, HeadMode mode);
double chirality_value(const NetworkParams& params, const Eigen::VectorXd& f, HeadMode mode);

double loss_dis(std::span<const double> chi, std::span<const double> chi_bar);
/// Rows of F and F_bar stacked and reconstructed; the prefactor is 1/sqrt(|V|)
/// with |V| the row count of F, not of the stack.
double loss_inv(const Eigen::MatrixXd& features, const Eigen::MatrixXd& features_flipped,
                const NetworkParams& params);
double loss_var(std::span<const double> chi, std::span<const double> chi_bar, std::span<const Edge> edges);
double loss_fif(std::span<const double> chi, std::span<const double> chi_bar);

struct LossBreakdown {
  double dis = 0.0, inv = 0.0, var = 0.0, fif = 0.0, total = 0.0;
};

/// Shape prepared for loss evaluation: included rows compacted, F rows stacked
/// over F_bar rows, edges restricted to included endpoints and re-indexed.
struct PreparedShape {
  Eigen::MatrixXd stacked;
  std::vector<Edge> edges;
  std::size_t rows() const noexcept { return static_cast<std::size_t>(stacked.rows() / 2); }
};

PreparedShape prepare_shape(const ChiralPair& pair, std::span<const Edge> edges);

LossBreakdown total_loss(const PreparedShape& shape, const NetworkParams& params,
                         const LossWeights& weights, HeadMode mode = HeadMode::normalized);
LossBreakdown total_loss(const ChiralPair& pair, std::span<const Edge> edges, const NetworkParams& params,
                         const LossWeights& weights, HeadMode mode = HeadMode::normalized);

struct GradientResult {
  LossBreakdown loss;
  NetworkParams grad;
};

/// Exact reverse-mode gradient of total_loss. Subgradient conventions: relu'(0) = 0,
/// sign(0) = 0, infinity-norm argmax resolves to the lowest index, and norms at
/// or below their guard contribute no normalisation derivative.
GradientResult gradients(const PreparedShape& shape, const NetworkParams& params, const LossWeights& weights,
                         HeadMode mode = HeadMode::normalized);
GradientResult gradients(const ChiralPair& pair, std::span<const Edge> edges, const NetworkParams& params,
                         const LossWeights& weights, HeadMode mode = HeadMode::normalized);

struct AdamState {
  NetworkParams first_moment;
  NetworkParams second_moment;
  std::uint64_t step = 0;
  static AdamState zeros(std::size_t dim);
};

/// Bias-corrected ADAM update, in place.
void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state, const TrainConfig& config);

struct TrainingShape {
  ChiralPair pair;
  std::vector<Edge> edges;
};

struct TrainResult {
  NetworkParams params;
  /// history[t] is the loss evaluated before step t.
  std::vector<LossBreakdown> history;
};

/// One ADAM step per iteration on shape (t mod #shapes). Throws NumericError
/// naming the iteration and terms on a non-finite loss.
TrainResult train(std::span<const TrainingShape> shapes, const TrainConfig& config, const LossWeights& weights);

ChiralityField infer_field(const NetworkParams& params, const ChiralPair& pair, HeadMode mode);

/// "CHIR", u32 version, u32 D, tensors row-major as f32 LE, CRC32 trailer.
void write_checkpoint(const std::filesystem::path& path, const NetworkParams& params);
NetworkParams read_checkpoint(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_checkpoint(const NetworkParams& params);
NetworkParams decode_checkpoint(std::span<const std::uint8_t> bytes);

void write_loss_history(const std::filesystem::path& path, std::span<const LossBreakdown> history);

}  // namespace chiralis
