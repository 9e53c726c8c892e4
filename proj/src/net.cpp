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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "binary.hpp"
#include "chiralis/error.hpp"

namespace chiralis {

namespace {

constexpr double kGuard = 1e-12;
constexpr std::uint32_t kCheckpointVersion = 1;

double sign(double x) { return (x > 0.0) - (x < 0.0); }

Layer zero_layer(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  return {Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
}

// Row-wise affine map: rows of X are inputs.
Eigen::MatrixXd affine_rows(const Eigen::MatrixXd& x, const Layer& l) {
  Eigen::MatrixXd y = x * l.weight.transpose();
  y.rowwise() += l.bias.transpose();
  return y;
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

template <typename Params, typename Ref>
std::vector<Ref> tensor_refs(Params& p) {
  auto mat = [](std::string_view name, auto& m) {
    return Ref{name, m.data(), static_cast<std::size_t>(m.size())};
  };
  return {mat("encoder.w1", p.encoder.first.weight),  mat("encoder.b1", p.encoder.first.bias),
          mat("encoder.w2", p.encoder.second.weight), mat("encoder.b2", p.encoder.second.bias),
          mat("projection", p.projection),            mat("decoder.w1", p.decoder.first.weight),
          mat("decoder.b1", p.decoder.first.bias),    mat("decoder.w2", p.decoder.second.weight),
          mat("decoder.b2", p.decoder.second.bias)};
}

// Row-major flattening in tensor order; biases are vectors so row-major == storage.
template <typename Fn>
void visit_row_major(const NetworkParams& p, Fn&& fn) {
  auto mat = [&](const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) fn(m(r, c));
  };
  auto vec = [&](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) fn(v(i));
  };
  mat(p.encoder.first.weight);
  vec(p.encoder.first.bias);
  mat(p.encoder.second.weight);
  vec(p.encoder.second.bias);
  mat(p.projection);
  mat(p.decoder.first.weight);
  vec(p.decoder.first.bias);
  mat(p.decoder.second.weight);
  vec(p.decoder.second.bias);
}

struct Forward {
  // Encoder pre-activation, hidden, output.
  Eigen::MatrixXd z1, h1, g;
  Eigen::MatrixXd projected;
  // Decoder pre-activation, hidden, reconstruction residual X - h(g(X)).
  Eigen::MatrixXd y1, k1, residual;
  Eigen::VectorXd chi_all;  // 2n entries: chi then chi_bar
  Eigen::VectorXd proj_norm;
};

Forward run_forward(const Eigen::MatrixXd& x, const NetworkParams& p, HeadMode mode, bool with_decoder) {
  Forward f;
  f.z1 = affine_rows(x, p.encoder.first);
  f.h1 = relu(f.z1);
  f.g = affine_rows(f.h1, p.encoder.second);
  f.projected = f.g * p.projection.transpose();
  const Eigen::Index rows = x.rows();
  f.chi_all.resize(rows);
  f.proj_norm.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double first = f.projected(i, 0);
    if (mode == HeadMode::normalized) {
      const double n = f.projected.row(i).norm();
      f.proj_norm(i) = n;
      f.chi_all(i) = first / std::max(n, kGuard);
    } else {
      f.chi_all(i) = std::tanh(first);
    }
  }
  if (with_decoder) {
    f.y1 = affine_rows(f.g, p.decoder.first);
    f.k1 = relu(f.y1);
    f.residual = x - affine_rows(f.k1, p.decoder.second);
  }
  return f;
}

void require_dim(const NetworkParams& p, Eigen::Index cols, const char* what) {
  if (static_cast<std::size_t>(cols) != p.dim())
    throw ValidationError(std::string(what) + " has dimension " + std::to_string(cols) + " but network expects " +
                          std::to_string(p.dim()));
}

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ValidationError("chi has " + std::to_string(a.size()) + " entries but chi_bar has " +
                          std::to_string(b.size()));
}

double fif_term(std::span<const double> chi) {
  double sum = 0.0, inf = 0.0;
  for (double c : chi) {
    sum += c;
    inf = std::max(inf, std::abs(c));
  }
  return std::abs(sum) / std::max(inf, kGuard);
}

// d(|sum|/max(inf, guard))/d chi_i accumulated into out.
void fif_term_grad(std::span<const double> chi, double scale, std::span<double> out) {
  double sum = 0.0, inf = 0.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < chi.size(); ++i) {
    sum += chi[i];
    if (std::abs(chi[i]) > inf) {
      inf = std::abs(chi[i]);
      arg = i;
    }
  }
  const double m = std::max(inf, kGuard);
  const double s = sign(sum);
  for (std::size_t i = 0; i < chi.size(); ++i) out[i] += scale * s / m;
  if (inf > kGuard) out[arg] -= scale * std::abs(sum) / (m * m) * sign(chi[arg]);
}

void require_finite(const NetworkParams& grad) {
  for (const auto& t : grad.tensors())
    for (std::size_t i = 0; i < t.size; ++i)
      if (!std::isfinite(t.values[i]))
        throw NumericError("non-finite gradient in parameter " + std::string(t.name));
}

}  // namespace

HeadMode parse_head_mode(std::string_view name) {
  if (name == "norm" || name == "normalized") return HeadMode::normalized;
  if (name == "tanh") return HeadMode::tanh;
  throw ParameterError("unknown head mode '" + std::string(name) + "' (expected norm or tanh)");
}

std::string_view head_mode_name(HeadMode mode) { return mode == HeadMode::normalized ? "norm" : "tanh"; }

std::size_t NetworkParams::parameter_count() const noexcept {
  const std::size_t d = dim();
  return 5 * d * d + 4 * d;
}

NetworkParams NetworkParams::zeros(std::size_t dim) {
  if (dim == 0) throw ParameterError("network dimension must be positive");
  const auto n = static_cast<Eigen::Index>(dim);
  return {{zero_layer(dim), zero_layer(dim)}, Eigen::MatrixXd::Zero(n, n), {zero_layer(dim), zero_layer(dim)}};
}

NetworkParams NetworkParams::random(std::size_t dim, std::uint64_t seed) {
  NetworkParams p = zeros(dim);
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& t : p.tensors())
    for (std::size_t i = 0; i < t.size; ++i) t.values[i] = dist(rng);
  return p;
}

std::vector<TensorRef<double>> NetworkParams::tensors() { return tensor_refs<NetworkParams, TensorRef<double>>(*this); }

std::vector<TensorRef<const double>> NetworkParams::tensors() const {
  return tensor_refs<const NetworkParams, TensorRef<const double>>(*this);
}

std::vector<double> NetworkParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  visit_row_major(*this, [&](double v) { flat.push_back(v); });
  return flat;
}

void NetworkParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count())
    throw ValidationError("parameter vector has " + std::to_string(flat.size()) + " entries, expected " +
                          std::to_string(parameter_count()));
  std::size_t k = 0;
  auto mat = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[k++];
  };
  auto vec = [&](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = flat[k++];
  };
  mat(encoder.first.weight);
  vec(encoder.first.bias);
  mat(encoder.second.weight);
  vec(encoder.second.bias);
  mat(projection);
  mat(decoder.first.weight);
  vec(decoder.first.bias);
  mat(decoder.second.weight);
  vec(decoder.second.bias);
}

void NetworkParams::validate() const {
  const auto d = static_cast<Eigen::Index>(dim());
  if (d == 0) throw ValidationError("network has zero dimension");
  auto square = [d](const Eigen::MatrixXd& m) { return m.rows() == d && m.cols() == d; };
  const bool ok = square(projection) && square(encoder.first.weight) && square(encoder.second.weight) &&
                  square(decoder.first.weight) && square(decoder.second.weight) && encoder.first.bias.size() == d &&
                  encoder.second.bias.size() == d && decoder.first.bias.size() == d &&
                  decoder.second.bias.size() == d;
  if (!ok) throw ValidationError("network parameter dimensions are inconsistent");
  for (const auto& t : tensors())
    for (std::size_t i = 0; i < t.size; ++i)
      if (!std::isfinite(t.values[i])) throw ValidationError("non-finite value in " + std::string(t.name));
}

bool NetworkParams::operator==(const NetworkParams& other) const {
  if (dim() != other.dim()) return false;
  auto a = tensors();
  auto b = other.tensors();
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].size != b[t].size) return false;
    if (!std::equal(a[t].values, a[t].values + a[t].size, b[t].values)) return false;
  }
  return true;
}

void LossWeights::validate() const {
  if (!(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda3 >= 0.0))
    throw ParameterError("loss weights must be non-negative");
}

void TrainConfig::validate(bool allow_zero_iterations) const {
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  if (!allow_zero_iterations && iterations == 0) throw ParameterError("iterations must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ParameterError("ADAM betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ParameterError("ADAM epsilon must be positive");
}

Eigen::VectorXd encode(const NetworkParams& params, const Eigen::VectorXd& f) {
  require_dim(params, f.size(), "input vector");
  const Eigen::VectorXd h = (params.encoder.first.weight * f + params.encoder.first.bias).cwiseMax(0.0);
  return params.encoder.second.weight * h + params.encoder.second.bias;
}

Eigen::VectorXd decode(const NetworkParams& params, const Eigen::VectorXd& z) {
  require_dim(params, z.size(), "code vector");
  const Eigen::VectorXd h = (params.decoder.first.weight * z + params.decoder.first.bias).cwiseMax(0.0);
  return params.decoder.second.weight * h + params.decoder.second.bias;
}

double head_value(const Eigen::VectorXd& projected, HeadMode mode) {
  if (projected.size() == 0) throw ValidationError("empty projected vector");
  if (mode == HeadMode::tanh) return std::tanh(projected(0));
  return projected(0) / std::max(projected.norm(), kGuard);
}

double chirality_value(const NetworkParams& params, const Eigen::VectorXd& f, HeadMode mode) {
  return head_value(params.projection * encode(params, f), mode);
}

double loss_dis(std::span<const double> chi, std::span<const double> chi_bar) {
  check_lengths(chi, chi_bar);
  if (chi.empty()) throw ValidationError("loss_dis needs at least one vertex");
  double s = 0.0;
  for (std::size_t i = 0; i < chi.size(); ++i) s += (chi[i] - chi_bar[i]) * (chi[i] - chi_bar[i]);
  return -std::sqrt(s) / std::sqrt(static_cast<double>(chi.size()));
}

double loss_inv(const Eigen::MatrixXd& features, const Eigen::MatrixXd& features_flipped,
                const NetworkParams& params) {
  if (features.rows() != features_flipped.rows() || features.cols() != features_flipped.cols())
    throw ValidationError("F and F_bar dimensions differ");
  require_dim(params, features.cols(), "features");
  if (features.rows() == 0) throw ValidationError("loss_inv needs at least one vertex");
  Eigen::MatrixXd stacked(features.rows() * 2, features.cols());
  stacked << features, features_flipped;
  const Forward f = run_forward(stacked, params, HeadMode::normalized, true);
  return f.residual.norm() / std::sqrt(static_cast<double>(features.rows()));
}

double loss_var(std::span<const double> chi, std::span<const double> chi_bar, std::span<const Edge> edges) {
  check_lengths(chi, chi_bar);
  if (edges.empty()) throw ParameterError("loss_var needs a non-empty edge set");
  double s = 0.0;
  for (const Edge& e : edges) {
    if (e[0] >= chi.size() || e[1] >= chi.size())
      throw ValidationError("edge (" + std::to_string(e[0]) + ", " + std::to_string(e[1]) + ") out of range");
    s += std::abs(chi[e[0]] - chi[e[1]]) + std::abs(chi_bar[e[0]] - chi_bar[e[1]]);
  }
  return s / static_cast<double>(edges.size());
}

double loss_fif(std::span<const double> chi, std::span<const double> chi_bar) {
  check_lengths(chi, chi_bar);
  if (chi.empty()) throw ValidationError("loss_fif needs at least one vertex");
  return (fif_term(chi) + fif_term(chi_bar)) / static_cast<double>(chi.size());
}

PreparedShape prepare_shape(const ChiralPair& pair, std::span<const Edge> edges) {
  pair.validate();
  const std::size_t nv = pair.vertex_count();
  std::vector<std::int64_t> compact(nv, -1);
  std::size_t n = 0;
  for (std::size_t v = 0; v < nv; ++v)
    if (pair.included(v)) compact[v] = static_cast<std::int64_t>(n++);
  if (n == 0) throw ValidationError("shape has no vertex seen in any view");

  PreparedShape shape;
  const auto d = static_cast<Eigen::Index>(pair.dim());
  shape.stacked.resize(static_cast<Eigen::Index>(2 * n), d);
  for (std::size_t v = 0; v < nv; ++v) {
    if (compact[v] < 0) continue;
    shape.stacked.row(compact[v]) = pair.features.row(static_cast<Eigen::Index>(v));
    shape.stacked.row(compact[v] + static_cast<Eigen::Index>(n)) = pair.features_flipped.row(static_cast<Eigen::Index>(v));
  }
  for (const Edge& e : edges) {
    if (e[0] >= nv || e[1] >= nv)
      throw ValidationError("edge (" + std::to_string(e[0]) + ", " + std::to_string(e[1]) + ") out of range");
    if (compact[e[0]] < 0 || compact[e[1]] < 0) continue;
    shape.edges.push_back({static_cast<VertexIndex>(compact[e[0]]), static_cast<VertexIndex>(compact[e[1]])});
  }
  return shape;
}

namespace {

struct Evaluated {
  Forward fwd;
  LossBreakdown loss;
};

Evaluated evaluate(const PreparedShape& shape, const NetworkParams& params, const LossWeights& weights,
                   HeadMode mode) {
  require_dim(params, shape.stacked.cols(), "features");
  weights.validate();
  const std::size_t n = shape.rows();
  Evaluated ev{run_forward(shape.stacked, params, mode, true), {}};
  std::span<const double> all(ev.fwd.chi_all.data(), 2 * n);
  auto chi = all.first(n);
  auto chi_bar = all.subspan(n);
  LossBreakdown& l = ev.loss;
  l.dis = loss_dis(chi, chi_bar);
  l.inv = ev.fwd.residual.norm() / std::sqrt(static_cast<double>(n));
  if (!shape.edges.empty())
    l.var = loss_var(chi, chi_bar, shape.edges);
  else if (weights.lambda2 > 0.0)
    throw ParameterError("total variation term needs a non-empty edge set");
  l.fif = loss_fif(chi, chi_bar);
  l.total = l.dis + weights.lambda1 * l.inv + weights.lambda2 * l.var + weights.lambda3 * l.fif;
  return ev;
}

}  // namespace

LossBreakdown total_loss(const PreparedShape& shape, const NetworkParams& params, const LossWeights& weights,
                         HeadMode mode) {
  return evaluate(shape, params, weights, mode).loss;
}

LossBreakdown total_loss(const ChiralPair& pair, std::span<const Edge> edges, const NetworkParams& params,
                         const LossWeights& weights, HeadMode mode) {
  return total_loss(prepare_shape(pair, edges), params, weights, mode);
}

GradientResult gradients(const PreparedShape& shape, const NetworkParams& params, const LossWeights& weights,
                         HeadMode mode) {
  const Evaluated ev = evaluate(shape, params, weights, mode);
  const Forward& f = ev.fwd;
  const std::size_t n = shape.rows();
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  const auto rows = static_cast<Eigen::Index>(2 * n);

  // dL/dchi for the stacked [chi; chi_bar].
  Eigen::VectorXd dchi = Eigen::VectorXd::Zero(rows);
  {
    const Eigen::VectorXd diff = f.chi_all.head(n) - f.chi_all.tail(n);
    const double dn = diff.norm();
    if (dn > 0.0) {
      dchi.head(n) -= inv_sqrt_n * diff / dn;
      dchi.tail(n) += inv_sqrt_n * diff / dn;
    }
  }
  if (weights.lambda2 != 0.0 && !shape.edges.empty()) {
    const double scale = weights.lambda2 / static_cast<double>(shape.edges.size());
    for (const Edge& e : shape.edges) {
      for (std::size_t off : {std::size_t{0}, n}) {
        const auto u = static_cast<Eigen::Index>(e[0] + off), v = static_cast<Eigen::Index>(e[1] + off);
        const double s = sign(f.chi_all(u) - f.chi_all(v));
        dchi(u) += scale * s;
        dchi(v) -= scale * s;
      }
    }
  }
  if (weights.lambda3 != 0.0) {
    const double scale = weights.lambda3 / static_cast<double>(n);
    std::span<const double> all(f.chi_all.data(), 2 * n);
    std::span<double> out(dchi.data(), 2 * n);
    fif_term_grad(all.first(n), scale, out.first(n));
    fif_term_grad(all.subspan(n), scale, out.subspan(n));
  }

  // Through the head into the projected vectors.
  Eigen::MatrixXd dproj = Eigen::MatrixXd::Zero(rows, f.projected.cols());
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double g = dchi(i);
    if (g == 0.0) continue;
    if (mode == HeadMode::tanh) {
      dproj(i, 0) = g * (1.0 - f.chi_all(i) * f.chi_all(i));
    } else if (f.proj_norm(i) > kGuard) {
      const double nrm = f.proj_norm(i);
      dproj.row(i) = -g * f.projected(i, 0) / (nrm * nrm * nrm) * f.projected.row(i);
      dproj(i, 0) += g / nrm;
    } else {
      dproj(i, 0) = g / kGuard;
    }
  }

  GradientResult out{ev.loss, NetworkParams::zeros(params.dim())};
  NetworkParams& gr = out.grad;
  gr.projection = dproj.transpose() * f.g;
  Eigen::MatrixXd dg = dproj * params.projection;

  // Invertibility term through the decoder.
  const double rnorm = f.residual.norm();
  if (weights.lambda1 != 0.0 && rnorm > 0.0) {
    const Eigen::MatrixXd drecon = -(weights.lambda1 * inv_sqrt_n / rnorm) * f.residual;
    gr.decoder.second.weight = drecon.transpose() * f.k1;
    gr.decoder.second.bias = drecon.colwise().sum().transpose();
    const Eigen::MatrixXd dy1 = (drecon * params.decoder.second.weight).cwiseProduct((f.y1.array() > 0.0).cast<double>().matrix());
    gr.decoder.first.weight = dy1.transpose() * f.g;
    gr.decoder.first.bias = dy1.colwise().sum().transpose();
    dg += dy1 * params.decoder.first.weight;
  }

  gr.encoder.second.weight = dg.transpose() * f.h1;
  gr.encoder.second.bias = dg.colwise().sum().transpose();
  const Eigen::MatrixXd dz1 = (dg * params.encoder.second.weight).cwiseProduct((f.z1.array() > 0.0).cast<double>().matrix());
  gr.encoder.first.weight = dz1.transpose() * shape.stacked;
  gr.encoder.first.bias = dz1.colwise().sum().transpose();

  require_finite(gr);
  return out;
}

GradientResult gradients(const ChiralPair& pair, std::span<const Edge> edges, const NetworkParams& params,
                         const LossWeights& weights, HeadMode mode) {
  return gradients(prepare_shape(pair, edges), params, weights, mode);
}

AdamState AdamState::zeros(std::size_t dim) {
  return {NetworkParams::zeros(dim), NetworkParams::zeros(dim), 0};
}

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state, const TrainConfig& config) {
  if (grads.dim() != params.dim() || state.first_moment.dim() != params.dim() ||
      state.second_moment.dim() != params.dim())
    throw ValidationError("ADAM state dimensions do not match parameters");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = state.first_moment.tensors();
  auto v = state.second_moment.tensors();
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t i = 0; i < p[k].size; ++i) {
      const double gi = g[k].values[i];
      m[k].values[i] = config.beta1 * m[k].values[i] + (1.0 - config.beta1) * gi;
      v[k].values[i] = config.beta2 * v[k].values[i] + (1.0 - config.beta2) * gi * gi;
      const double mhat = m[k].values[i] / c1;
      const double vhat = v[k].values[i] / c2;
      p[k].values[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
    }
  }
}

TrainResult train(std::span<const TrainingShape> shapes, const TrainConfig& config, const LossWeights& weights) {
  config.validate();
  weights.validate();
  if (shapes.empty()) throw ParameterError("training needs at least one shape");
  const std::size_t d = shapes.front().pair.dim();
  std::vector<PreparedShape> prepared;
  prepared.reserve(shapes.size());
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    if (shapes[s].pair.dim() != d)
      throw ValidationError("shape " + std::to_string(s) + " has feature dimension " +
                            std::to_string(shapes[s].pair.dim()) + ", expected " + std::to_string(d));
    prepared.push_back(prepare_shape(shapes[s].pair, shapes[s].edges));
  }

  TrainResult result{NetworkParams::random(d, config.seed), {}};
  result.history.reserve(config.iterations);
  AdamState state = AdamState::zeros(d);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    const PreparedShape& shape = prepared[it % prepared.size()];
    GradientResult gr;
    try {
      gr = gradients(shape, result.params, weights, config.head);
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(it) + ": " + e.what());
    }
    const LossBreakdown& l = gr.loss;
    if (!std::isfinite(l.total)) {
      std::ostringstream msg;
      msg << "non-finite loss at iteration " << it << " (L_dis=" << l.dis << ", L_inv=" << l.inv
          << ", L_var=" << l.var << ", L_fif=" << l.fif << ")";
      throw NumericError(msg.str());
    }
    result.history.push_back(l);
    adam_step(result.params, gr.grad, state, config);
  }
  return result;
}

ChiralityField infer_field(const NetworkParams& params, const ChiralPair& pair, HeadMode mode) {
  pair.validate();
  require_dim(params, static_cast<Eigen::Index>(pair.dim()), "features");
  const std::size_t nv = pair.vertex_count();
  ChiralityField field;
  field.chi.assign(nv, 0.0);
  field.chi_bar.assign(nv, 0.0);
  field.included.assign(nv, false);
  if (nv == 0) return field;
  const Forward a = run_forward(pair.features, params, mode, false);
  const Forward b = run_forward(pair.features_flipped, params, mode, false);
  for (std::size_t v = 0; v < nv; ++v) {
    if (!pair.included(v)) continue;
    field.chi[v] = a.chi_all(static_cast<Eigen::Index>(v));
    field.chi_bar[v] = b.chi_all(static_cast<Eigen::Index>(v));
    field.included[v] = true;
  }
  return field;
}

std::vector<std::uint8_t> encode_checkpoint(const NetworkParams& params) {
  params.validate();
  detail::ByteWriter w;
  w.tag("CHIR");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.dim()));
  visit_row_major(params, [&](double v) { w.f32(static_cast<float>(v)); });
  w.seal();
  return w.take();
}

NetworkParams decode_checkpoint(std::span<const std::uint8_t> bytes) {
  const auto body = detail::check_crc(bytes, "checkpoint");
  detail::ByteReader r(body, "checkpoint");
  char magic[4];
  r.copy(magic, 4);
  if (std::string_view(magic, 4) != "CHIR") throw IoError("checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw IoError("checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t d = r.u32();
  if (d == 0) throw IoError("checkpoint: zero dimension");
  NetworkParams p = NetworkParams::zeros(d);
  if (r.remaining() != p.parameter_count() * 4) throw IoError("checkpoint: size mismatch for D = " + std::to_string(d));
  std::vector<double> flat(p.parameter_count());
  for (double& v : flat) v = r.f32();
  p.assign(flat);
  return p;
}

void write_checkpoint(const std::filesystem::path& path, const NetworkParams& params) {
  detail::write_file(path, encode_checkpoint(params));
}

NetworkParams read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_file(path));
}

void write_loss_history(const std::filesystem::path& path, std::span<const LossBreakdown> history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write loss history " + path.string());
  out.precision(17);
  out << "iteration,L_dis,L_inv,L_var,L_fif,total\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& l = history[i];
    out << i << ',' << l.dis << ',' << l.inv << ',' << l.var << ',' << l.fif << ',' << l.total << '\n';
  }
}

}  // namespace chiralis
