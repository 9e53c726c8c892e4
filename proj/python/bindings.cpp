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


#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "chiralis/error.hpp"
#include "chiralis/eval.hpp"
#include "chiralis/feature_io.hpp"
#include "chiralis/net.hpp"
#include "chiralis/pair.hpp"
#include "chiralis/shape.hpp"
#include "chiralis/view.hpp"

namespace py = pybind11;
using namespace chiralis;

namespace {

std::vector<Face> faces_from(const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 3, Eigen::RowMajor>& f) {
  std::vector<Face> out(static_cast<std::size_t>(f.rows()));
  for (Eigen::Index i = 0; i < f.rows(); ++i)
    for (int j = 0; j < 3; ++j) {
      if (f(i, j) < 0) throw ValidationError("negative face index");
      out[static_cast<std::size_t>(i)][j] = static_cast<VertexIndex>(f(i, j));
    }
  return out;
}

template <std::size_t N>
Eigen::Matrix<std::int64_t, Eigen::Dynamic, N, Eigen::RowMajor> index_array(
    const std::vector<std::array<VertexIndex, N>>& rows) {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, N, Eigen::RowMajor> m(static_cast<Eigen::Index>(rows.size()), N);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < N; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

std::vector<Edge> edges_from(const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 2, Eigen::RowMajor>& e) {
  std::vector<Edge> out(static_cast<std::size_t>(e.rows()));
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    if (e(i, 0) < 0 || e(i, 1) < 0) throw ValidationError("negative edge index");
    out[static_cast<std::size_t>(i)] = {static_cast<VertexIndex>(e(i, 0)), static_cast<VertexIndex>(e(i, 1))};
  }
  return out;
}

ChiralPair make_pair(Eigen::MatrixXd f, Eigen::MatrixXd fb, std::optional<std::vector<int>> count) {
  ChiralPair p;
  p.view_count = count ? *count : std::vector<int>(static_cast<std::size_t>(f.rows()), 1);
  p.features = std::move(f);
  p.features_flipped = std::move(fb);
  p.validate();
  return p;
}

py::dict breakdown(const LossBreakdown& l) {
  py::dict d;
  d["L_dis"] = l.dis;
  d["L_inv"] = l.inv;
  d["L_var"] = l.var;
  d["L_fif"] = l.fif;
  d["total"] = l.total;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Chirality features for 3D shapes";

  // Translators are tried newest first, so subclasses register after the base.
  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  py::class_<TriangleMesh>(m, "TriangleMesh")
      .def(py::init([](Coords v, const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 3, Eigen::RowMajor>& f) {
             return TriangleMesh(std::move(v), faces_from(f));
           }),
           py::arg("vertices"), py::arg("faces"))
      .def_property_readonly("vertices", &TriangleMesh::vertices)
      .def_property_readonly("faces", [](const TriangleMesh& t) { return index_array(t.faces()); })
      .def_property_readonly("edges", [](const TriangleMesh& t) { return index_array(t.edges()); })
      .def_property_readonly("vertex_count", &TriangleMesh::vertex_count);

  m.def("load_mesh", &load_mesh, py::arg("path"));
  m.def("save_off", &save_off, py::arg("path"), py::arg("mesh"));
  m.def("make_bilateral_mesh", &make_bilateral_mesh, py::arg("seed"), py::arg("rings") = 25,
        py::arg("segments") = 40);
  m.def(
      "knn_edges", [](const Coords& pts, std::size_t k) { return index_array(build_knn_graph(pts, k)); },
      py::arg("points"), py::arg("k"), "Mutual k-nearest-neighbour edges, sorted.");

  py::class_<ChiralPair>(m, "ChiralPair")
      .def(py::init(&make_pair), py::arg("features"), py::arg("features_flipped"),
           py::arg("view_count") = py::none())
      .def_readonly("features", &ChiralPair::features)
      .def_readonly("features_flipped", &ChiralPair::features_flipped)
      .def_readonly("view_count", &ChiralPair::view_count)
      .def_property_readonly("dim", &ChiralPair::dim)
      .def_property_readonly("vertex_count", &ChiralPair::vertex_count);

  m.def(
      "synthetic_pair",
      [](const TriangleMesh& mesh, int chiral, int symmetric, double noise, std::uint64_t seed,
         std::uint64_t noise_stream) {
        SyntheticSpec spec;
        spec.chiral_channels = chiral;
        spec.symmetric_channels = symmetric;
        spec.noise = noise;
        spec.seed = seed;
        spec.noise_stream = noise_stream;
        SyntheticPair s = generate_synthetic_pair(mesh, spec);
        return py::make_tuple(std::move(s.pair), s.labels.labels, s.on_plane);
      },
      py::arg("mesh"), py::arg("chiral_channels") = 2, py::arg("symmetric_channels") = 8, py::arg("noise") = 0.01,
      py::arg("seed") = 42, py::arg("noise_stream") = 0,
      "Returns (pair, labels, on_plane) for a mesh mirror-symmetric about x = 0.");

  py::class_<NetworkParams>(m, "NetworkParams")
      .def_static("random", &NetworkParams::random, py::arg("dim"), py::arg("seed"))
      .def_static("zeros", &NetworkParams::zeros, py::arg("dim"))
      .def_property_readonly("dim", &NetworkParams::dim)
      .def_property_readonly("parameter_count", &NetworkParams::parameter_count)
      .def("flatten", &NetworkParams::flatten)
      .def("assign", [](NetworkParams& p, const std::vector<double>& flat) { p.assign(flat); })
      .def_readwrite("projection", &NetworkParams::projection)
      .def("__eq__", &NetworkParams::operator==);

  m.def("read_checkpoint", &read_checkpoint, py::arg("path"));
  m.def("write_checkpoint", &write_checkpoint, py::arg("path"), py::arg("params"));

  m.def(
      "total_loss",
      [](const ChiralPair& pair, const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 2, Eigen::RowMajor>& edges,
         const NetworkParams& params, double l1, double l2, double l3, const std::string& head) {
        return breakdown(total_loss(pair, edges_from(edges), params, {l1, l2, l3}, parse_head_mode(head)));
      },
      py::arg("pair"), py::arg("edges"), py::arg("params"), py::arg("lambda1") = 1.0, py::arg("lambda2") = 1.0,
      py::arg("lambda3") = 1.0, py::arg("head") = "norm");

  m.def(
      "gradients",
      [](const ChiralPair& pair, const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 2, Eigen::RowMajor>& edges,
         const NetworkParams& params, double l1, double l2, double l3, const std::string& head) {
        const GradientResult g =
            gradients(pair, edges_from(edges), params, {l1, l2, l3}, parse_head_mode(head));
        return py::make_tuple(breakdown(g.loss), g.grad.flatten());
      },
      py::arg("pair"), py::arg("edges"), py::arg("params"), py::arg("lambda1") = 1.0, py::arg("lambda2") = 1.0,
      py::arg("lambda3") = 1.0, py::arg("head") = "norm",
      "Returns (loss breakdown, flat gradient in NetworkParams.flatten order).");

  m.def(
      "train",
      [](const std::vector<std::pair<ChiralPair, Eigen::Matrix<std::int64_t, Eigen::Dynamic, 2, Eigen::RowMajor>>>&
             shapes,
         std::size_t iterations, double lr, std::uint64_t seed, double l1, double l2, double l3,
         const std::string& head) {
        std::vector<TrainingShape> ts;
        for (const auto& [pair, edges] : shapes) ts.push_back({pair, edges_from(edges)});
        TrainConfig cfg;
        cfg.iterations = iterations;
        cfg.learning_rate = lr;
        cfg.seed = seed;
        cfg.head = parse_head_mode(head);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(ts, cfg, {l1, l2, l3});
        }
        py::list history;
        for (const auto& h : r.history) history.append(breakdown(h));
        return py::make_tuple(std::move(r.params), history);
      },
      py::arg("shapes"), py::arg("iterations") = 20000, py::arg("lr") = 1e-3, py::arg("seed") = 42,
      py::arg("lambda1") = 1.0, py::arg("lambda2") = 1.0, py::arg("lambda3") = 1.0, py::arg("head") = "norm",
      "Train on [(pair, edges), ...]; returns (params, per-iteration loss history).");

  m.def(
      "infer",
      [](const NetworkParams& params, const ChiralPair& pair, const std::string& head) {
        const ChiralityField f = infer_field(params, pair, parse_head_mode(head));
        return py::make_tuple(f.chi, f.chi_bar, f.included);
      },
      py::arg("params"), py::arg("pair"), py::arg("head") = "norm", "Returns (chi, chi_bar, included).");

  m.def(
      "chirality_accuracy",
      [](const std::vector<std::vector<double>>& chis, const std::vector<std::vector<int>>& labels) {
        std::vector<ChiralityField> fields;
        for (const auto& c : chis) {
          ChiralityField f;
          f.chi = c;
          f.chi_bar.assign(c.size(), 0.0);
          f.included.assign(c.size(), true);
          fields.push_back(std::move(f));
        }
        std::vector<ChiralityAnnotation> ann;
        for (const auto& l : labels) ann.push_back({l});
        return chirality_accuracy(fields, ann);
      },
      py::arg("chis"), py::arg("labels"));

  m.def("augment_features", [](const Eigen::MatrixXd& base, const std::vector<double>& chi,
                               double weight) { return augment_features(base, chi, weight); },
        py::arg("base"), py::arg("chi"), py::arg("weight") = 0.5);

  m.def(
      "match_nearest",
      [](const Eigen::MatrixXd& src, const Eigen::MatrixXd& tgt) {
        const MatchResult r = match_nearest(src, tgt);
        return py::make_tuple(r.correspondence, r.similarity);
      },
      py::arg("source"), py::arg("target"), "Returns (correspondence, cosine similarity).");

  m.def(
      "pck_curve",
      [](const std::vector<VertexIndex>& predicted, const std::vector<VertexIndex>& truth, const Coords& target,
         const std::vector<double>& grid) {
        MatchResult r;
        r.correspondence = predicted;
        const PckCurve c = pck_curve(r, truth, target, grid);
        return py::make_tuple(c.accuracies, c.auc);
      },
      py::arg("predicted"), py::arg("truth"), py::arg("target"), py::arg("tolerances"),
      "Returns (accuracies, normalised AUC).");
  m.def("uniform_grid", &uniform_grid, py::arg("lo"), py::arg("hi"), py::arg("n"));

  m.def(
      "kmeans",
      [](const Eigen::MatrixXd& x, std::size_t k, std::uint64_t seed) {
        const KMeansResult r = kmeans_segment(x, k, seed);
        return py::make_tuple(r.labels, r.centroids, r.objective);
      },
      py::arg("features"), py::arg("k"), py::arg("seed") = 42, "Returns (labels, centroids, objective history).");

  m.def(
      "read_vertex_features", [](const std::filesystem::path& p) { return read_container(p).to_matrix(); },
      py::arg("path"));
  m.def(
      "write_vertex_features",
      [](const std::filesystem::path& p, const Eigen::MatrixXd& x) {
        write_container(p, FeatureContainer::from_matrix(x));
      },
      py::arg("path"), py::arg("features"));
}
