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


// chiralis: command-line driver for the chirality feature pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chiralis/error.hpp"
#include "chiralis/eval.hpp"
#include "chiralis/feature_io.hpp"
#include "chiralis/net.hpp"
#include "chiralis/shape.hpp"
#include "chiralis/view.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace chiralis {
namespace {

// Options shared by every subcommand; they live on the root app so a flat
// key=value config file can set them.
struct Common {
  std::uint64_t seed = 42;
  std::size_t views = 16;
  double radius = 2.0;
  std::vector<double> elevations{-15.0, 15.0};
  int resolution = 128;
  double fov = 65.0;
  double lr = 1e-3;
  std::size_t iters = 20000;
  double lambda1 = 1.0, lambda2 = 1.0, lambda3 = 1.0;
  std::string head = "norm";
  double weight = 0.5;
  std::string epsilon_grid = "0:0.2:101";
  double epsilon = 0.1;
  std::size_t k = 2;
  std::size_t knn = 0;
  double tolerance = -1.0;
};

json common_json(const Common& c) {
  return {{"seed", c.seed},         {"views", c.views},
          {"radius", c.radius},     {"elevations", c.elevations},
          {"resolution", c.resolution}, {"fov", c.fov},
          {"lr", c.lr},             {"iters", c.iters},
          {"lambda1", c.lambda1},   {"lambda2", c.lambda2},
          {"lambda3", c.lambda3},   {"head", std::string(head_mode_name(parse_head_mode(c.head)))},
          {"weight", c.weight},     {"epsilon_grid", c.epsilon_grid},
          {"epsilon", c.epsilon},   {"k", c.k},
          {"knn", c.knn},           {"tolerance", c.tolerance}};
}

json effective_config(const std::string& command, const Common& c, json extra = json::object()) {
  json out = common_json(c);
  out["command"] = command;
  for (auto& [key, value] : extra.items()) out[key] = value;
  return out;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<double> parse_grid(const std::string& text) {
  // lo:hi:n
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw ParameterError("--epsilon-grid must be lo:hi:n, got '" + text + "'");
  try {
    return uniform_grid(std::stod(parts[0]), std::stod(parts[1]), std::stoul(parts[2]));
  } catch (const std::logic_error&) {
    throw ParameterError("--epsilon-grid must be lo:hi:n, got '" + text + "'");
  }
}

std::vector<CameraView> camera_ring(const Common& c) {
  RingOptions opt;
  opt.height = opt.width = c.resolution;
  opt.fov_deg = c.fov;
  return generate_camera_ring(c.views, c.radius, c.elevations, opt);
}

std::vector<Edge> shape_edges(const TriangleMesh& mesh, std::size_t knn) {
  if (knn > 0) return build_knn_graph(mesh.vertices(), knn);
  if (mesh.edges().empty())
    throw ValidationError("shape has no faces; pass --knn to build point-cloud edges");
  return mesh.edges();
}

struct LoadedPair {
  PairManifest manifest;
  ChiralPair pair;
  TriangleMesh mesh;
};

LoadedPair load_pair(const fs::path& manifest_path) {
  PairManifest m = read_pair_manifest(manifest_path);
  ChiralPair pair = read_pair_files(m);
  TriangleMesh mesh = load_mesh(m.mesh);
  if (mesh.vertex_count() != pair.vertex_count())
    throw ValidationError(manifest_path.string() + ": mesh has " + std::to_string(mesh.vertex_count()) +
                          " vertices but features have " + std::to_string(pair.vertex_count()) + " rows");
  return {std::move(m), std::move(pair), std::move(mesh)};
}

TrainConfig train_config(const Common& c) {
  TrainConfig cfg;
  cfg.learning_rate = c.lr;
  cfg.iterations = c.iters;
  cfg.seed = c.seed;
  cfg.head = parse_head_mode(c.head);
  cfg.validate();
  return cfg;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_field_csv(const fs::path& path, const ChiralityField& f) {
  std::string out = "vertex,chi,chi_bar,included\n";
  for (std::size_t v = 0; v < f.chi.size(); ++v)
    out += std::to_string(v) + "," + fmt(f.chi[v]) + "," + fmt(f.chi_bar[v]) + "," + (f.included[v] ? "1" : "0") +
           "\n";
  write_text(path, out);
}

ChiralityField read_field_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line != "vertex,chi,chi_bar,included") throw FormatError(path.string() + ": unexpected header", 1);
  ChiralityField f;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c, d;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',') ||
        !std::getline(ss, d, ','))
      throw FormatError(path.string() + ": expected 4 columns", line_no);
    try {
      if (std::stoul(a) != f.chi.size()) throw FormatError(path.string() + ": vertices out of order", line_no);
      f.chi.push_back(std::stod(b));
      f.chi_bar.push_back(std::stod(c));
      f.included.push_back(d == "1");
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ": bad number", line_no);
    }
  }
  return f;
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  fs::path out;
  std::size_t shapes = 5;
  int rings = 25;
  int segments = 40;
  double noise = 0.01;
  bool render = false;
};

void cmd_synth(const Common& c, const SynthArgs& a) {
  fs::create_directories(a.out);
  const json config = effective_config("synth", c,
                                       {{"shapes", a.shapes},
                                        {"rings", a.rings},
                                        {"segments", a.segments},
                                        {"noise", a.noise},
                                        {"render", a.render}});
  const std::vector<CameraView> views = a.render ? camera_ring(c) : std::vector<CameraView>{};
  for (std::size_t i = 0; i < a.shapes; ++i) {
    const std::string id = "shape_" + std::to_string(i);
    const TriangleMesh mesh = make_bilateral_mesh(c.seed + i, a.rings, a.segments);
    SyntheticSpec spec;
    spec.noise = a.noise;
    spec.seed = c.seed;
    spec.noise_stream = i;
    const SyntheticPair syn = generate_synthetic_pair(mesh, spec);
    save_off(a.out / (id + ".off"), mesh);
    save_annotations(a.out / (id + ".labels"), syn.labels);

    PairManifest m;
    m.shape_id = id;
    m.mesh = a.out / (id + ".off");
    m.annotations = a.out / (id + ".labels");
    m.provenance = "synthetic";
    m.config = config;
    if (a.render) {
      const fs::path cams = a.out / (id + ".cameras.json");
      write_camera_manifest(cams, views);
      std::vector<int> chiral;
      for (int ch = spec.symmetric_channels; ch < spec.dim(); ++ch) chiral.push_back(ch);
      const SyntheticViews rendered = render_synthetic_views(mesh, views, syn.clean_features, chiral);
      write_container(a.out / (id + ".maps.cfv"), FeatureContainer::from_maps(rendered.original));
      write_container(a.out / (id + ".maps_flipped.cfv"), FeatureContainer::from_maps(rendered.flipped_images));
      m.camera_manifest = cams;
    }
    write_pair_files(a.out / (id + ".pair.json"), syn.pair, m);
  }
}

// --- aggregate -------------------------------------------------------------

struct AggregateArgs {
  fs::path mesh, maps, flipped, cameras, out, annotations, maps_manifest;
  std::string shape_id;
};

void cmd_aggregate(const Common& c, const AggregateArgs& a) {
  const TriangleMesh mesh = load_mesh(a.mesh);
  const std::vector<CameraView> views = read_camera_manifest(a.cameras);
  std::vector<FeatureMap> orig = read_container(a.maps).to_maps();
  std::vector<FeatureMap> flipped = read_container(a.flipped).to_maps();
  if (orig.size() != views.size() || flipped.size() != views.size())
    throw ValidationError("camera manifest has " + std::to_string(views.size()) + " views but containers have " +
                          std::to_string(orig.size()) + " and " + std::to_string(flipped.size()));
  std::string provenance = "aggregate";
  if (!a.maps_manifest.empty()) {
    const auto side = read_view_maps_manifest(a.maps_manifest);
    if (!side) throw IoError("cannot read view-maps manifest '" + a.maps_manifest.string() + "'");
    if (!side->provenance.empty()) provenance = side->provenance;
    if (!side->channel_groups.empty()) {
      for (auto& m : orig) m = normalize_concat_groups(m, side->channel_groups);
      for (auto& m : flipped) m = normalize_concat_groups(m, side->channel_groups);
    }
  }
  const double tol = c.tolerance >= 0.0 ? c.tolerance : default_depth_tolerance(mesh);
  const ChiralPair pair = build_chiral_pair(mesh, views, orig, flipped, tol);

  PairManifest m;
  m.shape_id = a.shape_id.empty() ? a.mesh.stem().string() : a.shape_id;
  m.mesh = a.mesh;
  m.camera_manifest = a.cameras;
  if (!a.annotations.empty()) {
    load_annotations(a.annotations, mesh);
    m.annotations = a.annotations;
  }
  m.provenance = provenance;
  m.config = effective_config("aggregate", c,
                              {{"mesh", a.mesh.string()},
                               {"maps", a.maps.string()},
                               {"flipped_maps", a.flipped.string()},
                               {"cameras", a.cameras.string()},
                               {"depth_tolerance", tol}});
  ensure_parent(a.out);
  write_pair_files(a.out, pair, m);
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::vector<fs::path> pairs;
  fs::path out, loss_csv;
};

void cmd_train(const Common& c, const TrainArgs& a) {
  const TrainConfig cfg = train_config(c);
  const LossWeights w{c.lambda1, c.lambda2, c.lambda3};
  w.validate();
  std::vector<TrainingShape> shapes;
  json inputs = json::array();
  for (const auto& p : a.pairs) {
    LoadedPair lp = load_pair(p);
    shapes.push_back({std::move(lp.pair), shape_edges(lp.mesh, c.knn)});
    inputs.push_back(p.string());
  }
  const TrainResult res = train(shapes, cfg, w);
  const fs::path csv = a.loss_csv.empty() ? fs::path(a.out.string() + ".loss.csv") : a.loss_csv;
  ensure_parent(a.out);
  ensure_parent(csv);
  write_checkpoint(a.out, res.params);
  write_loss_history(csv, res.history);
  json manifest = {{"format", "chiralis-train"},
                   {"version", 1},
                   {"checkpoint", a.out.filename().string()},
                   {"loss_csv", csv.filename().string()},
                   {"dim", res.params.dim()},
                   {"config", effective_config("train", c, {{"pairs", inputs}})}};
  if (!res.history.empty()) {
    const auto& last = res.history.back();
    manifest["final_loss"] = {
        {"L_dis", last.dis}, {"L_inv", last.inv}, {"L_var", last.var}, {"L_fif", last.fif}, {"total", last.total}};
  }
  write_json(a.out.string() + ".json", manifest);
}

// --- infer -----------------------------------------------------------------

struct InferArgs {
  fs::path checkpoint, pair, out;
};

void cmd_infer(const Common& c, const InferArgs& a) {
  const NetworkParams params = read_checkpoint(a.checkpoint);
  const LoadedPair lp = load_pair(a.pair);
  if (lp.pair.dim() != params.dim())
    throw ValidationError("checkpoint dimension " + std::to_string(params.dim()) + " differs from feature dimension " +
                          std::to_string(lp.pair.dim()));
  write_field_csv(a.out, infer_field(params, lp.pair, parse_head_mode(c.head)));
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  fs::path checkpoint, out;
  std::vector<fs::path> pairs, fields;
};

void cmd_eval(const Common& c, const EvalArgs& a) {
  if (a.checkpoint.empty() == a.fields.empty())
    throw ParameterError("eval needs exactly one of --checkpoint or --field");
  if (!a.fields.empty() && a.fields.size() != a.pairs.size())
    throw ParameterError("eval needs one --field per pair");
  const HeadMode head = parse_head_mode(c.head);
  std::optional<NetworkParams> params;
  if (!a.checkpoint.empty()) params = read_checkpoint(a.checkpoint);

  std::vector<ChiralityField> fields;
  std::vector<ChiralityAnnotation> labels;
  json per_shape = json::array();
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    const LoadedPair lp = load_pair(a.pairs[i]);
    if (lp.manifest.annotations.empty())
      throw ValidationError(a.pairs[i].string() + ": eval needs chirality annotations");
    labels.push_back(load_annotations(lp.manifest.annotations, lp.mesh));
    if (params) {
      if (lp.pair.dim() != params->dim())
        throw ValidationError(a.pairs[i].string() + ": feature dimension " + std::to_string(lp.pair.dim()) +
                              " differs from checkpoint dimension " + std::to_string(params->dim()));
      fields.push_back(infer_field(*params, lp.pair, head));
    } else {
      fields.push_back(read_field_csv(a.fields[i]));
      fields.back().included.resize(fields.back().chi.size(), true);
    }
    const std::span<const ChiralityField> one(&fields.back(), 1);
    const std::span<const ChiralityAnnotation> one_label(&labels.back(), 1);
    per_shape.push_back({{"shape_id", lp.manifest.shape_id},
                         {"accuracy", chirality_accuracy(one, one_label)},
                         {"agreement", chirality_agreement(one, one_label)}});
  }
  json inputs = json::array();
  for (const auto& p : a.pairs) inputs.push_back(p.string());
  const json report = {{"format", "chiralis-eval"},
                       {"version", 1},
                       {"chirality_accuracy", chirality_accuracy(fields, labels)},
                       {"shapes", per_shape},
                       {"config", effective_config("eval", c,
                                                   {{"pairs", inputs},
                                                    {"checkpoint", a.checkpoint.string()}})}};
  if (a.out.empty())
    std::cout << report.dump(2) << "\n";
  else
    write_json(a.out, report);
}

// --- match -----------------------------------------------------------------

struct MatchArgs {
  fs::path checkpoint, source, target, ground_truth, out, pck_csv, correspondence_out;
};

Eigen::MatrixXd match_features(const LoadedPair& lp, const std::optional<NetworkParams>& params, HeadMode head,
                               double weight) {
  if (!params) return lp.pair.features;
  if (lp.pair.dim() != params->dim())
    throw ValidationError(lp.manifest.shape_id + ": feature dimension " + std::to_string(lp.pair.dim()) +
                          " differs from checkpoint dimension " + std::to_string(params->dim()));
  const ChiralityField f = infer_field(*params, lp.pair, head);
  return augment_features(lp.pair.features, f.chi, weight);
}

void cmd_match(const Common& c, const MatchArgs& a) {
  std::optional<NetworkParams> params;
  if (!a.checkpoint.empty()) params = read_checkpoint(a.checkpoint);
  const HeadMode head = parse_head_mode(c.head);
  const LoadedPair src = load_pair(a.source);
  const LoadedPair tgt = load_pair(a.target);
  const MatchResult m = match_nearest(match_features(src, params, head, c.weight),
                                      match_features(tgt, params, head, c.weight));
  const std::vector<VertexIndex> gt =
      load_correspondence(a.ground_truth, src.mesh.vertex_count(), tgt.mesh.vertex_count());
  const Coords& target = tgt.mesh.vertices();
  const double err = matching_error(m, gt, target);
  const double diameter = max_pairwise_distance(target);
  const PckCurve pck = pck_curve(m, gt, target, parse_grid(c.epsilon_grid));
  if (!a.pck_csv.empty()) {
    ensure_parent(a.pck_csv);
    write_pck_csv(a.pck_csv, pck);
  }
  if (!a.correspondence_out.empty()) {
    std::string text;
    for (VertexIndex j : m.correspondence) text += std::to_string(j) + "\n";
    write_text(a.correspondence_out, text);
  }
  const json report = {
      {"format", "chiralis-match"},
      {"version", 1},
      {"source", src.manifest.shape_id},
      {"target", tgt.manifest.shape_id},
      {"err", err},
      {"err_normalized", diameter > 0.0 ? err / diameter : 0.0},
      {"accuracy", matching_accuracy(m, gt, target, c.epsilon)},
      {"auc", pck.auc},
      {"config", effective_config("match", c,
                                  {{"source", a.source.string()},
                                   {"target", a.target.string()},
                                   {"ground_truth", a.ground_truth.string()},
                                   {"checkpoint", a.checkpoint.string()}})}};
  if (a.out.empty())
    std::cout << report.dump(2) << "\n";
  else
    write_json(a.out, report);
}

// --- segment ---------------------------------------------------------------

struct SegmentArgs {
  fs::path checkpoint, pair, out;
};

void cmd_segment(const Common& c, const SegmentArgs& a) {
  std::optional<NetworkParams> params;
  if (!a.checkpoint.empty()) params = read_checkpoint(a.checkpoint);
  const LoadedPair lp = load_pair(a.pair);
  const KMeansResult r = kmeans_segment(match_features(lp, params, parse_head_mode(c.head), c.weight), c.k, c.seed);
  const json report = {{"format", "chiralis-segment"},
                       {"version", 1},
                       {"shape_id", lp.manifest.shape_id},
                       {"labels", r.labels},
                       {"objective", r.objective.empty() ? 0.0 : r.objective.back()},
                       {"iterations", r.iterations},
                       {"config", effective_config("segment", c,
                                                   {{"pair", a.pair.string()},
                                                    {"checkpoint", a.checkpoint.string()}})}};
  write_json(a.out, report);
}

// --- plot ------------------------------------------------------------------

struct PlotArgs {
  std::vector<fs::path> csvs;
  std::vector<std::string> labels;
  fs::path out;
};

void cmd_plot(const Common&, const PlotArgs& a) {
  std::vector<PckCurve> curves;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < a.csvs.size(); ++i) {
    PckCurve curve = read_pck_csv(a.csvs[i]);
    for (std::size_t j = 1; j < curve.accuracies.size(); ++j)
      if (curve.accuracies[j] < curve.accuracies[j - 1])
        throw ValidationError(a.csvs[i].string() + ": PCK curve is not monotone at row " + std::to_string(j + 1));
    curves.push_back(std::move(curve));
    labels.push_back(i < a.labels.size() ? a.labels[i] : a.csvs[i].stem().string());
  }
  ensure_parent(a.out);
  write_pck_svg(a.out, curves, labels);
}

}  // namespace
}  // namespace chiralis

int main(int argc, char** argv) {
  using namespace chiralis;
  CLI::App app{"Chirality features for 3D shapes"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; flags override it");

  Common c;
  app.add_option("--seed", c.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--views", c.views, "Cameras per elevation ring")->capture_default_str();
  app.add_option("--radius", c.radius, "Camera distance from the origin")->capture_default_str();
  app.add_option("--elevations", c.elevations, "Ring elevations in degrees")->delimiter(',')->capture_default_str();
  app.add_option("--resolution", c.resolution, "Rendered image height and width")->capture_default_str();
  app.add_option("--fov", c.fov, "Horizontal field of view in degrees")->capture_default_str();
  app.add_option("--lr", c.lr, "ADAM learning rate")->capture_default_str();
  app.add_option("--iters,--iterations", c.iters, "Training iterations")->capture_default_str();
  app.add_option("--lambda1", c.lambda1, "Weight of the invertibility loss")->capture_default_str();
  app.add_option("--lambda2", c.lambda2, "Weight of the total-variation loss")->capture_default_str();
  app.add_option("--lambda3", c.lambda3, "Weight of the balance loss")->capture_default_str();
  app.add_option("--head", c.head, "Chirality head")->check(CLI::IsMember({"norm", "normalized", "tanh"}))
      ->capture_default_str();
  app.add_option("--weight", c.weight, "Weight of the chirality channel in match/segment")->capture_default_str();
  app.add_option("--epsilon-grid", c.epsilon_grid, "PCK tolerances as lo:hi:n")->capture_default_str();
  app.add_option("--epsilon", c.epsilon, "Tolerance for the reported matching accuracy")->capture_default_str();
  app.add_option("--k", c.k, "Cluster count for segment")->capture_default_str();
  app.add_option("--knn", c.knn, "Use mutual k-NN edges instead of mesh edges (0 = mesh)")->capture_default_str();
  app.add_option("--tolerance", c.tolerance, "Visibility depth tolerance (negative = automatic)")
      ->capture_default_str();

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Generate synthetic bilateral shapes with chiral features")
                      ->fallthrough();
  s_synth->add_option("--out", synth.out, "Output directory")->required();
  s_synth->add_option("--shapes", synth.shapes, "Number of shapes")->capture_default_str();
  s_synth->add_option("--rings", synth.rings, "Latitude rings per mesh")->capture_default_str();
  s_synth->add_option("--segments", synth.segments, "Longitude segments per mesh")->capture_default_str();
  s_synth->add_option("--noise", synth.noise, "Feature noise standard deviation")->capture_default_str();
  s_synth->add_flag("--render", synth.render, "Also render view maps and a camera manifest");

  AggregateArgs agg;
  auto* s_agg = app.add_subcommand("aggregate", "Back-project view maps into a chiral vertex-feature pair")
                    ->fallthrough();
  s_agg->add_option("--mesh", agg.mesh, "Mesh (OFF or OBJ)")->required();
  s_agg->add_option("--maps", agg.maps, "View maps of the original images")->required();
  s_agg->add_option("--flipped-maps", agg.flipped, "View maps of the flipped images")->required();
  s_agg->add_option("--cameras", agg.cameras, "Camera manifest")->required();
  s_agg->add_option("--maps-manifest", agg.maps_manifest, "Optional view-maps sidecar manifest");
  s_agg->add_option("--annotations", agg.annotations, "Optional chirality labels");
  s_agg->add_option("--shape-id", agg.shape_id, "Shape id (default: mesh stem)");
  s_agg->add_option("--out", agg.out, "Output pair manifest")->required();

  TrainArgs tr;
  auto* s_train = app.add_subcommand("train", "Train the chirality network")->fallthrough();
  s_train->add_option("pairs", tr.pairs, "Pair manifests")->required();
  s_train->add_option("--out", tr.out, "Output checkpoint")->required();
  s_train->add_option("--loss-csv", tr.loss_csv, "Loss history CSV (default: <out>.loss.csv)");

  InferArgs inf;
  auto* s_infer = app.add_subcommand("infer", "Write the chirality field of a pair")->fallthrough();
  s_infer->add_option("--checkpoint", inf.checkpoint, "Checkpoint")->required();
  s_infer->add_option("--pair", inf.pair, "Pair manifest")->required();
  s_infer->add_option("--out", inf.out, "Output field CSV")->required();

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("eval", "Left/right accuracy against annotations")->fallthrough();
  s_eval->add_option("pairs", ev.pairs, "Pair manifests with annotations")->required();
  s_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint to infer fields with");
  s_eval->add_option("--field", ev.fields, "Precomputed field CSVs, one per pair");
  s_eval->add_option("--out", ev.out, "Output report JSON (default: stdout)");

  MatchArgs mt;
  auto* s_match = app.add_subcommand("match", "Nearest-neighbour matching between two shapes")->fallthrough();
  s_match->add_option("--source", mt.source, "Source pair manifest")->required();
  s_match->add_option("--target", mt.target, "Target pair manifest")->required();
  s_match->add_option("--ground-truth", mt.ground_truth, "Ground-truth correspondence file")->required();
  s_match->add_option("--checkpoint", mt.checkpoint, "Checkpoint; augments features with chirality");
  s_match->add_option("--out", mt.out, "Output report JSON (default: stdout)");
  s_match->add_option("--pck-csv", mt.pck_csv, "Output PCK curve CSV");
  s_match->add_option("--correspondence-out", mt.correspondence_out, "Output predicted correspondence");

  SegmentArgs sg;
  auto* s_seg = app.add_subcommand("segment", "k-means part segmentation")->fallthrough();
  s_seg->add_option("--pair", sg.pair, "Pair manifest")->required();
  s_seg->add_option("--checkpoint", sg.checkpoint, "Checkpoint; augments features with chirality");
  s_seg->add_option("--out", sg.out, "Output report JSON")->required();

  PlotArgs pl;
  auto* s_plot = app.add_subcommand("plot", "Plot PCK curves as SVG")->fallthrough();
  s_plot->add_option("csvs", pl.csvs, "PCK CSV files")->required();
  s_plot->add_option("--label", pl.labels, "Curve labels, in CSV order");
  s_plot->add_option("--out", pl.out, "Output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*s_synth) cmd_synth(c, synth);
    if (*s_agg) cmd_aggregate(c, agg);
    if (*s_train) cmd_train(c, tr);
    if (*s_infer) cmd_infer(c, inf);
    if (*s_eval) cmd_eval(c, ev);
    if (*s_match) cmd_match(c, mt);
    if (*s_seg) cmd_segment(c, sg);
    if (*s_plot) cmd_plot(c, pl);
  } catch (const ParameterError& e) {
    std::cerr << "chiralis: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "chiralis: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "chiralis: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "chiralis: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
