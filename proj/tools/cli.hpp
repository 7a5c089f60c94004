// pseudoflow - pseudo scene-flow labels from camera projection and 2D flow
#ifndef PSEUDOFLOW_TOOLS_CLI_HPP
#define PSEUDOFLOW_TOOLS_CLI_HPP

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "pseudoflow/pseudoflow.hpp"

namespace pseudoflow::cli {

namespace detail {

struct GenerateArgs {
  std::string cloud_t, cloud_t1, calib, flow, out;
  double theta = 2.0;
};

struct ConfidenceArgs {
  std::string labels, cloud_t, cloud_t1, calib, out;
  NoiseParams params;
};

struct FitArgs {
  std::string labels, cloud_t, cloud_t1, out;
  std::string mode = "weighted";
  FitConfig cfg;
};

struct EvalArgs {
  std::string pred, gt, out;
};

struct PreprocessArgs {
  std::string in, calib, out;
  PreprocessConfig cfg;
  bool keep_ground = false;
};

struct SynthArgs {
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t points = 400;
  bool resampled = false;
  double flow_noise_fraction = 0.0;
  double flow_noise_px = 0.0;
};

inline int run_generate(const GenerateArgs& a, std::ostream& out) {
  const PointCloud p_t = io::read_point_cloud(a.cloud_t);
  const PointCloud p_t1 = io::read_point_cloud(a.cloud_t1);
  const CameraModel cam = io::read_calibration(a.calib);
  const FlowField2D ff = io::read_flow_field(a.flow);
  const PseudoLabelSet labels = generate_pseudo_labels(p_t, p_t1, cam, ff);

  std::vector<double> w(labels.size(), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].valid) w[i] = confidence_kernel(labels[i].nn_2d_distance, a.theta);
  }
  io::write_labels(a.out, labels, w);
  out << "labels " << labels.size() << " valid " << labels.valid_count() << " -> " << a.out
      << '\n';
  return 0;
}

inline int run_confidence(const ConfidenceArgs& a, std::ostream& out) {
  const PointCloud p_t = io::read_point_cloud(a.cloud_t);
  const PointCloud p_t1 = io::read_point_cloud(a.cloud_t1);
  const CameraModel cam = io::read_calibration(a.calib);
  const PseudoLabelSet labels = io::to_label_set(io::read_labels(a.labels), p_t);
  const ConfidenceVector conf = score_labels(labels, p_t, p_t1, cam, a.params);
  io::write_labels(a.out, labels, conf.w_u);

  double sum = 0.0;
  for (double v : conf.w_u) sum += v;
  out << "labels " << labels.size() << " mean_w_u " << sum / static_cast<double>(labels.size())
      << " -> " << a.out << '\n';
  return 0;
}

inline FitMode parse_mode(const std::string& s) {
  if (s == "weighted") return FitMode::kWeighted;
  if (s == "unweighted") return FitMode::kUnweighted;
  if (s == "chamfer") return FitMode::kChamfer;
  throw Error(ErrorKind::kInvalidArgument, "unknown fit mode '" + s + "'");
}

inline int run_fit(const FitArgs& a, std::ostream& out) {
  const FitMode mode = parse_mode(a.mode);
  const PointCloud p_t = io::read_point_cloud(a.cloud_t);
  const io::LabelRecord rec = io::read_labels(a.labels);
  const PseudoLabelSet labels = io::to_label_set(rec, p_t);
  PointCloud target;
  if (mode == FitMode::kChamfer) {
    if (a.cloud_t1.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "fit --mode chamfer needs --cloud-t1");
    }
    target = io::read_point_cloud(a.cloud_t1);
  }
  const FitResult fit = fit_flow(labels, rec.weights, p_t, a.cfg, mode,
                                 mode == FitMode::kChamfer ? &target : nullptr);
  io::write_flow(a.out, fit.estimate);
  out << "mode " << to_string(mode) << " objective " << fit.report.trace.back() << " data_l1 "
      << fit.report.data_loss << " smoothness " << fit.report.smoothness << " -> " << a.out
      << '\n';
  return 0;
}

inline int run_eval(const EvalArgs& a, std::ostream& out) {
  const MetricsReport r = evaluate(io::read_flow(a.pred), io::read_flow(a.gt));
  write_report(out, r);
  if (!a.out.empty()) {
    const nlohmann::json j = {{"EPE3D", r.epe3d},       {"Acc3DS", r.acc3ds},
                              {"Acc3DR", r.acc3dr},     {"Outliers", r.outliers},
                              {"n_points", r.n_points}};
    std::ofstream os(a.out, std::ios::trunc);
    if (!os) throw Error(ErrorKind::kIo, "cannot open for writing: " + a.out);
    os << j.dump(2) << '\n';
  }
  return 0;
}

inline int run_preprocess(PreprocessArgs a, std::ostream& out) {
  a.cfg.remove_ground = !a.keep_ground;
  const PointCloud pc = io::read_point_cloud(a.in);
  const CameraModel cam = io::read_calibration(a.calib);
  PreprocessReport rep;
  const PointCloud result = preprocess(pc, cam, a.cfg, &rep);
  io::write_point_cloud(a.out, result);
  out << "input " << rep.input << " removed_depth " << rep.removed_depth << " removed_ground "
      << rep.removed_ground << " output " << rep.output << " shortfall " << rep.shortfall << '\n';
  return 0;
}

inline int run_synth(const SynthArgs& a, std::ostream& out) {
  namespace fs = std::filesystem;
  const synth::SceneSpec spec = synth::default_scene_spec(a.seed, a.points, a.resampled);
  const synth::SyntheticScene scene = synth::make_rigid_scene(spec);
  FlowField2D ff = synth::render_exact_flow_field(scene, spec);
  if (a.flow_noise_fraction > 0.0) {
    ff = synth::corrupt(ff, {a.flow_noise_fraction, a.flow_noise_px, a.seed + 1}).data;
  }
  fs::create_directories(a.out_dir);
  const auto path = [&](const char* name) { return (fs::path(a.out_dir) / name).string(); };
  io::write_point_cloud(path("cloud_t.pcf"), scene.p_t);
  io::write_point_cloud(path("cloud_t1.pcf"), scene.p_t1);
  io::write_calibration(path("calib.txt"), spec.camera);
  io::write_flow_field(path("flow.flo"), ff);
  io::write_flow(path("gt_flow.pcf"), scene.gt);
  out << "points_t " << scene.p_t.size() << " points_t1 " << scene.p_t1.size() << " -> "
      << a.out_dir << '\n';
  return 0;
}

}  // namespace detail

/// Runs the command line; returns the process exit status.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pseudo scene-flow labels: generation, confidence scoring, fitting, evaluation"};
  app.name("pseudoflow");
  app.require_subcommand(1);

  detail::GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "pseudo labels from clouds, calibration and 2D flow");
  generate->add_option("cloud_t", gen.cloud_t, "point cloud at t")->required();
  generate->add_option("cloud_t1", gen.cloud_t1, "point cloud at t+1")->required();
  generate->add_option("calib", gen.calib, "3x4 projection matrix (12 numbers)")->required();
  generate->add_option("flow", gen.flow, "2D flow field")->required();
  generate->add_option("-o,--out", gen.out, "output label file")->required();
  generate->add_option("--theta", gen.theta, "initial-confidence threshold (image units)");

  detail::ConfidenceArgs conf;
  auto* confidence = app.add_subcommand("confidence", "initial + refined label confidences");
  confidence->add_option("labels", conf.labels, "label file")->required();
  confidence->add_option("cloud_t", conf.cloud_t, "point cloud at t")->required();
  confidence->add_option("cloud_t1", conf.cloud_t1, "point cloud at t+1")->required();
  confidence->add_option("calib", conf.calib, "3x4 projection matrix")->required();
  confidence->add_option("-o,--out", conf.out, "output label file")->required();
  confidence->add_option("--theta", conf.params.theta, "distance threshold");
  confidence->add_option("--lambda", conf.params.lambda, "blend weight in [0, 1]");
  confidence->add_option("--tau", conf.params.tau, "label-similarity temperature (m)");
  confidence->add_option("--k", conf.params.k_neighbors, "neighbors per point");

  detail::FitArgs fit;
  auto* fitcmd = app.add_subcommand("fit", "fit per-point flows to labels");
  fitcmd->add_option("labels", fit.labels, "label file with confidences")->required();
  fitcmd->add_option("cloud_t", fit.cloud_t, "point cloud at t")->required();
  fitcmd->add_option("-o,--out", fit.out, "output flow file")->required();
  fitcmd->add_option("--mode", fit.mode, "weighted | unweighted | chamfer")
      ->check(CLI::IsMember({"weighted", "unweighted", "chamfer"}));
  fitcmd->add_option("--cloud-t1", fit.cloud_t1, "point cloud at t+1 (chamfer mode)");
  fitcmd->add_option("--lr", fit.cfg.learning_rate, "step fraction");
  fitcmd->add_option("--iters", fit.cfg.iterations, "iterations");
  fitcmd->add_option("--beta", fit.cfg.smoothness_weight, "smoothness weight");
  fitcmd->add_option("--k", fit.cfg.smoothness_k, "smoothness neighbors");
  fitcmd->add_option("--seed", fit.cfg.seed, "seed");

  detail::EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "EPE3D / Acc3DS / Acc3DR / Outliers");
  eval->add_option("pred", ev.pred, "predicted flow")->required();
  eval->add_option("gt", ev.gt, "ground-truth flow")->required();
  eval->add_option("-o,--out", ev.out, "also write the report as JSON");

  detail::PreprocessArgs pre;
  auto* prep = app.add_subcommand("preprocess", "depth cutoff, ground removal, sampling");
  prep->add_option("in", pre.in, "input point cloud")->required();
  prep->add_option("calib", pre.calib, "3x4 projection matrix")->required();
  prep->add_option("-o,--out", pre.out, "output point cloud")->required();
  prep->add_option("--max-depth", pre.cfg.max_depth, "camera depth cutoff (m)");
  prep->add_option("--ground-height", pre.cfg.ground_height, "height threshold (m)");
  prep->add_option("--height-axis", pre.cfg.height_axis, "coordinate index holding height");
  prep->add_option("--height-sign", pre.cfg.height_sign, "+1 or -1 applied before comparing");
  prep->add_flag("--keep-ground", pre.keep_ground, "disable ground removal");
  prep->add_option("--sample-n", pre.cfg.sample_n, "points to keep");
  prep->add_option("--seed", pre.cfg.seed, "sampling seed");

  detail::SynthArgs syn;
  auto* synthcmd = app.add_subcommand("synth", "synthetic rigid scene with ground truth");
  synthcmd->add_option("-o,--out", syn.out_dir, "output directory")->required();
  synthcmd->add_option("--seed", syn.seed, "scene seed");
  synthcmd->add_option("--points", syn.points, "points per object");
  synthcmd->add_flag("--resampled", syn.resampled, "sample t+1 independently");
  synthcmd->add_option("--flow-noise-fraction", syn.flow_noise_fraction, "fraction of flow cells corrupted");
  synthcmd->add_option("--flow-noise-px", syn.flow_noise_px, "corruption magnitude (image units)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 2;
  }

  try {
    if (*generate) return detail::run_generate(gen, out);
    if (*confidence) return detail::run_confidence(conf, out);
    if (*fitcmd) return detail::run_fit(fit, out);
    if (*eval) return detail::run_eval(ev, out);
    if (*prep) return detail::run_preprocess(pre, out);
    if (*synthcmd) return detail::run_synth(syn, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace pseudoflow::cli

#endif  // PSEUDOFLOW_TOOLS_CLI_HPP
