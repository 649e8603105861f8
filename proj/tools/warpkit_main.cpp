// Command-line surface: scene synthesis, training, one-shot warping,
// gradient checking, and the depth/trajectory evaluation protocols.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "warpkit/gradcheck.hpp"
#include "warpkit/runner.hpp"

namespace {

using namespace warpkit;

std::string resolve_out(const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  const char* root = std::getenv("WARPKIT_OUT_ROOT");
  if (!root || !*root) return path;
  return (fs::path(root) / path).string();
}

struct SceneFlags {
  int size = 64;
  int frames = 3;
  int channels = 1;
  uint64_t seed = 1;
  bool occluder = false;
  bool moving_object = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--size", size, "square resolution (pixels)");
    cmd->add_option("--frames", frames, "number of frames");
    cmd->add_option("--channels", channels, "1 or 3");
    cmd->add_option("--seed", seed, "scene seed");
    cmd->add_flag("--occluder", occluder, "add a near occluder patch");
    cmd->add_flag("--moving-object", moving_object,
                  "add an independently moving patch");
  }

  ScenePresetOptions preset() const {
    ScenePresetOptions o;
    o.width = size;
    o.height = size;
    o.channels = channels;
    o.frames = frames;
    o.seed = seed;
    o.occluder = occluder;
    o.moving_object = moving_object;
    return o;
  }
};

int cmd_synth(const SceneFlags& sf, const std::string& config_path,
              const std::string& out, int threads) {
  SceneSpec spec;
  if (!config_path.empty()) {
    RunConfig cfg = load_run_config(config_path);
    spec = scene_from_config(cfg);
  } else {
    spec = make_two_plane_scene(sf.preset());
  }
  RenderedScene scene = render_scene(spec, threads);
  write_scene_dir(resolve_out(out), scene);
  std::cout << "wrote scene with " << scene.data.frames.size() << " frames to "
            << resolve_out(out) << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, RunConfig overrides,
              const std::vector<std::string>& given) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = load_run_config(config_path);
  auto has = [&](const std::string& k) {
    return std::find(given.begin(), given.end(), k) != given.end();
  };
  if (has("variant")) cfg.variant = overrides.variant;
  if (has("steps")) cfg.steps = overrides.steps;
  if (has("seed")) {
    cfg.seed = overrides.seed;
    cfg.scene.seed = overrides.seed;
  }
  if (has("out")) cfg.out_dir = overrides.out_dir;
  if (has("size")) {
    cfg.scene.width = overrides.scene.width;
    cfg.scene.height = overrides.scene.height;
  }
  if (has("frames")) cfg.scene.frames = overrides.scene.frames;
  if (has("occluder")) cfg.scene.occluder = overrides.scene.occluder;
  if (has("moving-object"))
    cfg.scene.moving_object = overrides.scene.moving_object;
  if (has("lr")) cfg.gen_adam.lr = overrides.gen_adam.lr;
  if (has("threads")) cfg.threads = overrides.threads;
  cfg.out_dir = resolve_out(cfg.out_dir);

  TrainResult res = run_train(cfg);
  std::cout << "variant " << AblationVariant::parse(cfg.variant).label()
            << ": step 0 total " << format_double(res.first.total)
            << " rec " << format_double(res.first.terms.rec)
            << " -> final total " << format_double(res.last.total) << " rec "
            << format_double(res.last.terms.rec) << "\n"
            << "outputs in " << cfg.out_dir << "\n";
  return 0;
}

int cmd_warp(const SceneFlags& sf, int target, int source,
             const std::string& out, int threads) {
  RenderedScene scene = render_scene(make_two_plane_scene(sf.preset()), threads);
  int n = static_cast<int>(scene.data.frames.size());
  if (target < 0 || target >= n || source < 0 || source >= n)
    throw ConfigError("warp: frame index out of range");

  DepthField depth = DepthField::from_depth(scene.depth[target]);
  Pose6 rel = relative_pose(scene.poses[target], scene.poses[source]);
  WarpResult wr =
      warp_image(scene.data.frames[source], depth, rel, scene.data.K, threads);

  fs::path dir(resolve_out(out));
  fs::create_directories(dir);
  save_png((dir / "warped.png").string(), wr.image);
  Image validity(wr.image.h, wr.image.w, 1);
  for (int y = 0; y < wr.image.h; ++y)
    for (int x = 0; x < wr.image.w; ++x)
      validity.at(y, x, 0) = wr.validity(y, x) ? 1.0 : 0.0;
  save_png((dir / "validity.png").string(), validity);
  save_png((dir / "target.png").string(), scene.data.frames[target]);

  ReconstructionLoss rec =
      reconstruction_loss(scene.data.frames[target], wr, LossWeights{});
  json rep = {{"target", target},
              {"source", source},
              {"rec_loss_at_gt", rec.value},
              {"n_valid", rec.n_valid}};
  std::ofstream(dir / "warp_report.json") << rep.dump(2) << "\n";
  std::cout << rep.dump(2) << "\n";
  return 0;
}

int cmd_gradcheck(uint64_t seed) {
  auto entries = run_gradcheck(seed, &std::cout);
  if (!gradcheck_passed(entries)) {
    std::cerr << "gradcheck: FAILURES\n";
    return 3;
  }
  std::cout << "gradcheck: all " << entries.size() << " checks passed\n";
  return 0;
}

int cmd_eval_depth(std::string pred, std::string gt, const std::string& dir,
                   int frame, double cap, double min_depth, bool no_align,
                   const std::string& out) {
  if (!dir.empty()) {
    pred = (fs::path(dir) / ("depth_est_" + std::to_string(frame) + ".bin"))
               .string();
    gt = (fs::path(dir) / ("depth_gt_" + std::to_string(frame) + ".bin"))
             .string();
  }
  if (pred.empty() || gt.empty())
    throw ConfigError("eval-depth: need --pred/--gt or --dir");
  GridD p = load_float_grid(pred);
  GridD g = load_float_grid(gt);
  GridB valid(g.height(), g.width(), 0);
  for (size_t i = 0; i < g.size(); ++i)
    valid[i] = (std::isfinite(g[i]) && g[i] > 0) ? 1 : 0;

  double scale = 1.0;
  if (!no_align) p = scale_align(p, g, valid, &scale);
  DepthEvalReport rep = depth_metrics(p, g, valid, cap, min_depth);
  json j = depth_report_to_json(rep);
  j["median_scale_factor"] = scale;
  j["aligned"] = !no_align;
  if (!out.empty()) std::ofstream(resolve_out(out)) << j.dump(2) << "\n";
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_eval_traj(const std::string& est_path, const std::string& gt_path,
                  const std::string& align, const std::vector<double>& lengths,
                  int frame_step, const std::string& out) {
  Trajectory est = load_kitti_poses(est_path);
  Trajectory gt = load_kitti_poses(gt_path);
  std::string mode = align;
  if (mode == "scale") mode = "sim3";
  if (mode == "se3")
    est = umeyama_align(est, gt, AlignMode::kSe3).aligned;
  else if (mode == "sim3")
    est = umeyama_align(est, gt, AlignMode::kSim3).aligned;
  else if (mode != "none")
    throw ConfigError("eval-traj: --align must be none|se3|sim3|scale");

  TrajEvalReport rep =
      lengths.empty() ? kitti_odometry_errors(est, gt, default_subsequence_lengths(), frame_step)
                      : kitti_odometry_errors(est, gt, lengths, frame_step);
  json j = traj_report_to_json(rep, mode);
  if (rep.too_short)
    std::cerr << "warning: trajectory shorter than the smallest subsequence length\n";
  if (!out.empty()) std::ofstream(resolve_out(out)) << j.dump(2) << "\n";
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentiable view-synthesis and masked adversarial loss toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "render a synthetic scene to a directory");
  SceneFlags synth_flags;
  synth_flags.attach(synth);
  std::string synth_config, synth_out = "scene";
  int synth_threads = 1;
  synth->add_option("--config", synth_config, "RunConfig JSON");
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--threads", synth_threads, "parallelism cap");

  // train
  auto* train = app.add_subcommand("train", "optimize depth/pose/mask on a scene");
  std::string train_config;
  RunConfig ov;
  train->add_option("--config", train_config, "RunConfig JSON");
  train->add_option("--variant", ov.variant,
                    "basic|scale|gan|mask|full-fmp|full-bmp or '+'-joined terms");
  train->add_option("--steps", ov.steps, "optimization steps");
  train->add_option("--seed", ov.seed, "seed (scene + discriminator)");
  train->add_option("--out", ov.out_dir, "output directory");
  train->add_option("--size", ov.scene.width, "square resolution");
  train->add_option("--frames", ov.scene.frames, "frame count");
  train->add_flag("--occluder", ov.scene.occluder, "occluder patch in scene");
  train->add_flag("--moving-object", ov.scene.moving_object,
                  "moving patch in scene");
  train->add_option("--lr", ov.gen_adam.lr, "generator learning rate");
  train->add_option("--threads", ov.threads, "parallelism cap");

  // warp
  auto* warp = app.add_subcommand("warp", "one-shot ground-truth-driven warp");
  SceneFlags warp_flags;
  warp_flags.attach(warp);
  int warp_target = 1, warp_source = 0, warp_threads = 1;
  std::string warp_out = "warp";
  warp->add_option("--target", warp_target, "target frame index");
  warp->add_option("--source", warp_source, "source frame index");
  warp->add_option("--out", warp_out, "output directory");
  warp->add_option("--threads", warp_threads, "parallelism cap");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  uint64_t gc_seed = 7;
  gc->add_option("--seed", gc_seed, "suite seed");

  // eval-depth
  auto* ed = app.add_subcommand("eval-depth", "depth metrics report");
  std::string ed_pred, ed_gt, ed_dir, ed_out;
  int ed_frame = 1;
  double ed_cap = 80.0, ed_min = kMinEvalDepth;
  bool ed_no_align = false;
  ed->add_option("--pred", ed_pred, "predicted depth .bin");
  ed->add_option("--gt", ed_gt, "ground-truth depth .bin");
  ed->add_option("--dir", ed_dir, "train output dir (uses depth_est/gt files)");
  ed->add_option("--frame", ed_frame, "frame index with --dir");
  ed->add_option("--cap", ed_cap, "depth cap");
  ed->add_option("--min-depth", ed_min, "evaluation depth floor");
  ed->add_flag("--no-align", ed_no_align, "skip median scaling");
  ed->add_option("--out", ed_out, "write report JSON here");

  // eval-traj
  auto* et = app.add_subcommand("eval-traj", "odometry error report");
  std::string et_est, et_gt, et_align = "none", et_out;
  std::vector<double> et_lengths;
  int et_step = 1;
  et->add_option("--est", et_est, "estimated poses (12-number rows)")->required();
  et->add_option("--gt", et_gt, "ground-truth poses")->required();
  et->add_option("--align", et_align, "none|se3|sim3|scale");
  et->add_option("--lengths", et_lengths, "subsequence path lengths");
  et->add_option("--frame-step", et_step, "start-frame stride");
  et->add_option("--out", et_out, "write report JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed())
      return cmd_synth(synth_flags, synth_config, synth_out, synth_threads);
    if (train->parsed()) {
      std::vector<std::string> given;
      for (const std::string& name :
           {"variant", "steps", "seed", "out", "size", "frames", "occluder",
            "moving-object", "lr", "threads"})
        if (train->count("--" + name) > 0) given.push_back(name);
      return cmd_train(train_config, ov, given);
    }
    if (warp->parsed())
      return cmd_warp(warp_flags, warp_target, warp_source, warp_out,
                      warp_threads);
    if (gc->parsed()) return cmd_gradcheck(gc_seed);
    if (ed->parsed())
      return cmd_eval_depth(ed_pred, ed_gt, ed_dir, ed_frame, ed_cap, ed_min,
                            ed_no_align, ed_out);
    if (et->parsed())
      return cmd_eval_traj(et_est, et_gt, et_align, et_lengths, et_step, et_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const DegenerateError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
