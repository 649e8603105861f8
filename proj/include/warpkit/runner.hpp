#pragma once

#include <filesystem>
#include <map>

#include "warpkit/config.hpp"

namespace warpkit {

namespace fs = std::filesystem;

inline SceneSpec scene_from_config(const RunConfig& cfg) {
  if (cfg.scene_spec) return *cfg.scene_spec;
  ScenePresetOptions o = cfg.scene;
  return make_two_plane_scene(o);
}

// Estimated trajectory from the optimized snippet poses: every
// consecutive frame pair is covered by exactly one pose tensor, either
// directly (target k+1, source k) or inverted (target k, source k+1).
inline Trajectory estimated_trajectory(const GeneratorParams& gen,
                                       int n_frames) {
  std::vector<Pose6> rel(static_cast<size_t>(n_frames) - 1);
  std::vector<bool> have(rel.size(), false);
  const auto& snippets = gen.snippets();
  for (size_t sn = 0; sn < snippets.size(); ++sn) {
    int t = snippets[sn].target;
    for (size_t k = 0; k < snippets[sn].sources.size(); ++k) {
      int s = snippets[sn].sources[k];
      Pose6 p = gen.decode_pose(static_cast<int>(sn), static_cast<int>(k));
      if (s + 1 == t && !have[s]) {  // relative motion s -> t
        rel[s] = p;  // T_{t->s} maps target coords into source-frame s:
                     // it equals G_s^-1 G_t, the motion increment s->t
        have[s] = true;
      } else if (t + 1 == s && !have[t]) {
        rel[t] = invert(p);
        have[t] = true;
      }
    }
  }
  for (size_t i = 0; i < have.size(); ++i)
    if (!have[i])
      throw DegenerateError("estimated_trajectory: no pose covers frames " +
                            std::to_string(i) + "-" + std::to_string(i + 1));
  return chain_relative_poses(rel);
}

inline Trajectory gt_trajectory(const RenderedScene& scene) {
  Trajectory t;
  t.poses = scene.poses;
  return t;
}

struct TrainResult {
  RenderedScene scene;
  std::vector<Snippet> snippets;
  GeneratorParams params;
  Discriminator disc;
  TrainStepReport first;
  TrainStepReport last;
};

// Runs the optimization described by the config. When out_dir writing is
// enabled, emits the per-step loss CSV, checkpoint, estimated/ground-truth
// depths and trajectories, and the qualitative panels.
inline TrainResult run_train(const RunConfig& cfg, bool write_outputs = true) {
  cfg.validate();
  SceneSpec spec = scene_from_config(cfg);
  RenderedScene scene = render_scene(spec, cfg.threads);
  const int n_frames = static_cast<int>(scene.data.frames.size());
  std::vector<Snippet> snippets =
      make_snippets(n_frames, cfg.sources_per_snippet);

  TrainOptions opt;
  opt.weights = cfg.weights;
  opt.variant = AblationVariant::parse(cfg.variant);
  opt.ssim = cfg.ssim;
  opt.disc_patch = cfg.disc_patch;
  opt.saturating_generator = cfg.saturating_generator;
  opt.threads = cfg.threads;

  GeneratorConfig gen_cfg = cfg.gen;
  if (gen_cfg.init_seed == 1) gen_cfg.init_seed = cfg.seed;
  GeneratorParams gen(n_frames, spec.height, spec.width, snippets, gen_cfg);
  Adam gen_opt(cfg.gen_adam);
  const double pose_scale =
      cfg.pose_adam.lr >= 0 ? cfg.pose_adam.lr / cfg.gen_adam.lr : 1.0;
  for (ParamTensor* t : gen.all_parameters())
    gen_opt.register_tensor(t, t->name.starts_with("pose/") ? pose_scale : 1.0);
  Discriminator disc(cfg.disc_patch, spec.channels, cfg.seed);
  Adam disc_opt(cfg.disc_adam);
  for (ParamTensor* t : disc.parameters()) disc_opt.register_tensor(t);

  std::ofstream csv;
  if (write_outputs) {
    fs::create_directories(cfg.out_dir);
    csv.open(fs::path(cfg.out_dir) / "losses.csv");
    if (!csv) throw IoError("run_train: cannot open losses.csv");
    csv << "step,total,rec,smooth";
    if (opt.variant.use_scale) csv << ",scale";
    if (opt.variant.use_mask) csv << ",mask_reg";
    if (opt.variant.use_gan) csv << ",gan_gen,disc,d_real,d_fake";
    csv << "\n";
  }

  TrainResult res;
  for (int step = 0; step < cfg.steps; ++step) {
    TrainStepReport rep =
        train_step(scene.data, gen, gen_opt, disc, disc_opt, opt);
    if (step == 0) res.first = rep;
    res.last = rep;
    if (write_outputs && (step % cfg.log_every == 0 || step + 1 == cfg.steps)) {
      csv << step << ',' << format_double(rep.total) << ','
          << format_double(rep.terms.rec) << ','
          << format_double(rep.terms.smooth);
      if (opt.variant.use_scale) csv << ',' << format_double(rep.terms.scale);
      if (opt.variant.use_mask) csv << ',' << format_double(rep.terms.mask_reg);
      if (opt.variant.use_gan)
        csv << ',' << format_double(rep.terms.gan_gen) << ','
            << format_double(rep.disc_loss) << ','
            << format_double(rep.d_real_mean) << ','
            << format_double(rep.d_fake_mean);
      csv << "\n";
    }
  }

  if (write_outputs) {
    fs::path dir(cfg.out_dir);
    {
      std::ofstream cf(dir / "config.json");
      cf << run_config_to_json(cfg).dump(2) << "\n";
    }
    std::vector<ParamTensor*> tensors = gen.all_parameters();
    for (ParamTensor* t : disc.parameters()) tensors.push_back(t);
    save_checkpoint((dir / "checkpoint.wkck").string(), tensors,
                    {{"generator", &gen_opt}, {"discriminator", &disc_opt}});

    for (int f = 0; f < n_frames; ++f) {
      GridD est = gen.decode_depth(f).depth.depth_grid();
      save_float_grid((dir / ("depth_est_" + std::to_string(f) + ".bin")).string(),
                      est);
      save_float_grid((dir / ("depth_gt_" + std::to_string(f) + ".bin")).string(),
                      scene.depth[f]);
    }
    save_kitti_poses((dir / "poses_gt.txt").string(), gt_trajectory(scene));
    if (cfg.steps > 0)
      save_kitti_poses((dir / "poses_est.txt").string(),
                       estimated_trajectory(gen, n_frames));

    // Fig.-style qualitative panel for the first snippet's first source:
    // mask, synthesized target, Boolean-masked target.
    const Snippet& s0 = snippets.front();
    auto dec_t = gen.decode_depth(s0.target);
    auto dec_m = gen.decode_mask(0, 0, cfg.weights.theta);
    Pose6 pose = gen.decode_pose(0, 0);
    WarpResult synth = warp_image(scene.data.frames[s0.sources[0]], dec_t.depth,
                                  pose, scene.data.K, cfg.threads);
    save_png((dir / "panel_mask.png").string(), image_from_grid(dec_m.mask.m));
    save_png((dir / "panel_synth.png").string(), synth.image);
    save_png((dir / "panel_masked_target.png").string(),
             apply_mask(scene.data.frames[s0.target], dec_m.mask,
                        MaskMode::kBoolean));
  }

  res.scene = std::move(scene);
  res.snippets = std::move(snippets);
  res.params = std::move(gen);
  res.disc = std::move(disc);
  return res;
}

// Writes a rendered scene to a directory: PNG and float images, exact
// depths, ground-truth poses, intrinsics.
inline void write_scene_dir(const std::string& out_dir,
                            const RenderedScene& scene) {
  fs::path dir(out_dir);
  fs::create_directories(dir);
  const Intrinsics& K = scene.data.K;
  {
    std::ofstream f(dir / "intrinsics.json");
    json j = {{"fx", K.fx},       {"fy", K.fy},         {"cx", K.cx},
              {"cy", K.cy},       {"width", K.width},   {"height", K.height}};
    f << j.dump(2) << "\n";
  }
  for (size_t i = 0; i < scene.data.frames.size(); ++i) {
    std::string tag = std::to_string(i);
    save_png((dir / ("frame_" + tag + ".png")).string(), scene.data.frames[i]);
    save_float_planar((dir / ("frame_" + tag + ".bin")).string(),
                      scene.data.frames[i]);
    save_float_grid((dir / ("depth_" + tag + ".bin")).string(), scene.depth[i]);
  }
  Trajectory t;
  t.poses = scene.poses;
  save_kitti_poses((dir / "poses_gt.txt").string(), t);
}

}  // namespace warpkit
