#pragma once

#include <functional>
#include <iostream>

#include "warpkit/scene.hpp"

namespace warpkit {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0;
  double tol = 1e-4;
  bool passed() const { return max_rel_err < tol; }
};

namespace gradcheck_detail {

inline double rel_err(double analytic, double fd) {
  double d = std::abs(analytic - fd);
  double m = std::max(std::abs(analytic), std::abs(fd));
  return m < 1e-7 ? d : d / m;
}

// Central finite difference of a scalar functional through a setter.
template <typename Eval>
inline double central_diff(Eval&& eval, double& slot, double h) {
  double saved = slot;
  slot = saved + h;
  double hi = eval();
  slot = saved - h;
  double lo = eval();
  slot = saved;
  return (hi - lo) / (2.0 * h);
}

inline Image random_image(Rng& rng, int h, int w, int c, double lo = 0.05,
                          double hi = 0.95) {
  Image img(h, w, c);
  for (double& v : img.data) v = rng.uniform(lo, hi);
  return img;
}

inline GridD random_grid(Rng& rng, int h, int w, double lo, double hi) {
  GridD g(h, w);
  for (size_t i = 0; i < g.size(); ++i) g[i] = rng.uniform(lo, hi);
  return g;
}

constexpr double kDepthStep = 1e-5;
constexpr double kPoseStep = 1e-6;

inline GradCheckEntry check_rotate_jacobian(uint64_t seed) {
  GradCheckEntry e{"so3/rotate_jacobian"};
  Rng rng(seed);
  for (int trial = 0; trial < 8; ++trial) {
    Vec3 w, v;
    double scale = trial < 2 ? 1e-7 : 0.8;  // exercise the small-angle branch
    for (int i = 0; i < 3; ++i) {
      w(i) = scale * rng.normal();
      v(i) = rng.normal();
    }
    Mat3 J = so3::rotate_jacobian(w, v);
    for (int i = 0; i < 3; ++i) {
      Vec3 wp = w, wm = w;
      wp(i) += kPoseStep;
      wm(i) -= kPoseStep;
      Vec3 fd = (so3::exp(wp) * v - so3::exp(wm) * v) / (2 * kPoseStep);
      for (int r = 0; r < 3; ++r)
        e.max_rel_err = std::max(e.max_rel_err, rel_err(J(r, i), fd(r)));
    }
  }
  return e;
}

inline GradCheckEntry check_project(uint64_t seed) {
  GradCheckEntry e{"geometry/project_grad"};
  Rng rng(seed + 1);
  const int n = 8;
  Intrinsics K(n, n, (n - 1) / 2.0, (n - 1) / 2.0, n, n);
  GridD depth_grid = random_grid(rng, n, n, 4.0, 7.0);
  Pose6 pose({0.03 * rng.normal(), 0.03 * rng.normal(), 0.03 * rng.normal()},
             {0.1 * rng.normal(), 0.1 * rng.normal(), 0.05 * rng.normal()});

  // Random cotangents on pixels that stay well clear of the validity
  // boundary under the finite-difference perturbations.
  DepthField depth = DepthField::from_depth(depth_grid);
  ProjectionResult base = project(depth, pose, K);
  GridD cu(n, n), cv(n, n), cz(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      if (!base.grid.valid(y, x)) continue;
      double u = base.grid.u(y, x), v = base.grid.v(y, x);
      if (u < 0.2 || u > n - 1.2 || v < 0.2 || v > n - 1.2) continue;
      cu(y, x) = rng.normal();
      cv(y, x) = rng.normal();
      cz(y, x) = rng.normal();
    }

  auto eval = [&](const GridD& dg, const Pose6& p) {
    ProjectionResult pr = project(DepthField::from_depth(dg), p, K);
    double acc = 0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        acc += cu(y, x) * pr.grid.u(y, x) + cv(y, x) * pr.grid.v(y, x) +
               cz(y, x) * pr.depth(y, x);
    return acc;
  };

  ProjectionJacobian J = project_grad(depth, pose, K);
  ProjectionGrad g = project_vjp(J, cu, cv, cz);

  for (int i = 0; i < n * n; i += 3) {
    double fd = central_diff([&] { return eval(depth_grid, pose); },
                             depth_grid[i], kDepthStep);
    e.max_rel_err = std::max(e.max_rel_err, rel_err(g.d_depth[i], fd));
  }
  for (int j = 0; j < 6; ++j) {
    double saved = pose.param(j);
    pose.set_param(j, saved + kPoseStep);
    double hi = eval(depth_grid, pose);
    pose.set_param(j, saved - kPoseStep);
    double lo = eval(depth_grid, pose);
    pose.set_param(j, saved);
    double fd = (hi - lo) / (2 * kPoseStep);
    e.max_rel_err = std::max(e.max_rel_err, rel_err(g.d_pose(j), fd));
  }
  return e;
}

inline GradCheckEntry check_bilinear(uint64_t seed) {
  GradCheckEntry e{"sampling/bilinear_grad"};
  Rng rng(seed + 2);
  const int n = 8;
  Image src = random_image(rng, n, n, 1);
  PixelGrid grid(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      // fractional coordinates away from the integer lattice
      grid.u(y, x) = rng.uniform(0.15, n - 1.15) + 0.05;
      grid.v(y, x) = rng.uniform(0.15, n - 1.15) + 0.05;
    }
  Image cot = random_image(rng, n, n, 1, -1.0, 1.0);

  auto eval = [&] {
    WarpResult wr = bilinear_sample(src, grid);
    double acc = 0;
    for (size_t i = 0; i < wr.image.data.size(); ++i)
      acc += cot.data[i] * wr.image.data[i];
    return acc;
  };

  BilinearJacobian J = bilinear_sample_grad(src, grid);
  BilinearGrad g = bilinear_vjp(J, src, cot);

  for (int i = 0; i < n * n; i += 5) {
    int y = i / n, x = i % n;
    double fd_u = central_diff(eval, grid.u(y, x), kDepthStep);
    double fd_v = central_diff(eval, grid.v(y, x), kDepthStep);
    e.max_rel_err = std::max(e.max_rel_err, rel_err(g.d_u(y, x), fd_u));
    e.max_rel_err = std::max(e.max_rel_err, rel_err(g.d_v(y, x), fd_v));
    double fd_s = central_diff(eval, src.data[i], kDepthStep);
    e.max_rel_err = std::max(e.max_rel_err, rel_err(g.d_src.data[i], fd_s));
  }
  return e;
}

inline GradCheckEntry check_ssim(uint64_t seed) {
  GradCheckEntry e{"losses/ssim_backward"};
  Rng rng(seed + 3);
  const int n = 8;
  SsimParams sp;
  Image a = random_image(rng, n, n, 1);
  Image b = random_image(rng, n, n, 1);
  GridD cot = random_grid(rng, n, n, -1.0, 1.0);

  auto eval = [&] {
    GridD m = ssim_map(a, b, sp);
    double acc = 0;
    for (size_t i = 0; i < m.size(); ++i) acc += cot[i] * m[i];
    return acc;
  };

  Image ga(n, n, 1), gb(n, n, 1);
  ssim_backward(a, b, sp, cot, &ga, &gb);
  for (int i = 0; i < n * n; i += 4) {
    double fd_a = central_diff(eval, a.data[i], kDepthStep);
    double fd_b = central_diff(eval, b.data[i], kDepthStep);
    e.max_rel_err = std::max(e.max_rel_err, rel_err(ga.data[i], fd_a));
    e.max_rel_err = std::max(e.max_rel_err, rel_err(gb.data[i], fd_b));
  }
  return e;
}

inline GradCheckEntry check_reconstruction(uint64_t seed, bool masked) {
  GradCheckEntry e{masked ? "losses/masked_reconstruction"
                          : "losses/reconstruction"};
  Rng rng(seed + (masked ? 5 : 4));
  const int n = 16;
  LossWeights w;
  Image target = random_image(rng, n, n, 1);
  WarpResult synth;
  synth.image = random_image(rng, n, n, 1);
  synth.validity = GridB(n, n, 1);
  for (int i = 0; i < 10; ++i) {  // a few invalid pixels
    int y = rng.uniform_int(0, n - 1), x = rng.uniform_int(0, n - 1);
    synth.validity(y, x) = 0;
    for (int ch = 0; ch < 1; ++ch) synth.image.at(y, x, ch) = 0;
  }
  MaskField mask(random_grid(rng, n, n, 0.2, 0.95));

  auto eval = [&] {
    return masked ? masked_reconstruction_loss(target, synth, mask, w).value
                  : reconstruction_loss(target, synth, w).value;
  };
  ReconstructionLoss rl = masked
                              ? masked_reconstruction_loss(target, synth, mask, w)
                              : reconstruction_loss(target, synth, w);

  for (int i = 0; i < n * n; i += 7) {
    double fd = central_diff(eval, synth.image.data[i], kDepthStep);
    e.max_rel_err = std::max(e.max_rel_err, rel_err(rl.d_synth.data[i], fd));
    if (masked) {
      double fdm = central_diff(eval, mask.m[i], kDepthStep);
      e.max_rel_err = std::max(e.max_rel_err, rel_err(rl.d_mask[i], fdm));
    }
  }
  return e;
}

inline GradCheckEntry check_smoothness(uint64_t seed) {
  GradCheckEntry e{"losses/smoothness"};
  Rng rng(seed + 6);
  const int n = 16;
  GridD depth = random_grid(rng, n, n, 4.0, 7.0);
  Image img = random_image(rng, n, n, 1);

  auto eval = [&] {
    return smoothness_loss(DepthField::from_depth(depth), img).value;
  };
  SmoothnessLoss sl = smoothness_loss(DepthField::from_depth(depth), img);
  for (int i = 0; i < n * n; i += 7) {
    double fd = central_diff(eval, depth[i], kDepthStep);
    e.max_rel_err = std::max(e.max_rel_err, rel_err(sl.d_depth[i], fd));
  }
  return e;
}

inline GradCheckEntry check_mask_regularization(uint64_t seed) {
  GradCheckEntry e{"losses/mask_regularization"};
  Rng rng(seed + 7);
  const int n = 16;
  MaskField mask(random_grid(rng, n, n, 0.05, 0.95));
  auto eval = [&] { return mask_regularization(mask).value; };
  MaskRegularization mr = mask_regularization(mask);
  for (int i = 0; i < n * n; i += 9) {
    double fd = central_diff(eval, mask.m[i], kDepthStep);
    e.max_rel_err = std::max(e.max_rel_err, rel_err(mr.d_mask[i], fd));
  }
  return e;
}

inline GradCheckEntry check_scale_consistency(uint64_t seed) {
  GradCheckEntry e{"losses/scale_consistency"};
  Rng rng(seed + 8);
  const int n = 16;
  Intrinsics K(n, n, (n - 1) / 2.0, (n - 1) / 2.0, n, n);
  GridD dt = random_grid(rng, n, n, 4.5, 6.0);
  GridD ds = random_grid(rng, n, n, 4.5, 6.0);
  Pose6 pose({0.01 * rng.normal(), 0.01 * rng.normal(), 0.01 * rng.normal()},
             {0.05, 0.02, 0.03});
  LossWeights w;

  auto eval = [&](const GridD& a, const GridD& b, const Pose6& p) {
    return scale_consistency_loss(DepthField::from_depth(a),
                                  DepthField::from_depth(b), p, K, w)
        .value;
  };
  ScaleConsistencyLoss sc = scale_consistency_loss(
      DepthField::from_depth(dt), DepthField::from_depth(ds), pose, K, w);

  for (int i = 0; i < n * n; i += 11) {
    double fd_t =
        central_diff([&] { return eval(dt, ds, pose); }, dt[i], kDepthStep);
    double fd_s =
        central_diff([&] { return eval(dt, ds, pose); }, ds[i], kDepthStep);
    e.max_rel_err = std::max(e.max_rel_err, rel_err(sc.d_depth_t[i], fd_t));
    e.max_rel_err = std::max(e.max_rel_err, rel_err(sc.d_depth_s[i], fd_s));
  }
  for (int j = 0; j < 6; ++j) {
    double saved = pose.param(j);
    pose.set_param(j, saved + kPoseStep);
    double hi = eval(dt, ds, pose);
    pose.set_param(j, saved - kPoseStep);
    double lo = eval(dt, ds, pose);
    pose.set_param(j, saved);
    e.max_rel_err = std::max(
        e.max_rel_err, rel_err(sc.d_pose(j), (hi - lo) / (2 * kPoseStep)));
  }
  return e;
}

inline GradCheckEntry check_gan_losses(uint64_t seed) {
  GradCheckEntry e{"losses/gan"};
  Rng rng(seed + 9);
  std::vector<double> dr(6), df(6);
  for (auto& v : dr) v = rng.uniform(0.1, 0.9);
  for (auto& v : df) v = rng.uniform(0.1, 0.9);
  for (bool saturating : {false, true}) {
    GanLosses gl = gan_losses(dr, df, saturating);
    for (size_t i = 0; i < dr.size(); ++i) {
      double fd = central_diff(
          [&] { return gan_losses(dr, df, saturating).disc_loss; }, dr[i],
          kDepthStep);
      e.max_rel_err = std::max(e.max_rel_err, rel_err(gl.d_disc_real[i], fd));
    }
    for (size_t i = 0; i < df.size(); ++i) {
      double fd_d = central_diff(
          [&] { return gan_losses(dr, df, saturating).disc_loss; }, df[i],
          kDepthStep);
      double fd_g = central_diff(
          [&] { return gan_losses(dr, df, saturating).gen_loss; }, df[i],
          kDepthStep);
      e.max_rel_err = std::max(e.max_rel_err, rel_err(gl.d_disc_fake[i], fd_d));
      e.max_rel_err = std::max(e.max_rel_err, rel_err(gl.d_gen_fake[i], fd_g));
    }
  }
  return e;
}

inline GradCheckEntry check_discriminator(uint64_t seed) {
  GradCheckEntry e{"nn/discriminator_backward"};
  Discriminator disc(4, 1, seed + 10, {12, 6});
  Rng rng(seed + 11);
  std::vector<double> input(disc.input_size());
  for (auto& v : input) v = rng.uniform(0.0, 1.0);

  auto eval = [&] { return disc.forward(input).prob; };
  Discriminator::Cache cache = disc.forward(input);
  disc.zero_grad();
  std::vector<double> d_input = disc.backward(cache, 1.0, true);

  for (size_t i = 0; i < input.size(); i += 3) {
    double fd = central_diff(eval, input[i], kDepthStep);
    e.max_rel_err = std::max(e.max_rel_err, rel_err(d_input[i], fd));
  }
  for (ParamTensor* t : disc.parameters()) {
    size_t stride = std::max<size_t>(1, t->size() / 24);
    for (size_t i = 0; i < t->size(); i += stride) {
      double fd = central_diff(eval, t->values[i], kDepthStep);
      e.max_rel_err = std::max(e.max_rel_err, rel_err(t->grads[i], fd));
    }
  }
  return e;
}

// Full-chain check of the total objective on a small rendered scene.
inline GradCheckEntry check_generator_total(uint64_t seed,
                                            const std::string& variant) {
  GradCheckEntry e{"train/total_" + variant};
  ScenePresetOptions so;
  so.width = 16;
  so.height = 16;
  so.frames = 3;
  so.seed = seed + 12;
  so.camera_step = Vec3(0.12, 0.0, 0.02);
  RenderedScene scene = render_scene(make_two_plane_scene(so));
  std::vector<Snippet> snippets = make_snippets(3, 2);

  GeneratorParams gen(3, 16, 16, snippets);
  Rng rng(seed + 13);
  for (int f = 0; f < 3; ++f)
    for (double& v : gen.inv_depth(f).values) v += 0.05 * rng.normal();
  for (size_t k = 0; k < 2; ++k) {
    Pose6 gt = relative_pose(scene.poses[1], scene.poses[k == 0 ? 0 : 2]);
    ParamTensor& p = gen.pose_tensor(0, static_cast<int>(k));
    for (int j = 0; j < 3; ++j) {
      p.values[j] = gt.rotation(j) + 0.01 * rng.normal();
      p.values[3 + j] = gt.translation(j) + 0.01 * rng.normal();
    }
    for (double& v : gen.mask_tensor(0, static_cast<int>(k)).values)
      v += 0.3 * rng.normal();
  }

  TrainOptions opt;
  opt.variant = AblationVariant::parse(variant);
  Discriminator disc(8, 1, seed + 14);

  auto eval = [&] {
    GeneratorParams& g = gen;
    g.zero_grad();
    return generator_loss_and_grad(scene.data, g, disc, opt).total;
  };

  std::vector<std::pair<ParamTensor*, double>> plan;
  for (int f = 0; f < 3; ++f) plan.push_back({&gen.inv_depth(f), kDepthStep});
  for (int k = 0; k < 2; ++k) {
    plan.push_back({&gen.pose_tensor(0, k), kPoseStep});
    plan.push_back({&gen.mask_tensor(0, k), kDepthStep});
  }

  // Analytic gradients before FD trashes them.
  std::map<ParamTensor*, std::vector<double>> analytic;
  gen.zero_grad();
  generator_loss_and_grad(scene.data, gen, disc, opt);
  for (auto& [t, step] : plan) analytic[t] = t->grads;

  for (auto& [t, step] : plan) {
    size_t stride = t->size() <= 6 ? 1 : 17;
    for (size_t i = 0; i < t->size(); i += stride) {
      double fd = central_diff(eval, t->values[i], step);
      e.max_rel_err = std::max(e.max_rel_err, rel_err(analytic[t][i], fd));
    }
  }
  return e;
}

}  // namespace gradcheck_detail

inline std::vector<GradCheckEntry> run_gradcheck(uint64_t seed,
                                                 std::ostream* log = nullptr) {
  using namespace gradcheck_detail;
  std::vector<GradCheckEntry> out;
  auto add = [&](GradCheckEntry e) {
    if (log)
      *log << (e.passed() ? "[ok]   " : "[FAIL] ") << e.name
           << "  max_rel_err=" << e.max_rel_err << "\n";
    out.push_back(std::move(e));
  };
  add(check_rotate_jacobian(seed));
  add(check_project(seed));
  add(check_bilinear(seed));
  add(check_ssim(seed));
  add(check_reconstruction(seed, false));
  add(check_reconstruction(seed, true));
  add(check_smoothness(seed));
  add(check_mask_regularization(seed));
  add(check_scale_consistency(seed));
  add(check_gan_losses(seed));
  add(check_discriminator(seed));
  add(check_generator_total(seed, "basic"));
  add(check_generator_total(seed, "basic+scale+gan"));
  add(check_generator_total(seed, "full-fmp"));
  add(check_generator_total(seed, "full-bmp"));
  return out;
}

inline bool gradcheck_passed(const std::vector<GradCheckEntry>& entries) {
  for (const auto& e : entries)
    if (!e.passed()) return false;
  return true;
}

}  // namespace warpkit
