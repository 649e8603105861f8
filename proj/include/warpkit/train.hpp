#pragma once

#include <map>

#include "warpkit/losses.hpp"
#include "warpkit/nn.hpp"

namespace warpkit {

// Observed inputs: a short image sequence with shared intrinsics.
struct SceneData {
  std::vector<Image> frames;
  Intrinsics K;
};

// One training sample: a target frame and its source frames.
struct Snippet {
  int target = 0;
  std::vector<int> sources;
};

struct GeneratorConfig {
  double depth_min = DepthField::kDefaultMin;
  double depth_max = DepthField::kDefaultMax;
  double mask_logit_init = 2.0;
  std::vector<double> depth_init = {5.0};  // per frame, broadcast if single
  // seeded random init of the pose translation components; rotations
  // start at identity (random rotations flip into yaw-dominated basins)
  double pose_init_std = 0.0;
  // deterministic initial pose guess applied to every snippet-source pair
  std::array<double, 6> pose_init{0, 0, 0, 0, 0, 0};
  uint64_t init_seed = 1;
};

// Desk-scale stand-in for the depth/pose/mask networks: one inverse-depth
// field per frame, one 6-DOF pose and one mask-logit field per
// snippet-source pair, all optimized directly.
class GeneratorParams {
 public:
  GeneratorParams() = default;
  GeneratorParams(int n_frames, int h, int w, std::vector<Snippet> snippets,
                  GeneratorConfig cfg = {})
      : h_(h), w_(w), snippets_(std::move(snippets)), cfg_(cfg) {
    for (int f = 0; f < n_frames; ++f) {
      double d0 = cfg.depth_init[std::min<size_t>(f, cfg.depth_init.size() - 1)];
      inv_depth_.emplace_back("inv_depth/" + std::to_string(f),
                              std::vector<int>{h, w},
                              softplus_inv(1.0 / d0));
    }
    Rng init_rng(Rng::splitmix(cfg.init_seed ^ 0x706f7365ULL));
    for (size_t s = 0; s < snippets_.size(); ++s) {
      pose_.emplace_back();
      mask_logits_.emplace_back();
      for (size_t k = 0; k < snippets_[s].sources.size(); ++k) {
        std::string tag = std::to_string(s) + "/" + std::to_string(k);
        pose_[s].emplace_back("pose/" + tag, std::vector<int>{6});
        for (int j = 0; j < 6; ++j) pose_[s].back().values[j] = cfg.pose_init[j];
        if (cfg.pose_init_std > 0)
          for (int j = 3; j < 6; ++j)
            pose_[s].back().values[j] += cfg.pose_init_std * init_rng.normal();
        mask_logits_[s].emplace_back("mask_logits/" + tag,
                                     std::vector<int>{h, w},
                                     cfg.mask_logit_init);
      }
    }
  }

  int height() const { return h_; }
  int width() const { return w_; }
  const std::vector<Snippet>& snippets() const { return snippets_; }
  const GeneratorConfig& config() const { return cfg_; }

  ParamTensor& inv_depth(int frame) { return inv_depth_[frame]; }
  ParamTensor& pose_tensor(int snip, int k) { return pose_[snip][k]; }
  ParamTensor& mask_tensor(int snip, int k) { return mask_logits_[snip][k]; }
  int n_frames() const { return static_cast<int>(inv_depth_.size()); }

  struct DecodedDepth {
    DepthField depth;
    GridD d_decode;  // d(metric depth)/d(raw parameter), zero where clamped
  };

  DecodedDepth decode_depth(int frame) const {
    const ParamTensor& t = inv_depth_[frame];
    GridD depth(h_, w_), dd(h_, w_);
    for (size_t i = 0; i < t.size(); ++i) {
      double th = t.values[i];
      double inv = softplus(th);
      double raw = 1.0 / inv;
      if (raw <= cfg_.depth_min) {
        depth[i] = cfg_.depth_min;
      } else if (raw >= cfg_.depth_max) {
        depth[i] = cfg_.depth_max;
      } else {
        depth[i] = raw;
        dd[i] = -sigmoid(th) / (inv * inv);
      }
    }
    DecodedDepth out;
    out.depth = DepthField::from_depth(depth, cfg_.depth_min, cfg_.depth_max);
    out.d_decode = std::move(dd);
    return out;
  }

  struct DecodedMask {
    MaskField mask;
    GridD d_decode;  // d(mask)/d(logit)
  };

  DecodedMask decode_mask(int snip, int k, double theta) const {
    const ParamTensor& t = mask_logits_[snip][k];
    GridD m(h_, w_), dm(h_, w_);
    for (size_t i = 0; i < t.size(); ++i) {
      double v = sigmoid(t.values[i]);
      m[i] = v;
      dm[i] = v * (1.0 - v);
    }
    DecodedMask out;
    out.mask = boolean_mask(MaskField(m), theta);
    out.d_decode = std::move(dm);
    return out;
  }

  Pose6 decode_pose(int snip, int k) const {
    const auto& v = pose_[snip][k].values;
    return Pose6({v[0], v[1], v[2]}, {v[3], v[4], v[5]});
  }

  std::vector<ParamTensor*> all_parameters() {
    std::vector<ParamTensor*> out;
    for (auto& t : inv_depth_) out.push_back(&t);
    for (auto& grp : pose_)
      for (auto& t : grp) out.push_back(&t);
    for (auto& grp : mask_logits_)
      for (auto& t : grp) out.push_back(&t);
    return out;
  }

  void zero_grad() {
    for (ParamTensor* t : all_parameters()) t->zero_grad();
  }

 private:
  int h_ = 0, w_ = 0;
  std::vector<Snippet> snippets_;
  GeneratorConfig cfg_;
  std::vector<ParamTensor> inv_depth_;
  std::vector<std::vector<ParamTensor>> pose_;
  std::vector<std::vector<ParamTensor>> mask_logits_;
};

// Snippets tile the frame sequence in windows of (sources+1) frames with
// the target in the middle; adjacent windows share their boundary frame.
inline std::vector<Snippet> make_snippets(int n_frames, int sources) {
  if (sources != 2 && sources != 4)
    throw ConfigError("make_snippets: sources must be 2 or 4");
  if (n_frames < sources + 1 || (n_frames - 1) % sources != 0)
    throw ConfigError("make_snippets: frames must be k*" +
                      std::to_string(sources) + "+1");
  std::vector<Snippet> out;
  for (int start = 0; start + sources < n_frames; start += sources) {
    Snippet s;
    s.target = start + sources / 2;
    for (int f = start; f <= start + sources; ++f)
      if (f != s.target) s.sources.push_back(f);
    out.push_back(s);
  }
  return out;
}

struct TrainOptions {
  LossWeights weights;
  AblationVariant variant;
  SsimParams ssim;
  int disc_patch = 8;
  bool saturating_generator = false;
  int threads = 1;
};

struct TrainStepReport {
  LossTerms terms;  // generator-side values, averaged as described below
  double total = 0;
  bool gan_active = false;
  double disc_loss = 0;
  double d_real_mean = 0;
  double d_fake_mean = 0;
};

namespace detail {

inline void check_finite(double v, const char* term) {
  if (!std::isfinite(v))
    throw NumericError(std::string(term) + " is not finite");
}

inline Image mask_image(const Image& img, const MaskField& mask,
                        GanMasking masking) {
  switch (masking) {
    case GanMasking::kNone:
      return img;
    case GanMasking::kFloat:
      return apply_mask(img, mask, MaskMode::kFloat);
    case GanMasking::kBoolean:
      return apply_mask(img, mask, MaskMode::kBoolean);
  }
  return img;
}

}  // namespace detail

// One discriminator update on the pooled (masked real, masked fake) patch
// sets of every snippet-source pair. Generator outputs are detached.
inline double discriminator_update(const SceneData& scene,
                                   const GeneratorParams& gen,
                                   Discriminator& disc, Adam& disc_opt,
                                   const TrainOptions& opt,
                                   double* d_real_mean = nullptr,
                                   double* d_fake_mean = nullptr) {
  std::vector<Discriminator::Cache> real_caches, fake_caches;
  for (size_t sn = 0; sn < gen.snippets().size(); ++sn) {
    const Snippet& snip = gen.snippets()[sn];
    auto dec_t = gen.decode_depth(snip.target);
    const Image& target = scene.frames[snip.target];
    for (size_t k = 0; k < snip.sources.size(); ++k) {
      Pose6 pose = gen.decode_pose(static_cast<int>(sn), static_cast<int>(k));
      WarpResult synth = warp_image(scene.frames[snip.sources[k]], dec_t.depth,
                                    pose, scene.K, opt.threads);
      auto dec_m = gen.decode_mask(static_cast<int>(sn), static_cast<int>(k),
                                   opt.weights.theta);
      Image real_m = detail::mask_image(target, dec_m.mask, opt.variant.gan_masking);
      Image fake_m =
          detail::mask_image(synth.image, dec_m.mask, opt.variant.gan_masking);
      for (auto& p : extract_patches(real_m, opt.disc_patch))
        real_caches.push_back(disc.forward(p));
      for (auto& p : extract_patches(fake_m, opt.disc_patch))
        fake_caches.push_back(disc.forward(p));
    }
  }

  std::vector<double> d_real, d_fake;
  for (auto& c : real_caches) d_real.push_back(c.prob);
  for (auto& c : fake_caches) d_fake.push_back(c.prob);
  GanLosses gl = gan_losses(d_real, d_fake, opt.saturating_generator);
  detail::check_finite(gl.disc_loss, "L_disc");

  disc.zero_grad();
  for (size_t i = 0; i < real_caches.size(); ++i)
    disc.backward(real_caches[i], gl.d_disc_real[i], true);
  for (size_t i = 0; i < fake_caches.size(); ++i)
    disc.backward(fake_caches[i], gl.d_disc_fake[i], true);
  disc_opt.step();

  if (d_real_mean) {
    *d_real_mean = 0;
    for (double d : d_real) *d_real_mean += d / d_real.size();
  }
  if (d_fake_mean) {
    *d_fake_mean = 0;
    for (double d : d_fake) *d_fake_mean += d / d_fake.size();
  }
  return gl.disc_loss;
}

// Full generator objective with analytic gradients accumulated into the
// parameter tensors. Reconstruction and scale terms are averaged per
// source and per snippet; GAN patches are pooled into one expectation.
// The discriminator is treated as frozen.
inline TrainStepReport generator_loss_and_grad(const SceneData& scene,
                                               GeneratorParams& gen,
                                               Discriminator& disc,
                                               const TrainOptions& opt) {
  const LossWeights& w = opt.weights;
  const AblationVariant& var = opt.variant;
  TrainStepReport rep;
  rep.gan_active = var.use_gan;

  struct SourceCtx {
    int sn, k, src_frame, target_frame;
    ProjectionJacobian pjac;
    BilinearJacobian bjac;
    WarpResult synth;
    GeneratorParams::DecodedMask mask;
    Image d_synth;          // accumulated cotangent on the synthesized image
    GridD d_mask;           // accumulated cotangent on the float mask
    size_t fake_patch_begin = 0, fake_patch_end = 0;
  };
  std::vector<SourceCtx> ctxs;
  std::map<int, GeneratorParams::DecodedDepth> depths;
  auto decoded = [&](int frame) -> GeneratorParams::DecodedDepth& {
    auto it = depths.find(frame);
    if (it == depths.end())
      it = depths.emplace(frame, gen.decode_depth(frame)).first;
    return it->second;
  };

  const double w_sn = 1.0 / gen.snippets().size();
  const bool needs_mask = var.use_mask || var.gan_masking != GanMasking::kNone;

  std::vector<Discriminator::Cache> fake_caches;
  std::vector<double> d_real_probe, d_fake_probe;

  for (size_t sn = 0; sn < gen.snippets().size(); ++sn) {
    const Snippet& snip = gen.snippets()[sn];
    auto& dec_t = decoded(snip.target);
    const Image& target = scene.frames[snip.target];
    const double w_src = 1.0 / snip.sources.size();

    SmoothnessLoss smooth = smoothness_loss(dec_t.depth, target);
    detail::check_finite(smooth.value, "L_smooth");
    rep.terms.smooth += w_sn * smooth.value;
    {
      ParamTensor& t = gen.inv_depth(snip.target);
      double mult = w.alpha * w.alpha2 * w_sn;
      for (size_t i = 0; i < t.size(); ++i)
        t.grads[i] += mult * smooth.d_depth[i] * dec_t.d_decode[i];
    }

    for (size_t k = 0; k < snip.sources.size(); ++k) {
      SourceCtx ctx;
      ctx.sn = static_cast<int>(sn);
      ctx.k = static_cast<int>(k);
      ctx.src_frame = snip.sources[k];
      ctx.target_frame = snip.target;

      Pose6 pose = gen.decode_pose(ctx.sn, ctx.k);
      const Image& src = scene.frames[ctx.src_frame];
      ProjectionResult proj = project(dec_t.depth, pose, scene.K, opt.threads);
      ctx.pjac = project_grad(dec_t.depth, pose, scene.K, opt.threads);
      ctx.bjac = bilinear_sample_grad(src, proj.grid);
      ctx.synth = bilinear_sample(src, proj.grid, opt.threads);
      ctx.d_synth = Image(target.h, target.w, target.c);
      if (needs_mask) {
        ctx.mask = gen.decode_mask(ctx.sn, ctx.k, w.theta);
        ctx.d_mask = GridD(target.h, target.w);
      }

      ReconstructionLoss rec =
          var.use_mask
              ? masked_reconstruction_loss(target, ctx.synth, ctx.mask.mask, w,
                                           opt.ssim)
              : reconstruction_loss(target, ctx.synth, w, opt.ssim);
      detail::check_finite(rec.value, "L_rec");
      rep.terms.rec += w_sn * w_src * rec.value;
      {
        double mult = w.alpha * w.alpha1 * w_sn * w_src;
        for (size_t i = 0; i < ctx.d_synth.data.size(); ++i)
          ctx.d_synth.data[i] += mult * rec.d_synth.data[i];
        if (var.use_mask)
          for (size_t i = 0; i < ctx.d_mask.size(); ++i)
            ctx.d_mask[i] += mult * rec.d_mask[i];
      }

      if (var.use_mask) {
        MaskRegularization mreg = mask_regularization(ctx.mask.mask);
        detail::check_finite(mreg.value, "L_mask");
        rep.terms.mask_reg += w_sn * w_src * mreg.value;
        double mult = w.beta * w_sn * w_src;
        for (size_t i = 0; i < ctx.d_mask.size(); ++i)
          ctx.d_mask[i] += mult * mreg.d_mask[i];
      }

      if (var.use_scale) {
        auto& dec_s = decoded(ctx.src_frame);
        ScaleConsistencyLoss scl = scale_consistency_loss(
            dec_t.depth, dec_s.depth, pose, scene.K, w, opt.ssim);
        detail::check_finite(scl.value, "L_scale");
        rep.terms.scale += w_sn * w_src * scl.value;
        double mult = w.phi * w_sn * w_src;
        ParamTensor& tt = gen.inv_depth(ctx.target_frame);
        ParamTensor& ts = gen.inv_depth(ctx.src_frame);
        for (size_t i = 0; i < tt.size(); ++i) {
          tt.grads[i] += mult * scl.d_depth_t[i] * dec_t.d_decode[i];
          ts.grads[i] += mult * scl.d_depth_s[i] * dec_s.d_decode[i];
        }
        ParamTensor& tp = gen.pose_tensor(ctx.sn, ctx.k);
        for (int j = 0; j < 6; ++j) tp.grads[j] += mult * scl.d_pose(j);
      }

      if (var.use_gan) {
        Image fake_m =
            detail::mask_image(ctx.synth.image, ctx.mask.mask, var.gan_masking);
        Image real_m = detail::mask_image(target, ctx.mask.mask, var.gan_masking);
        ctx.fake_patch_begin = fake_caches.size();
        for (auto& p : extract_patches(fake_m, opt.disc_patch)) {
          fake_caches.push_back(disc.forward(p));
          d_fake_probe.push_back(fake_caches.back().prob);
        }
        ctx.fake_patch_end = fake_caches.size();
        for (auto& p : extract_patches(real_m, opt.disc_patch))
          d_real_probe.push_back(disc.forward(p).prob);
      }

      ctxs.push_back(std::move(ctx));
    }
  }

  // Pooled adversarial expectation, then per-patch pullback into each
  // source's synthesized image (and mask, for float masking).
  if (var.use_gan) {
    GanLosses gl =
        gan_losses(d_real_probe, d_fake_probe, opt.saturating_generator);
    detail::check_finite(gl.gen_loss, "L_GAN");
    rep.terms.gan_gen = gl.gen_loss;
    for (double d : d_real_probe)
      rep.d_real_mean += d / d_real_probe.size();
    for (double d : d_fake_probe)
      rep.d_fake_mean += d / d_fake_probe.size();

    for (auto& ctx : ctxs) {
      std::vector<std::vector<double>> patch_grads;
      for (size_t pi = ctx.fake_patch_begin; pi < ctx.fake_patch_end; ++pi)
        patch_grads.push_back(
            disc.backward(fake_caches[pi], w.gamma * gl.d_gen_fake[pi], false));
      Image d_fake_img(ctx.d_synth.h, ctx.d_synth.w, ctx.d_synth.c);
      scatter_patch_grads(d_fake_img, patch_grads, opt.disc_patch);

      switch (var.gan_masking) {
        case GanMasking::kNone:
          for (size_t i = 0; i < ctx.d_synth.data.size(); ++i)
            ctx.d_synth.data[i] += d_fake_img.data[i];
          break;
        case GanMasking::kBoolean:
          for (int ch = 0; ch < d_fake_img.c; ++ch)
            for (int y = 0; y < d_fake_img.h; ++y)
              for (int x = 0; x < d_fake_img.w; ++x)
                ctx.d_synth.at(y, x, ch) +=
                    ctx.mask.mask.boolean(y, x) * d_fake_img.at(y, x, ch);
          break;
        case GanMasking::kFloat:
          for (int ch = 0; ch < d_fake_img.c; ++ch)
            for (int y = 0; y < d_fake_img.h; ++y)
              for (int x = 0; x < d_fake_img.w; ++x) {
                double g = d_fake_img.at(y, x, ch);
                ctx.d_synth.at(y, x, ch) += ctx.mask.mask.m(y, x) * g;
                ctx.d_mask(y, x) += ctx.synth.image.at(y, x, ch) * g;
              }
          break;
      }
    }
  }

  // Final pullback: synthesized image -> sampling grid -> depth and pose.
  for (auto& ctx : ctxs) {
    const Image& src = scene.frames[ctx.src_frame];
    BilinearGrad bg = bilinear_vjp(ctx.bjac, src, ctx.d_synth);
    GridD zero_dz(ctx.d_synth.h, ctx.d_synth.w);
    ProjectionGrad pg = project_vjp(ctx.pjac, bg.d_u, bg.d_v, zero_dz);

    auto& dec_t = depths.at(ctx.target_frame);
    ParamTensor& tt = gen.inv_depth(ctx.target_frame);
    for (size_t i = 0; i < tt.size(); ++i)
      tt.grads[i] += pg.d_depth[i] * dec_t.d_decode[i];
    ParamTensor& tp = gen.pose_tensor(ctx.sn, ctx.k);
    for (int j = 0; j < 6; ++j) tp.grads[j] += pg.d_pose(j);

    if (needs_mask && (var.use_mask || var.gan_masking == GanMasking::kFloat)) {
      ParamTensor& tm = gen.mask_tensor(ctx.sn, ctx.k);
      for (size_t i = 0; i < tm.size(); ++i)
        tm.grads[i] += ctx.d_mask[i] * ctx.mask.d_decode[i];
    }
  }

  rep.total = total_generator_loss(rep.terms, w, var);
  detail::check_finite(rep.total, "L_total");
  return rep;
}

// One adversarial alternation: a discriminator update on the current
// generator outputs, then one generator update on the total objective.
inline TrainStepReport train_step(const SceneData& scene, GeneratorParams& gen,
                                  Adam& gen_opt, Discriminator& disc,
                                  Adam& disc_opt, const TrainOptions& opt) {
  double disc_loss = 0, d_real = 0, d_fake = 0;
  if (opt.variant.use_gan)
    disc_loss =
        discriminator_update(scene, gen, disc, disc_opt, opt, &d_real, &d_fake);

  gen.zero_grad();
  TrainStepReport rep = generator_loss_and_grad(scene, gen, disc, opt);
  gen_opt.step();

  rep.disc_loss = disc_loss;
  if (opt.variant.use_gan) {
    rep.d_real_mean = d_real;
    rep.d_fake_mean = d_fake;
  }
  return rep;
}

}  // namespace warpkit
