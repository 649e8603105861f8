#pragma once

#include <array>
#include <optional>
#include <span>
#include <sstream>

#include "warpkit/core.hpp"
#include "warpkit/geometry.hpp"
#include "warpkit/sampling.hpp"

namespace warpkit {

// Balance factors for the composite generator objective and the Boolean
// mask threshold. Defaults follow the training setup this toolkit models.
struct LossWeights {
  double alpha = 1.0;     // weight of the basic loss in the total
  double alpha1 = 1.0;    // reconstruction term inside the basic loss
  double alpha2 = 0.5;    // smoothness term inside the basic loss
  double alpha3 = 0.85;   // SSIM share of the reconstruction loss
  double alpha4 = 0.2;    // SSIM share of the scale-consistency loss
  double phi = 0.5;       // scale-consistency loss
  double beta = 0.3;      // mask regularizer
  double gamma = 0.0001;  // adversarial loss
  double theta = 0.9;     // Boolean mask threshold

  void validate() const {
    if (alpha3 < 0 || alpha3 > 1 || alpha4 < 0 || alpha4 > 1)
      throw ConfigError("LossWeights: alpha3/alpha4 must be in [0,1]");
    if (theta <= 0 || theta >= 1)
      throw ConfigError("LossWeights: theta must be in (0,1)");
    for (double v : {alpha, alpha1, alpha2, phi, beta, gamma})
      if (v < 0) throw ConfigError("LossWeights: weights must be >= 0");
  }
};

// Learned per-pixel weight in [0,1] plus its thresholded Boolean companion.
struct MaskField {
  GridD m;
  GridB boolean;

  MaskField() = default;
  explicit MaskField(const GridD& values)
      : m(values), boolean(values.height(), values.width(), 0) {}
  MaskField(int h, int w, double fill = 1.0)
      : m(h, w, fill), boolean(h, w, 0) {}
};

// Hard threshold of |M| against theta. The Boolean path carries no
// gradient; it is treated as a constant during backpropagation.
inline MaskField boolean_mask(const MaskField& mask, double theta) {
  if (theta <= 0.0 || theta >= 1.0)
    throw DomainError("boolean_mask: theta must be in (0,1)");
  MaskField out = mask;
  for (size_t i = 0; i < out.m.size(); ++i)
    out.boolean[i] = std::abs(out.m[i]) > theta ? 1 : 0;
  return out;
}

enum class MaskMode { kBoolean, kFloat };

inline Image apply_mask(const Image& img, const MaskField& mask,
                        MaskMode mode) {
  if (mask.m.height() != img.h || mask.m.width() != img.w)
    throw DimensionError("apply_mask: size mismatch");
  Image out = img;
  for (int ch = 0; ch < img.c; ++ch)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        out.at(y, x, ch) *= mode == MaskMode::kBoolean
                                ? static_cast<double>(mask.boolean(y, x))
                                : mask.m(y, x);
  return out;
}

struct SsimParams {
  int window = 3;          // odd side length, uniform mean
  double c1 = 0.01 * 0.01;  // stabilizers on unit dynamic range
  double c2 = 0.03 * 0.03;

  void validate() const {
    if (window < 1 || window % 2 == 0)
      throw ConfigError("SsimParams: window must be odd and >= 1");
    if (c1 <= 0 || c2 <= 0) throw ConfigError("SsimParams: c1,c2 must be > 0");
  }
};

namespace detail {

struct WindowStats {
  double mu_a, mu_b, var_a, var_b, cov;
  int n;
};

inline WindowStats window_stats(const double* a, const double* b, int h, int w,
                                int y, int x, int radius) {
  int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
  int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
  double sa = 0, sb = 0;
  int n = 0;
  for (int yy = y0; yy <= y1; ++yy)
    for (int xx = x0; xx <= x1; ++xx) {
      sa += a[yy * w + xx];
      sb += b[yy * w + xx];
      ++n;
    }
  double mu_a = sa / n, mu_b = sb / n;
  double va = 0, vb = 0, cov = 0;
  for (int yy = y0; yy <= y1; ++yy)
    for (int xx = x0; xx <= x1; ++xx) {
      double da = a[yy * w + xx] - mu_a;
      double db = b[yy * w + xx] - mu_b;
      va += da * da;
      vb += db * db;
      cov += da * db;
    }
  return {mu_a, mu_b, va / n, vb / n, cov / n, n};
}

inline double ssim_from_stats(const WindowStats& s, const SsimParams& p) {
  double n1 = 2 * s.mu_a * s.mu_b + p.c1;
  double d1 = s.mu_a * s.mu_a + s.mu_b * s.mu_b + p.c1;
  double n2 = 2 * s.cov + p.c2;
  double d2 = s.var_a + s.var_b + p.c2;
  return (n1 * n2) / (d1 * d2);
}

}  // namespace detail

// Per-pixel SSIM between two images: uniform window statistics, windows
// shrunk at the borders, channel-averaged.
inline GridD ssim_map(const Image& a, const Image& b, const SsimParams& p,
                      int threads = 1) {
  require_same_size(a, b, "ssim_map");
  p.validate();
  const int h = a.h, w = a.w, r = p.window / 2;
  GridD out(h, w);
  for (int ch = 0; ch < a.c; ++ch) {
    const double* pa = a.plane(ch);
    const double* pb = b.plane(ch);
    parallel_rows(h, threads, [&](int y) {
      for (int x = 0; x < w; ++x) {
        auto s = detail::window_stats(pa, pb, h, w, y, x, r);
        out(y, x) += detail::ssim_from_stats(s, p) / a.c;
      }
    });
  }
  return out;
}

// Backpropagates a cotangent on the channel-averaged SSIM map into both
// input images. Accumulates into ga/gb (either may be null).
inline void ssim_backward(const Image& a, const Image& b, const SsimParams& p,
                          const GridD& upstream, Image* ga, Image* gb) {
  require_same_size(a, b, "ssim_backward");
  const int h = a.h, w = a.w, r = p.window / 2;

  for (int ch = 0; ch < a.c; ++ch) {
    const double* pa = a.plane(ch);
    const double* pb = b.plane(ch);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double up = upstream(y, x) / a.c;
        if (up == 0.0) continue;
        auto s = detail::window_stats(pa, pb, h, w, y, x, r);
        double n1 = 2 * s.mu_a * s.mu_b + p.c1;
        double d1 = s.mu_a * s.mu_a + s.mu_b * s.mu_b + p.c1;
        double n2 = 2 * s.cov + p.c2;
        double d2 = s.var_a + s.var_b + p.c2;
        double S = (n1 * n2) / (d1 * d2);
        double dS_dn1 = n2 / (d1 * d2);
        double dS_dn2 = n1 / (d1 * d2);
        double dS_dd1 = -S / d1;
        double dS_dd2 = -S / d2;
        double dS_dmua = dS_dn1 * 2 * s.mu_b + dS_dd1 * 2 * s.mu_a;
        double dS_dmub = dS_dn1 * 2 * s.mu_a + dS_dd1 * 2 * s.mu_b;
        double dS_dva = dS_dd2;
        double dS_dvb = dS_dd2;
        double dS_dcov = dS_dn2 * 2;

        int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
        int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
        double inv_n = 1.0 / s.n;
        for (int yy = y0; yy <= y1; ++yy)
          for (int xx = x0; xx <= x1; ++xx) {
            double av = pa[yy * w + xx], bv = pb[yy * w + xx];
            if (ga)
              ga->at(yy, xx, ch) +=
                  up * (dS_dmua * inv_n + dS_dva * 2 * (av - s.mu_a) * inv_n +
                        dS_dcov * (bv - s.mu_b) * inv_n);
            if (gb)
              gb->at(yy, xx, ch) +=
                  up * (dS_dmub * inv_n + dS_dvb * 2 * (bv - s.mu_b) * inv_n +
                        dS_dcov * (av - s.mu_a) * inv_n);
          }
      }
    }
  }
}

// Unreconstructed pixels are zero-filled in the synthesis; inside SSIM
// windows that zero would read as structure. Substituting the target
// value there makes invalid pixels neutral, so only reconstructed pixels
// contribute mismatch. They stay excluded from averaging and carry no
// gradient.
inline Image neutralize_invalid(const Image& target, const Image& synth,
                                const GridB& validity) {
  Image out = synth;
  for (int ch = 0; ch < target.c; ++ch)
    for (int y = 0; y < target.h; ++y)
      for (int x = 0; x < target.w; ++x)
        if (!validity(y, x)) out.at(y, x, ch) = target.at(y, x, ch);
  return out;
}

// Per-pixel photometric residual: SSIM share plus channel-mean L1 share.
// Zero at invalid pixels.
inline GridD photometric_residual_map(const Image& target, const Image& synth,
                                      const GridB& validity,
                                      const LossWeights& w,
                                      const SsimParams& sp, int threads = 1) {
  require_same_size(target, synth, "photometric residual");
  Image synth_eff = neutralize_invalid(target, synth, validity);
  GridD ssim = ssim_map(target, synth_eff, sp, threads);
  GridD r(target.h, target.w);
  for (int y = 0; y < target.h; ++y)
    for (int x = 0; x < target.w; ++x) {
      if (!validity(y, x)) continue;
      double l1 = 0;
      for (int ch = 0; ch < target.c; ++ch)
        l1 += std::abs(target.at(y, x, ch) - synth.at(y, x, ch));
      l1 /= target.c;
      r(y, x) = w.alpha3 * (1.0 - ssim(y, x)) / 2.0 + (1.0 - w.alpha3) * l1;
    }
  return r;
}

struct ReconstructionLoss {
  double value = 0;
  Image d_synth;       // gradient w.r.t. the synthesized image
  GridD d_mask;        // gradient w.r.t. the float mask (masked variant only)
  GridD residual_map;  // per-pixel residual, zero at invalid pixels
  int n_valid = 0;
};

namespace detail {

// Shared core of the plain and mask-weighted reconstruction losses.
// `mask` selects Eq-style weighting of the per-pixel residual; averaging
// is always over the valid-pixel count.
inline ReconstructionLoss reconstruction_loss_impl(const Image& target,
                                                   const WarpResult& synth,
                                                   const GridD* mask,
                                                   const LossWeights& w,
                                                   const SsimParams& sp) {
  require_same_size(target, synth.image, "reconstruction_loss");
  const int h = target.h, wd = target.w, C = target.c;

  int n_valid = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wd; ++x)
      if (synth.validity(y, x)) ++n_valid;
  if (n_valid == 0)
    throw DegenerateError("reconstruction_loss: no valid pixels");

  ReconstructionLoss out;
  out.n_valid = n_valid;
  out.residual_map =
      photometric_residual_map(target, synth.image, synth.validity, w, sp);
  out.d_synth = Image(h, wd, C);
  if (mask) out.d_mask = GridD(h, wd);

  const double inv_n = 1.0 / n_valid;
  GridD ssim_upstream(h, wd);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wd; ++x) {
      if (!synth.validity(y, x)) continue;
      double mw = mask ? (*mask)(y, x) : 1.0;
      out.value += mw * out.residual_map(y, x) * inv_n;
      if (mask) out.d_mask(y, x) = out.residual_map(y, x) * inv_n;
      ssim_upstream(y, x) = -w.alpha3 / 2.0 * inv_n * mw;
      for (int ch = 0; ch < C; ++ch) {
        double diff = synth.image.at(y, x, ch) - target.at(y, x, ch);
        double sgn = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
        out.d_synth.at(y, x, ch) +=
            mw * (1.0 - w.alpha3) * sgn / C * inv_n;
      }
    }
  Image synth_eff = neutralize_invalid(target, synth.image, synth.validity);
  ssim_backward(target, synth_eff, sp, ssim_upstream, nullptr, &out.d_synth);
  // invalid pixels hold substituted constants, not degrees of freedom
  for (int ch = 0; ch < C; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < wd; ++x)
        if (!synth.validity(y, x)) out.d_synth.at(y, x, ch) = 0;
  return out;
}

}  // namespace detail

inline ReconstructionLoss reconstruction_loss(const Image& target,
                                              const WarpResult& synth,
                                              const LossWeights& w,
                                              const SsimParams& sp = {}) {
  return detail::reconstruction_loss_impl(target, synth, nullptr, w, sp);
}

inline ReconstructionLoss masked_reconstruction_loss(const Image& target,
                                                     const WarpResult& synth,
                                                     const MaskField& mask,
                                                     const LossWeights& w,
                                                     const SsimParams& sp = {}) {
  if (mask.m.height() != target.h || mask.m.width() != target.w)
    throw DimensionError("masked_reconstruction_loss: mask size mismatch");
  return detail::reconstruction_loss_impl(target, synth, &mask.m, w, sp);
}

struct SmoothnessLoss {
  double value = 0;
  GridD d_depth;  // gradient w.r.t. metric depth entries
};

// Second-order depth differences, edge-weighted by the image's own
// second-order structure, averaged over interior pixels.
inline SmoothnessLoss smoothness_loss(const DepthField& depth,
                                      const Image& image) {
  const int h = depth.height(), w = depth.width();
  if (image.h != h || image.w != w)
    throw DimensionError("smoothness_loss: size mismatch");
  if (h < 3 || w < 3)
    throw DimensionError("smoothness_loss: grid must be at least 3x3");

  SmoothnessLoss out;
  out.d_depth = GridD(h, w);
  const int n_interior = (h - 2) * (w - 2);
  const double inv_n = 1.0 / n_interior;

  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) {
      double su = depth.depth(y, x - 1) - 2 * depth.depth(y, x) +
                  depth.depth(y, x + 1);
      double sv = depth.depth(y - 1, x) - 2 * depth.depth(y, x) +
                  depth.depth(y + 1, x);
      double wu = 0, wv = 0;
      for (int ch = 0; ch < image.c; ++ch) {
        wu += std::exp(-std::abs(image.at(y, x - 1, ch) -
                                 2 * image.at(y, x, ch) +
                                 image.at(y, x + 1, ch)));
        wv += std::exp(-std::abs(image.at(y - 1, x, ch) -
                                 2 * image.at(y, x, ch) +
                                 image.at(y + 1, x, ch)));
      }
      wu /= image.c;
      wv /= image.c;
      out.value += (std::abs(su) * wu + std::abs(sv) * wv) * inv_n;

      double gu = (su > 0 ? 1.0 : (su < 0 ? -1.0 : 0.0)) * wu * inv_n;
      double gv = (sv > 0 ? 1.0 : (sv < 0 ? -1.0 : 0.0)) * wv * inv_n;
      out.d_depth(y, x - 1) += gu;
      out.d_depth(y, x) += -2 * gu;
      out.d_depth(y, x + 1) += gu;
      out.d_depth(y - 1, x) += gv;
      out.d_depth(y, x) += -2 * gv;
      out.d_depth(y + 1, x) += gv;
    }
  return out;
}

struct MaskRegularization {
  double value = 0;
  GridD d_mask;
};

constexpr double kLogEps = 1e-6;  // clamp for every logarithm in the losses

// Mean binary cross-entropy of the mask against an all-ones label; keeps
// the mask from collapsing to zero.
inline MaskRegularization mask_regularization(const MaskField& mask) {
  MaskRegularization out;
  const int h = mask.m.height(), w = mask.m.width();
  out.d_mask = GridD(h, w);
  const double inv_n = 1.0 / (static_cast<double>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double m = std::clamp(mask.m(y, x), kLogEps, 1.0 - kLogEps);
      out.value += -std::log(m) * inv_n;
      if (mask.m(y, x) > kLogEps && mask.m(y, x) < 1.0 - kLogEps)
        out.d_mask(y, x) = -inv_n / m;
    }
  return out;
}

struct ScaleConsistencyLoss {
  double value = 0;
  GridD d_depth_t;  // gradient w.r.t. target metric depth
  GridD d_depth_s;  // gradient w.r.t. source metric depth
  Eigen::Matrix<double, 6, 1> d_pose = Eigen::Matrix<double, 6, 1>::Zero();
  GridB valid;
  double norm_scale = 0;  // joint mean used to normalize both fields
};

// Compares the target depth projected into the source frame with the
// source depth sampled at the projected coordinates. Both fields are
// normalized by their joint mean, so only relative scale mismatch is
// penalized; the SSIM share adds structural agreement on top of L1.
inline ScaleConsistencyLoss scale_consistency_loss(
    const DepthField& depth_t, const DepthField& depth_s, const Pose6& pose,
    const Intrinsics& K, const LossWeights& w, const SsimParams& sp = {}) {
  const int h = depth_t.height(), wd = depth_t.width();
  if (depth_s.height() != h || depth_s.width() != wd)
    throw DimensionError("scale_consistency_loss: depth size mismatch");

  ProjectionResult proj = project(depth_t, pose, K);
  GridD src_depth = depth_s.depth_grid();
  Image src_im = image_from_grid(src_depth);
  BilinearJacobian bj = bilinear_sample_grad(src_im, proj.grid);
  WarpResult sampled = bilinear_sample(src_im, proj.grid);

  ScaleConsistencyLoss out;
  out.valid = sampled.validity;
  int n_valid = 0;
  double sum = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wd; ++x)
      if (out.valid(y, x)) {
        sum += proj.depth(y, x) + sampled.image.at(y, x, 0);
        ++n_valid;
      }
  if (n_valid == 0)
    throw DegenerateError("scale_consistency_loss: no valid pixels");
  const double s = sum / (2.0 * n_valid);
  out.norm_scale = s;

  // Normalized fields, zero-filled at invalid pixels.
  Image A(h, wd, 1), B(h, wd, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wd; ++x)
      if (out.valid(y, x)) {
        A.at(y, x, 0) = proj.depth(y, x) / s;
        B.at(y, x, 0) = sampled.image.at(y, x, 0) / s;
      }

  GridD ssim = ssim_map(A, B, sp);
  const double inv_n = 1.0 / n_valid;
  Image dA(h, wd, 1), dB(h, wd, 1);
  GridD ssim_upstream(h, wd);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wd; ++x) {
      if (!out.valid(y, x)) continue;
      double diff = A.at(y, x, 0) - B.at(y, x, 0);
      out.value += (w.alpha4 * (1.0 - ssim(y, x)) / 2.0 +
                    (1.0 - w.alpha4) * std::abs(diff)) *
                   inv_n;
      double sgn = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
      dA.at(y, x, 0) += (1.0 - w.alpha4) * sgn * inv_n;
      dB.at(y, x, 0) -= (1.0 - w.alpha4) * sgn * inv_n;
      ssim_upstream(y, x) = -w.alpha4 / 2.0 * inv_n;
    }
  ssim_backward(A, B, sp, ssim_upstream, &dA, &dB);

  // Entries at invalid pixels are constants (zero-filled), not functions
  // of the parameters; drop any gradient scattered onto them.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wd; ++x)
      if (!out.valid(y, x)) {
        dA.at(y, x, 0) = 0;
        dB.at(y, x, 0) = 0;
      }

  // Chain through the joint-mean normalization: A = z/s, B = zhat/s with
  // s = (sum z + sum zhat) / 2n over valid pixels.
  double s_corr = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wd; ++x)
      if (out.valid(y, x))
        s_corr += dA.at(y, x, 0) * A.at(y, x, 0) + dB.at(y, x, 0) * B.at(y, x, 0);
  s_corr = -s_corr / s / (2.0 * n_valid);

  GridD d_z(h, wd), d_sampled(h, wd);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wd; ++x)
      if (out.valid(y, x)) {
        d_z(y, x) = dA.at(y, x, 0) / s + s_corr;
        d_sampled(y, x) = dB.at(y, x, 0) / s + s_corr;
      }

  // Sampled source depth pulls back to source depth entries and to the
  // projected coordinates.
  Image up(h, wd, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wd; ++x) up.at(y, x, 0) = d_sampled(y, x);
  BilinearGrad bg = bilinear_vjp(bj, src_im, up);
  out.d_depth_s = grid_from_plane(bg.d_src, 0);

  // Projected depth and coordinates pull back to target depth and pose.
  ProjectionJacobian pj = project_grad(depth_t, pose, K);
  ProjectionGrad pg = project_vjp(pj, bg.d_u, bg.d_v, d_z);
  out.d_depth_t = pg.d_depth;
  out.d_pose = pg.d_pose;
  return out;
}

struct GanLosses {
  double disc_loss = 0;
  double gen_loss = 0;
  std::vector<double> d_disc_real;  // d(disc_loss)/d d_real[i]
  std::vector<double> d_disc_fake;  // d(disc_loss)/d d_fake[i]
  std::vector<double> d_gen_fake;   // d(gen_loss)/d d_fake[i]
};

// Cross-entropy GAN objectives on per-sample discriminator outputs.
// The generator objective defaults to the non-saturating -log D(fake);
// the saturating +log(1 - D(fake)) form is kept behind a flag.
inline GanLosses gan_losses(std::span<const double> d_real,
                            std::span<const double> d_fake,
                            bool saturating_generator = false) {
  if (d_real.empty() || d_fake.empty())
    throw DegenerateError("gan_losses: empty sample set");
  GanLosses out;
  out.d_disc_real.resize(d_real.size());
  out.d_disc_fake.resize(d_fake.size());
  out.d_gen_fake.resize(d_fake.size());

  const double nr = static_cast<double>(d_real.size());
  const double nf = static_cast<double>(d_fake.size());
  for (size_t i = 0; i < d_real.size(); ++i) {
    double d = std::clamp(d_real[i], kLogEps, 1.0 - kLogEps);
    out.disc_loss += -std::log(d) / nr;
    out.d_disc_real[i] = -1.0 / (d * nr);
  }
  for (size_t i = 0; i < d_fake.size(); ++i) {
    double d = std::clamp(d_fake[i], kLogEps, 1.0 - kLogEps);
    out.disc_loss += -std::log(1.0 - d) / nf;
    out.d_disc_fake[i] = 1.0 / ((1.0 - d) * nf);
    if (saturating_generator) {
      out.gen_loss += std::log(1.0 - d) / nf;
      out.d_gen_fake[i] = -1.0 / ((1.0 - d) * nf);
    } else {
      out.gen_loss += -std::log(d) / nf;
      out.d_gen_fake[i] = -1.0 / (d * nf);
    }
  }
  return out;
}

// Which terms are active, mirroring the ablation rows of the training
// study this toolkit reproduces at desk scale.
enum class GanMasking { kNone, kFloat, kBoolean };

struct AblationVariant {
  bool use_scale = false;
  bool use_gan = false;
  bool use_mask = false;  // mask-weighted reconstruction + mask regularizer
  GanMasking gan_masking = GanMasking::kNone;

  std::string label() const {
    std::string s = "basic";
    if (use_scale) s += "+scale";
    if (use_gan) s += "+gan";
    if (use_mask) s += "+mask";
    if (gan_masking == GanMasking::kFloat) s += "+fmp";
    if (gan_masking == GanMasking::kBoolean) s += "+bmp";
    return s;
  }

  // Accepts preset row labels (basic, scale, gan, mask, full-fmp,
  // full-bmp) and free '+'-joined combinations such as "basic+gan".
  static AblationVariant parse(const std::string& key) {
    AblationVariant v;
    if (key == "basic") return v;
    if (key == "scale") return parse("basic+scale");
    if (key == "gan") return parse("basic+scale+gan");
    if (key == "mask") return parse("basic+scale+gan+mask");
    if (key == "full-fmp") return parse("basic+scale+gan+mask+fmp");
    if (key == "full-bmp") return parse("basic+scale+gan+mask+bmp");

    std::stringstream ss(key);
    std::string tok;
    while (std::getline(ss, tok, '+')) {
      if (tok == "basic" || tok.empty()) continue;
      if (tok == "scale")
        v.use_scale = true;
      else if (tok == "gan")
        v.use_gan = true;
      else if (tok == "mask")
        v.use_mask = true;
      else if (tok == "fmp")
        v.gan_masking = GanMasking::kFloat;
      else if (tok == "bmp")
        v.gan_masking = GanMasking::kBoolean;
      else
        throw ConfigError("unknown variant token: " + tok);
    }
    if (v.gan_masking != GanMasking::kNone && !v.use_gan)
      throw ConfigError("variant: fmp/bmp require gan");
    return v;
  }
};

// Scalar values of each sub-loss; inactive terms are ignored by the total.
struct LossTerms {
  double rec = 0;       // plain or mask-weighted, per the variant
  double smooth = 0;
  double scale = 0;
  double mask_reg = 0;
  double gan_gen = 0;
};

inline double total_generator_loss(const LossTerms& t, const LossWeights& w,
                                   const AblationVariant& v) {
  double basic = w.alpha1 * t.rec + w.alpha2 * t.smooth;
  double total = w.alpha * basic;
  if (v.use_scale) total += w.phi * t.scale;
  if (v.use_mask) total += w.beta * t.mask_reg;
  if (v.use_gan) total += w.gamma * t.gan_gen;
  return total;
}

}  // namespace warpkit
