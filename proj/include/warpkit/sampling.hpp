#pragma once

#include "warpkit/core.hpp"
#include "warpkit/geometry.hpp"

namespace warpkit {

// Synthesized image plus per-pixel validity. Invalid pixels are zero-filled
// rather than edge-clamped so unreconstructed regions stay visible.
struct WarpResult {
  Image image;
  GridB validity;
};

namespace detail {

// Cell anchor and fractional offsets for a continuous coordinate.
// The anchor is clamped so u == width-1 lands in the last cell with
// fractional weight 1 (exact lattice hit at the right border).
struct BilinearCell {
  int x0, y0;
  double fu, fv;
};

inline BilinearCell bilinear_cell(double u, double v, int w, int h) {
  int x0 = std::min(static_cast<int>(std::floor(u)), w - 2);
  int y0 = std::min(static_cast<int>(std::floor(v)), h - 2);
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  return {x0, y0, u - x0, v - y0};
}

inline bool sample_in_bounds(double u, double v, int w, int h) {
  return u >= 0.0 && u <= w - 1.0 && v >= 0.0 && v <= h - 1.0;
}

}  // namespace detail

inline WarpResult bilinear_sample(const Image& src, const PixelGrid& grid,
                                  int threads = 1) {
  const int h = grid.height(), w = grid.width();
  if (src.w < 2 || src.h < 2)
    throw DimensionError("bilinear_sample: source must be at least 2x2");
  WarpResult out;
  out.image = Image(h, w, src.c);
  out.validity = GridB(h, w, 0);

  parallel_rows(h, threads, [&](int y) {
    for (int x = 0; x < w; ++x) {
      if (!grid.valid(y, x)) continue;
      double u = grid.u(y, x), v = grid.v(y, x);
      if (!detail::sample_in_bounds(u, v, src.w, src.h)) continue;
      auto c = detail::bilinear_cell(u, v, src.w, src.h);
      double w00 = (1 - c.fv) * (1 - c.fu);
      double w01 = (1 - c.fv) * c.fu;
      double w10 = c.fv * (1 - c.fu);
      double w11 = c.fv * c.fu;
      for (int ch = 0; ch < src.c; ++ch) {
        out.image.at(y, x, ch) = w00 * src.at(c.y0, c.x0, ch) +
                                 w01 * src.at(c.y0, c.x0 + 1, ch) +
                                 w10 * src.at(c.y0 + 1, c.x0, ch) +
                                 w11 * src.at(c.y0 + 1, c.x0 + 1, ch);
      }
      out.validity(y, x) = 1;
    }
  });
  return out;
}

// Per-pixel derivatives of the sampled value: with respect to the grid
// coordinates (one plane per channel) and, sparsely, the four source
// pixels (anchor + weights).
struct BilinearJacobian {
  std::vector<GridD> dout_du, dout_dv;  // per channel
  Grid<int> x0, y0;
  GridD w00, w01, w10, w11;
  GridB valid;
};

inline BilinearJacobian bilinear_sample_grad(const Image& src,
                                             const PixelGrid& grid) {
  const int h = grid.height(), w = grid.width();
  if (src.w < 2 || src.h < 2)
    throw DimensionError("bilinear_sample_grad: source must be at least 2x2");
  BilinearJacobian J;
  J.dout_du.assign(src.c, GridD(h, w));
  J.dout_dv.assign(src.c, GridD(h, w));
  J.x0 = Grid<int>(h, w);
  J.y0 = Grid<int>(h, w);
  J.w00 = GridD(h, w);
  J.w01 = GridD(h, w);
  J.w10 = GridD(h, w);
  J.w11 = GridD(h, w);
  J.valid = GridB(h, w, 0);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!grid.valid(y, x)) continue;
      double u = grid.u(y, x), v = grid.v(y, x);
      if (!detail::sample_in_bounds(u, v, src.w, src.h)) continue;
      auto c = detail::bilinear_cell(u, v, src.w, src.h);
      J.valid(y, x) = 1;
      J.x0(y, x) = c.x0;
      J.y0(y, x) = c.y0;
      J.w00(y, x) = (1 - c.fv) * (1 - c.fu);
      J.w01(y, x) = (1 - c.fv) * c.fu;
      J.w10(y, x) = c.fv * (1 - c.fu);
      J.w11(y, x) = c.fv * c.fu;
      for (int ch = 0; ch < src.c; ++ch) {
        double i00 = src.at(c.y0, c.x0, ch);
        double i01 = src.at(c.y0, c.x0 + 1, ch);
        double i10 = src.at(c.y0 + 1, c.x0, ch);
        double i11 = src.at(c.y0 + 1, c.x0 + 1, ch);
        J.dout_du[ch](y, x) = (1 - c.fv) * (i01 - i00) + c.fv * (i11 - i10);
        J.dout_dv[ch](y, x) = (1 - c.fu) * (i10 - i00) + c.fu * (i11 - i01);
      }
    }
  }
  return J;
}

// Pulls cotangents on the sampled image back to grid coordinates and
// source intensities. Upstream values at invalid pixels are ignored.
struct BilinearGrad {
  GridD d_u, d_v;
  Image d_src;
};

inline BilinearGrad bilinear_vjp(const BilinearJacobian& J, const Image& src,
                                 const Image& upstream) {
  const int h = J.valid.height(), w = J.valid.width();
  BilinearGrad g;
  g.d_u = GridD(h, w);
  g.d_v = GridD(h, w);
  g.d_src = Image(src.h, src.w, src.c);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!J.valid(y, x)) continue;
      int x0 = J.x0(y, x), y0 = J.y0(y, x);
      for (int ch = 0; ch < src.c; ++ch) {
        double up = upstream.at(y, x, ch);
        if (up == 0.0) continue;
        g.d_u(y, x) += up * J.dout_du[ch](y, x);
        g.d_v(y, x) += up * J.dout_dv[ch](y, x);
        g.d_src.at(y0, x0, ch) += up * J.w00(y, x);
        g.d_src.at(y0, x0 + 1, ch) += up * J.w01(y, x);
        g.d_src.at(y0 + 1, x0, ch) += up * J.w10(y, x);
        g.d_src.at(y0 + 1, x0 + 1, ch) += up * J.w11(y, x);
      }
    }
  }
  return g;
}

// Inverse warp: project target pixels through depth and pose, then sample
// the source image there. Validity combines projection and sampling.
inline WarpResult warp_image(const Image& src, const DepthField& depth,
                             const Pose6& pose, const Intrinsics& K,
                             int threads = 1) {
  if (src.h != depth.height() || src.w != depth.width())
    throw DimensionError("warp_image: image/depth size mismatch");
  ProjectionResult proj = project(depth, pose, K, threads);
  return bilinear_sample(src, proj.grid, threads);
}

}  // namespace warpkit
