#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "warpkit/core.hpp"

namespace warpkit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  Intrinsics() = default;
  Intrinsics(double fx_, double fy_, double cx_, double cy_, int w, int h)
      : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(w), height(h) {
    if (fx <= 0 || fy <= 0) throw DomainError("Intrinsics: focal must be > 0");
    if (cx < 0 || cx >= width || cy < 0 || cy >= height)
      throw DomainError("Intrinsics: principal point outside image");
  }

  // Ray through pixel (u,v) in camera coordinates, z component = 1.
  Vec3 ray(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }
};

namespace so3 {

inline Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

// Rodrigues formula with a series fallback near zero.
inline Mat3 exp(const Vec3& w) {
  double th = w.norm();
  Mat3 K = hat(w);
  if (th < 1e-10) return Mat3::Identity() + K + 0.5 * K * K;
  double a = std::sin(th) / th;
  double b = (1.0 - std::cos(th)) / (th * th);
  return Mat3::Identity() + a * K + b * K * K;
}

// Axis-angle of R with angle in [0, pi]; Eigen handles the corner cases.
inline Vec3 log(const Mat3& R) {
  Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

// d(R(w) v)/dw as a 3x3 matrix, column i = (dR/dw_i) v.
// Closed form after Gallego & Yezzi; constant-limit branch near zero.
inline Mat3 rotate_jacobian(const Vec3& w, const Vec3& v) {
  double th2 = w.squaredNorm();
  Mat3 R = exp(w);
  if (th2 < 1e-12) return -hat(v);
  Mat3 J;
  Vec3 Rv = R * v;
  Mat3 I = Mat3::Identity();
  for (int i = 0; i < 3; ++i) {
    Vec3 e = Vec3::Unit(i);
    Vec3 g = w.cross((I - R) * e);
    J.col(i) = ((w(i) * hat(w) + hat(g)) / th2) * Rv;
  }
  return J;
}

}  // namespace so3

// 6-DOF rigid motion, axis-angle rotation (canonical chart, |w| < pi)
// plus translation. Acts on points as y = R x + t.
struct Pose6 {
  Vec3 rotation = Vec3::Zero();
  Vec3 translation = Vec3::Zero();

  Pose6() = default;
  Pose6(const Vec3& rot, const Vec3& trans)
      : rotation(rot), translation(trans) {}

  static Pose6 identity() { return {}; }

  Mat3 rotation_matrix() const { return so3::exp(rotation); }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation_matrix();
    m.topRightCorner<3, 1>() = translation;
    return m;
  }

  static Pose6 from_matrix(const Mat4& m) {
    return {so3::log(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>()};
  }

  Vec3 apply(const Vec3& p) const { return rotation_matrix() * p + translation; }

  const double* params() const { return rotation.data(); }  // not contiguous with t

  double param(int i) const { return i < 3 ? rotation(i) : translation(i - 3); }
  void set_param(int i, double v) {
    if (i < 3)
      rotation(i) = v;
    else
      translation(i - 3) = v;
  }
};

// a then b composed as coordinate maps: (a*b)(x) = a(b(x)).
inline Pose6 compose(const Pose6& a, const Pose6& b) {
  Mat3 Ra = a.rotation_matrix();
  Mat3 Rb = b.rotation_matrix();
  return {so3::log(Ra * Rb), Ra * b.translation + a.translation};
}

inline Pose6 invert(const Pose6& a) {
  Mat3 Rt = a.rotation_matrix().transpose();
  return {so3::log(Rt), -(Rt * a.translation)};
}

// Continuous pixel coordinates plus an in-bounds/in-front flag.
struct PixelGrid {
  GridD u, v;
  GridB valid;

  PixelGrid() = default;
  PixelGrid(int h, int w) : u(h, w), v(h, w), valid(h, w, 1) {}
  int height() const { return u.height(); }
  int width() const { return u.width(); }
};

// Positive depth stored as inverse depth; the API talks metric depth.
class DepthField {
 public:
  static constexpr double kDefaultMin = 0.1;
  static constexpr double kDefaultMax = 100.0;

  DepthField() = default;

  static DepthField from_depth(const GridD& depth, double dmin = kDefaultMin,
                               double dmax = kDefaultMax) {
    DepthField f;
    f.inv_ = GridD(depth.height(), depth.width());
    for (size_t i = 0; i < depth.size(); ++i) {
      double d = depth[i];
      if (!std::isfinite(d) || d <= 0.0)
        throw DomainError("DepthField: depth must be finite and > 0");
      f.inv_[i] = 1.0 / std::clamp(d, dmin, dmax);
    }
    return f;
  }

  static DepthField from_inverse(const GridD& inv, double dmin = kDefaultMin,
                                 double dmax = kDefaultMax) {
    DepthField f;
    f.inv_ = GridD(inv.height(), inv.width());
    for (size_t i = 0; i < inv.size(); ++i) {
      double x = inv[i];
      if (!std::isfinite(x) || x <= 0.0)
        throw DomainError("DepthField: inverse depth must be finite and > 0");
      f.inv_[i] = 1.0 / std::clamp(1.0 / x, dmin, dmax);
    }
    return f;
  }

  static DepthField constant(int h, int w, double depth) {
    GridD g(h, w, depth);
    return from_depth(g);
  }

  int height() const { return inv_.height(); }
  int width() const { return inv_.width(); }
  size_t size() const { return inv_.size(); }

  double depth(int y, int x) const { return 1.0 / inv_(y, x); }
  double depth_at(size_t i) const { return 1.0 / inv_[i]; }
  double inverse(int y, int x) const { return inv_(y, x); }

  GridD depth_grid() const {
    GridD g(inv_.height(), inv_.width());
    for (size_t i = 0; i < inv_.size(); ++i) g[i] = 1.0 / inv_[i];
    return g;
  }

  const GridD& inverse_grid() const { return inv_; }

 private:
  GridD inv_;
};

constexpr double kZEps = 1e-6;  // points with z below this are flagged invalid

struct ProjectionResult {
  PixelGrid grid;
  GridD depth;  // z of the transformed point: the target depth seen in the
                // source frame
};

// Pinhole projection of every target pixel through depth and relative
// pose: back-project, transform, reproject. Pixels that land at or behind
// the camera plane are flagged invalid (coords/depth still hold the raw
// algebra where finite).
inline ProjectionResult project(const DepthField& depth, const Pose6& pose,
                                const Intrinsics& K, int threads = 1) {
  const int h = depth.height(), w = depth.width();
  if (K.width != w || K.height != h)
    throw DimensionError("project: intrinsics size mismatch");
  ProjectionResult out;
  out.grid = PixelGrid(h, w);
  out.depth = GridD(h, w);

  const Mat3 R = pose.rotation_matrix();
  const Vec3 t = pose.translation;

  parallel_rows(h, threads, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double d = depth.depth(y, x);
      Vec3 p = R * (d * K.ray(x, y)) + t;
      out.depth(y, x) = p.z();
      if (p.z() <= kZEps) {
        out.grid.valid(y, x) = 0;
        out.grid.u(y, x) = -1.0;
        out.grid.v(y, x) = -1.0;
        continue;
      }
      double u = K.fx * p.x() / p.z() + K.cx;
      double v = K.fy * p.y() / p.z() + K.cy;
      out.grid.u(y, x) = u;
      out.grid.v(y, x) = v;
      out.grid.valid(y, x) =
          (u >= 0.0 && u <= w - 1.0 && v >= 0.0 && v <= h - 1.0) ? 1 : 0;
    }
  });
  return out;
}

// Analytic Jacobians of (u_s, v_s, projected depth) per pixel with respect
// to that pixel's depth and the six pose parameters. Entries for invalid
// pixels are zero.
struct ProjectionJacobian {
  // d(u,v,z)/d(depth at this pixel)
  GridD du_dd, dv_dd, dz_dd;
  // d(u,v,z)/d(pose param j), j in [0,6): rotation xyz then translation xyz
  std::array<GridD, 6> du_dp, dv_dp, dz_dp;
};

inline ProjectionJacobian project_grad(const DepthField& depth,
                                       const Pose6& pose, const Intrinsics& K,
                                       int threads = 1) {
  const int h = depth.height(), w = depth.width();
  if (K.width != w || K.height != h)
    throw DimensionError("project_grad: intrinsics size mismatch");

  ProjectionJacobian J;
  J.du_dd = GridD(h, w);
  J.dv_dd = GridD(h, w);
  J.dz_dd = GridD(h, w);
  for (int j = 0; j < 6; ++j) {
    J.du_dp[j] = GridD(h, w);
    J.dv_dp[j] = GridD(h, w);
    J.dz_dp[j] = GridD(h, w);
  }

  const Mat3 R = pose.rotation_matrix();
  const Vec3 t = pose.translation;
  const Vec3 wrot = pose.rotation;

  parallel_rows(h, threads, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double d = depth.depth(y, x);
      Vec3 r = K.ray(x, y);
      Vec3 q = d * r;
      Vec3 p = R * q + t;
      if (p.z() <= kZEps) continue;

      // dp/d(depth) and dp/d(pose)
      Vec3 dp_dd = R * r;
      Mat3 dp_drot = so3::rotate_jacobian(wrot, q);

      double iz = 1.0 / p.z();
      double iz2 = iz * iz;
      // du = fx*(dpx*z - px*dpz)/z^2, dv analogous, dz = dpz
      auto push = [&](const Vec3& dp, double& du, double& dv, double& dz) {
        du = K.fx * (dp.x() * p.z() - p.x() * dp.z()) * iz2;
        dv = K.fy * (dp.y() * p.z() - p.y() * dp.z()) * iz2;
        dz = dp.z();
      };

      push(dp_dd, J.du_dd(y, x), J.dv_dd(y, x), J.dz_dd(y, x));
      for (int j = 0; j < 3; ++j) {
        push(dp_drot.col(j), J.du_dp[j](y, x), J.dv_dp[j](y, x),
             J.dz_dp[j](y, x));
      }
      for (int j = 0; j < 3; ++j) {
        Vec3 dp = Vec3::Unit(j);
        push(dp, J.du_dp[3 + j](y, x), J.dv_dp[3 + j](y, x),
             J.dz_dp[3 + j](y, x));
      }
    }
  });
  return J;
}

// Vector-Jacobian product: pulls per-pixel cotangents on (u, v, z) back to
// the depth grid and the six pose parameters.
struct ProjectionGrad {
  GridD d_depth;                      // dL/d(metric depth) per pixel
  Eigen::Matrix<double, 6, 1> d_pose;  // dL/d(pose params)
};

inline ProjectionGrad project_vjp(const ProjectionJacobian& J, const GridD& du,
                                  const GridD& dv, const GridD& dz) {
  const int h = J.du_dd.height(), w = J.du_dd.width();
  ProjectionGrad g;
  g.d_depth = GridD(h, w);
  g.d_pose.setZero();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double gu = du(y, x), gv = dv(y, x), gz = dz(y, x);
      if (gu == 0.0 && gv == 0.0 && gz == 0.0) continue;
      g.d_depth(y, x) =
          gu * J.du_dd(y, x) + gv * J.dv_dd(y, x) + gz * J.dz_dd(y, x);
      for (int j = 0; j < 6; ++j) {
        g.d_pose(j) += gu * J.du_dp[j](y, x) + gv * J.dv_dp[j](y, x) +
                       gz * J.dz_dp[j](y, x);
      }
    }
  }
  return g;
}

}  // namespace warpkit
