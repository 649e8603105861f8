#include <catch2/catch_amalgamated.hpp>

#include "warpkit/geometry.hpp"

using namespace warpkit;
using Catch::Approx;

namespace {

Pose6 random_pose(Rng& rng, double rot_scale = 0.8, double trans_scale = 1.0) {
  Vec3 r, t;
  for (int i = 0; i < 3; ++i) {
    r(i) = rot_scale * rng.normal();
    t(i) = trans_scale * rng.normal();
  }
  if (r.norm() >= M_PI) r *= (M_PI - 0.01) / r.norm();
  return {r, t};
}

Intrinsics test_intrinsics(int n) {
  return Intrinsics(n, n, (n - 1) / 2.0, (n - 1) / 2.0, n, n);
}

}  // namespace

TEST_CASE("pose compose and invert satisfy group axioms", "[geometry]") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Pose6 a = random_pose(rng);
    Pose6 b = random_pose(rng);
    Pose6 c = random_pose(rng);

    Pose6 id = compose(a, invert(a));
    REQUIRE(id.rotation.norm() < 1e-12);
    REQUIRE(id.translation.norm() < 1e-12);

    Pose6 left = compose(compose(a, b), c);
    Pose6 right = compose(a, compose(b, c));
    // independent oracle: 4x4 homogeneous matrix product
    Mat4 m = a.matrix() * b.matrix() * c.matrix();
    REQUIRE((left.matrix() - right.matrix()).norm() < 1e-10);
    REQUIRE((left.matrix() - m).norm() < 1e-10);
  }
}

TEST_CASE("compose with identity and translation inverse", "[geometry]") {
  Rng rng(12);
  Pose6 x = random_pose(rng);
  Pose6 cx = compose(Pose6::identity(), x);
  REQUIRE((cx.rotation - x.rotation).norm() < 1e-14);
  REQUIRE((cx.translation - x.translation).norm() < 1e-14);

  Pose6 t({0, 0, 0}, {1, 2, 3});
  Pose6 ti = invert(t);
  REQUIRE(ti.rotation.norm() == 0.0);
  REQUIRE((ti.translation - Vec3(-1, -2, -3)).norm() < 1e-15);
}

TEST_CASE("identity projection is the identity on the pixel grid", "[geometry]") {
  const int n = 16;
  Intrinsics K = test_intrinsics(n);
  DepthField d = DepthField::constant(n, n, 3.7);
  ProjectionResult pr = project(d, Pose6::identity(), K);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      REQUIRE(pr.grid.u(y, x) == Approx(x).margin(1e-12));
      REQUIRE(pr.grid.v(y, x) == Approx(y).margin(1e-12));
      REQUIRE(pr.depth(y, x) == Approx(3.7).margin(1e-12));
      REQUIRE(pr.grid.valid(y, x) == 1);
    }
}

TEST_CASE("fronto-parallel plane with x-translation shifts by fx*tx/d",
          "[geometry]") {
  const int n = 16;
  const double d = 5.0, tx = 0.4;
  Intrinsics K = test_intrinsics(n);
  DepthField depth = DepthField::constant(n, n, d);
  ProjectionResult pr = project(depth, Pose6({0, 0, 0}, {tx, 0, 0}), K);
  double disparity = K.fx * tx / d;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      REQUIRE(pr.grid.u(y, x) == Approx(x + disparity).epsilon(1e-12));
      REQUIRE(pr.grid.v(y, x) == Approx(y).margin(1e-12));
      REQUIRE(pr.depth(y, x) == Approx(d).margin(1e-12));
    }
}

TEST_CASE("pure z-translation halves the projected depth", "[geometry]") {
  const int n = 8;
  const double d = 6.0;
  Intrinsics K = test_intrinsics(n);
  DepthField depth = DepthField::constant(n, n, d);
  ProjectionResult pr = project(depth, Pose6({0, 0, 0}, {0, 0, -d / 2}), K);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      REQUIRE(pr.depth(y, x) == Approx(d / 2).margin(1e-12));
}

TEST_CASE("points behind the camera are flagged invalid", "[geometry]") {
  const int n = 8;
  Intrinsics K = test_intrinsics(n);
  DepthField depth = DepthField::constant(n, n, 1.0);
  ProjectionResult pr = project(depth, Pose6({0, 0, 0}, {0, 0, -2.0}), K);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) REQUIRE(pr.grid.valid(y, x) == 0);
}

TEST_CASE("projection rejects mismatched sizes and bad depths", "[geometry]") {
  Intrinsics K = test_intrinsics(8);
  REQUIRE_THROWS_AS(project(DepthField::constant(4, 4, 1.0), Pose6::identity(), K),
                    DimensionError);
  GridD bad(8, 8, 1.0);
  bad(3, 3) = -2.0;
  REQUIRE_THROWS_AS(DepthField::from_depth(bad), DomainError);
  bad(3, 3) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(DepthField::from_depth(bad), DomainError);
}

TEST_CASE("du/dtx equals fx/d at identity and dz/dD is one", "[geometry]") {
  const int n = 8;
  const double d = 4.0;
  Intrinsics K = test_intrinsics(n);
  DepthField depth = DepthField::constant(n, n, d);
  ProjectionJacobian J = project_grad(depth, Pose6::identity(), K);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      REQUIRE(J.du_dp[3](y, x) == Approx(K.fx / d).epsilon(1e-12));
      REQUIRE(J.dz_dd(y, x) == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("projection round trip through the inverse pose", "[geometry]") {
  const int n = 12;
  Intrinsics K = test_intrinsics(n);
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    Pose6 T = random_pose(rng, 0.05, 0.2);
    GridD dg(n, n);
    for (size_t i = 0; i < dg.size(); ++i) dg[i] = rng.uniform(4.0, 7.0);
    DepthField depth = DepthField::from_depth(dg);
    ProjectionResult fwd = project(depth, T, K);

    // Reproject the transformed geometry through the inverse: continuous
    // coordinates only, no resampling.
    Pose6 Ti = invert(T);
    Mat3 R = Ti.rotation_matrix();
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        if (!fwd.grid.valid(y, x)) continue;
        Vec3 p_src = fwd.depth(y, x) * K.ray(fwd.grid.u(y, x), fwd.grid.v(y, x));
        Vec3 back = R * p_src + Ti.translation;
        double u = K.fx * back.x() / back.z() + K.cx;
        double v = K.fy * back.y() / back.z() + K.cy;
        REQUIRE(u == Approx(x).margin(1e-9));
        REQUIRE(v == Approx(y).margin(1e-9));
        REQUIRE(back.z() == Approx(depth.depth(y, x)).margin(1e-9));
      }
  }
}

TEST_CASE("projected depth at the principal point is rotation-invariant about the optical axis",
          "[geometry]") {
  const int n = 17;  // integer principal point at (8,8)
  Intrinsics K(n, n, 8.0, 8.0, n, n);
  DepthField depth = DepthField::constant(n, n, 5.0);
  for (double angle : {0.1, 0.7, -1.2}) {
    ProjectionResult pr = project(depth, Pose6({0, 0, angle}, {0, 0, 0}), K);
    REQUIRE(pr.depth(8, 8) == Approx(5.0).margin(1e-12));
  }
}

TEST_CASE("canonical chart: pose from matrix has angle below pi", "[geometry]") {
  Rng rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    Pose6 a = random_pose(rng, 1.4, 1.0);
    Pose6 b = random_pose(rng, 1.4, 1.0);
    Pose6 c = compose(a, b);
    REQUIRE(c.rotation.norm() <= M_PI + 1e-12);
    REQUIRE((c.matrix() - a.matrix() * b.matrix()).norm() < 1e-10);
  }
}
