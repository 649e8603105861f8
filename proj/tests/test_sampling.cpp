#include <catch2/catch_amalgamated.hpp>

#include "warpkit/sampling.hpp"

using namespace warpkit;
using Catch::Approx;

namespace {

PixelGrid identity_grid(int h, int w) {
  PixelGrid g(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      g.u(y, x) = x;
      g.v(y, x) = y;
    }
  return g;
}

Image two_by_two() {
  Image img(2, 2, 1);
  img.at(0, 0, 0) = 0;
  img.at(0, 1, 0) = 1;
  img.at(1, 0, 0) = 2;
  img.at(1, 1, 0) = 3;
  return img;
}

}  // namespace

TEST_CASE("integer identity grid reproduces the source exactly", "[sampling]") {
  Rng rng(21);
  Image src(9, 7, 3);
  for (double& v : src.data) v = rng.uniform01();
  WarpResult out = bilinear_sample(src, identity_grid(9, 7));
  for (size_t i = 0; i < src.data.size(); ++i)
    REQUIRE(out.image.data[i] == src.data[i]);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 7; ++x) REQUIRE(out.validity(y, x) == 1);
}

TEST_CASE("constant image stays constant under any in-bounds grid",
          "[sampling]") {
  Image src(8, 8, 1, 0.37);
  Rng rng(22);
  PixelGrid g(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      g.u(y, x) = rng.uniform(0.0, 7.0);
      g.v(y, x) = rng.uniform(0.0, 7.0);
    }
  WarpResult out = bilinear_sample(src, g);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      REQUIRE(out.validity(y, x) == 1);
      REQUIRE(out.image.at(y, x, 0) == Approx(0.37).margin(1e-15));
    }
}

TEST_CASE("hand-evaluated 2x2 bilinear value and gradients", "[sampling]") {
  Image src = two_by_two();
  PixelGrid g(1, 1);
  g.u(0, 0) = 0.5;
  g.v(0, 0) = 0.5;
  WarpResult out = bilinear_sample(src, g);
  REQUIRE(out.image.at(0, 0, 0) == Approx(1.5).margin(1e-15));

  BilinearJacobian J = bilinear_sample_grad(src, g);
  REQUIRE(J.dout_du[0](0, 0) == Approx(1.0).margin(1e-15));
  REQUIRE(J.dout_dv[0](0, 0) == Approx(2.0).margin(1e-15));
}

TEST_CASE("gradient of a constant image is zero", "[sampling]") {
  Image src(4, 4, 1, 0.8);
  PixelGrid g(2, 2);
  g.u(0, 0) = 1.3;
  g.v(0, 0) = 2.1;
  g.u(0, 1) = 0.4;
  g.v(0, 1) = 0.9;
  g.u(1, 0) = 2.6;
  g.v(1, 0) = 1.5;
  g.u(1, 1) = 1.0;
  g.v(1, 1) = 1.0;
  BilinearJacobian J = bilinear_sample_grad(src, g);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) {
      REQUIRE(J.dout_du[0](y, x) == Approx(0.0).margin(1e-15));
      REQUIRE(J.dout_dv[0](y, x) == Approx(0.0).margin(1e-15));
    }
}

TEST_CASE("sampled values stay within the hull of their four neighbors",
          "[sampling]") {
  Rng rng(23);
  Image src(10, 10, 1);
  for (double& v : src.data) v = rng.uniform01();
  for (int trial = 0; trial < 200; ++trial) {
    double u = rng.uniform(0.0, 9.0);
    double v = rng.uniform(0.0, 9.0);
    PixelGrid g(1, 1);
    g.u(0, 0) = u;
    g.v(0, 0) = v;
    WarpResult out = bilinear_sample(src, g);
    int x0 = std::min(static_cast<int>(std::floor(u)), 8);
    int y0 = std::min(static_cast<int>(std::floor(v)), 8);
    double lo = std::min({src.at(y0, x0, 0), src.at(y0, x0 + 1, 0),
                          src.at(y0 + 1, x0, 0), src.at(y0 + 1, x0 + 1, 0)});
    double hi = std::max({src.at(y0, x0, 0), src.at(y0, x0 + 1, 0),
                          src.at(y0 + 1, x0, 0), src.at(y0 + 1, x0 + 1, 0)});
    REQUIRE(out.image.at(0, 0, 0) >= lo - 1e-12);
    REQUIRE(out.image.at(0, 0, 0) <= hi + 1e-12);
  }
}

TEST_CASE("invalid and out-of-bounds pixels are zero-filled", "[sampling]") {
  Image src(4, 4, 1, 0.9);
  PixelGrid g(2, 2);
  g.u(0, 0) = -0.5;  // out of bounds
  g.v(0, 0) = 1.0;
  g.u(0, 1) = 5.0;  // out of bounds
  g.v(0, 1) = 1.0;
  g.u(1, 0) = 1.0;
  g.v(1, 0) = 1.0;
  g.valid(1, 0) = 0;  // projection already invalid
  g.u(1, 1) = 2.0;
  g.v(1, 1) = 2.0;
  WarpResult out = bilinear_sample(src, g);
  REQUIRE(out.validity(0, 0) == 0);
  REQUIRE(out.validity(0, 1) == 0);
  REQUIRE(out.validity(1, 0) == 0);
  REQUIRE(out.validity(1, 1) == 1);
  REQUIRE(out.image.at(0, 0, 0) == 0.0);
  REQUIRE(out.image.at(0, 1, 0) == 0.0);
  REQUIRE(out.image.at(1, 0, 0) == 0.0);
  REQUIRE(out.image.at(1, 1, 0) == Approx(0.9));
}

TEST_CASE("warp under the identity pose is the identity map", "[sampling]") {
  const int n = 16;
  Intrinsics K(n, n, (n - 1) / 2.0, (n - 1) / 2.0, n, n);
  Rng rng(24);
  Image src(n, n, 1);
  for (double& v : src.data) v = rng.uniform01();
  DepthField depth = DepthField::constant(n, n, 5.0);
  WarpResult out = warp_image(src, depth, Pose6::identity(), K);
  for (size_t i = 0; i < src.data.size(); ++i)
    REQUIRE(out.image.data[i] == Approx(src.data[i]).margin(1e-12));
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) REQUIRE(out.validity(y, x) == 1);
}

TEST_CASE("a large translation pushes every projection out of view",
          "[sampling]") {
  const int n = 16;
  Intrinsics K(n, n, (n - 1) / 2.0, (n - 1) / 2.0, n, n);
  Image src(n, n, 1, 0.5);
  DepthField depth = DepthField::constant(n, n, 2.0);
  WarpResult out = warp_image(src, depth, Pose6({0, 0, 0}, {50.0, 0, 0}), K);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      REQUIRE(out.validity(y, x) == 0);
      REQUIRE(out.image.at(y, x, 0) == 0.0);
    }
}

TEST_CASE("plane warp equals a column shift at integer disparity",
          "[sampling]") {
  const int n = 16;
  const double d = 4.0;
  Intrinsics K(n, n, (n - 1) / 2.0, (n - 1) / 2.0, n, n);
  const double tx = 3.0 * d / K.fx;  // disparity exactly 3 columns
  Rng rng(25);
  Image src(n, n, 1);
  for (double& v : src.data) v = rng.uniform01();
  DepthField depth = DepthField::constant(n, n, d);
  WarpResult out = warp_image(src, depth, Pose6({0, 0, 0}, {tx, 0, 0}), K);

  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      bool inside = x + 3 <= n - 1;
      REQUIRE(static_cast<bool>(out.validity(y, x)) == inside);
      if (inside)
        REQUIRE(out.image.at(y, x, 0) ==
                Approx(src.at(y, x + 3, 0)).margin(1e-12));
    }
}

TEST_CASE("shrinking the translation never shrinks the valid set",
          "[sampling]") {
  const int n = 16;
  Intrinsics K(n, n, (n - 1) / 2.0, (n - 1) / 2.0, n, n);
  Image src(n, n, 1, 0.5);
  DepthField depth = DepthField::constant(n, n, 5.0);
  WarpResult first = warp_image(src, depth, Pose6({0, 0, 0}, {2.0, 0, 0}), K);
  GridB prev = first.validity;
  for (double tx : {1.0, 0.5, 0.25, 0.0}) {
    WarpResult out = warp_image(src, depth, Pose6({0, 0, 0}, {tx, 0, 0}), K);
    int prev_count = 0, count = 0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        if (prev(y, x)) {
          ++prev_count;
          // monotone: anything valid at the larger translation stays valid
          REQUIRE(out.validity(y, x) == 1);
        }
        if (out.validity(y, x)) ++count;
      }
    REQUIRE(count >= prev_count);
    prev = out.validity;
  }
}

TEST_CASE("sampling a degenerate source is rejected", "[sampling]") {
  Image src(1, 1, 1, 0.5);
  REQUIRE_THROWS_AS(bilinear_sample(src, identity_grid(1, 1)), DimensionError);
}
