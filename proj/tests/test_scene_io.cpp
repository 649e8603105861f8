#include <catch2/catch_amalgamated.hpp>

#include "warpkit/config.hpp"
#include "warpkit/runner.hpp"

using namespace warpkit;
using Catch::Approx;

namespace {

SceneSpec fronto_plane(double d, int n, int frames, double step_x) {
  SceneSpec spec;
  spec.width = spec.height = n;
  PlaneSpec p;
  p.normal = Vec3(0, 0, 1);
  p.offset = d;
  p.seed = 9;
  spec.planes = {p};
  for (int f = 0; f < frames; ++f)
    spec.camera.push_back(Pose6({0, 0, 0}, {step_x * f, 0, 0}));
  return spec;
}

}  // namespace

TEST_CASE("a fronto-parallel plane renders constant depth", "[scene]") {
  const double d = 4.2;
  RenderedScene scene = render_scene(fronto_plane(d, 16, 1, 0));
  for (size_t i = 0; i < scene.depth[0].size(); ++i)
    REQUIRE(scene.depth[0][i] == Approx(d).margin(1e-12));
  for (double v : scene.data.frames[0].data) {
    REQUIRE(v >= 0.05);
    REQUIRE(v <= 1.0);
  }
}

TEST_CASE("two intersecting planes produce a piecewise depth with the analytic boundary",
          "[scene]") {
  const int n = 32;
  SceneSpec spec;
  spec.width = spec.height = n;
  PlaneSpec a, b;
  a.normal = Vec3(0.3, 0, 1).normalized();
  a.offset = a.normal.z() * 5.0;  // depth 5 at the optical axis
  a.seed = 1;
  b.normal = Vec3(-0.3, 0, 1).normalized();
  b.offset = b.normal.z() * 6.0;
  b.seed = 2;
  spec.planes = {a, b};
  spec.camera = {Pose6::identity()};
  RenderedScene scene = render_scene(spec);
  Intrinsics K = spec.intrinsics();

  int switches = 0;
  int prev_plane = -1;
  for (int x = 0; x < n; ++x) {
    Vec3 dir = K.ray(x, n / 2);
    double za = a.offset / a.normal.dot(dir);
    double zb = b.offset / b.normal.dot(dir);
    double expect = std::min(za, zb);
    REQUIRE(scene.depth[0](n / 2, x) == Approx(expect).margin(1e-10));
    int plane = za < zb ? 0 : 1;
    if (prev_plane >= 0 && plane != prev_plane) ++switches;
    prev_plane = plane;
  }
  REQUIRE(switches == 1);  // one straight boundary through the row
}

TEST_CASE("ground-truth warp reproduces the target exactly at integer disparity",
          "[scene]") {
  const int n = 32;
  const double d = 4.0;
  SceneSpec spec = fronto_plane(d, n, 2, 3.0 * d / n);  // fx = n
  RenderedScene scene = render_scene(spec);

  DepthField depth = DepthField::from_depth(scene.depth[0]);
  Pose6 rel = relative_pose(scene.poses[0], scene.poses[1]);
  WarpResult warped =
      warp_image(scene.data.frames[1], depth, rel, scene.data.K);

  int n_valid = 0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      if (!warped.validity(y, x)) continue;
      ++n_valid;
      REQUIRE(warped.image.at(y, x, 0) ==
              Approx(scene.data.frames[0].at(y, x, 0)).margin(1e-6));
    }
  REQUIRE(n_valid >= n * (n - 4));
}

TEST_CASE("the benchmark corner scene is smooth enough for sub-1e-3 photometric residue at truth",
          "[scene]") {
  ScenePresetOptions o;
  o.width = o.height = 64;
  o.frames = 3;
  o.seed = 1;
  RenderedScene scene = render_scene(make_two_plane_scene(o));
  DepthField depth = DepthField::from_depth(scene.depth[1]);
  for (int src : {0, 2}) {
    Pose6 rel = relative_pose(scene.poses[1], scene.poses[src]);
    WarpResult warped =
        warp_image(scene.data.frames[src], depth, rel, scene.data.K);
    ReconstructionLoss rec =
        reconstruction_loss(scene.data.frames[1], warped, LossWeights{});
    REQUIRE(rec.value < 1e-3);
  }
}

TEST_CASE("moving-object planes change between frames", "[scene]") {
  ScenePresetOptions o;
  o.width = o.height = 32;
  o.frames = 3;
  o.seed = 5;
  o.moving_object = true;
  o.camera_step = Vec3(0, 0, 0);  // static camera isolates object motion
  o.yaw_rate = 0;
  RenderedScene scene = render_scene(make_two_plane_scene(o));
  double diff = 0;
  for (size_t i = 0; i < scene.depth[0].size(); ++i)
    diff += std::abs(scene.depth[0][i] - scene.depth[2][i]);
  REQUIRE(diff > 0.1);
}

TEST_CASE("a camera behind every plane is an empty scene", "[scene]") {
  SceneSpec spec = fronto_plane(-3.0, 16, 1, 0);  // plane behind the camera
  REQUIRE_THROWS_AS(render_scene(spec), DegenerateError);
  SceneSpec none;
  none.width = none.height = 16;
  none.camera = {Pose6::identity()};
  REQUIRE_THROWS_AS(render_scene(none), DegenerateError);
}

TEST_CASE("rendering is invariant to the thread count", "[scene]") {
  ScenePresetOptions o;
  o.width = o.height = 32;
  o.frames = 2;
  o.seed = 12;
  RenderedScene a = render_scene(make_two_plane_scene(o), 1);
  RenderedScene b = render_scene(make_two_plane_scene(o), 2);
  for (size_t f = 0; f < a.data.frames.size(); ++f) {
    REQUIRE(a.data.frames[f].data == b.data.frames[f].data);
  }
}

TEST_CASE("float planar files round-trip bit-exactly", "[io]") {
  Rng rng(81);
  Image img(9, 13, 3);
  for (double& v : img.data) v = rng.uniform(-2.0, 7.0);
  std::string path = "/tmp/warpkit_test_img.bin";
  save_float_planar(path, img);
  Image back = load_float_planar(path);
  REQUIRE(back.h == img.h);
  REQUIRE(back.w == img.w);
  REQUIRE(back.c == img.c);
  for (size_t i = 0; i < img.data.size(); ++i)
    REQUIRE(back.data[i] == static_cast<double>(static_cast<float>(img.data[i])));
}

TEST_CASE("PNG quantization error stays within one step", "[io]") {
  Rng rng(82);
  for (int c : {1, 3}) {
    Image img(8, 8, c);
    for (double& v : img.data) v = rng.uniform01();
    std::string path = "/tmp/warpkit_test_img.png";
    save_png(path, img);
    Image back = load_png(path);
    REQUIRE(back.c == c);
    for (size_t i = 0; i < img.data.size(); ++i)
      REQUIRE(std::abs(back.data[i] - img.data[i]) <= 1.0 / 255.0 + 1e-12);
  }
}

TEST_CASE("identity pose writes the documented KITTI row", "[io]") {
  Trajectory t;
  t.poses.push_back(Pose6::identity());
  std::string path = "/tmp/warpkit_test_poses.txt";
  save_kitti_poses(path, t);
  std::ifstream f(path);
  std::string line;
  std::getline(f, line);
  REQUIRE(line == "1 0 0 0 0 1 0 0 0 0 1 0");
}

TEST_CASE("pose files are ingested bit-exactly by an independent parser",
          "[io]") {
  Rng rng(83);
  Trajectory t;
  for (int i = 0; i < 7; ++i) {
    Vec3 r(0.4 * rng.normal(), 0.4 * rng.normal(), 0.4 * rng.normal());
    Vec3 tr(3 * rng.normal(), 3 * rng.normal(), 3 * rng.normal());
    t.poses.emplace_back(r, tr);
  }
  std::string path = "/tmp/warpkit_test_poses2.txt";
  save_kitti_poses(path, t);

  // independent parser: strtod over whitespace-split tokens
  std::ifstream f(path);
  std::string line;
  size_t row = 0;
  while (std::getline(f, line)) {
    const char* s = line.c_str();
    char* end = nullptr;
    Mat4 m = t.poses[row].matrix();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) {
        double v = std::strtod(s, &end);
        REQUIRE(s != end);
        s = end;
        REQUIRE(v == m(r, c));  // bit-exact
      }
    ++row;
  }
  REQUIRE(row == t.poses.size());

  // and by our own reader, matrix-for-matrix
  Trajectory back = load_kitti_poses(path);
  REQUIRE(back.size() == t.size());
  for (size_t i = 0; i < t.size(); ++i)
    REQUIRE((back.poses[i].matrix() - t.poses[i].matrix()).norm() < 1e-12);
}

TEST_CASE("loss weights serialize as flat key-value JSON", "[io]") {
  LossWeights w;
  w.beta = 0.4;
  w.gamma = 0.001;
  json j = weights_to_json(w);
  REQUIRE(j.at("alpha3") == 0.85);
  LossWeights back = weights_from_json(j);
  REQUIRE(back.beta == 0.4);
  REQUIRE(back.gamma == 0.001);
  REQUIRE(back.theta == 0.9);

  json bad = j;
  bad["theta"] = 1.5;
  REQUIRE_THROWS_AS(weights_from_json(bad), ConfigError);
}

TEST_CASE("run config and scene spec survive a JSON round trip", "[io]") {
  RunConfig cfg;
  cfg.variant = "full-fmp";
  cfg.steps = 123;
  cfg.scene.occluder = true;
  cfg.gen.depth_init = {4.0, 5.0, 6.0};
  SceneSpec spec = make_two_plane_scene(cfg.scene);
  cfg.scene_spec = spec;

  RunConfig back = run_config_from_json(run_config_to_json(cfg));
  REQUIRE(back.variant == "full-fmp");
  REQUIRE(back.steps == 123);
  REQUIRE(back.scene.occluder);
  REQUIRE(back.gen.depth_init == cfg.gen.depth_init);
  REQUIRE(back.scene_spec.has_value());
  REQUIRE(back.scene_spec->planes.size() == spec.planes.size());
  RenderedScene a = render_scene(spec);
  RenderedScene b = render_scene(*back.scene_spec);
  REQUIRE(a.data.frames[0].data == b.data.frames[0].data);
}

TEST_CASE("missing sidecars and malformed inputs raise io errors", "[io]") {
  std::string path = "/tmp/warpkit_orphan.bin";
  std::ofstream(path) << "data";
  std::remove(sidecar_path(path).c_str());
  REQUIRE_THROWS_AS(load_float_planar(path), IoError);
  REQUIRE_THROWS_AS(load_kitti_poses("/tmp/warpkit_does_not_exist.txt"), IoError);
}
