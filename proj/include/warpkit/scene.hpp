#pragma once

#include "warpkit/train.hpp"

namespace warpkit {

// One textured plane. Unbounded planes form the scene background;
// bounded patches model occluders and independently moving objects.
struct PlaneSpec {
  Vec3 normal{0, 0, 1};  // unit, world frame
  double offset = 5.0;   // plane: normal . X = offset
  uint64_t seed = 1;

  // Procedural value-noise texture, in world units on the plane.
  double base = 0.5;
  double amplitude = 0.3;
  double wavelength = 2.0;
  int octaves = 2;
  double octave_decay = 0.35;
  double floor_value = 0.05;  // keeps intensities strictly positive

  // Texture coordinates from a sheared world-frame projection instead of
  // the plane-local frame: patterns continue across plane intersections,
  // so creases carry no photometric seam.
  bool world_texture = false;

  // Rectangular extent in plane-local coordinates; unbounded if unset.
  bool bounded = false;
  double u0 = 0, u1 = 0, v0 = 0, v1 = 0;

  // World translation per frame index (independently moving object).
  Vec3 velocity = Vec3::Zero();
};

struct SceneSpec {
  int width = 64, height = 64, channels = 1;
  double fx = 0, fy = 0, cx = -1, cy = -1;  // <=0 / <0: derived from size
  std::vector<PlaneSpec> planes;
  std::vector<Pose6> camera;  // camera-to-world, one per frame

  Intrinsics intrinsics() const {
    double f_x = fx > 0 ? fx : width;
    double f_y = fy > 0 ? fy : f_x;
    double c_x = cx >= 0 ? cx : (width - 1) / 2.0;
    double c_y = cy >= 0 ? cy : (height - 1) / 2.0;
    return Intrinsics(f_x, f_y, c_x, c_y, width, height);
  }
};

struct RenderedScene {
  SceneData data;            // frames + intrinsics
  std::vector<GridD> depth;  // exact per-frame depth
  std::vector<Pose6> poses;  // camera-to-world ground truth
};

namespace detail {

inline double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

inline double value_noise(double x, double y, uint64_t seed) {
  double xf = std::floor(x), yf = std::floor(y);
  int64_t x0 = static_cast<int64_t>(xf), y0 = static_cast<int64_t>(yf);
  double sx = smoothstep(x - xf), sy = smoothstep(y - yf);
  double v00 = hash01(x0, y0, seed);
  double v01 = hash01(x0 + 1, y0, seed);
  double v10 = hash01(x0, y0 + 1, seed);
  double v11 = hash01(x0 + 1, y0 + 1, seed);
  double top = v00 + sx * (v01 - v00);
  double bot = v10 + sx * (v11 - v10);
  return top + sy * (bot - top);
}

inline double plane_texture(const PlaneSpec& p, double u, double v, int ch) {
  uint64_t seed = p.seed + 7919ULL * static_cast<uint64_t>(ch);
  double acc = 0, norm = 0, amp = 1.0, freq = 1.0 / p.wavelength;
  for (int o = 0; o < p.octaves; ++o) {
    acc += amp * value_noise(u * freq + 13.7 * o, v * freq + 7.3 * o, seed + o);
    norm += amp;
    amp *= p.octave_decay;
    freq *= 2.0;
  }
  double t = acc / norm;
  return std::clamp(p.base + p.amplitude * (2.0 * t - 1.0), p.floor_value, 1.0);
}

// Deterministic tangent frame on the plane for texture coordinates.
inline void plane_basis(const Vec3& n, Vec3& e1, Vec3& e2) {
  Vec3 a = std::abs(n.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
  e1 = n.cross(a).normalized();
  e2 = n.cross(e1);
}

}  // namespace detail

// Ray-plane intersection renderer with a z-buffer; every pixel must hit
// some plane so rendered depth is positive everywhere.
inline RenderedScene render_scene(const SceneSpec& spec, int threads = 1) {
  if (spec.planes.empty()) throw DegenerateError("render_scene: no planes");
  if (spec.camera.empty()) throw DegenerateError("render_scene: no camera path");

  Intrinsics K = spec.intrinsics();
  RenderedScene out;
  out.data.K = K;
  out.poses = spec.camera;

  struct PlaneFrame {
    Vec3 n, e1, e2, shift;
    double offset;
  };

  for (size_t f = 0; f < spec.camera.size(); ++f) {
    const Pose6& G = spec.camera[f];
    Mat3 R = G.rotation_matrix();
    Vec3 C = G.translation;

    std::vector<PlaneFrame> pf;
    for (const PlaneSpec& p : spec.planes) {
      PlaneFrame q;
      q.n = p.normal.normalized();
      detail::plane_basis(q.n, q.e1, q.e2);
      q.shift = p.velocity * static_cast<double>(f);
      q.offset = p.offset + q.n.dot(q.shift);
      pf.push_back(q);
    }

    Image img(spec.height, spec.width, spec.channels);
    GridD depth(spec.height, spec.width);
    std::vector<uint8_t> covered(depth.size(), 0);

    parallel_rows(spec.height, threads, [&](int y) {
      for (int x = 0; x < spec.width; ++x) {
        Vec3 dir = R * K.ray(x, y);
        double best_z = std::numeric_limits<double>::infinity();
        int best_i = -1;
        double best_u = 0, best_v = 0;
        for (size_t i = 0; i < spec.planes.size(); ++i) {
          const PlaneSpec& p = spec.planes[i];
          const PlaneFrame& q = pf[i];
          double denom = q.n.dot(dir);
          if (std::abs(denom) < 1e-12) continue;
          double z = (q.offset - q.n.dot(C)) / denom;
          if (z <= kZEps || z >= best_z) continue;
          Vec3 X = C + z * dir;
          Vec3 local = X - q.shift - spec.planes[i].offset * q.n;
          double lu = local.dot(q.e1), lv = local.dot(q.e2);
          if (p.bounded &&
              (lu < p.u0 || lu > p.u1 || lv < p.v0 || lv > p.v1))
            continue;
          best_z = z;
          best_i = static_cast<int>(i);
          best_u = lu;
          best_v = lv;
        }
        if (best_i < 0) continue;
        covered[static_cast<size_t>(y) * spec.width + x] = 1;
        depth(y, x) = best_z;
        const PlaneSpec& hit = spec.planes[best_i];
        if (hit.world_texture) {
          Vec3 X = C + best_z * dir - pf[best_i].shift;
          best_u = X.x() + 0.35 * X.z();
          best_v = X.y() - 0.27 * X.z();
        }
        for (int ch = 0; ch < spec.channels; ++ch)
          img.at(y, x, ch) = detail::plane_texture(hit, best_u, best_v, ch);
      }
    });

    for (uint8_t c : covered)
      if (!c)
        throw DegenerateError(
            "render_scene: view not fully covered by scene planes");

    out.data.frames.push_back(std::move(img));
    out.depth.push_back(std::move(depth));
  }
  return out;
}

// Relative pose taking target-camera coordinates to source-camera
// coordinates, from camera-to-world ground truth.
inline Pose6 relative_pose(const Pose6& world_from_target,
                           const Pose6& world_from_source) {
  return compose(invert(world_from_source), world_from_target);
}

// Seeded benchmark scene: two unbounded planes meeting in a concave
// corner (continuous depth), an optional near occluder patch, and an
// optional independently moving patch.
struct ScenePresetOptions {
  int width = 64, height = 64, channels = 1, frames = 3;
  uint64_t seed = 1;
  Vec3 camera_step{0.15, 0.0, 0.02};
  double yaw_rate = 0.005;  // radians per frame about the camera y axis
  bool occluder = false;
  bool moving_object = false;
};

inline SceneSpec make_two_plane_scene(const ScenePresetOptions& o) {
  SceneSpec spec;
  spec.width = o.width;
  spec.height = o.height;
  spec.channels = o.channels;

  // Texture tuned so the bilinear resampling floor of a ground-truth warp
  // sits well under 1e-3 while keeping usable photometric gradients.
  PlaneSpec a;
  a.normal = Vec3(0.4, 0.0, 1.0).normalized();
  a.offset = a.normal.z() * 5.5;
  a.seed = o.seed * 31 + 1;
  a.wavelength = 1.6;
  a.amplitude = 0.45;
  a.octave_decay = 0.25;
  a.world_texture = true;
  PlaneSpec b = a;  // shared seed and pattern: no photometric seam
  b.normal = Vec3(-0.4, 0.15, 1.0).normalized();
  b.offset = b.normal.z() * 6.5;
  spec.planes = {a, b};

  if (o.occluder) {
    PlaneSpec occ;
    occ.normal = Vec3(0, 0, 1);
    occ.offset = 2.5;
    occ.seed = o.seed * 31 + 3;
    occ.wavelength = 0.8;
    occ.bounded = true;
    // plane_basis for n=(0,0,1) picks e1=(0,-1,0)-like axes; extents are
    // symmetric so orientation does not matter
    occ.u0 = -0.45;
    occ.u1 = 0.05;
    occ.v0 = -0.35;
    occ.v1 = 0.15;
    spec.planes.push_back(occ);
  }
  if (o.moving_object) {
    PlaneSpec mv;
    mv.normal = Vec3(0, 0, 1);
    mv.offset = 4.0;
    mv.seed = o.seed * 31 + 4;
    mv.wavelength = 1.0;
    mv.bounded = true;
    mv.u0 = 0.15;
    mv.u1 = 0.95;
    mv.v0 = -0.55;
    mv.v1 = 0.25;
    mv.velocity = Vec3(0.08, 0.0, 0.0);
    spec.planes.push_back(mv);
  }

  for (int f = 0; f < o.frames; ++f) {
    Pose6 g;
    g.rotation = Vec3(0, o.yaw_rate * f, 0);
    g.translation = o.camera_step * static_cast<double>(f);
    spec.camera.push_back(g);
  }
  return spec;
}

}  // namespace warpkit
