#pragma once

#include <optional>

#include "warpkit/io.hpp"
#include "warpkit/scene.hpp"

namespace warpkit {

// Everything needed to reproduce one experiment: weights, variant, scene,
// optimizer settings, step budget, seeds, output layout.
struct RunConfig {
  LossWeights weights;
  std::string variant = "full-bmp";
  ScenePresetOptions scene;
  std::optional<SceneSpec> scene_spec;  // explicit layout overrides preset
  int steps = 2000;
  uint64_t seed = 1;  // discriminator init; scene preset seed if unset there
  std::string out_dir = "out";
  AdamParams gen_adam;
  AdamParams pose_adam{-1.0};  // lr < 0: use gen_adam for pose tensors too
  AdamParams disc_adam;
  GeneratorConfig gen;
  SsimParams ssim;
  int disc_patch = 8;
  int threads = 1;
  int sources_per_snippet = 2;
  bool saturating_generator = false;
  int log_every = 1;
  double eval_cap = 80.0;

  void validate() const {
    weights.validate();
    ssim.validate();
    AblationVariant::parse(variant);
    if (steps < 0) throw ConfigError("steps must be >= 0");
    if (sources_per_snippet != 2 && sources_per_snippet != 4)
      throw ConfigError("sources_per_snippet must be 2 or 4");
    if (scene.width < 16 || scene.height < 16)
      throw ConfigError("resolution must be at least 16x16");
    if (threads < 1) throw ConfigError("threads must be >= 1");
  }
};

// --------------------------------------------------------------------------
// JSON bindings

inline json pose_to_json(const Pose6& p) {
  return {{"rotation", {p.rotation.x(), p.rotation.y(), p.rotation.z()}},
          {"translation",
           {p.translation.x(), p.translation.y(), p.translation.z()}}};
}

inline json vec3_to_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline Vec3 vec3_from_json(const json& j) {
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(),
              j.at(2).get<double>());
}

inline Pose6 pose_from_json(const json& j) {
  return Pose6(vec3_from_json(j.at("rotation")),
               vec3_from_json(j.at("translation")));
}

inline json plane_to_json(const PlaneSpec& p) {
  json j = {{"normal", vec3_to_json(p.normal)},
            {"offset", p.offset},
            {"seed", p.seed},
            {"base", p.base},
            {"amplitude", p.amplitude},
            {"wavelength", p.wavelength},
            {"octaves", p.octaves},
            {"octave_decay", p.octave_decay},
            {"floor_value", p.floor_value},
            {"world_texture", p.world_texture}};
  if (p.bounded) j["extent"] = {p.u0, p.u1, p.v0, p.v1};
  if (p.velocity.norm() > 0) j["velocity"] = vec3_to_json(p.velocity);
  return j;
}

inline PlaneSpec plane_from_json(const json& j) {
  PlaneSpec p;
  p.normal = vec3_from_json(j.at("normal"));
  p.offset = j.at("offset");
  p.seed = j.value("seed", p.seed);
  p.base = j.value("base", p.base);
  p.amplitude = j.value("amplitude", p.amplitude);
  p.wavelength = j.value("wavelength", p.wavelength);
  p.octaves = j.value("octaves", p.octaves);
  p.octave_decay = j.value("octave_decay", p.octave_decay);
  p.floor_value = j.value("floor_value", p.floor_value);
  p.world_texture = j.value("world_texture", p.world_texture);
  if (j.contains("extent")) {
    p.bounded = true;
    p.u0 = j["extent"][0];
    p.u1 = j["extent"][1];
    p.v0 = j["extent"][2];
    p.v1 = j["extent"][3];
  }
  if (j.contains("velocity")) p.velocity = vec3_from_json(j["velocity"]);
  return p;
}

inline json scene_spec_to_json(const SceneSpec& s) {
  json planes = json::array(), camera = json::array();
  for (const auto& p : s.planes) planes.push_back(plane_to_json(p));
  for (const auto& g : s.camera) camera.push_back(pose_to_json(g));
  return {{"width", s.width},   {"height", s.height},
          {"channels", s.channels}, {"fx", s.fx},
          {"fy", s.fy},         {"cx", s.cx},
          {"cy", s.cy},         {"planes", planes},
          {"camera", camera}};
}

inline SceneSpec scene_spec_from_json(const json& j) {
  SceneSpec s;
  s.width = j.value("width", s.width);
  s.height = j.value("height", s.height);
  s.channels = j.value("channels", s.channels);
  s.fx = j.value("fx", s.fx);
  s.fy = j.value("fy", s.fy);
  s.cx = j.value("cx", s.cx);
  s.cy = j.value("cy", s.cy);
  for (const auto& p : j.at("planes")) s.planes.push_back(plane_from_json(p));
  for (const auto& g : j.at("camera")) s.camera.push_back(pose_from_json(g));
  return s;
}

inline json preset_to_json(const ScenePresetOptions& o) {
  return {{"width", o.width},
          {"height", o.height},
          {"channels", o.channels},
          {"frames", o.frames},
          {"seed", o.seed},
          {"camera_step", vec3_to_json(o.camera_step)},
          {"yaw_rate", o.yaw_rate},
          {"occluder", o.occluder},
          {"moving_object", o.moving_object}};
}

inline ScenePresetOptions preset_from_json(const json& j) {
  ScenePresetOptions o;
  o.width = j.value("width", o.width);
  o.height = j.value("height", o.height);
  o.channels = j.value("channels", o.channels);
  o.frames = j.value("frames", o.frames);
  o.seed = j.value("seed", o.seed);
  if (j.contains("camera_step")) o.camera_step = vec3_from_json(j["camera_step"]);
  o.yaw_rate = j.value("yaw_rate", o.yaw_rate);
  o.occluder = j.value("occluder", o.occluder);
  o.moving_object = j.value("moving_object", o.moving_object);
  return o;
}

inline json run_config_to_json(const RunConfig& c) {
  json j = {{"weights", weights_to_json(c.weights)},
            {"variant", c.variant},
            {"scene", preset_to_json(c.scene)},
            {"steps", c.steps},
            {"seed", c.seed},
            {"out_dir", c.out_dir},
            {"gen_adam",
             {{"lr", c.gen_adam.lr},
              {"beta1", c.gen_adam.beta1},
              {"beta2", c.gen_adam.beta2},
              {"eps", c.gen_adam.eps}}},
            {"pose_adam",
             {{"lr", c.pose_adam.lr},
              {"beta1", c.pose_adam.beta1},
              {"beta2", c.pose_adam.beta2},
              {"eps", c.pose_adam.eps}}},
            {"disc_adam",
             {{"lr", c.disc_adam.lr},
              {"beta1", c.disc_adam.beta1},
              {"beta2", c.disc_adam.beta2},
              {"eps", c.disc_adam.eps}}},
            {"generator",
             {{"depth_min", c.gen.depth_min},
              {"depth_max", c.gen.depth_max},
              {"mask_logit_init", c.gen.mask_logit_init},
              {"depth_init", c.gen.depth_init},
              {"pose_init_std", c.gen.pose_init_std},
              {"pose_init", c.gen.pose_init}}},
            {"ssim",
             {{"window", c.ssim.window}, {"c1", c.ssim.c1}, {"c2", c.ssim.c2}}},
            {"disc_patch", c.disc_patch},
            {"threads", c.threads},
            {"sources_per_snippet", c.sources_per_snippet},
            {"saturating_generator", c.saturating_generator},
            {"log_every", c.log_every},
            {"eval_cap", c.eval_cap}};
  if (c.scene_spec) j["scene_spec"] = scene_spec_to_json(*c.scene_spec);
  return j;
}

inline RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  if (j.contains("weights")) c.weights = weights_from_json(j["weights"]);
  c.variant = j.value("variant", c.variant);
  if (j.contains("scene")) c.scene = preset_from_json(j["scene"]);
  if (j.contains("scene_spec"))
    c.scene_spec = scene_spec_from_json(j["scene_spec"]);
  c.steps = j.value("steps", c.steps);
  c.seed = j.value("seed", c.seed);
  c.out_dir = j.value("out_dir", c.out_dir);
  auto adam = [](const json& a, AdamParams& p) {
    p.lr = a.value("lr", p.lr);
    p.beta1 = a.value("beta1", p.beta1);
    p.beta2 = a.value("beta2", p.beta2);
    p.eps = a.value("eps", p.eps);
  };
  if (j.contains("gen_adam")) adam(j["gen_adam"], c.gen_adam);
  if (j.contains("pose_adam")) adam(j["pose_adam"], c.pose_adam);
  if (j.contains("disc_adam")) adam(j["disc_adam"], c.disc_adam);
  if (j.contains("generator")) {
    const auto& g = j["generator"];
    c.gen.depth_min = g.value("depth_min", c.gen.depth_min);
    c.gen.depth_max = g.value("depth_max", c.gen.depth_max);
    c.gen.mask_logit_init = g.value("mask_logit_init", c.gen.mask_logit_init);
    if (g.contains("depth_init"))
      c.gen.depth_init = g["depth_init"].get<std::vector<double>>();
    c.gen.pose_init_std = g.value("pose_init_std", c.gen.pose_init_std);
    if (g.contains("pose_init"))
      for (int j = 0; j < 6; ++j) c.gen.pose_init[j] = g["pose_init"][j];
  }
  if (j.contains("ssim")) {
    const auto& s = j["ssim"];
    c.ssim.window = s.value("window", c.ssim.window);
    c.ssim.c1 = s.value("c1", c.ssim.c1);
    c.ssim.c2 = s.value("c2", c.ssim.c2);
  }
  c.disc_patch = j.value("disc_patch", c.disc_patch);
  c.threads = j.value("threads", c.threads);
  c.sources_per_snippet = j.value("sources_per_snippet", c.sources_per_snippet);
  c.saturating_generator =
      j.value("saturating_generator", c.saturating_generator);
  c.log_every = j.value("log_every", c.log_every);
  c.eval_cap = j.value("eval_cap", c.eval_cap);
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config JSON: ") + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace warpkit
