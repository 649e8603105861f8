#pragma once

#include <png.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "warpkit/eval.hpp"
#include "warpkit/losses.hpp"
#include "warpkit/nn.hpp"

namespace warpkit {

using json = nlohmann::json;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// PNG (8-bit display format)

inline void save_png(const std::string& path, const Image& img) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("save_png: cannot open " + path);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("save_png: libpng failure for " + path);
  }
  png_init_io(png, fp);
  int color = img.c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, img.w, img.h, 8, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<uint8_t> row(static_cast<size_t>(img.w) * img.c);
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x)
      for (int ch = 0; ch < img.c; ++ch) {
        double v = std::clamp(img.at(y, x, ch), 0.0, 1.0);
        row[static_cast<size_t>(x) * img.c + ch] =
            static_cast<uint8_t>(std::lround(v * 255.0));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

inline Image load_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("load_png: cannot open " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError("load_png: libpng failure for " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  int w = png_get_image_width(png, info);
  int h = png_get_image_height(png, info);
  int c = png_get_channels(png, info);
  if (c != 1 && c != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError("load_png: unsupported channel count in " + path);
  }

  Image img(h, w, c);
  std::vector<uint8_t> row(static_cast<size_t>(w) * c);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        img.at(y, x, ch) = row[static_cast<size_t>(x) * c + ch] / 255.0;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

// ---------------------------------------------------------------------------
// Lossless 32-bit float planar binary with a JSON sidecar

inline std::string sidecar_path(const std::string& bin_path) {
  if (bin_path.size() > 4 && bin_path.ends_with(".bin"))
    return bin_path.substr(0, bin_path.size() - 4) + ".json";
  return bin_path + ".json";
}

inline void save_float_planar(const std::string& bin_path, const Image& img) {
  std::ofstream f(bin_path, std::ios::binary);
  if (!f) throw IoError("save_float_planar: cannot open " + bin_path);
  std::vector<float> buf(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i)
    buf[i] = static_cast<float>(img.data[i]);
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!f) throw IoError("save_float_planar: write failed for " + bin_path);

  json side = {{"dtype", "float32"}, {"layout", "planar"},
               {"order", "row-major"}, {"width", img.w},
               {"height", img.h},     {"channels", img.c}};
  std::ofstream sf(sidecar_path(bin_path));
  if (!sf) throw IoError("save_float_planar: cannot open sidecar");
  sf << side.dump(2) << "\n";
}

inline Image load_float_planar(const std::string& bin_path) {
  std::ifstream sf(sidecar_path(bin_path));
  if (!sf) throw IoError("load_float_planar: missing sidecar for " + bin_path);
  json side;
  try {
    sf >> side;
  } catch (const json::exception& e) {
    throw IoError(std::string("load_float_planar: bad sidecar: ") + e.what());
  }
  if (side.value("dtype", "") != "float32" ||
      side.value("layout", "") != "planar")
    throw IoError("load_float_planar: unsupported format in sidecar");
  int w = side.at("width"), h = side.at("height"), c = side.at("channels");

  std::ifstream f(bin_path, std::ios::binary);
  if (!f) throw IoError("load_float_planar: cannot open " + bin_path);
  Image img(h, w, c);
  std::vector<float> buf(img.data.size());
  f.read(reinterpret_cast<char*>(buf.data()),
         static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (f.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
    throw IoError("load_float_planar: short read from " + bin_path);
  for (size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i];
  return img;
}

inline void save_float_grid(const std::string& bin_path, const GridD& g) {
  save_float_planar(bin_path, image_from_grid(g));
}

inline GridD load_float_grid(const std::string& bin_path) {
  Image img = load_float_planar(bin_path);
  if (img.c != 1) throw IoError("load_float_grid: expected 1 channel");
  return grid_from_plane(img, 0);
}

// ---------------------------------------------------------------------------
// KITTI odometry pose text: one row per pose, 12 numbers, the row-major
// upper 3x4 [R|t] of the camera-to-world matrix.

inline void save_kitti_poses(const std::string& path, const Trajectory& t) {
  std::ofstream f(path);
  if (!f) throw IoError("save_kitti_poses: cannot open " + path);
  for (const Pose6& p : t.poses) {
    Mat4 m = p.matrix();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) {
        f << format_double(m(r, c));
        f << (r == 2 && c == 3 ? '\n' : ' ');
      }
  }
  if (!f) throw IoError("save_kitti_poses: write failed for " + path);
}

inline Trajectory load_kitti_poses(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("load_kitti_poses: cannot open " + path);
  Trajectory t;
  std::string line;
  while (std::getline(f, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    Mat4 m = Mat4::Identity();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c)
        if (!(ss >> m(r, c)))
          throw IoError("load_kitti_poses: malformed row in " + path);
    t.poses.push_back(Pose6::from_matrix(m));
  }
  if (t.poses.empty()) throw IoError("load_kitti_poses: no poses in " + path);
  return t;
}

// ---------------------------------------------------------------------------
// Checkpoints: versioned magic, JSON header, raw little-endian doubles.

constexpr char kCheckpointMagic[8] = {'W', 'K', 'C', 'K', 'P', 'T', '0', '1'};

struct OptimizerRef {
  std::string name;
  Adam* adam;
};

inline void save_checkpoint(const std::string& path,
                            const std::vector<ParamTensor*>& tensors,
                            const std::vector<OptimizerRef>& opts) {
  json header;
  header["version"] = 1;
  std::vector<double> payload;
  auto push = [&payload](const std::vector<double>& v) {
    size_t off = payload.size();
    payload.insert(payload.end(), v.begin(), v.end());
    return off;
  };

  header["tensors"] = json::array();
  for (const ParamTensor* t : tensors) {
    header["tensors"].push_back({{"name", t->name},
                                 {"shape", t->shape},
                                 {"offset", push(t->values)},
                                 {"count", t->values.size()}});
  }
  header["optimizers"] = json::array();
  for (const OptimizerRef& o : opts) {
    json jo = {{"name", o.name},
               {"step", o.adam->step_count()},
               {"lr", o.adam->params().lr},
               {"beta1", o.adam->params().beta1},
               {"beta2", o.adam->params().beta2},
               {"eps", o.adam->params().eps},
               {"slots", json::array()}};
    for (const Adam::Slot& s : o.adam->slots()) {
      jo["slots"].push_back({{"m_offset", push(s.m)},
                             {"v_offset", push(s.v)},
                             {"count", s.m.size()}});
    }
    header["optimizers"].push_back(jo);
  }
  header["total_doubles"] = payload.size();

  std::string hs = header.dump();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("save_checkpoint: cannot open " + path);
  f.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  uint64_t hlen = hs.size();
  f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  f.write(reinterpret_cast<const char*>(payload.data()),
          static_cast<std::streamsize>(payload.size() * sizeof(double)));
  if (!f) throw IoError("save_checkpoint: write failed for " + path);
}

inline void load_checkpoint(const std::string& path,
                            const std::vector<ParamTensor*>& tensors,
                            const std::vector<OptimizerRef>& opts) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("load_checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  if (f.gcount() != 8 || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw IoError("load_checkpoint: bad magic in " + path);
  uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(hlen));
  json header;
  try {
    header = json::parse(hs);
  } catch (const json::exception& e) {
    throw IoError(std::string("load_checkpoint: bad header: ") + e.what());
  }
  size_t total = header.at("total_doubles");
  std::vector<double> payload(total);
  f.read(reinterpret_cast<char*>(payload.data()),
         static_cast<std::streamsize>(total * sizeof(double)));
  if (f.gcount() != static_cast<std::streamsize>(total * sizeof(double)))
    throw IoError("load_checkpoint: short payload in " + path);

  auto fetch = [&payload](size_t off, size_t count, std::vector<double>& dst) {
    if (off + count > payload.size())
      throw IoError("load_checkpoint: payload range out of bounds");
    dst.assign(payload.begin() + off, payload.begin() + off + count);
  };

  for (ParamTensor* t : tensors) {
    bool found = false;
    for (const auto& jt : header.at("tensors")) {
      if (jt.at("name") != t->name) continue;
      if (jt.at("count") != t->values.size())
        throw IoError("load_checkpoint: size mismatch for " + t->name);
      fetch(jt.at("offset"), jt.at("count"), t->values);
      found = true;
      break;
    }
    if (!found) throw IoError("load_checkpoint: missing tensor " + t->name);
  }
  for (const OptimizerRef& o : opts) {
    bool found = false;
    for (const auto& jo : header.at("optimizers")) {
      if (jo.at("name") != o.name) continue;
      o.adam->set_step_count(jo.at("step"));
      auto& slots = o.adam->slots();
      if (jo.at("slots").size() != slots.size())
        throw IoError("load_checkpoint: optimizer slot mismatch for " + o.name);
      for (size_t i = 0; i < slots.size(); ++i) {
        const auto& js = jo.at("slots")[i];
        if (js.at("count") != slots[i].m.size())
          throw IoError("load_checkpoint: slot size mismatch for " + o.name);
        fetch(js.at("m_offset"), js.at("count"), slots[i].m);
        fetch(js.at("v_offset"), js.at("count"), slots[i].v);
      }
      found = true;
      break;
    }
    if (!found) throw IoError("load_checkpoint: missing optimizer " + o.name);
  }
}

// ---------------------------------------------------------------------------
// Flat key-value JSON for the loss weights.

inline json weights_to_json(const LossWeights& w) {
  return {{"alpha", w.alpha},   {"alpha1", w.alpha1}, {"alpha2", w.alpha2},
          {"alpha3", w.alpha3}, {"alpha4", w.alpha4}, {"phi", w.phi},
          {"beta", w.beta},     {"gamma", w.gamma},   {"theta", w.theta}};
}

inline LossWeights weights_from_json(const json& j) {
  LossWeights w;
  w.alpha = j.value("alpha", w.alpha);
  w.alpha1 = j.value("alpha1", w.alpha1);
  w.alpha2 = j.value("alpha2", w.alpha2);
  w.alpha3 = j.value("alpha3", w.alpha3);
  w.alpha4 = j.value("alpha4", w.alpha4);
  w.phi = j.value("phi", w.phi);
  w.beta = j.value("beta", w.beta);
  w.gamma = j.value("gamma", w.gamma);
  w.theta = j.value("theta", w.theta);
  w.validate();
  return w;
}

inline json depth_report_to_json(const DepthEvalReport& r) {
  return {{"abs_rel", r.abs_rel}, {"sq_rel", r.sq_rel},
          {"rmse", r.rmse},       {"rmse_log", r.rmse_log},
          {"acc1", r.acc1},       {"acc2", r.acc2},
          {"acc3", r.acc3},       {"n_pixels", r.n_pixels}};
}

inline json traj_report_to_json(const TrajEvalReport& r, const std::string& align_mode) {
  json per = json::array();
  for (const auto& pl : r.per_length)
    per.push_back({{"length", pl.length},
                   {"t_err_percent", pl.t_err_percent},
                   {"r_err_deg_per_100", pl.r_err_deg_per_100},
                   {"count", pl.count}});
  return {{"t_err_percent", r.t_err_percent},
          {"r_err_deg_per_100", r.r_err_deg_per_100},
          {"per_length", per},
          {"too_short", r.too_short},
          {"alignment", align_mode}};
}

}  // namespace warpkit
