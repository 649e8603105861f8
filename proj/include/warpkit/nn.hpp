#pragma once

#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "warpkit/core.hpp"

namespace warpkit {

// Flat parameter array with a gradient buffer of the same shape.
struct ParamTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> values;
  std::vector<double> grads;

  ParamTensor() = default;
  ParamTensor(std::string n, std::vector<int> shp, double fill = 0.0)
      : name(std::move(n)), shape(std::move(shp)) {
    size_t total = 1;
    for (int d : shape) total *= static_cast<size_t>(d);
    values.assign(total, fill);
    grads.assign(total, 0.0);
  }

  size_t size() const { return values.size(); }
  void zero_grad() { std::fill(grads.begin(), grads.end(), 0.0); }
};

inline double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}
inline double softplus_inv(double y) {  // y > 0
  return y > 30.0 ? y : std::log(std::expm1(y));
}
inline double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                : std::exp(x) / (1.0 + std::exp(x));
}

// Bias-corrected Adam over a fixed set of registered tensors.
struct AdamParams {
  double lr = 0.0002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamParams hp) : hp_(hp) {}

  // lr_scale gives a tensor its own effective learning rate relative to
  // the shared one (direct pose optimization wants faster travel than the
  // dense fields).
  void register_tensor(ParamTensor* t, double lr_scale = 1.0) {
    tensors_.push_back(t);
    slots_.push_back({std::vector<double>(t->size(), 0.0),
                      std::vector<double>(t->size(), 0.0), lr_scale});
  }

  void step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(hp_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(hp_.beta2, static_cast<double>(step_count_));
    for (size_t k = 0; k < tensors_.size(); ++k) {
      ParamTensor& t = *tensors_[k];
      Slot& s = slots_[k];
      for (size_t i = 0; i < t.size(); ++i) {
        double g = t.grads[i];
        s.m[i] = hp_.beta1 * s.m[i] + (1.0 - hp_.beta1) * g;
        s.v[i] = hp_.beta2 * s.v[i] + (1.0 - hp_.beta2) * g * g;
        double mhat = s.m[i] / bc1;
        double vhat = s.v[i] / bc2;
        t.values[i] -= hp_.lr * s.lr_scale * mhat / (std::sqrt(vhat) + hp_.eps);
      }
    }
  }

  int64_t step_count() const { return step_count_; }
  const AdamParams& params() const { return hp_; }

  // Checkpoint access: moments are stored per registered tensor, in
  // registration order.
  struct Slot {
    std::vector<double> m, v;
    double lr_scale = 1.0;
  };
  std::vector<Slot>& slots() { return slots_; }
  const std::vector<Slot>& slots() const { return slots_; }
  void set_step_count(int64_t s) { step_count_ = s; }
  const std::vector<ParamTensor*>& tensors() const { return tensors_; }

 private:
  AdamParams hp_;
  int64_t step_count_ = 0;
  std::vector<ParamTensor*> tensors_;
  std::vector<Slot> slots_;
};

// Small fully connected patch discriminator: flattened patch -> hidden
// layers with leaky ReLU -> sigmoid probability.
class Discriminator {
 public:
  static constexpr double kLeakySlope = 0.2;

  Discriminator() = default;
  Discriminator(int patch, int channels, uint64_t seed,
                std::vector<int> hidden = {64, 32})
      : patch_(patch), channels_(channels) {
    std::vector<int> sizes;
    sizes.push_back(patch * patch * channels);
    for (int hsz : hidden) sizes.push_back(hsz);
    sizes.push_back(1);

    Rng rng(seed);
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
      weights_.emplace_back("disc/w" + std::to_string(l),
                            std::vector<int>{sizes[l + 1], sizes[l]});
      biases_.emplace_back("disc/b" + std::to_string(l),
                           std::vector<int>{sizes[l + 1]});
      for (double& w : weights_.back().values) w = 0.05 * rng.normal();
    }
  }

  int patch() const { return patch_; }
  int channels() const { return channels_; }
  int input_size() const { return patch_ * patch_ * channels_; }
  size_t layers() const { return weights_.size(); }

  struct Cache {
    std::vector<std::vector<double>> inputs;  // input of each layer
    std::vector<std::vector<double>> preact;  // z of each layer
    double prob = 0;
  };

  Cache forward(std::span<const double> input) const {
    if (static_cast<int>(input.size()) != input_size())
      throw DimensionError("disc_forward: input size mismatch");
    Cache c;
    std::vector<double> x(input.begin(), input.end());
    for (size_t l = 0; l < weights_.size(); ++l) {
      c.inputs.push_back(x);
      const auto& W = weights_[l];
      const auto& b = biases_[l];
      int out_n = W.shape[0], in_n = W.shape[1];
      std::vector<double> z(out_n);
      for (int o = 0; o < out_n; ++o) {
        double acc = b.values[o];
        const double* wrow = &W.values[static_cast<size_t>(o) * in_n];
        for (int i = 0; i < in_n; ++i) acc += wrow[i] * x[i];
        z[o] = acc;
      }
      c.preact.push_back(z);
      if (l + 1 < weights_.size()) {
        x.resize(z.size());
        for (size_t i = 0; i < z.size(); ++i)
          x[i] = z[i] > 0 ? z[i] : kLeakySlope * z[i];
      }
    }
    c.prob = sigmoid(c.preact.back()[0]);
    return c;
  }

  // Backpropagates d(loss)/d(prob); returns d(loss)/d(input). Parameter
  // gradients accumulate only when requested (the generator pass treats
  // the discriminator as frozen).
  std::vector<double> backward(const Cache& c, double d_prob,
                               bool accumulate_param_grads) {
    double p = c.prob;
    std::vector<double> dz{d_prob * p * (1.0 - p)};
    for (size_t li = weights_.size(); li-- > 0;) {
      auto& W = weights_[li];
      auto& b = biases_[li];
      int out_n = W.shape[0], in_n = W.shape[1];
      const auto& x = c.inputs[li];
      std::vector<double> dx(in_n, 0.0);
      for (int o = 0; o < out_n; ++o) {
        double g = dz[o];
        if (g == 0.0) continue;
        double* wrow = &W.values[static_cast<size_t>(o) * in_n];
        if (accumulate_param_grads) {
          double* grow = &W.grads[static_cast<size_t>(o) * in_n];
          for (int i = 0; i < in_n; ++i) grow[i] += g * x[i];
          b.grads[o] += g;
        }
        for (int i = 0; i < in_n; ++i) dx[i] += g * wrow[i];
      }
      if (li == 0) return dx;
      const auto& z_prev = c.preact[li - 1];
      dz.assign(z_prev.size(), 0.0);
      for (size_t i = 0; i < z_prev.size(); ++i)
        dz[i] = dx[i] * (z_prev[i] > 0 ? 1.0 : kLeakySlope);
    }
    return {};
  }

  std::vector<ParamTensor*> parameters() {
    std::vector<ParamTensor*> out;
    for (size_t l = 0; l < weights_.size(); ++l) {
      out.push_back(&weights_[l]);
      out.push_back(&biases_[l]);
    }
    return out;
  }

  void zero_grad() {
    for (ParamTensor* t : parameters()) t->zero_grad();
  }

 private:
  int patch_ = 8;
  int channels_ = 1;
  std::vector<ParamTensor> weights_;
  std::vector<ParamTensor> biases_;
};

// Non-overlapping patch grid over an image, flattened planar per channel.
// Partial border patches are dropped.
inline std::vector<std::vector<double>> extract_patches(const Image& img,
                                                        int patch) {
  std::vector<std::vector<double>> out;
  for (int py = 0; py + patch <= img.h; py += patch)
    for (int px = 0; px + patch <= img.w; px += patch) {
      std::vector<double> v(static_cast<size_t>(patch) * patch * img.c);
      size_t k = 0;
      for (int ch = 0; ch < img.c; ++ch)
        for (int iy = 0; iy < patch; ++iy)
          for (int ix = 0; ix < patch; ++ix)
            v[k++] = img.at(py + iy, px + ix, ch);
      out.push_back(std::move(v));
    }
  return out;
}

// Adds per-patch input gradients back onto the image grid.
inline void scatter_patch_grads(Image& d_img,
                                const std::vector<std::vector<double>>& grads,
                                int patch) {
  size_t pi = 0;
  for (int py = 0; py + patch <= d_img.h; py += patch)
    for (int px = 0; px + patch <= d_img.w; px += patch) {
      const auto& g = grads[pi++];
      size_t k = 0;
      for (int ch = 0; ch < d_img.c; ++ch)
        for (int iy = 0; iy < patch; ++iy)
          for (int ix = 0; ix < patch; ++ix)
            d_img.at(py + iy, px + ix, ch) += g[k++];
    }
}

}  // namespace warpkit
