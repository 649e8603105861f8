#include <catch2/catch_amalgamated.hpp>

#include "warpkit/nn.hpp"

using namespace warpkit;
using Catch::Approx;

TEST_CASE("zero-weight discriminator outputs one half", "[nn]") {
  Discriminator d(4, 1, 5);
  for (ParamTensor* t : d.parameters())
    std::fill(t->values.begin(), t->values.end(), 0.0);
  std::vector<double> x(d.input_size(), 0.7);
  REQUIRE(d.forward(x).prob == Approx(0.5).margin(1e-15));
}

TEST_CASE("single linear layer matches the hand formula", "[nn]") {
  Discriminator d(1, 1, 5, {});
  auto params = d.parameters();  // w then b
  params[0]->values[0] = 0.8;
  params[1]->values[0] = -0.3;
  std::vector<double> x{0.6};
  double z = 0.8 * 0.6 - 0.3;
  REQUIRE(d.forward(x).prob == Approx(sigmoid(z)).epsilon(1e-12));

  // d prob / d w = sigmoid'(z) * x
  d.zero_grad();
  auto cache = d.forward(x);
  std::vector<double> dx = d.backward(cache, 1.0, true);
  double sp = sigmoid(z) * (1 - sigmoid(z));
  REQUIRE(params[0]->grads[0] == Approx(sp * 0.6).epsilon(1e-10));
  REQUIRE(params[1]->grads[0] == Approx(sp).epsilon(1e-10));
  REQUIRE(dx[0] == Approx(sp * 0.8).epsilon(1e-10));
}

TEST_CASE("discriminator forward is deterministic", "[nn]") {
  Discriminator d(8, 3, 17);
  Rng rng(51);
  std::vector<double> x(d.input_size());
  for (double& v : x) v = rng.uniform01();
  double a = d.forward(x).prob;
  double b = d.forward(x).prob;
  REQUIRE(a == b);
}

TEST_CASE("zero upstream gradient produces zero parameter gradients", "[nn]") {
  Discriminator d(4, 1, 9);
  Rng rng(52);
  std::vector<double> x(d.input_size());
  for (double& v : x) v = rng.uniform01();
  d.zero_grad();
  auto cache = d.forward(x);
  std::vector<double> dx = d.backward(cache, 0.0, true);
  for (ParamTensor* t : d.parameters())
    for (double g : t->grads) REQUIRE(g == 0.0);
  for (double g : dx) REQUIRE(g == 0.0);
}

TEST_CASE("patches that agree outside the masked-out region are indistinguishable",
          "[nn]") {
  // Zero region R enforced by a Boolean mask on both patches: if the
  // patches agree outside R, the discriminator sees identical inputs.
  Discriminator d(4, 1, 33);
  Rng rng(53);
  std::vector<double> real(d.input_size()), fake(d.input_size());
  for (size_t i = 0; i < real.size(); ++i) {
    bool in_r = i % 3 == 0;
    double shared = rng.uniform01();
    real[i] = in_r ? 0.0 : shared;
    fake[i] = in_r ? 0.0 : shared;
  }
  REQUIRE(d.forward(real).prob == d.forward(fake).prob);
}

TEST_CASE("Adam leaves parameters alone at zero gradient", "[nn]") {
  ParamTensor t("p", {4}, 1.5);
  Adam opt;
  opt.register_tensor(&t);
  opt.step();
  for (double v : t.values) REQUIRE(v == 1.5);
}

TEST_CASE("the first Adam step with unit gradient moves by minus lr", "[nn]") {
  ParamTensor t("p", {1}, 0.0);
  t.grads[0] = 1.0;
  Adam opt;
  opt.register_tensor(&t);
  opt.step();
  REQUIRE(t.values[0] == Approx(-0.0002).epsilon(1e-6));
}

TEST_CASE("equal gradients produce equal updates", "[nn]") {
  ParamTensor t("p", {2}, 0.3);
  t.grads[0] = 0.7;
  t.grads[1] = 0.7;
  Adam opt;
  opt.register_tensor(&t);
  opt.step();
  REQUIRE(t.values[0] == t.values[1]);
}

TEST_CASE("Adam updates have odd symmetry under sign flips", "[nn]") {
  Rng rng(54);
  ParamTensor a("a", {8}), b("b", {8});
  for (size_t i = 0; i < 8; ++i) {
    a.values[i] = rng.normal();
    b.values[i] = -a.values[i];
  }
  Adam oa, ob;
  oa.register_tensor(&a);
  ob.register_tensor(&b);
  for (int step = 0; step < 5; ++step) {
    for (size_t i = 0; i < 8; ++i) {
      double g = rng.normal();
      a.grads[i] = g;
      b.grads[i] = -g;
    }
    oa.step();
    ob.step();
  }
  for (size_t i = 0; i < 8; ++i)
    REQUIRE(b.values[i] == Approx(-a.values[i]).margin(1e-15));
}

TEST_CASE("per-parameter Adam steps are bounded by the learning rate", "[nn]") {
  Rng rng(55);
  ParamTensor t("p", {64});
  for (size_t i = 0; i < t.size(); ++i) {
    t.values[i] = rng.normal();
    t.grads[i] = 0.001 * rng.normal();  // near-converged gradients
  }
  std::vector<double> before = t.values;
  Adam opt;
  opt.register_tensor(&t);
  opt.step();
  for (size_t i = 0; i < t.size(); ++i)
    REQUIRE(std::abs(t.values[i] - before[i]) < opt.params().lr);
}

TEST_CASE("patch extraction and scatter are adjoint layouts", "[nn]") {
  Rng rng(56);
  Image img(16, 16, 3);
  for (double& v : img.data) v = rng.uniform01();
  auto patches = extract_patches(img, 8);
  REQUIRE(patches.size() == 4);
  REQUIRE(patches[0].size() == 8 * 8 * 3);
  // scatter of the extracted patches reassembles the image
  Image back(16, 16, 3);
  scatter_patch_grads(back, patches, 8);
  for (size_t i = 0; i < img.data.size(); ++i)
    REQUIRE(back.data[i] == img.data[i]);
}
