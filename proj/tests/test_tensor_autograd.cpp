#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "cfbench/adam.hpp"
#include "cfbench/autograd.hpp"
#include "cfbench/rng.hpp"
#include "cfbench/tensor.hpp"
#include "doctest.h"
#include "fd_nets.hpp"

using namespace cfb;
using cfb::testing::loss_at;
using cfb::testing::random_tensor;


TEST_CASE("gradients match central finite differences on random networks") {
  const float h = 1e-3f;
  int checked = 0;
  std::uint64_t seed = 1000;
  while (checked < 110) {
    ++seed;
    float loss = 0.0f;
    Tensor x0, g;
    if (!loss_at(seed, nullptr, &loss, &x0, &g)) continue;  // kink too close
    REQUIRE(std::isfinite(loss));

    for (std::int64_t i = 0; i < x0.size(); ++i) {
      Tensor xp = x0, xm = x0;
      xp[i] += h;
      xm[i] -= h;
      float lp = 0.0f, lm = 0.0f;
      REQUIRE(loss_at(seed, &xp, &lp, nullptr, nullptr));
      REQUIRE(loss_at(seed, &xm, &lm, nullptr, nullptr));
      const double fd = (static_cast<double>(lp) - lm) / (2.0 * h);
      const double err = std::fabs(g[i] - fd);
      const double tol =
          std::max(1e-3 * std::max(std::fabs(fd), std::fabs(static_cast<double>(g[i]))), 1e-5);
      CAPTURE(seed);
      CAPTURE(i);
      CAPTURE(fd);
      CHECK(err <= tol);
    }
    ++checked;
  }
  CHECK(checked >= 100);
}

TEST_CASE("sum gradient is all ones") {
  Tape tape;
  Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  auto xid = tape.leaf_ref(&x);
  auto l = tape.sum(xid);
  tape.backward(l);
  Tensor g = tape.grad(xid);
  for (std::int64_t i = 0; i < g.size(); ++i) CHECK(g[i] == 1.0f);
}

TEST_CASE("dense linear map adjoint") {
  Tape tape;
  Tensor x({2}, {0.3f, -0.4f});
  Tensor w({1, 2}, {1.0f, -2.0f});
  Tensor b({1}, {0.0f});
  auto xid = tape.leaf_ref(&x);
  auto y = tape.dense(xid, tape.leaf_ref(&w), tape.leaf_ref(&b));
  auto l = tape.sum(y);
  tape.backward(l);
  Tensor g = tape.grad(xid);
  CHECK(g[0] == 1.0f);
  CHECK(g[1] == -2.0f);
}

TEST_CASE("gradient of a non-ancestor is zero") {
  Tape tape;
  Tensor x({3}, {1, 2, 3});
  Tensor y({3}, {4, 5, 6});
  auto xid = tape.leaf_ref(&x);
  auto yid = tape.leaf_ref(&y);
  auto l = tape.sum(xid);
  tape.backward(l);
  Tensor gy = tape.grad(yid);
  CHECK(gy.shape == y.shape);
  for (std::int64_t i = 0; i < gy.size(); ++i) CHECK(gy[i] == 0.0f);
}

TEST_CASE("conv2d identity stencil") {
  Tape tape;
  Tensor x({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor k({1, 1, 3, 3}, {0, 0, 0, 0, 1, 0, 0, 0, 0});
  auto y = tape.conv2d(tape.leaf_ref(&x), tape.leaf_ref(&k), 1, 1);
  const Tensor& out = tape.value(y);
  REQUIRE(out.shape == std::vector<int>({1, 3, 3}));
  for (std::int64_t i = 0; i < 9; ++i) CHECK(out[i] == x[i]);
}

TEST_CASE("conv2d stride-2 output extent and padding") {
  Tape tape;
  Tensor x = Tensor::full({1, 8, 8}, 1.0f);
  Tensor k = Tensor::full({2, 1, 3, 3}, 1.0f);
  auto y = tape.conv2d(tape.leaf_ref(&x), tape.leaf_ref(&k), 2, 1);
  CHECK(tape.value(y).shape == std::vector<int>({2, 4, 4}));
  CHECK(tape.value(y).at3(0, 1, 1) == doctest::Approx(9.0f));  // interior: all 9 taps
  CHECK(tape.value(y).at3(0, 0, 0) == doctest::Approx(4.0f));  // corner under padding 1
}

TEST_CASE("conv2d shape errors") {
  Tape tape;
  Tensor x = Tensor::zeros({1, 4, 4});
  Tensor k = Tensor::zeros({1, 2, 3, 3});  // channel mismatch
  CHECK_THROWS_AS(tape.conv2d(tape.leaf_ref(&x), tape.leaf_ref(&k), 1, 1), std::invalid_argument);
  Tensor kbig = Tensor::zeros({1, 1, 7, 7});
  CHECK_THROWS_AS(tape.conv2d(tape.leaf_ref(&x), tape.leaf_ref(&kbig), 1, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(tape.conv2d(tape.leaf_ref(&x), tape.leaf_ref(&k), 0, 0), std::invalid_argument);
}

TEST_CASE("maxpool tie sends gradient to the first element in window order") {
  Tape tape;
  Tensor x({1, 2, 2}, {5, 5, 5, 5});
  auto xid = tape.leaf_ref(&x);
  auto y = tape.maxpool2(xid);
  REQUIRE(tape.value(y).size() == 1);
  CHECK(tape.value(y)[0] == 5.0f);
  auto l = tape.sum(y);
  tape.backward(l);
  Tensor g = tape.grad(xid);
  CHECK(g[0] == 1.0f);
  CHECK(g[1] == 0.0f);
  CHECK(g[2] == 0.0f);
  CHECK(g[3] == 0.0f);
}

TEST_CASE("maxpool rejects odd extents") {
  Tape tape;
  Tensor x = Tensor::zeros({1, 3, 4});
  CHECK_THROWS_AS(tape.maxpool2(tape.leaf_ref(&x)), std::invalid_argument);
}

TEST_CASE("maxpool handles all-negative windows") {
  Tape tape;
  Tensor x({1, 2, 2}, {-3.0f, -1.5f, -2.0f, -9.0f});
  auto y = tape.maxpool2(tape.leaf_ref(&x));
  CHECK(tape.value(y)[0] == -1.5f);
}

TEST_CASE("logit margin value and adjoint") {
  Tape tape;
  Tensor z({2}, {1.25f, -0.75f});
  auto zid = tape.leaf_ref(&z);
  auto m = tape.logit_margin(zid, 1);  // z0 - z1
  CHECK(tape.value(m)[0] == doctest::Approx(2.0f));
  tape.backward(m);
  Tensor g = tape.grad(zid);
  CHECK(g[0] == 1.0f);
  CHECK(g[1] == -1.0f);
}

TEST_CASE("softmax cross-entropy at equal logits") {
  Tape tape;
  Tensor z({2}, {0.0f, 0.0f});
  auto l = tape.softmax_cross_entropy(tape.leaf_ref(&z), 0);
  CHECK(tape.value(l)[0] == doctest::Approx(std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  Tensor x = Tensor::zeros({3});
  auto xid = tape.leaf_ref(&x);
  CHECK_THROWS_AS(tape.backward(xid), std::invalid_argument);
}

TEST_CASE("adam first step equals the closed form") {
  // After one step with grad g: m_hat = g, v_hat = g^2, so the update is
  // -lr * g / (|g| + eps) = -lr * sign(g) up to eps.
  Tensor p({3}, {1.0f, 2.0f, 3.0f});
  Tensor g({3}, {0.5f, -0.25f, 0.0f});
  AdamState st = AdamState::for_params({p}, 0.01f, 0.9f, 0.99f, 1e-8f);
  adam_update(p, g, st);
  CHECK(p[0] == doctest::Approx(1.0f - 0.01f).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(2.0f + 0.01f).epsilon(1e-4));
  CHECK(p[2] == doctest::Approx(3.0f));  // zero grad, zero move
}

TEST_CASE("adam constant-gradient second step") {
  const float lr = 0.1f, b1 = 0.9f, b2 = 0.99f, eps = 1e-8f;
  Tensor p({1}, {0.0f});
  Tensor g({1}, {2.0f});
  AdamState st = AdamState::for_params({p}, lr, b1, b2, eps);
  adam_update(p, g, st);
  adam_update(p, g, st);
  // constant gradient: m_hat = g and v_hat = g^2 at every step
  const double expect = -2.0 * lr * (2.0 / (2.0 + eps));
  CHECK(p[0] == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("tensor shape utilities") {
  Tensor t = Tensor::zeros({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(t.shape_str() == "[2x3x4]");
  Tensor a = Tensor::zeros({2});
  Tensor b = Tensor::zeros({3});
  CHECK_THROWS_AS(require_same_shape(a, b, "test"), std::invalid_argument);
}
