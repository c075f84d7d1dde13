#include <doctest.h>

#include <cmath>

#include "ergnn/nn.hpp"
#include "ergnn/rng.hpp"
#include "oracles.hpp"

using namespace ergnn;

namespace {

Mat random_mat(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.uniform(-1.0, 1.0);
  }
  return m;
}

}  // namespace

TEST_CASE("linear_forward identity map") {
  Parameter w(2, 2), b(1, 2);
  w.value << 1, 0, 0, 1;
  Mat x(1, 2);
  x << 3, 4;
  const Mat y = nn::linear_forward(w, b, x);
  CHECK(y(0, 0) == 3.0);
  CHECK(y(0, 1) == 4.0);
}

TEST_CASE("linear_forward scaling plus bias") {
  Parameter w(2, 2), b(1, 2);
  w.value << 2, 0, 0, 2;
  b.value << 1, 1;
  Mat x(1, 2);
  x << 1, 1;
  const Mat y = nn::linear_forward(w, b, x);
  CHECK(y(0, 0) == 3.0);
  CHECK(y(0, 1) == 3.0);
}

TEST_CASE("linear_forward matches the naive triple-loop product") {
  Rng rng(11);
  Parameter w(3, 2), b(1, 3);
  w.value = random_mat(rng, 3, 2);
  b.value = random_mat(rng, 1, 3);
  const Mat x = random_mat(rng, 1, 2);
  const Mat got = nn::linear_forward(w, b, x);
  const Mat want = oracles::naive_linear(w.value, b.value, x);
  for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(got(0, j) - want(0, j)) < 1e-12);
}

TEST_CASE("linear_forward rejects mismatched shapes and names both") {
  Parameter w(3, 2), b(1, 3);
  Mat x(1, 5);
  x.setZero();
  CHECK_THROWS_WITH_AS(nn::linear_forward(w, b, x), doctest::Contains("1x5"), DimensionError);
  CHECK_THROWS_WITH_AS(nn::linear_forward(w, b, x), doctest::Contains("3x2"), DimensionError);
}

TEST_CASE("linear_backward gradients match finite differences") {
  Rng rng(5);
  Parameter w(3, 4), b(1, 3);
  w.value = random_mat(rng, 3, 4);
  b.value = random_mat(rng, 1, 3);
  const Mat x = random_mat(rng, 2, 4);

  // loss = sum of outputs; dL/dy = ones
  const Mat ones = Mat::Ones(2, 3);
  nn::linear_backward(w, b, x, ones);
  const Mat analytic_w = w.grad;
  const Mat analytic_b = b.grad;

  auto loss = [&] { return nn::linear_forward(w, b, x).sum(); };
  const Mat fd_w = nn::finite_diff_grad(w, 1e-6, loss);
  const Mat fd_b = nn::finite_diff_grad(b, 1e-6, loss);
  CHECK((analytic_w - fd_w).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((analytic_b - fd_b).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("relu splits on sign and zeroes the boundary") {
  Mat x(1, 4);
  x << 1, -1, 0.5, 0.5;
  const Mat y = nn::relu(x);
  CHECK(y(0, 0) == 1.0);
  CHECK(y(0, 1) == 0.0);
  CHECK(y(0, 2) == 0.5);
  CHECK(y(0, 3) == 0.5);

  Mat zeros(1, 2);
  zeros.setZero();
  CHECK(nn::relu(zeros).isZero());
  // subgradient at exactly 0 is 0
  CHECK(nn::relu_backward(zeros, Mat::Ones(1, 2)).isZero());
}

TEST_CASE("relu backward matches finite differences away from zero") {
  Rng rng(7);
  Parameter x(2, 3);
  do {
    x.value = random_mat(rng, 2, 3);
  } while (x.value.cwiseAbs().minCoeff() < 1e-2);
  const Mat analytic = nn::relu_backward(x.value, Mat::Ones(2, 3));
  auto loss = [&] { return nn::relu(x.value).sum(); };
  const Mat fd = nn::finite_diff_grad(x, 1e-5, loss);
  CHECK((analytic - fd).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("sigmoid midpoint, saturation and derivative identity") {
  Mat x(1, 1);
  x << 0.0;
  CHECK(nn::sigmoid(x)(0, 0) == 0.5);

  x << -700.0;
  const double tiny = nn::sigmoid(x)(0, 0);
  CHECK(tiny > 0.0);
  CHECK(tiny <= 1e-300);
  CHECK(std::isfinite(tiny));

  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const double v = rng.uniform(-4.0, 4.0);
    const double s = nn::sigmoid(v);
    const double fd = (nn::sigmoid(v + 1e-6) - nn::sigmoid(v - 1e-6)) / 2e-6;
    CHECK(std::abs(fd - s * (1.0 - s)) < 1e-10);
  }
}

TEST_CASE("bce_loss worked values") {
  Mat p(1, 1), y(1, 1);
  p << 0.5;
  y << 1.0;
  CHECK(nn::bce_loss(p, y) == doctest::Approx(std::log(2.0)).epsilon(1e-9));

  p << 1.0;
  CHECK(nn::bce_loss(p, y) <= 1e-11);  // clamped perfect prediction
  CHECK(nn::bce_loss(p, y) >= 0.0);
}

TEST_CASE("bce_loss equals the scalar-loop oracle on a random batch") {
  Rng rng(21);
  Mat p(4, 1), y(4, 1);
  for (int i = 0; i < 4; ++i) {
    p(i, 0) = rng.uniform();
    y(i, 0) = rng.uniform() < 0.5 ? 0.0 : 1.0;
  }
  CHECK(std::abs(nn::bce_loss(p, y) - oracles::naive_bce(p, y)) < 1e-12);

  Mat bad(2, 1);
  bad.setZero();
  CHECK_THROWS_AS(nn::bce_loss(p, bad), DimensionError);
}

TEST_CASE("bce_loss stays non-negative") {
  Rng rng(77);
  for (int t = 0; t < 100; ++t) {
    Mat p(3, 1), y(3, 1);
    for (int i = 0; i < 3; ++i) {
      p(i, 0) = rng.uniform();
      y(i, 0) = rng.uniform() < 0.5 ? 0.0 : 1.0;
    }
    CHECK(nn::bce_loss(p, y) >= 0.0);
  }
}

TEST_CASE("adam first step moves by the learning rate") {
  Parameter w(1, 1);
  w.value << 0.0;
  w.grad << 1.0;
  AdamState state(w);
  nn::adam_step(w, state, 0.01);
  CHECK(std::abs(w.value(0, 0) + 0.01) < 1e-6);
  CHECK(state.step_count == 1);
}

TEST_CASE("adam leaves the value alone on zero gradient") {
  Parameter w(1, 1);
  w.value << 1.25;
  AdamState state(w);
  nn::adam_step(w, state, 0.1);
  CHECK(w.value(0, 0) == 1.25);
}

TEST_CASE("adam converges on (w-3)^2") {
  Parameter w(1, 1);
  w.value << 0.0;
  AdamState state(w);
  for (int step = 0; step < 100; ++step) {
    w.grad(0, 0) = 2.0 * (w.value(0, 0) - 3.0);
    nn::adam_step(w, state, 0.1);
  }
  CHECK(std::abs(w.value(0, 0) - 3.0) < 0.5);
}

TEST_CASE("adam updates are bit-deterministic") {
  auto run = [] {
    Parameter w(2, 2);
    w.value << 0.3, -0.4, 0.1, 0.9;
    AdamState state(w);
    for (int step = 0; step < 5; ++step) {
      w.grad = 0.5 * w.value;
      nn::adam_step(w, state, 0.05);
    }
    return w.value;
  };
  const Mat a = run();
  const Mat b = run();
  CHECK(a == b);
}

TEST_CASE("finite_diff_grad on sum of squares and on a constant") {
  Parameter w(1, 1);
  w.value << 2.0;
  auto sq = [&] { return w.value.array().square().sum(); };
  const Mat g = nn::finite_diff_grad(w, 1e-5, sq);
  CHECK(std::abs(g(0, 0) - 4.0) < 1e-6);

  auto constant = [] { return 7.5; };
  const Mat gz = nn::finite_diff_grad(w, 1e-5, constant);
  CHECK(std::abs(gz(0, 0)) < 1e-9);
}

TEST_CASE("public operations return finite values on finite inputs") {
  Rng rng(99);
  const Mat x = random_mat(rng, 4, 3, 50.0);
  CHECK(all_finite(nn::relu(x)));
  CHECK(all_finite(nn::sigmoid(x)));
  Parameter w(2, 3), b(1, 2);
  w.value = random_mat(rng, 2, 3, 10.0);
  b.value = random_mat(rng, 1, 2, 10.0);
  CHECK(all_finite(nn::linear_forward(w, b, x)));
}
