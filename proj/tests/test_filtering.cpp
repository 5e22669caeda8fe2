#include "grainspect/filtering.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace grainspect;

TEST_SUITE("filtering") {

TEST_CASE("kernel sizes follow 6 tau + 1 and 23 tau") {
  CHECK(gradient_kernel_size(2.0) == 13);
  CHECK(gradient_kernel_size(1.0) == 7);
  CHECK(gradient_kernel_size(1.5) == 11);
  CHECK(log_kernel_size(1.0) == 23);
  CHECK(log_kernel_size(2.0) == 47);
  CHECK(log_kernel(1.0).size() == 23);
}

TEST_CASE("gradient and LoG kernels sum to zero") {
  for (double tau : {0.7, 1.0, 2.0, 3.0}) {
    auto [gx, gy] = gaussian_gradient_kernels(tau);
    CHECK(std::abs(gx.weights.sum()) < 1e-6);
    CHECK(std::abs(gy.weights.sum()) < 1e-6);
    CHECK(std::abs(log_kernel(tau).weights.sum()) < 1e-6);
  }
}

TEST_CASE("g_y is the transpose of g_x and g_x is odd in x") {
  auto [gx, gy] = gaussian_gradient_kernels(2.0);
  CHECK((gy.weights == gx.weights.transpose()).all());
  const int n = gx.size();
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) CHECK(gx.weights(r, c) == -gx.weights(r, n - 1 - c));
}

TEST_CASE("float kernels agree with double ones") {
  auto [fx, fy] = gaussian_gradient_kernels(2.0f);
  auto [dx, dy] = gaussian_gradient_kernels(2.0);
  CHECK((fx.weights.cast<double>() - dx.weights).abs().maxCoeff() < 1e-6);
}

TEST_CASE("ramp gradient equals the slope on the interior") {
  for (double slope : {1.0, 0.25, -3.0}) {
    ScalarImage ramp(40, 40);
    for (int y = 0; y < 40; ++y)
      for (int x = 0; x < 40; ++x) ramp(y, x) = slope * x;
    const auto f = gradient_magnitude(ramp, 2.0);
    const int r = gradient_kernel_size(2.0) / 2;
    for (int y = r; y < 40 - r; ++y)
      for (int x = r; x < 40 - r; ++x) {
        CHECK(f.magnitude(y, x) == doctest::Approx(std::abs(slope)).epsilon(1e-3));
        CHECK(std::abs(f.gy(y, x)) < 1e-9);
      }
  }
}

TEST_CASE("separable gradient matches direct convolution") {
  std::mt19937_64 rng(3);
  const ScalarImage img = oracle::random_image(rng, 30, 34);
  for (double tau : {1.0, 2.0}) {
    auto [gx, gy] = gaussian_gradient_kernels(tau);
    const auto f = gradient_magnitude(img, tau);
    CHECK((f.gx - convolve(img, gx)).abs().maxCoeff() < 1e-12);
    CHECK((f.gy - convolve(img, gy)).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("gradient magnitude is exactly invariant under 90 degree rotation") {
  std::mt19937_64 rng(11);
  const ScalarImage img = oracle::random_image(rng, 32, 32);
  const ScalarImage m = gradient_magnitude(img, 2.0).magnitude;
  ScalarImage rotated = img;
  ScalarImage expected = m;
  const int r = gradient_kernel_size(2.0) / 2;
  for (int k = 0; k < 4; ++k) {
    rotated = oracle::rot90(rotated);
    expected = oracle::rot90(expected);
    const ScalarImage got = gradient_magnitude(rotated, 2.0).magnitude;
    for (int y = r; y < 32 - r; ++y)
      for (int x = r; x < 32 - r; ++x) CHECK(got(y, x) == expected(y, x));
  }
}

TEST_CASE("LoG response matches direct convolution and vanishes on constants") {
  std::mt19937_64 rng(5);
  const ScalarImage img = oracle::random_image(rng, 40, 36);
  const ScalarImage direct = convolve(img, log_kernel(1.0));
  CHECK((log_response(img, 1.0) - direct).abs().maxCoeff() < 1e-12);
  const ScalarImage flat = ScalarImage::Constant(30, 30, 0.37);
  CHECK((log_response(flat, 1.0) == 0.0).all());
  CHECK((gradient_magnitude(flat, 2.0).magnitude.abs() < 1e-15).all());
}

TEST_CASE("LoG of a dark blob is positive at its centre") {
  ScalarImage img = ScalarImage::Constant(41, 41, 1.0);
  for (int y = 0; y < 41; ++y)
    for (int x = 0; x < 41; ++x)
      if (std::hypot(x - 20, y - 20) <= 2.0) img(y, x) = 0.0;
  CHECK(log_response(img, 1.0)(20, 20) > 0.0);
}

TEST_CASE("convolution is linear") {
  std::mt19937_64 rng(9);
  const ScalarImage a = oracle::random_image(rng, 32, 32);
  const ScalarImage b = oracle::random_image(rng, 32, 32);
  const auto [gx, gy] = gaussian_gradient_kernels(1.5);
  const ScalarImage lhs = convolve<double>(2.5 * a - 0.75 * b, gx);
  const ScalarImage rhs = 2.5 * convolve(a, gx) - 0.75 * convolve(b, gx);
  CHECK((lhs - rhs).abs().maxCoeff() < 1e-9);
}

TEST_CASE("kernels larger than the image are rejected") {
  const ScalarImage small = ScalarImage::Zero(10, 10);
  CHECK_THROWS_AS(log_response(small, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gradient_magnitude(small, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_gradient_kernels(0.0), std::invalid_argument);
  CHECK_THROWS_AS(log_kernel(-1.0), std::invalid_argument);
}

}  // TEST_SUITE
