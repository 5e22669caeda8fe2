#include "grainspect/curves.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace grainspect {

FourierBoundary::FourierBoundary(int order, int period, std::vector<Complex> coefficients)
    : order_(order), period_(period), coefficients_(std::move(coefficients)) {
  if (order_ < 0 || period_ < 1 || coefficients_.size() != static_cast<std::size_t>(2 * order_ + 1)) {
    throw std::invalid_argument("FourierBoundary: inconsistent order/period/coefficients");
  }
}

Complex FourierBoundary::evaluate(double t, int derivative) const {
  const double omega = 2.0 * std::numbers::pi / period_;
  Complex sum = 0.0;
  for (int n = -order_; n <= order_; ++n) {
    const Complex rate(0.0, omega * n);
    Complex factor = 1.0;
    for (int k = 0; k < derivative; ++k) factor *= rate;
    sum += coefficient(n) * factor * std::exp(Complex(0.0, omega * n * t));
  }
  return sum;
}

FourierBoundary FourierBoundary::translated(Complex offset) const {
  auto c = coefficients_;
  c[static_cast<std::size_t>(order_)] += offset;
  return FourierBoundary(order_, period_, std::move(c));
}

FourierBoundary FourierBoundary::scaled(double factor) const {
  auto c = coefficients_;
  for (Complex& v : c) v *= factor;
  return FourierBoundary(order_, period_, std::move(c));
}

BoundarySequence trace_boundary(const SupportRegion& region) {
  BoundarySequence b;
  for (const Pixel& p : trace_outer_boundary(region.pixels)) b.points.emplace_back(p.x, p.y);
  return b;
}

FourierBoundary fourier_coefficients(const BoundarySequence& b, int order) {
  const int period = b.period();
  if (period < 2 * order + 1) {
    throw std::invalid_argument("boundary too short for order " + std::to_string(order) + " (T = " +
                                std::to_string(period) + ")");
  }
  std::vector<Complex> coefficients;
  coefficients.reserve(static_cast<std::size_t>(2 * order + 1));
  for (int n = -order; n <= order; ++n) {
    Complex sum = 0.0;
    for (int t = 0; t < period; ++t) {
      sum += b.points[static_cast<std::size_t>(t)] * std::polar(1.0, -2.0 * std::numbers::pi * n * t / period);
    }
    coefficients.push_back(sum / static_cast<double>(period));
  }
  return FourierBoundary(order, period, std::move(coefficients));
}

std::optional<double> curvature(const FourierBoundary& fb, double t) {
  const Complex d1 = fb.evaluate(t, 1);
  const double speed = std::abs(d1);
  if (speed < kMinSpeed) return std::nullopt;
  const Complex d2 = fb.evaluate(t, 2);
  return (d1.real() * d2.imag() - d1.imag() * d2.real()) / (speed * speed * speed);
}

std::vector<std::optional<double>> sample_curvature(const FourierBoundary& fb, int n) {
  std::vector<std::optional<double>> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(curvature(fb, static_cast<double>(i) * fb.period() / n));
  return out;
}

Curve extract_curve(const FourierBoundary& fb, int n_samples) {
  if (n_samples < 16) throw std::invalid_argument("extract_curve needs at least 16 samples");
  const auto samples = sample_curvature(fb, n_samples);
  const int n = n_samples;
  std::vector<double> mag(static_cast<std::size_t>(n), -1.0);
  double peak = 0.0;
  for (int i = 0; i < n; ++i) {
    if (samples[i]) {
      mag[i] = std::abs(*samples[i]);
      peak = std::max(peak, mag[i]);
    }
  }
  const double tol = 1e-9 * peak;
  std::vector<int> maxima;
  for (int i = 0; i < n; ++i) {
    if (mag[i] < 0.0) continue;
    const double left = mag[(i + n - 1) % n];
    const double right = mag[(i + 1) % n];
    if (mag[i] - left > tol && mag[i] - right >= -tol) maxima.push_back(i);
  }
  std::stable_sort(maxima.begin(), maxima.end(), [&](int a, int b) { return mag[a] > mag[b]; });

  Curve curve;
  const double period = fb.period();
  if (maxima.size() >= 2) {
    const int first = std::min(maxima[0], maxima[1]);
    const int second = std::max(maxima[0], maxima[1]);
    curve.split_start = first * period / n;
    curve.split_end = second * period / n;
  } else {
    curve.split_start = 0.0;
    curve.split_end = period / 2.0;
    curve.fallback_split = true;
  }

  const double span_upper = curve.split_end - curve.split_start;
  const double span_lower = period - span_upper;
  curve.points.reserve(static_cast<std::size_t>(n));
  curve.velocity.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / (n - 1);
    const double tu = curve.split_start + u * span_upper;
    const double tl = curve.split_start - u * span_lower;
    curve.points.push_back(0.5 * (fb.evaluate(tu) + fb.evaluate(tl)));
    curve.velocity.push_back(0.5 * (fb.evaluate(tu, 1) * span_upper - fb.evaluate(tl, 1) * span_lower));
  }
  return curve;
}

}  // namespace grainspect
