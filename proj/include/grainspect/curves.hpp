#ifndef GRAINSPECT_CURVES_HPP
#define GRAINSPECT_CURVES_HPP

#include "grainspect/regions.hpp"

#include <complex>
#include <optional>
#include <vector>

namespace grainspect {

using Complex = std::complex<double>;

/// Closed boundary b(t) = x(t) + j y(t), t = 0..T-1, consecutive points 8-adjacent.
struct BoundarySequence {
  std::vector<Complex> points;

  int period() const { return static_cast<int>(points.size()); }
};

/// Truncated Fourier series of a closed boundary. Harmonics n = -order..order are
/// kept; b(t) ~ sum_n B_n exp(j 2 pi n t / T).
class FourierBoundary {
 public:
  FourierBoundary(int order, int period, std::vector<Complex> coefficients);

  int order() const { return order_; }
  int period() const { return period_; }

  /// B_n for -order <= n <= order.
  Complex coefficient(int n) const { return coefficients_[static_cast<std::size_t>(n + order_)]; }

  /// b(t) for real t; derivative orders 0, 1 and 2 are analytic.
  Complex evaluate(double t, int derivative = 0) const;

  FourierBoundary translated(Complex offset) const;
  FourierBoundary scaled(double factor) const;

 private:
  int order_;
  int period_;
  std::vector<Complex> coefficients_;
};

inline constexpr int kFourierOrder = 4;
inline constexpr int kCurvatureSamples = 256;
inline constexpr double kMinSpeed = 1e-9;

/// Open curve s(u) on u in [0, a], sampled uniformly, with its analytic velocity.
struct Curve {
  std::vector<Complex> points;
  std::vector<Complex> velocity;
  double a = 1.0;
  double split_start = 0.0;  // boundary parameters of the curve endpoints
  double split_end = 0.0;
  bool fallback_split = false;

  Complex front() const { return points.front(); }
  Complex back() const { return points.back(); }
};

BoundarySequence trace_boundary(const SupportRegion& region);

/// Direct-sum coefficients for n = -order..order. Throws std::invalid_argument
/// when T < 2 order + 1.
FourierBoundary fourier_coefficients(const BoundarySequence& b, int order = kFourierOrder);

inline Complex evaluate_boundary(const FourierBoundary& fb, double t) { return fb.evaluate(t); }

/// Signed curvature (x'y'' - y'x'') / |b'|^3; empty when the speed is below kMinSpeed.
std::optional<double> curvature(const FourierBoundary& fb, double t);

/// Curvature at n uniform parameters t_i = i T / n; degenerate samples are empty.
std::vector<std::optional<double>> sample_curvature(const FourierBoundary& fb, int n = kCurvatureSamples);

/// Splits the smoothed boundary at the two strongest local maxima of |K| and
/// averages the two arcs (one reversed) at matched normalized parameters.
/// Falls back to splitting at t = 0 and t = T/2 when fewer than two maxima exist.
Curve extract_curve(const FourierBoundary& fb, int n_samples = kCurvatureSamples);

}  // namespace grainspect

#endif  // GRAINSPECT_CURVES_HPP
