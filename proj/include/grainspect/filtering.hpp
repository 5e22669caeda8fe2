#ifndef GRAINSPECT_FILTERING_HPP
#define GRAINSPECT_FILTERING_HPP

#include "grainspect/image.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace grainspect {

/// Square, odd-sized convolution kernel. weights(row, col) holds the tap at
/// offset (col - radius, row - radius).
template <typename Scalar>
struct Kernel {
  Image<Scalar> weights;
  Scalar scale = 0;

  int size() const { return static_cast<int>(weights.rows()); }
  int radius() const { return size() / 2; }
};

template <typename Scalar>
struct GradientField {
  Image<Scalar> gx;
  Image<Scalar> gy;
  Image<Scalar> magnitude;
};

/// Smallest odd integer >= value.
inline int smallest_odd_at_least(double value) {
  int n = static_cast<int>(std::ceil(value - 1e-12));
  if (n < 1) n = 1;
  return n % 2 == 0 ? n + 1 : n;
}

inline int gradient_kernel_size(double tau_g) { return smallest_odd_at_least(6.0 * tau_g + 1.0); }
inline int log_kernel_size(double tau_l) { return smallest_odd_at_least(23.0 * tau_l); }

namespace detail {

/// 1-D factors of the Gaussian derivative kernel g_x(x, y) = derivative(x) * smoothing(y).
/// Both are indexed by offset 0..radius; derivative is odd, smoothing even.
/// The derivative factor is scaled so that a unit-slope ramp yields exactly 1.
template <typename Scalar>
struct GradientFactors {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> derivative;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> smoothing;
};

template <typename Scalar>
GradientFactors<Scalar> gradient_factors(Scalar tau_g) {
  if (!(tau_g > 0)) throw std::invalid_argument("tau_g must be positive");
  const int radius = gradient_kernel_size(static_cast<double>(tau_g)) / 2;
  const Scalar two_tau2 = 2 * tau_g * tau_g;
  const Scalar norm = 2 * std::numbers::pi_v<Scalar> * tau_g * tau_g * tau_g * tau_g;
  GradientFactors<Scalar> f;
  f.derivative.resize(radius + 1);
  f.smoothing.resize(radius + 1);
  for (int k = 0; k <= radius; ++k) {
    const Scalar e = std::exp(-Scalar(k * k) / two_tau2);
    f.smoothing(k) = e;
    f.derivative(k) = -Scalar(k) * e / norm;
  }
  // Ramp response of the sampled 2-D kernel: -sum_x x d(x) * sum_y s(y).
  Scalar moment = 0;
  Scalar mass = f.smoothing(0);
  for (int k = 1; k <= radius; ++k) {
    moment += -2 * Scalar(k) * f.derivative(k);
    mass += 2 * f.smoothing(k);
  }
  f.derivative /= moment * mass;
  return f;
}

template <typename Scalar>
Eigen::Index clamp_index(Eigen::Index i, Eigen::Index n) {
  return i < 0 ? 0 : (i >= n ? n - 1 : i);
}

/// Convolution along rows (the y axis) with an even 1-D kernel given by its
/// non-negative half. Taps are combined in symmetric pairs.
template <typename Scalar>
Image<Scalar> convolve_y_even(const Image<Scalar>& in, const Eigen::Array<Scalar, Eigen::Dynamic, 1>& half) {
  const Eigen::Index h = in.rows();
  Image<Scalar> out(in.rows(), in.cols());
  for (Eigen::Index y = 0; y < h; ++y) {
    out.row(y) = half(0) * in.row(y);
    for (Eigen::Index k = 1; k < half.size(); ++k) {
      out.row(y) += half(k) * (in.row(clamp_index<Scalar>(y - k, h)) + in.row(clamp_index<Scalar>(y + k, h)));
    }
  }
  return out;
}

/// Convolution along rows with an odd 1-D kernel (half(0) is ignored, taken as 0).
template <typename Scalar>
Image<Scalar> convolve_y_odd(const Image<Scalar>& in, const Eigen::Array<Scalar, Eigen::Dynamic, 1>& half) {
  const Eigen::Index h = in.rows();
  Image<Scalar> out = Image<Scalar>::Zero(in.rows(), in.cols());
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index k = 1; k < half.size(); ++k) {
      out.row(y) += half(k) * (in.row(clamp_index<Scalar>(y - k, h)) - in.row(clamp_index<Scalar>(y + k, h)));
    }
  }
  return out;
}

template <typename Scalar>
Image<Scalar> transposed(const Image<Scalar>& in) {
  return in.transpose();
}

template <typename Scalar>
void require_fits(const Image<Scalar>& img, int kernel_size) {
  if (kernel_size > img.rows() || kernel_size > img.cols()) {
    throw std::invalid_argument("kernel (" + std::to_string(kernel_size) + "x" + std::to_string(kernel_size) +
                                ") is larger than the image (" + std::to_string(img.cols()) + "x" +
                                std::to_string(img.rows()) + ")");
  }
}

}  // namespace detail

/// Samples the Gaussian first-derivative pair on a (6 tau + 1)-sized odd grid.
/// g_x is odd in x, g_y is exactly the transpose of g_x, and both sum to zero.
template <typename Scalar = double>
std::pair<Kernel<Scalar>, Kernel<Scalar>> gaussian_gradient_kernels(Scalar tau_g) {
  const auto f = detail::gradient_factors(tau_g);
  const int radius = static_cast<int>(f.derivative.size()) - 1;
  const int size = 2 * radius + 1;
  Kernel<Scalar> gx{Image<Scalar>(size, size), tau_g};
  for (int row = 0; row < size; ++row) {
    for (int col = 0; col < size; ++col) {
      const int dx = col - radius;
      const int dy = row - radius;
      const Scalar d = dx < 0 ? -f.derivative(-dx) : f.derivative(dx);
      gx.weights(row, col) = d * f.smoothing(std::abs(dy));
    }
  }
  Kernel<Scalar> gy{gx.weights.transpose(), tau_g};
  return {std::move(gx), std::move(gy)};
}

/// Samples the Laplacian of Gaussian on a 23 tau odd grid (23x23 at tau = 1),
/// then subtracts the mean so the weights sum to zero.
template <typename Scalar = double>
Kernel<Scalar> log_kernel(Scalar tau_l) {
  if (!(tau_l > 0)) throw std::invalid_argument("tau_l must be positive");
  const int size = log_kernel_size(static_cast<double>(tau_l));
  const int radius = size / 2;
  const Scalar tau2 = tau_l * tau_l;
  const Scalar c = 1 / (std::numbers::pi_v<Scalar> * tau2 * tau2);
  Kernel<Scalar> k{Image<Scalar>(size, size), tau_l};
  for (int row = 0; row < size; ++row) {
    for (int col = 0; col < size; ++col) {
      const Scalar r2 = Scalar((col - radius) * (col - radius) + (row - radius) * (row - radius));
      k.weights(row, col) = c * (r2 / (2 * tau2) - 1) * std::exp(-r2 / (2 * tau2));
    }
  }
  k.weights -= k.weights.mean();
  return k;
}

/// True 2-D convolution (kernel flipped), same-size output, edge replication.
/// Throws std::invalid_argument if the kernel is larger than the image.
template <typename Scalar>
Image<Scalar> convolve(const Image<Scalar>& img, const Kernel<Scalar>& k) {
  detail::require_fits(img, k.size());
  const Eigen::Index h = img.rows();
  const Eigen::Index w = img.cols();
  const int r = k.radius();
  Image<Scalar> padded(h + 2 * r, w + 2 * r);
  for (Eigen::Index y = 0; y < padded.rows(); ++y) {
    for (Eigen::Index x = 0; x < padded.cols(); ++x) {
      padded(y, x) = img(detail::clamp_index<Scalar>(y - r, h), detail::clamp_index<Scalar>(x - r, w));
    }
  }
  const Image<Scalar> flipped = k.weights.reverse();
  Image<Scalar> out = Image<Scalar>::Zero(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (int j = 0; j < k.size(); ++j) {
      for (int i = 0; i < k.size(); ++i) {
        out.row(y) += flipped(j, i) * padded.row(y + j).segment(i, w);
      }
    }
  }
  return out;
}

/// Gaussian-smoothed gradient and its magnitude. Computed in separable form
/// (derivative pass, then smoothing pass) with taps combined in mirrored pairs,
/// which makes the magnitude bit-exactly equivariant under 90 degree rotations.
template <typename Scalar>
GradientField<Scalar> gradient_magnitude(const Image<Scalar>& img, Scalar tau_g) {
  const auto f = detail::gradient_factors(tau_g);
  detail::require_fits(img, 2 * static_cast<int>(f.derivative.size()) - 1);
  using detail::transposed;
  GradientField<Scalar> field;
  // x derivative on rows of the transpose, then smoothing along y.
  field.gx = detail::convolve_y_even(transposed(detail::convolve_y_odd(transposed(img), f.derivative)), f.smoothing);
  field.gy = transposed(detail::convolve_y_even(transposed(detail::convolve_y_odd(img, f.derivative)), f.smoothing));
  field.magnitude = (field.gx.square() + field.gy.square()).sqrt();
  return field;
}

/// Laplacian-of-Gaussian response. Uses the separable decomposition of the
/// mean-balanced kernel; agrees with convolve(img, log_kernel(tau_l)) to ~1e-15.
/// The input is offset by its first pixel so constant images give exact zeros.
template <typename Scalar>
Image<Scalar> log_response(const Image<Scalar>& input, Scalar tau_l) {
  const Kernel<Scalar> full = log_kernel(tau_l);
  detail::require_fits(input, full.size());
  const Image<Scalar> img = input - input(0, 0);
  const int radius = full.radius();
  const Scalar tau2 = tau_l * tau_l;
  const Scalar c = 1 / (std::numbers::pi_v<Scalar> * tau2 * tau2);
  // Raw kernel = c [ (q - s)(x) s(y) + s(x) q(y) ] with s = exp(-k^2 / 2 tau^2), q = k^2 / (2 tau^2) s.
  Eigen::Array<Scalar, Eigen::Dynamic, 1> s(radius + 1), q(radius + 1), p(radius + 1), ones(radius + 1);
  for (int k = 0; k <= radius; ++k) {
    s(k) = std::exp(-Scalar(k * k) / (2 * tau2));
    q(k) = Scalar(k * k) / (2 * tau2) * s(k);
    p(k) = q(k) - s(k);
  }
  ones.setOnes();
  Scalar raw_sum = 0;
  for (int row = 0; row < full.size(); ++row) {
    for (int col = 0; col < full.size(); ++col) {
      const Scalar r2 = Scalar((col - radius) * (col - radius) + (row - radius) * (row - radius));
      raw_sum += c * (r2 / (2 * tau2) - 1) * std::exp(-r2 / (2 * tau2));
    }
  }
  const Scalar mean = raw_sum / Scalar(full.size() * full.size());
  using detail::convolve_y_even;
  using detail::transposed;
  const Image<Scalar> term_x = convolve_y_even(transposed(convolve_y_even(transposed(img), p)), s);
  const Image<Scalar> term_y = transposed(convolve_y_even(transposed(convolve_y_even(img, q)), s));
  const Image<Scalar> box = convolve_y_even(transposed(convolve_y_even(transposed(img), ones)), ones);
  return c * (term_x + term_y) - mean * box;
}

}  // namespace grainspect

#endif  // GRAINSPECT_FILTERING_HPP
