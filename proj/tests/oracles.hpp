// Independent reference implementations used by the unit and acceptance tests.
#ifndef GRAINSPECT_TESTS_ORACLES_HPP
#define GRAINSPECT_TESTS_ORACLES_HPP

#include "grainspect/curves.hpp"
#include "grainspect/image.hpp"
#include "grainspect/regions.hpp"

#include <cmath>
#include <complex>
#include <deque>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using grainspect::BinaryImage;
using grainspect::LabelImage;
using grainspect::ScalarImage;

// Seeds at >= high, breadth-first growth through 8-neighbours >= low.
inline BinaryImage hysteresis_bfs(const ScalarImage& img, double high, double low) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  BinaryImage out = BinaryImage::Constant(h, w, false);
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (img(y, x) >= high) {
        out(y, x) = true;
        queue.emplace_back(x, y);
      }
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h || out(ny, nx) || img(ny, nx) < low) continue;
        out(ny, nx) = true;
        queue.emplace_back(nx, ny);
      }
  }
  return out;
}

// Union-find over 8-connectivity; labels are root indices + 1, background 0.
inline LabelImage union_find_labels(const BinaryImage& bin) {
  const int h = static_cast<int>(bin.rows()), w = static_cast<int>(bin.cols());
  std::vector<int> parent(static_cast<std::size_t>(h * w));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!bin(y, x)) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h || !bin(ny, nx)) continue;
          parent[find(y * w + x)] = find(ny * w + nx);
        }
    }
  LabelImage out = LabelImage::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (bin(y, x)) out(y, x) = find(y * w + x) + 1;
  return out;
}

// Same partition up to a bijective relabeling; background must coincide.
inline bool same_partition(const LabelImage& a, const LabelImage& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  std::map<int, int> ab, ba;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const int u = a.data()[i], v = b.data()[i];
    if ((u == 0) != (v == 0)) return false;
    if (u == 0) continue;
    if (auto [it, fresh] = ab.emplace(u, v); !fresh && it->second != v) return false;
    if (auto [it, fresh] = ba.emplace(v, u); !fresh && it->second != u) return false;
  }
  return true;
}

// Full DFT, every bin k = 0..T-1, normalized by 1/T.
inline std::vector<std::complex<double>> full_dft(const std::vector<std::complex<double>>& b) {
  const auto T = b.size();
  std::vector<std::complex<double>> out(T);
  for (std::size_t k = 0; k < T; ++k) {
    std::complex<double> acc = 0;
    for (std::size_t t = 0; t < T; ++t) {
      acc += b[t] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * t % T) / double(T));
    }
    out[k] = acc / double(T);
  }
  return out;
}

inline BinaryImage disk_mask(int size, double cx, double cy, double r) {
  BinaryImage m(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) m(y, x) = std::hypot(x - cx, y - cy) <= r;
  return m;
}

inline BinaryImage rect_mask(int width, int height, int x0, int y0, int x1, int y1) {
  BinaryImage m = BinaryImage::Constant(height, width, false);
  m.block(y0, x0, y1 - y0, x1 - x0).setConstant(true);
  return m;
}

// Rasterized rectangle w x h rotated by angle about (cx, cy).
inline BinaryImage rotated_rect_mask(int size, double cx, double cy, double w, double h, double angle) {
  BinaryImage m(size, size);
  const double c = std::cos(angle), s = std::sin(angle);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double u = c * (x - cx) + s * (y - cy), v = -s * (x - cx) + c * (y - cy);
      m(y, x) = std::abs(u) <= 0.5 * w && std::abs(v) <= 0.5 * h;
    }
  return m;
}

// Largest 8-connected region of a mask.
inline grainspect::SupportRegion only_region(const BinaryImage& mask) {
  auto set = grainspect::label_components(mask);
  std::size_t best = 0;
  for (std::size_t i = 1; i < set.regions.size(); ++i)
    if (set.regions[i].area > set.regions[best].area) best = i;
  return set.regions.at(best);
}

inline ScalarImage random_image(std::mt19937_64& rng, int h, int w, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  ScalarImage img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = u(rng);
  return img;
}

// 90 degree counterclockwise rotation of the pixel grid.
template <typename Derived>
auto rot90(const Eigen::ArrayBase<Derived>& a) {
  using Plain = typename Derived::PlainObject;
  Plain t = a.transpose();
  return Plain(t.colwise().reverse());
}

}  // namespace oracle

#endif  // GRAINSPECT_TESTS_ORACLES_HPP
