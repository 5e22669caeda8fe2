#include "grainspect/regions.hpp"

#include "grainspect/filtering.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numbers>
#include <stdexcept>

namespace grainspect {

namespace {

// Clockwise on screen (y down) starting east; increasing index turns E -> S -> W -> N.
constexpr std::array<Pixel, 8> kDirs = {
    Pixel{1, 0}, Pixel{1, 1}, Pixel{0, 1}, Pixel{-1, 1}, Pixel{-1, 0}, Pixel{-1, -1}, Pixel{0, -1}, Pixel{1, -1}};
constexpr int kWest = 4;

int direction_index(int dx, int dy) {
  for (int i = 0; i < 8; ++i) {
    if (kDirs[i].x == dx && kDirs[i].y == dy) return i;
  }
  return -1;
}

}  // namespace

char region_kind_tag(RegionKind kind) { return kind == RegionKind::Gradient ? 'G' : 'L'; }

Polarity polarity_from_name(const std::string& name) {
  if (name == "both") return Polarity::Both;
  if (name == "positive") return Polarity::Positive;
  if (name == "negative") return Polarity::Negative;
  throw std::invalid_argument("invalid polarity '" + name + "' (expected both, positive or negative)");
}

const SupportRegion* RegionSet::find(int id) const {
  const auto it = std::lower_bound(regions.begin(), regions.end(), id,
                                   [](const SupportRegion& r, int v) { return r.id < v; });
  return it != regions.end() && it->id == id ? &*it : nullptr;
}

ScalarImage normalize_max(const ScalarImage& img) {
  if (img.size() == 0) return img;
  const double peak = img.abs().maxCoeff();
  if (peak == 0.0) return img;
  return img / peak;
}

BinaryImage hysteresis_threshold(const ScalarImage& img, double high, double low) {
  if (low > high) throw std::invalid_argument("hysteresis: low threshold exceeds high threshold");
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());
  BinaryImage out = BinaryImage::Constant(h, w, false);
  std::deque<Pixel> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (img(y, x) >= high) {
        out(y, x) = true;
        queue.push_back({x, y});
      }
    }
  }
  while (!queue.empty()) {
    const Pixel p = queue.front();
    queue.pop_front();
    for (const Pixel& d : kDirs) {
      const int nx = p.x + d.x;
      const int ny = p.y + d.y;
      if (nx < 0 || ny < 0 || nx >= w || ny >= h || out(ny, nx)) continue;
      if (img(ny, nx) >= low) {
        out(ny, nx) = true;
        queue.push_back({nx, ny});
      }
    }
  }
  return out;
}

RegionSet label_components(const BinaryImage& bin, RegionKind kind) {
  const int h = static_cast<int>(bin.rows());
  const int w = static_cast<int>(bin.cols());
  RegionSet set;
  set.width = w;
  set.height = h;
  set.kind = kind;
  set.labels = LabelImage::Zero(h, w);
  int next_id = 0;
  std::vector<Pixel> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!bin(y, x) || set.labels(y, x) != 0) continue;
      const int id = ++next_id;
      set.labels(y, x) = id;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        for (const Pixel& d : kDirs) {
          const int nx = p.x + d.x;
          const int ny = p.y + d.y;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (bin(ny, nx) && set.labels(ny, nx) == 0) {
            set.labels(ny, nx) = id;
            stack.push_back({nx, ny});
          }
        }
      }
    }
  }

  set.regions.resize(next_id);
  for (int i = 0; i < next_id; ++i) {
    set.regions[i].id = i + 1;
    set.regions[i].kind = kind;
    set.regions[i].box = {w, h, -1, -1};
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int id = set.labels(y, x);
      if (id == 0) continue;
      SupportRegion& r = set.regions[id - 1];
      r.pixels.push_back({x, y});
      r.box.x0 = std::min(r.box.x0, x);
      r.box.y0 = std::min(r.box.y0, y);
      r.box.x1 = std::max(r.box.x1, x + 1);
      r.box.y1 = std::max(r.box.y1, y + 1);
    }
  }
  for (SupportRegion& r : set.regions) {
    r.area = static_cast<int>(r.pixels.size());
    r.perimeter = boundary_length(trace_outer_boundary(r.pixels));
  }
  return set;
}

RegionSet filter_regions(const RegionSet& set, int min_size) {
  if (min_size < 0) throw std::invalid_argument("min_size must be >= 0");
  RegionSet out;
  out.width = set.width;
  out.height = set.height;
  out.kind = set.kind;
  out.labels = set.labels;
  for (const SupportRegion& r : set.regions) {
    if (r.area >= min_size) {
      out.regions.push_back(r);
    } else {
      for (const Pixel& p : r.pixels) out.labels(p.y, p.x) = 0;
    }
  }
  return out;
}

std::vector<Pixel> trace_outer_boundary(const std::vector<Pixel>& pixels) {
  if (pixels.empty()) return {};
  int x0 = pixels.front().x, x1 = x0, y0 = pixels.front().y, y1 = y0;
  for (const Pixel& p : pixels) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  // Local mask with a one-pixel background margin.
  const int w = x1 - x0 + 3;
  const int h = y1 - y0 + 3;
  BinaryImage mask = BinaryImage::Constant(h, w, false);
  for (const Pixel& p : pixels) mask(p.y - y0 + 1, p.x - x0 + 1) = true;
  auto inside = [&](const Pixel& p) { return mask(p.y - y0 + 1, p.x - x0 + 1); };

  Pixel start{x1 + 1, y1 + 1};
  for (const Pixel& p : pixels) {
    if (p.y < start.y || (p.y == start.y && p.x < start.x)) start = p;
  }

  // One Moore step: scan clockwise from the backtrack cell; returns false when isolated.
  auto step = [&](const Pixel& c, int back, Pixel& next, int& next_back) {
    for (int i = 1; i <= 8; ++i) {
      const int dir = (back + i) % 8;
      const Pixel n{c.x + kDirs[dir].x, c.y + kDirs[dir].y};
      if (inside(n)) {
        const int prev_dir = (back + i - 1) % 8;
        const Pixel prev{c.x + kDirs[prev_dir].x, c.y + kDirs[prev_dir].y};
        next = n;
        next_back = direction_index(prev.x - n.x, prev.y - n.y);
        return true;
      }
    }
    return false;
  };

  std::vector<Pixel> boundary{start};
  Pixel current = start;
  int back = kWest;
  Pixel first_next{};
  const std::size_t cap = 8 * pixels.size() + 8;
  for (std::size_t iter = 0; iter < cap; ++iter) {
    Pixel next;
    int next_back = 0;
    if (!step(current, back, next, next_back)) break;
    if (iter == 0) {
      first_next = next;
    } else if (current == start && next == first_next) {
      break;
    }
    boundary.push_back(next);
    current = next;
    back = next_back;
  }
  if (boundary.size() > 1 && boundary.back() == start) boundary.pop_back();
  return boundary;
}

double boundary_length(const std::vector<Pixel>& boundary) {
  if (boundary.empty()) return 0.0;
  if (boundary.size() == 1) return 1.0;
  double length = 0.0;
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    const Pixel& a = boundary[i];
    const Pixel& b = boundary[(i + 1) % boundary.size()];
    length += (a.x != b.x && a.y != b.y) ? std::numbers::sqrt2 : 1.0;
  }
  return length;
}

RegionSet extract_gmsr(const ScalarImage& band, const RegionParams& params) {
  const auto field = gradient_magnitude(band, params.tau);
  const BinaryImage bin = hysteresis_threshold(normalize_max(field.magnitude), params.high, params.low);
  return filter_regions(label_components(bin, RegionKind::Gradient), params.min_size);
}

RegionSet extract_lgsr(const ScalarImage& band, const LgsrParams& params) {
  ScalarImage response = log_response(band, params.tau);
  if (params.polarity == Polarity::Positive) response = response.max(0.0);
  if (params.polarity == Polarity::Negative) response = response.min(0.0);
  const BinaryImage bin = normalize_max(response).abs() >= params.threshold;
  return filter_regions(label_components(bin, RegionKind::Laplacian), params.min_size);
}

}  // namespace grainspect
