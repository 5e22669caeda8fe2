#include "grainspect/synthetic.hpp"

#include "grainspect/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

namespace grainspect {

namespace {

struct Rng {
  std::mt19937_64 engine;
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine); }
  double normal(double sigma) { return std::normal_distribution<double>(0.0, sigma)(engine); }
};

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Darkness contributed by one defect at a pixel; bounded to its box for speed.
struct Blot {
  enum Shape { Disk, Bar } shape = Disk;
  double cx = 0, cy = 0;
  double radius = 0, aspect = 1, angle = 0;  // disk
  double half_length = 0, width = 0;         // bar
  double depth = 0, softness = 1, rim = 0;
  double extent_x = 0, extent_y = 0;

  double at(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = c * dx + s * dy;
    const double v = -s * dx + c * dy;
    if (shape == Disk) {
      const double d = std::hypot(u, v * aspect);
      return depth * sigmoid((radius - d) / softness) + rim * std::exp(-std::pow((d - radius) / 1.2, 2));
    }
    const double along = std::max(std::abs(u) - half_length, 0.0);
    const double d = std::hypot(along, v);
    return depth * sigmoid((0.5 * width - d) / softness);
  }
};

void set_extent(Blot& b) {
  if (b.shape == Blot::Disk) {
    b.extent_x = b.extent_y = b.radius + 2.0 * b.softness + 1.0;
  } else {
    const double c = std::abs(std::cos(b.angle)), s = std::abs(std::sin(b.angle));
    b.extent_x = b.half_length * c + 0.5 * b.width * s + 1.5;
    b.extent_y = b.half_length * s + 0.5 * b.width * c + 1.5;
  }
}

Blot make_defect(Rng& rng, DefectClass cls, bool pin) {
  Blot b;
  if (pin) {  // small faint knot near the detection limit
    b.radius = rng.uniform(1.5, 2.4);
    b.depth = rng.uniform(0.3, 0.45);
    b.softness = 0.8;
    set_extent(b);
    return b;
  }
  switch (cls) {
    case DefectClass::DryKnot:
      b.radius = rng.uniform(9.0, 19.0);
      b.aspect = rng.uniform(1.0, 1.3);
      b.angle = rng.uniform(0.0, std::numbers::pi);
      b.depth = rng.uniform(0.45, 0.6);
      b.softness = 0.6;
      b.rim = rng.uniform(0.1, 0.2);
      break;
    case DefectClass::SoundKnot:
      b.radius = rng.uniform(7.0, 19.0);
      b.aspect = rng.uniform(1.0, 1.3);
      b.angle = rng.uniform(0.0, std::numbers::pi);
      b.depth = rng.uniform(0.2, 0.3);
      b.softness = rng.uniform(1.2, 2.0);
      break;
    default:  // shake
      b.shape = Blot::Bar;
      b.half_length = 0.5 * rng.uniform(38.0, 46.0);
      b.width = rng.uniform(2.5, 4.0);
      b.angle = rng.uniform(0.0, std::numbers::pi);
      b.depth = rng.uniform(0.4, 0.55);
      b.softness = 0.5;
      break;
  }
  set_extent(b);
  return b;
}

}  // namespace

SyntheticImage render_synthetic(const SyntheticOptions& options, int index) {
  if (options.width < options.window || options.height < options.window) {
    throw std::invalid_argument("synthetic image smaller than one window");
  }
  Rng rng{std::mt19937_64(options.seed * 1000003ULL + static_cast<std::uint64_t>(index))};
  SyntheticImage out;
  char id[32];
  std::snprintf(id, sizeof id, "syn%04d", index);
  out.id = id;

  const int cols = options.width / options.window;
  const int rows = options.height / options.window;
  std::vector<int> cells(static_cast<std::size_t>(cols * rows));
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
  std::shuffle(cells.begin(), cells.end(), rng.engine);

  std::vector<Blot> blots;
  const int defects = rng.integer(1, std::max(1, std::min(options.max_defects, cols * rows)));
  constexpr double kMargin = 5.0;
  constexpr int kBoxMargin = 10;
  for (int k = 0; k < defects; ++k) {
    // Most boards carry at least one clearly visible defect.
    double pick = rng.uniform(0.0, 1.0);
    if (k == 0 && rng.uniform(0.0, 1.0) < options.strong_first) pick = pick < 0.5 ? 0.0 : 0.9;
    const bool pin = pick >= 0.63 && pick < 0.75;
    const DefectClass cls = pick < 0.35 ? DefectClass::DryKnot : pick < 0.75 ? DefectClass::SoundKnot : DefectClass::Shake;
    Blot b = make_defect(rng, cls, pin);
    const int wx = (cells[static_cast<std::size_t>(k)] % cols) * options.window;
    const int wy = (cells[static_cast<std::size_t>(k)] / cols) * options.window;
    const double span_x = options.window - 2.0 * (kMargin + b.extent_x);
    const double span_y = options.window - 2.0 * (kMargin + b.extent_y);
    b.cx = wx + kMargin + b.extent_x + rng.uniform(0.0, std::max(span_x, 0.0));
    b.cy = wy + kMargin + b.extent_y + rng.uniform(0.0, std::max(span_y, 0.0));
    DefectAnnotation a;
    a.image_id = out.id;
    a.cls = cls;
    a.x0 = std::max(0, static_cast<int>(std::floor(b.cx - b.extent_x)) - kBoxMargin);
    a.y0 = std::max(0, static_cast<int>(std::floor(b.cy - b.extent_y)) - kBoxMargin);
    a.x1 = std::min(options.width, static_cast<int>(std::ceil(b.cx + b.extent_x)) + kBoxMargin);
    a.y1 = std::min(options.height, static_cast<int>(std::ceil(b.cy + b.extent_y)) + kBoxMargin);
    out.annotations.push_back(a);
    blots.push_back(b);
  }
  const int specks = rng.integer(0, options.max_specks);
  for (int k = 0; k < specks; ++k) {
    Blot b;
    b.radius = 0.6 + 1.2 * std::pow(rng.uniform(0.0, 1.0), 4.0);  // mostly tiny, a few larger
    b.depth = rng.uniform(0.3, 0.45);
    b.softness = 0.5;
    set_extent(b);
    b.cx = rng.uniform(4.0, options.width - 4.0);
    b.cy = rng.uniform(4.0, options.height - 4.0);
    blots.push_back(b);
  }

  // Ring grain: gently wavy stripes with slow brightness drift.
  const double period = rng.uniform(10.0, 16.0);
  const double phase1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double phase2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double wave = rng.uniform(3.0, 8.0);
  const double grain = rng.uniform(0.005, 0.012);
  const double tone = rng.uniform(0.92, 1.05);
  const std::array<double, 3> wood = {0.80 * tone, 0.60 * tone, 0.38 * tone};
  const std::array<double, 3> knot = {0.35, 0.20, 0.10};

  out.image = ColorImage::filled(options.width, options.height, 0, 0, 0);
  ScalarImage* channels[3] = {&out.image.r, &out.image.g, &out.image.b};
  for (int y = 0; y < options.height; ++y) {
    for (int x = 0; x < options.width; ++x) {
      const double offset = wave * std::sin(x / 37.0 + phase1) + 0.4 * wave * std::sin(x / 13.0 + phase2);
      const double g = 1.0 + grain * std::sin(2.0 * std::numbers::pi * (y + offset) / period);
      double dark = 0.0;
      for (const Blot& b : blots) {
        if (std::abs(x - b.cx) > b.extent_x + 4 || std::abs(y - b.cy) > b.extent_y + 4) continue;
        dark += b.at(x, y);
      }
      dark = std::min(dark, 0.9);
      for (int c = 0; c < 3; ++c) {
        const double base = wood[static_cast<std::size_t>(c)] * g;
        const double v = base + (knot[static_cast<std::size_t>(c)] - base) * dark + rng.normal(0.006);
        (*channels[c])(y, x) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return out;
}

Manifest write_synthetic_corpus(const std::string& dir, const SyntheticOptions& options) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "images");
  std::ofstream labels(fs::path(dir) / "labels.txt");
  if (!labels) throw DataError("cannot write " + (fs::path(dir) / "labels.txt").string());
  labels << "# synthetic corpus: image_id x0 y0 x1 y1 class_name\n";
  for (int i = 0; i < options.images; ++i) {
    const SyntheticImage s = render_synthetic(options, i);
    save_png(s.image, (fs::path(dir) / "images" / (s.id + ".png")).string());
    for (const auto& a : s.annotations) {
      labels << a.image_id << ' ' << a.x0 << ' ' << a.y0 << ' ' << a.x1 << ' ' << a.y1 << ' '
             << defect_class_name(a.cls) << '\n';
    }
  }
  labels.close();
  return load_manifest(dir);
}

}  // namespace grainspect
