#ifndef GRAINSPECT_IMAGE_HPP
#define GRAINSPECT_IMAGE_HPP

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace grainspect {

/// Row-major 2-D pixel grid. rows() is the image height, cols() the width;
/// pixel (x, y) lives at img(y, x).
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ScalarImage = Image<double>;
using BinaryImage = Image<bool>;
using LabelImage = Image<int>;

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// RGB image with every channel normalized to [0, 1].
struct ColorImage {
  ScalarImage r;
  ScalarImage g;
  ScalarImage b;

  int width() const { return static_cast<int>(r.cols()); }
  int height() const { return static_cast<int>(r.rows()); }

  static ColorImage filled(int width, int height, double r, double g, double b);
};

enum class Band { Red, Green, Saturation, Value, Gray };

/// The four bands features are computed on, in descriptor order.
inline constexpr std::array<Band, 4> kFeatureBands = {Band::Red, Band::Green, Band::Saturation,
                                                      Band::Value};

/// Single-letter band tag used in feature descriptors: r, g, s, v (gray is "y").
char band_tag(Band band);
Band band_from_tag(char tag);
Band band_from_name(std::string_view name);

/// Reads an 8-bit PNG or binary PPM (P6). Throws DataError on unreadable,
/// unsupported or empty files.
ColorImage load_image(const std::string& path);

void save_png(const ColorImage& img, const std::string& path);
void save_ppm(const ColorImage& img, const std::string& path);

/// Writes a grayscale PGM (P5). Values are scaled from [lo, hi] to 0..255 and clamped.
void save_pgm(const ScalarImage& img, const std::string& path, double lo = 0.0, double hi = 1.0);

/// red/green are the raw channels; value = max(r,g,b); saturation = chroma / value
/// (0 when value is 0); gray = channel mean. Hue is never needed.
ScalarImage to_band(const ColorImage& img, Band band);

struct Window {
  int x = 0;
  int y = 0;
  int size = 0;

  bool contains(int px, int py) const { return px >= x && px < x + size && py >= y && py < y + size; }
};

/// Non-overlapping square windows aligned to (0, 0), row-major. Partial
/// windows along the right and bottom borders are dropped.
struct WindowGrid {
  int window_size = 0;
  int columns = 0;
  int rows = 0;
  std::vector<Window> windows;
};

WindowGrid tile_windows(int width, int height, int window_size);

}  // namespace grainspect

#endif  // GRAINSPECT_IMAGE_HPP
