#include "grainspect/image.hpp"

#include "grainspect/error.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace grainspect {

namespace {

ColorImage from_rgb8(const std::uint8_t* data, int width, int height) {
  ColorImage img;
  img.r.resize(height, width);
  img.g.resize(height, width);
  img.b.resize(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::uint8_t* p = data + 3 * (static_cast<std::size_t>(y) * width + x);
      img.r(y, x) = p[0] / 255.0;
      img.g(y, x) = p[1] / 255.0;
      img.b(y, x) = p[2] / 255.0;
    }
  }
  return img;
}

std::vector<std::uint8_t> to_rgb8(const ColorImage& img) {
  auto quantize = [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  std::vector<std::uint8_t> out(3 * static_cast<std::size_t>(img.width()) * img.height());
  std::size_t i = 0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out[i++] = quantize(img.r(y, x));
      out[i++] = quantize(img.g(y, x));
      out[i++] = quantize(img.b(y, x));
    }
  }
  return out;
}

ColorImage read_png(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw DataError("unreadable file: " + path + " (" + image.message + ")");
  }
  image.format = PNG_FORMAT_RGB;
  if (image.width == 0 || image.height == 0) {
    png_image_free(&image);
    throw DataError("zero-sized image: " + path);
  }
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DataError("unreadable file: " + path + " (" + msg + ")");
  }
  return from_rgb8(buffer.data(), static_cast<int>(image.width), static_cast<int>(image.height));
}

// Reads the next whitespace-delimited PPM header token, skipping '#' comments.
bool next_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos, std::string& token) {
  token.clear();
  while (pos < bytes.size()) {
    const char c = static_cast<char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < bytes.size() && !std::isspace(bytes[pos])) token.push_back(static_cast<char>(bytes[pos++]));
  return !token.empty();
}

ColorImage read_ppm(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 2;
  std::string tok;
  int dims[3] = {0, 0, 0};
  for (int& d : dims) {
    if (!next_token(bytes, pos, tok)) throw DataError("unreadable file: " + path + " (truncated header)");
    try {
      d = std::stoi(tok);
    } catch (const std::exception&) {
      throw DataError("unreadable file: " + path + " (bad header field '" + tok + "')");
    }
  }
  const auto [width, height, maxval] = dims;
  if (width <= 0 || height <= 0) throw DataError("zero-sized image: " + path);
  if (maxval != 255) throw DataError("unsupported format: " + path + " (only 8-bit PPM is supported)");
  ++pos;  // single whitespace byte after maxval
  const std::size_t need = 3 * static_cast<std::size_t>(width) * height;
  if (pos + need > bytes.size()) throw DataError("unreadable file: " + path + " (truncated pixel data)");
  return from_rgb8(bytes.data() + pos, width, height);
}

}  // namespace

ColorImage ColorImage::filled(int width, int height, double r, double g, double b) {
  ColorImage img;
  img.r = ScalarImage::Constant(height, width, r);
  img.g = ScalarImage::Constant(height, width, g);
  img.b = ScalarImage::Constant(height, width, b);
  return img;
}

char band_tag(Band band) {
  switch (band) {
    case Band::Red: return 'r';
    case Band::Green: return 'g';
    case Band::Saturation: return 's';
    case Band::Value: return 'v';
    case Band::Gray: return 'y';
  }
  return '?';
}

Band band_from_tag(char tag) {
  switch (tag) {
    case 'r': return Band::Red;
    case 'g': return Band::Green;
    case 's': return Band::Saturation;
    case 'v': return Band::Value;
    case 'y': return Band::Gray;
    default: throw std::invalid_argument(std::string("invalid band tag '") + tag + "'");
  }
}

Band band_from_name(std::string_view name) {
  if (name == "red" || name == "r") return Band::Red;
  if (name == "green" || name == "g") return Band::Green;
  if (name == "saturation" || name == "s") return Band::Saturation;
  if (name == "value" || name == "v") return Band::Value;
  if (name == "gray" || name == "y") return Band::Gray;
  throw std::invalid_argument("invalid band name '" + std::string(name) + "'");
}

ColorImage load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("unreadable file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return read_png(path, bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return read_ppm(path, bytes);
  if (bytes.empty()) throw DataError("unreadable file: " + path + " (empty)");
  throw DataError("unsupported format: " + path);
}

void save_png(const ColorImage& img, const std::string& path) {
  const auto rgb = to_rgb8(img);
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, rgb.data(), 0, nullptr)) {
    throw DataError("cannot write " + path + " (" + image.message + ")");
  }
}

void save_ppm(const ColorImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  const auto rgb = to_rgb8(img);
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
}

void save_pgm(const ScalarImage& img, const std::string& path, double lo, double hi) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  const double span = hi > lo ? hi - lo : 1.0;
  for (Eigen::Index y = 0; y < img.rows(); ++y) {
    for (Eigen::Index x = 0; x < img.cols(); ++x) {
      const double v = std::clamp((img(y, x) - lo) / span, 0.0, 1.0);
      out.put(static_cast<char>(std::lround(v * 255.0)));
    }
  }
}

ScalarImage to_band(const ColorImage& img, Band band) {
  switch (band) {
    case Band::Red: return img.r;
    case Band::Green: return img.g;
    case Band::Gray: return (img.r + img.g + img.b) / 3.0;
    case Band::Value: return img.r.max(img.g).max(img.b);
    case Band::Saturation: {
      const ScalarImage value = img.r.max(img.g).max(img.b);
      const ScalarImage chroma = value - img.r.min(img.g).min(img.b);
      return (value > 0.0).select(chroma / value, 0.0);
    }
  }
  throw std::invalid_argument("invalid band");
}

WindowGrid tile_windows(int width, int height, int window_size) {
  if (window_size < 1) throw std::invalid_argument("window_size must be >= 1");
  WindowGrid grid;
  grid.window_size = window_size;
  grid.columns = width / window_size;
  grid.rows = height / window_size;
  grid.windows.reserve(static_cast<std::size_t>(grid.columns) * grid.rows);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.columns; ++c) grid.windows.push_back({c * window_size, r * window_size, window_size});
  }
  return grid;
}

}  // namespace grainspect
