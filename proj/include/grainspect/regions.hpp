#ifndef GRAINSPECT_REGIONS_HPP
#define GRAINSPECT_REGIONS_HPP

#include "grainspect/image.hpp"

#include <string>
#include <vector>

namespace grainspect {

enum class RegionKind { Gradient, Laplacian };

/// Superscript used in feature descriptors: 'G' for gradient-magnitude support
/// regions, 'L' for Laplacian-of-Gaussian ones.
char region_kind_tag(RegionKind kind);

struct BoundingBox {
  int x0 = 0;  // inclusive
  int y0 = 0;
  int x1 = 0;  // exclusive
  int y1 = 0;
};

/// One 8-connected support region.
struct SupportRegion {
  int id = 0;
  RegionKind kind = RegionKind::Gradient;
  std::vector<Pixel> pixels;  // raster order
  int area = 0;
  double perimeter = 0.0;  // boundary trace length, diagonal steps weigh sqrt(2)
  BoundingBox box;
};

struct RegionParams {
  double tau = 2.0;
  double high = 0.2;
  double low = 0.15;
  int min_size = 50;
};

enum class Polarity { Both, Positive, Negative };

Polarity polarity_from_name(const std::string& name);

struct LgsrParams {
  double tau = 1.0;
  double threshold = 0.2;
  int min_size = 50;
  Polarity polarity = Polarity::Both;
};

/// Labeled regions of one image. labels(y, x) holds the region id or 0.
struct RegionSet {
  int width = 0;
  int height = 0;
  RegionKind kind = RegionKind::Gradient;
  std::vector<SupportRegion> regions;
  LabelImage labels;

  /// Region with the given id, or nullptr.
  const SupportRegion* find(int id) const;
  BinaryImage mask() const { return labels > 0; }
};

/// Divides by the largest absolute value; an all-zero image is returned unchanged.
ScalarImage normalize_max(const ScalarImage& img);

/// A pixel is set when its value is >= high, or >= low and 8-connected through
/// >= low pixels to a >= high pixel. Throws std::invalid_argument if low > high.
BinaryImage hysteresis_threshold(const ScalarImage& img, double high, double low);

/// 8-connected component labeling. Ids start at 1 in raster-scan first-encounter order.
RegionSet label_components(const BinaryImage& bin, RegionKind kind = RegionKind::Gradient);

/// Keeps regions with area >= min_size; ids are preserved.
RegionSet filter_regions(const RegionSet& set, int min_size);

/// Moore-neighbor trace of the outer boundary of a pixel set, starting at the
/// topmost-leftmost pixel and winding counterclockwise in the (x, y) pixel frame
/// (x right, y down), so b = x + j y has increasing argument. Holes are ignored.
/// The start pixel is not repeated at the end.
std::vector<Pixel> trace_outer_boundary(const std::vector<Pixel>& pixels);

/// Sum of the cyclic step lengths of a closed boundary (1 or sqrt(2) per step).
/// A one-pixel boundary has perimeter 1.
double boundary_length(const std::vector<Pixel>& boundary);

/// Gradient magnitude -> normalize -> hysteresis -> label -> size filter.
RegionSet extract_gmsr(const ScalarImage& band, const RegionParams& params = {});

/// LoG response -> polarity restriction -> normalize -> |response| >= threshold
/// -> label -> size filter.
RegionSet extract_lgsr(const ScalarImage& band, const LgsrParams& params = {});

}  // namespace grainspect

#endif  // GRAINSPECT_REGIONS_HPP
