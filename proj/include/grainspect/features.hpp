#ifndef GRAINSPECT_FEATURES_HPP
#define GRAINSPECT_FEATURES_HPP

#include "grainspect/curves.hpp"
#include "grainspect/image.hpp"
#include "grainspect/regions.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grainspect {

/// Marker for a feature that could not be computed (e.g. no support region in the window).
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

/// Percent levels of the percentile features.
inline constexpr std::array<double, 5> kPercentLevels = {0.02, 0.2, 10.0, 60.0, 90.0};

struct StatFeatures {
  double mean = 0.0;
  double std_dev = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;  // excess
  double median = 0.0;
  std::array<double, 5> percentiles{};  // at kPercentLevels

  friend bool operator==(const StatFeatures&, const StatFeatures&) = default;
};

/// Shape of one support region. Individual entries are kMissing when the region
/// is too small or degenerate for them.
struct StructFeatures {
  double endpoint_distance = kMissing;  // d_n in [0, 1]
  double compactness = kMissing;        // perimeter^2 / (4 pi area)
  double median_curvature = kMissing;   // median |K|
  double axes_ratio = kMissing;         // e = major / minor
  double major_axis = kMissing;
  double minor_axis = kMissing;
};

struct EllipseFit {
  double ratio = 0.0;
  double major = 0.0;
  double minor = 0.0;
};

/// Nearest rank: the ceil(p N / 100)-th smallest value, rank clamped to [1, N].
double percentile(std::span<const double> values, double p);

/// Population moments (1/N), excess kurtosis, lower-middle median, nearest-rank
/// percentiles. Zero variance gives zero skewness and kurtosis.
/// Throws std::invalid_argument for fewer than two values.
StatFeatures statistical_features(std::span<const double> values);

/// Endpoint gap over trapezoidal arc length, clamped to [0, 1].
double normalized_endpoint_distance(const Curve& curve);

double compactness(const SupportRegion& region);

/// Median |K| over kCurvatureSamples parameters, degenerate samples excluded.
double median_curvature(const FourierBoundary& fb);

/// Moment ellipse: axis lengths are 4 sqrt(eigenvalues of the pixel-coordinate
/// covariance). A collinear pixel set yields ratio = +inf and minor = 0.
EllipseFit ellipse_axes_ratio(const SupportRegion& region);

/// All shape features of a region; entries that cannot be computed are kMissing.
StructFeatures structural_features(const SupportRegion& region);

/// Statistics over the window pixels where mask is set, in raster order.
/// Empty when fewer than two pixels are selected.
std::optional<StatFeatures> conditional_statistics(const ScalarImage& window, const BinaryImage& mask);

// ---- feature descriptors ---------------------------------------------------

enum class FeatureFamily { Statistical, Gradient, Laplacian, Combined };

/// Descriptor such as "sigma(s)^G", "p10(g)" or "dn(v)^L".
struct FeatureDescriptor {
  std::string stat;
  Band band = Band::Gray;
  std::optional<RegionKind> kind;

  std::string str() const;
  static FeatureDescriptor parse(std::string_view text);
};

/// Statistic names in descriptor order.
const std::vector<std::string>& statistic_names();
/// Structural feature names in descriptor order: dn, c, k, e, l1, l2.
const std::vector<std::string>& structural_names();

using FeatureSchema = std::vector<std::string>;

/// Canonical column order: plain statistics for every band, then the G block
/// (structural + conditional per band), then the L block.
std::shared_ptr<const FeatureSchema> feature_schema(std::span<const Band> bands);

/// Descriptors of the schema that belong to a family.
std::vector<std::string> feature_pool(const FeatureSchema& schema, FeatureFamily family);
FeatureFamily family_from_name(std::string_view name);

struct FeatureVector {
  std::shared_ptr<const FeatureSchema> schema;
  Eigen::VectorXd values;  // aligned with *schema, kMissing where absent

  std::optional<double> get(std::string_view descriptor) const;
};

/// One band of an image with its support regions and per-region shape features
/// (aligned with regions.regions).
struct BandAnalysis {
  Band band = Band::Gray;
  ScalarImage image;
  RegionSet gmsr;
  RegionSet lgsr;
  std::vector<StructFeatures> gmsr_shapes;
  std::vector<StructFeatures> lgsr_shapes;
  bool has_gmsr = true;
  bool has_lgsr = true;
};

BandAnalysis analyze_band(Band band, ScalarImage image, const RegionParams& gmsr, const LgsrParams& lgsr,
                          bool with_gmsr = true, bool with_lgsr = true);

/// Features of one window. For each region kind, the dominant region (most
/// pixels inside the window, ties to the lower id) supplies the structural
/// features and the union of that kind's regions inside the window is the
/// conditional-statistics mask.
FeatureVector window_features(const Window& window, std::span<const BandAnalysis> bands,
                              std::shared_ptr<const FeatureSchema> schema);

}  // namespace grainspect

#endif  // GRAINSPECT_FEATURES_HPP
