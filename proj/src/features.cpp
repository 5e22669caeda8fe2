#include "grainspect/features.hpp"

#include "grainspect/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace grainspect {

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty list");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  const double rank = std::clamp(std::ceil(p * n / 100.0), 1.0, n);
  return sorted[static_cast<std::size_t>(rank) - 1];
}

StatFeatures statistical_features(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("statistical features need at least two values");
  const auto n = static_cast<double>(values.size());
  StatFeatures f;
  double sum = 0.0;
  for (double v : values) sum += v;
  f.mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - f.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  f.std_dev = std::sqrt(m2);
  if (m2 > 0.0) {
    f.skewness = m3 / std::pow(m2, 1.5);
    f.kurtosis = m4 / (m2 * m2) - 3.0;
  }

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  f.median = sorted[(sorted.size() - 1) / 2];
  for (std::size_t i = 0; i < kPercentLevels.size(); ++i) {
    const double rank = std::clamp(std::ceil(kPercentLevels[i] * n / 100.0), 1.0, n);
    f.percentiles[i] = sorted[static_cast<std::size_t>(rank) - 1];
  }
  return f;
}

double normalized_endpoint_distance(const Curve& curve) {
  const std::size_t n = curve.points.size();
  if (n < 16 || curve.velocity.size() != n) throw std::invalid_argument("curve needs >= 16 samples with velocities");
  const double step = curve.a / static_cast<double>(n - 1);
  double length = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    length += 0.5 * step * (std::abs(curve.velocity[i]) + std::abs(curve.velocity[i + 1]));
  }
  if (!(length > 0.0)) throw NumericalError("curve has zero arc length");
  return std::clamp(std::abs(curve.front() - curve.back()) / length, 0.0, 1.0);
}

double compactness(const SupportRegion& region) {
  if (!(region.perimeter > 0.0) || region.area < 1) throw NumericalError("degenerate perimeter");
  return region.perimeter * region.perimeter / (4.0 * std::numbers::pi * region.area);
}

double median_curvature(const FourierBoundary& fb) {
  std::vector<double> magnitudes;
  for (const auto& k : sample_curvature(fb)) {
    if (k) magnitudes.push_back(std::abs(*k));
  }
  if (magnitudes.empty()) throw NumericalError("all curvature samples are degenerate");
  std::sort(magnitudes.begin(), magnitudes.end());
  return magnitudes[(magnitudes.size() - 1) / 2];
}

EllipseFit ellipse_axes_ratio(const SupportRegion& region) {
  if (region.pixels.size() < 3) throw std::invalid_argument("ellipse fit needs at least three pixels");
  const auto n = static_cast<double>(region.pixels.size());
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const Pixel& p : region.pixels) mean += Eigen::Vector2d(p.x, p.y);
  mean /= n;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Pixel& p : region.pixels) {
    const Eigen::Vector2d d = Eigen::Vector2d(p.x, p.y) - mean;
    cov += d * d.transpose();
  }
  cov /= n;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(cov, Eigen::EigenvaluesOnly);
  const double lo = std::max(solver.eigenvalues()(0), 0.0);
  const double hi = std::max(solver.eigenvalues()(1), 0.0);
  EllipseFit fit;
  fit.major = 4.0 * std::sqrt(hi);
  fit.minor = 4.0 * std::sqrt(lo);
  // Relative cutoff absorbs rounding on exactly collinear sets.
  fit.ratio = lo <= 1e-12 * std::max(hi, 1.0) ? std::numeric_limits<double>::infinity() : fit.major / fit.minor;
  if (std::isinf(fit.ratio)) fit.minor = 0.0;
  return fit;
}

StructFeatures structural_features(const SupportRegion& region) {
  StructFeatures s;
  if (region.perimeter > 0.0) s.compactness = compactness(region);
  if (region.area >= 3) {
    const EllipseFit fit = ellipse_axes_ratio(region);
    s.major_axis = fit.major;
    s.minor_axis = fit.minor;
    if (std::isfinite(fit.ratio)) s.axes_ratio = fit.ratio;
  }
  const BoundarySequence boundary = trace_boundary(region);
  if (boundary.period() >= 2 * kFourierOrder + 1) {
    const FourierBoundary fb = fourier_coefficients(boundary);
    try {
      s.median_curvature = median_curvature(fb);
      s.endpoint_distance = normalized_endpoint_distance(extract_curve(fb));
    } catch (const NumericalError&) {
      // leave the remaining curve features missing
    }
  }
  return s;
}

std::optional<StatFeatures> conditional_statistics(const ScalarImage& window, const BinaryImage& mask) {
  if (window.rows() != mask.rows() || window.cols() != mask.cols()) {
    throw std::invalid_argument("mask dimensions differ from the window");
  }
  std::vector<double> selected;
  for (Eigen::Index y = 0; y < window.rows(); ++y) {
    for (Eigen::Index x = 0; x < window.cols(); ++x) {
      if (mask(y, x)) selected.push_back(window(y, x));
    }
  }
  if (selected.size() < 2) return std::nullopt;
  return statistical_features(selected);
}

// ---- descriptors -------------------------------------------------------------

const std::vector<std::string>& statistic_names() {
  static const std::vector<std::string> names = {"mu",    "sigma", "gamma1", "gamma2", "median",
                                                 "p0.02", "p0.2",  "p10",    "p60",    "p90"};
  return names;
}

const std::vector<std::string>& structural_names() {
  static const std::vector<std::string> names = {"dn", "c", "k", "e", "l1", "l2"};
  return names;
}

std::string FeatureDescriptor::str() const {
  std::string out = stat + "(" + band_tag(band) + ")";
  if (kind) out += std::string("^") + region_kind_tag(*kind);
  return out;
}

FeatureDescriptor FeatureDescriptor::parse(std::string_view text) {
  const auto open = text.find('(');
  const auto close = text.find(')');
  if (open == std::string_view::npos || close != open + 2) {
    throw std::invalid_argument("malformed feature descriptor '" + std::string(text) + "'");
  }
  FeatureDescriptor d;
  d.stat = std::string(text.substr(0, open));
  d.band = band_from_tag(text[open + 1]);
  const auto rest = text.substr(close + 1);
  if (rest == "^G") {
    d.kind = RegionKind::Gradient;
  } else if (rest == "^L") {
    d.kind = RegionKind::Laplacian;
  } else if (!rest.empty()) {
    throw std::invalid_argument("malformed feature descriptor '" + std::string(text) + "'");
  }
  const auto& stats = statistic_names();
  const auto& shapes = structural_names();
  const bool is_stat = std::find(stats.begin(), stats.end(), d.stat) != stats.end();
  const bool is_shape = std::find(shapes.begin(), shapes.end(), d.stat) != shapes.end();
  if (!is_stat && !(is_shape && d.kind)) {
    throw std::invalid_argument("unknown feature '" + std::string(text) + "'");
  }
  return d;
}

std::shared_ptr<const FeatureSchema> feature_schema(std::span<const Band> bands) {
  auto schema = std::make_shared<FeatureSchema>();
  for (Band b : bands) {
    for (const auto& s : statistic_names()) schema->push_back(FeatureDescriptor{s, b, std::nullopt}.str());
  }
  for (RegionKind kind : {RegionKind::Gradient, RegionKind::Laplacian}) {
    for (Band b : bands) {
      for (const auto& s : structural_names()) schema->push_back(FeatureDescriptor{s, b, kind}.str());
      for (const auto& s : statistic_names()) schema->push_back(FeatureDescriptor{s, b, kind}.str());
    }
  }
  return schema;
}

std::vector<std::string> feature_pool(const FeatureSchema& schema, FeatureFamily family) {
  std::vector<std::string> pool;
  for (const auto& name : schema) {
    const auto d = FeatureDescriptor::parse(name);
    const bool keep = family == FeatureFamily::Combined ||
                      (family == FeatureFamily::Statistical && !d.kind) ||
                      (family == FeatureFamily::Gradient && d.kind == RegionKind::Gradient) ||
                      (family == FeatureFamily::Laplacian && d.kind == RegionKind::Laplacian);
    if (keep) pool.push_back(name);
  }
  return pool;
}

FeatureFamily family_from_name(std::string_view name) {
  if (name == "statistical") return FeatureFamily::Statistical;
  if (name == "gmsr") return FeatureFamily::Gradient;
  if (name == "lgsr") return FeatureFamily::Laplacian;
  if (name == "combined") return FeatureFamily::Combined;
  throw std::invalid_argument("unknown feature family '" + std::string(name) +
                              "' (expected statistical, gmsr, lgsr or combined)");
}

std::optional<double> FeatureVector::get(std::string_view descriptor) const {
  if (!schema) return std::nullopt;
  const auto it = std::find(schema->begin(), schema->end(), descriptor);
  if (it == schema->end()) return std::nullopt;
  const double v = values(std::distance(schema->begin(), it));
  if (is_missing(v)) return std::nullopt;
  return v;
}

BandAnalysis analyze_band(Band band, ScalarImage image, const RegionParams& gmsr, const LgsrParams& lgsr,
                          bool with_gmsr, bool with_lgsr) {
  BandAnalysis a;
  a.band = band;
  a.image = std::move(image);
  a.has_gmsr = with_gmsr;
  a.has_lgsr = with_lgsr;
  if (with_gmsr) {
    a.gmsr = extract_gmsr(a.image, gmsr);
    for (const auto& r : a.gmsr.regions) a.gmsr_shapes.push_back(structural_features(r));
  }
  if (with_lgsr) {
    a.lgsr = extract_lgsr(a.image, lgsr);
    for (const auto& r : a.lgsr.regions) a.lgsr_shapes.push_back(structural_features(r));
  }
  return a;
}

namespace {

void put_stats(std::unordered_map<std::string, double>& out, const std::string& prefix_band, const std::string& suffix,
               const StatFeatures& f) {
  const auto& names = statistic_names();
  const double values[] = {f.mean,           f.std_dev,        f.skewness,       f.kurtosis,       f.median,
                           f.percentiles[0], f.percentiles[1], f.percentiles[2], f.percentiles[3], f.percentiles[4]};
  for (std::size_t i = 0; i < names.size(); ++i) out[names[i] + prefix_band + suffix] = values[i];
}

void put_kind(std::unordered_map<std::string, double>& out, const Window& window, const BandAnalysis& band,
              const RegionSet& set, const std::vector<StructFeatures>& shapes) {
  const std::string tag = std::string("(") + band_tag(band.band) + ")";
  const std::string suffix = std::string("^") + region_kind_tag(set.kind);
  std::map<int, int> counts;
  BinaryImage mask(window.size, window.size);
  for (int dy = 0; dy < window.size; ++dy) {
    for (int dx = 0; dx < window.size; ++dx) {
      const int id = set.labels(window.y + dy, window.x + dx);
      mask(dy, dx) = id > 0;
      if (id > 0) ++counts[id];
    }
  }
  if (counts.empty()) return;
  int dominant = counts.begin()->first;
  for (const auto& [id, count] : counts) {
    if (count > counts[dominant]) dominant = id;
  }
  const auto it = std::find_if(set.regions.begin(), set.regions.end(),
                               [&](const SupportRegion& r) { return r.id == dominant; });
  const StructFeatures& s = shapes[static_cast<std::size_t>(std::distance(set.regions.begin(), it))];
  const double shape_values[] = {s.endpoint_distance, s.compactness, s.median_curvature,
                                 s.axes_ratio,        s.major_axis,  s.minor_axis};
  const auto& names = structural_names();
  for (std::size_t i = 0; i < names.size(); ++i) out[names[i] + tag + suffix] = shape_values[i];

  const ScalarImage pixels = band.image.block(window.y, window.x, window.size, window.size);
  if (const auto stats = conditional_statistics(pixels, mask)) put_stats(out, tag, suffix, *stats);
}

}  // namespace

FeatureVector window_features(const Window& window, std::span<const BandAnalysis> bands,
                              std::shared_ptr<const FeatureSchema> schema) {
  std::unordered_map<std::string, double> computed;
  for (const BandAnalysis& band : bands) {
    if (window.x < 0 || window.y < 0 || window.x + window.size > band.image.cols() ||
        window.y + window.size > band.image.rows()) {
      throw std::invalid_argument("window lies outside the band image");
    }
    const std::string tag = std::string("(") + band_tag(band.band) + ")";
    const ScalarImage block = band.image.block(window.y, window.x, window.size, window.size);
    std::vector<double> pixels(block.data(), block.data() + block.size());
    put_stats(computed, tag, "", statistical_features(pixels));
    if (band.has_gmsr) put_kind(computed, window, band, band.gmsr, band.gmsr_shapes);
    if (band.has_lgsr) put_kind(computed, window, band, band.lgsr, band.lgsr_shapes);
  }
  FeatureVector fv;
  fv.values = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(schema->size()), kMissing);
  for (std::size_t i = 0; i < schema->size(); ++i) {
    const auto it = computed.find((*schema)[i]);
    if (it != computed.end()) fv.values(static_cast<Eigen::Index>(i)) = it->second;
  }
  fv.schema = std::move(schema);
  return fv;
}

}  // namespace grainspect
