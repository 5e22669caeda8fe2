#ifndef GRAINSPECT_DATASET_HPP
#define GRAINSPECT_DATASET_HPP

#include "grainspect/features.hpp"
#include "grainspect/image.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grainspect {

enum class DefectClass {
  SoundKnot,
  DryKnot,
  ResinPocket,
  CoreStripe,
  Split,
  Wane,
  Shake,
  BlueStain,
  BrownStain,
  BarkPocket,
};

std::string_view defect_class_name(DefectClass c);
std::optional<DefectClass> defect_class_from_name(std::string_view name);

/// Expert rectangle [x0, x1) x [y0, y1) in pixels.
struct DefectAnnotation {
  std::string image_id;
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  DefectClass cls = DefectClass::SoundKnot;
};

/// Parses `image_id x0 y0 x1 y1 class_name` lines; '#' starts a comment.
/// Throws DataError naming the line on malformed input or unknown classes.
std::vector<DefectAnnotation> parse_labels(const std::string& path);
std::vector<DefectAnnotation> parse_labels_text(std::string_view text, const std::string& source = "<text>");

/// Hierarchical label of one window. No class means non-defective.
struct WindowLabel {
  std::optional<DefectClass> cls;

  bool defective() const { return cls.has_value(); }
  /// Level-2 label, defective windows only.
  std::optional<bool> knot() const;
  /// Level-3 label (true = dry), knots only.
  std::optional<bool> dry() const;

  std::string str() const;
  static WindowLabel parse(std::string_view text);
};

inline constexpr double kDefectOverlapFraction = 0.2;

/// A window is defective when one annotation covers >= 20% of it; the class is
/// taken from the largest overlap, ties to the earlier annotation.
std::vector<WindowLabel> label_windows(const WindowGrid& grid, std::span<const DefectAnnotation> annotations);

/// The three binary levels of the classification hierarchy.
enum class Level { Defect = 1, Knot = 2, DryKnot = 3 };

Level level_from_int(int level);

/// Class index at a level: 0 is the first (positive) class, 1 the second.
/// Empty when the window does not take part in that level.
std::optional<int> level_target(const WindowLabel& label, Level level);

/// Display names of the two classes of a level.
std::array<std::string, 2> level_class_names(Level level);

struct SplitSpec {
  std::array<int, 2> train_counts{0, 0};  // per class index
  std::uint64_t seed = 42;
};

inline constexpr std::uint64_t kDefaultSeed = 42;

/// Training counts used for each level: 210/228, 36/63 and 356/33.
SplitSpec default_split(Level level);

struct SplitResult {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Deterministic per-class shuffle; the first train_counts[c] indices of class c
/// go to train and the rest to test. Throws DataError on infeasible counts.
SplitResult split(std::span<const int> classes, const SplitSpec& spec);

struct Sample {
  std::string image_id;
  int x = 0;
  int y = 0;
  WindowLabel label;
  FeatureVector features;
};

struct FeatureTable {
  std::shared_ptr<const FeatureSchema> schema;
  std::vector<Sample> samples;
};

/// CSV: image,x,y,label,<descriptor columns>; missing values are written as NA.
void write_feature_csv(std::ostream& out, const FeatureTable& table);
void write_feature_csv(const std::string& path, const FeatureTable& table);
FeatureTable read_feature_csv(std::istream& in);
FeatureTable read_feature_csv(const std::string& path);

/// Dataset directory: images/ (PNG or PPM, id = file stem) and labels.txt.
struct Manifest {
  std::string root;
  std::vector<std::pair<std::string, std::string>> images;  // (id, path), sorted by id
  std::vector<DefectAnnotation> annotations;

  std::vector<DefectAnnotation> annotations_for(std::string_view image_id) const;
};

Manifest load_manifest(const std::string& dir);

}  // namespace grainspect

#endif  // GRAINSPECT_DATASET_HPP
