#ifndef GRAINSPECT_PIPELINE_HPP
#define GRAINSPECT_PIPELINE_HPP

#include "grainspect/classify.hpp"
#include "grainspect/dataset.hpp"
#include "grainspect/features.hpp"
#include "grainspect/regions.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace grainspect {

/// Every tunable of a run. Defaults are the published operating point.
struct RunConfig {
  double tau_g = 2.0;
  double tau_l = 1.0;
  double high = 0.2;
  double low = 0.15;
  double lgsr_threshold = 0.2;
  Polarity lgsr_polarity = Polarity::Both;
  int min_region = 50;
  int window = 60;
  std::vector<Band> bands{kFeatureBands.begin(), kFeatureBands.end()};
  std::uint64_t seed = kDefaultSeed;
  std::array<std::array<int, 2>, 3> split_counts{{{210, 228}, {36, 63}, {356, 33}}};
  bool with_gmsr = true;
  bool with_lgsr = true;

  RegionParams region_params() const { return {tau_g, high, low, min_region}; }
  LgsrParams lgsr_params() const { return {tau_l, lgsr_threshold, min_region, lgsr_polarity}; }
  SplitSpec split_spec(Level level) const {
    return {split_counts[static_cast<std::size_t>(level) - 1], seed};
  }

  /// key = value pairs in a stable order, e.g. for echoing the effective config.
  std::map<std::string, std::string> entries() const;
  /// Applies one key = value setting. Throws std::invalid_argument for unknown
  /// keys or unparsable values.
  void set(const std::string& key, const std::string& value);
};

/// Reads a key = value file ('#' comments, blank lines ignored) on top of `config`.
void load_config_file(RunConfig& config, const std::string& path);

/// Support regions of every configured band of one image plus its window grid.
struct ImageAnalysis {
  std::vector<BandAnalysis> bands;
  WindowGrid grid;
};

ImageAnalysis analyze_image(const ColorImage& image, const RunConfig& config);

/// Feature rows of one image in window order. Annotations must lie inside the
/// image (DataError otherwise).
std::vector<Sample> extract_image(const std::string& image_id, const ColorImage& image,
                                  std::span<const DefectAnnotation> annotations, const RunConfig& config,
                                  std::shared_ptr<const FeatureSchema> schema);

/// Runs extraction over a manifest with up to `jobs` worker threads. Row order
/// is (image id, window origin) regardless of the job count.
FeatureTable extract_manifest(const Manifest& manifest, const RunConfig& config, int jobs = 1);

/// Train/test partition of the rows of `data` for `level`, using config's counts and seed.
struct LevelSplit {
  LevelData train;
  LevelData test;
};

LevelSplit split_level(const LevelData& data, const SplitSpec& spec);

/// Label assigned to inputs with a missing feature: non-defective at level 1,
/// the larger training class elsewhere.
std::optional<int> level_missing_class(Level level);

struct TrainOptions {
  std::vector<std::string> features;  // explicit subset; empty means search `pool`
  std::vector<std::string> pool;
  int max_size = 5;
  int threads = 1;
};

struct TrainResult {
  BayesModel model;
  std::optional<SubsetResult> search;
  LevelSplit split;
  Performance test;
};

/// Splits the level's rows with `spec`, picks the subset (searching on a
/// per-class half of the training rows, scored on the other half), refits on the
/// whole training part and scores the held-out test part.
TrainResult train_level(const FeatureTable& table, Level level, const SplitSpec& spec, const TrainOptions& options);

/// Split for `level`: the config's counts, or `train_fraction` of each class of
/// the table when given (must lie in (0, 1)).
SplitSpec level_split_spec(const FeatureTable& table, Level level, const RunConfig& config,
                           std::optional<double> train_fraction = std::nullopt);

/// GMSR subset of the level-1 detector reported for the original boards.
inline const std::vector<std::string> kPublishedDefectSubset = {"sigma(s)^G", "p0.2(g)^G", "p10(g)^G"};

enum class SweepParam { TauG, MinRegion, Classifier };
SweepParam sweep_param_from_name(std::string_view name);

struct SweepOptions {
  SweepParam param = SweepParam::MinRegion;
  std::vector<std::string> values;  // numbers, or bayes / knn
  Level level = Level::Defect;
  TrainOptions train;
  std::optional<double> train_fraction;
  int jobs = 1;
};

struct SweepRow {
  std::string value;
  Performance test;
};

struct SweepResult {
  TrainResult base;  // model trained at the base config
  std::vector<SweepRow> rows;
};

/// Trains one model at `base` (subset search when options.train has a pool),
/// then for every value re-extracts the corpus with that setting and classifies
/// the same held-out windows with that model. The classifier sweep keeps the
/// features and compares Bayes with 5-NN trained on the same rows.
SweepResult run_sweep(const Manifest& manifest, const RunConfig& base, const SweepOptions& options);

}  // namespace grainspect

#endif  // GRAINSPECT_PIPELINE_HPP
