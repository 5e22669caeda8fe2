#ifndef GRAINSPECT_CLASSIFY_HPP
#define GRAINSPECT_CLASSIFY_HPP

#include "grainspect/dataset.hpp"
#include "grainspect/features.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace grainspect {

/// Binary-labelled design matrix. Columns follow `features`; missing entries are kMissing.
struct LevelData {
  std::vector<std::string> features;
  Eigen::MatrixXd x;
  std::vector<int> y;  // class index 0 or 1
  std::vector<std::size_t> source;  // row -> sample index in the originating table

  Eigen::Index size() const { return x.rows(); }
  /// Columns by name, in the given order. Throws std::invalid_argument for unknown names.
  LevelData select(std::span<const std::string> names) const;
  LevelData rows(std::span<const std::size_t> indices) const;
};

/// Rows of the table that take part in `level`, restricted to `features`.
LevelData level_data(const FeatureTable& table, Level level, std::span<const std::string> features);

struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return (v - mean).cwiseQuotient(scale); }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

struct ClassDensity {
  std::string name;
  double prior = 0.0;
  Eigen::VectorXd mean;        // standardized units
  Eigen::MatrixXd covariance;  // standardized units, ridge included
};

/// Two-class Gaussian Bayes model with full covariances on standardized features.
class BayesModel {
 public:
  BayesModel() = default;
  BayesModel(std::vector<std::string> features, Standardizer standardizer, std::array<ClassDensity, 2> classes,
             int missing_class);

  const std::vector<std::string>& features() const { return features_; }
  const Standardizer& standardizer() const { return standardizer_; }
  const std::array<ClassDensity, 2>& classes() const { return classes_; }
  /// Label assigned when an input lacks a required feature.
  int missing_class() const { return missing_class_; }

  /// log prior + Gaussian log-likelihood (up to a shared constant) for both classes.
  std::array<double, 2> log_posteriors(const Eigen::VectorXd& raw) const;

  // Provenance kept with the model so evaluation can rebuild the same split.
  int level = 0;
  SplitSpec split;

 private:
  std::vector<std::string> features_;
  Standardizer standardizer_;
  std::array<ClassDensity, 2> classes_;
  int missing_class_ = 1;
  std::array<Eigen::LLT<Eigen::MatrixXd>, 2> chol_;
  std::array<double, 2> log_det_{};
};

/// Fits on the rows of `data` with no missing value. Class covariances use 1/N
/// plus a ridge of 1e-6 trace / d. missing_class defaults to the larger prior.
/// Throws DataError when a class has fewer than d + 2 complete rows and
/// NumericalError when a covariance stays singular.
BayesModel fit_gaussian_bayes(const LevelData& data, std::array<std::string, 2> class_names = {"class0", "class1"},
                              std::optional<int> missing_class = std::nullopt);

struct Decision {
  int label = 0;
  double margin = 0.0;  // top minus runner-up log posterior, 0 for a fallback
  double score = 0.0;   // log posterior of class 0 minus class 1, +/-inf for a fallback
  bool fallback = false;
};

/// Argmax of the log posteriors, ties to class 0. `raw` follows model.features().
Decision classify(const BayesModel& model, const Eigen::VectorXd& raw);
Decision classify(const BayesModel& model, const FeatureVector& fv);

struct RocPoint {
  double threshold = 0.0;  // class 0 is predicted when score >= threshold
  double pf = 0.0;
  double pd = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0,0) at +inf to (1,1) at -inf

  double auc() const;
};

/// Sweeps a threshold over every distinct score. Class 0 is the detection target.
/// Throws std::invalid_argument if either class is absent.
RocCurve roc_from_scores(std::span<const double> scores, std::span<const int> truth);
RocCurve roc_curve(const BayesModel& model, const LevelData& test);

struct Performance {
  std::array<double, 2> class_accuracy{};
  std::array<int, 2> counts{};
  double macro = 0.0;
  double weighted = 0.0;
};

Performance performance(std::span<const int> predicted, std::span<const int> truth);
Performance evaluate(const BayesModel& model, const LevelData& test);

struct SubsetResult {
  std::vector<std::string> features;
  Performance score;
  std::size_t evaluated = 0;
};

struct SubsetSearchOptions {
  int max_size = 5;
  int threads = 1;
  std::optional<int> missing_class;
};

/// Exhaustive search over all subsets of size 1..max_size of `pool`. Each subset
/// is fitted on `train` and scored on `validate` by the sample-weighted average
/// accuracy; ties go to the smaller subset, then the lexicographically smaller
/// sorted descriptor list. Subsets that cannot be fitted are skipped.
SubsetResult subset_search(std::span<const std::string> pool, const LevelData& train, const LevelData& validate,
                           const SubsetSearchOptions& options = {});

/// Number of subsets of size 1..max_size.
std::size_t subset_count(std::size_t pool, int max_size);

/// K-nearest-neighbour classifier on standardized features.
class KnnModel {
 public:
  KnnModel(const LevelData& train, int k = 5, std::optional<int> missing_class = std::nullopt);

  /// Majority vote among the k nearest, ties to the nearest neighbour's label.
  int classify(const Eigen::VectorXd& raw) const;
  const std::vector<std::string>& features() const { return features_; }

 private:
  std::vector<std::string> features_;
  Standardizer standardizer_;
  Eigen::MatrixXd points_;
  std::vector<int> labels_;
  int k_;
  int missing_class_;
};

Performance evaluate(const KnnModel& model, const LevelData& test);

enum class FinalLabel { NonDefective, Elongated, DryKnot, SoundKnot };

std::string_view final_label_name(FinalLabel label);

struct HierarchyModel {
  BayesModel defect;  // level 1: defective vs non-defective
  BayesModel knot;    // level 2: knot vs non-knot
  BayesModel dry;     // level 3: dry vs sound knot
};

/// Level 1, then level 2 for defects, then level 3 for knots.
FinalLabel hierarchical_classify(const HierarchyModel& h, const FeatureVector& fv);

// ---- serialization (model_io.cpp) --------------------------------------------

std::string serialize_model(const BayesModel& model);
BayesModel parse_model(const std::string& text);
std::string serialize_hierarchy(const HierarchyModel& h);
HierarchyModel parse_hierarchy(const std::string& text);

void save_model(const BayesModel& model, const std::string& path);
BayesModel load_model(const std::string& path);
void save_hierarchy(const HierarchyModel& h, const std::string& path);
HierarchyModel load_hierarchy(const std::string& path);
/// True when the file holds a hierarchy rather than a single-level model.
bool is_hierarchy_file(const std::string& path);

void write_roc_csv(const std::string& path, const RocCurve& roc);

}  // namespace grainspect

#endif  // GRAINSPECT_CLASSIFY_HPP
