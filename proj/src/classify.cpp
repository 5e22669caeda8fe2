#include "grainspect/classify.hpp"

#include "grainspect/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace grainspect {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool row_complete(const Eigen::MatrixXd& x, Eigen::Index r) {
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (is_missing(x(r, c))) return false;
  }
  return true;
}

bool has_missing(const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (is_missing(v(i))) return true;
  }
  return false;
}

int default_missing_class(const std::array<int, 2>& counts) { return counts[1] >= counts[0] ? 1 : 0; }

}  // namespace

// ---- LevelData -----------------------------------------------------------------

LevelData LevelData::select(std::span<const std::string> names) const {
  LevelData out;
  out.features.assign(names.begin(), names.end());
  out.x.resize(x.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto it = std::find(features.begin(), features.end(), names[j]);
    if (it == features.end()) throw std::invalid_argument("unknown feature '" + names[j] + "'");
    out.x.col(static_cast<Eigen::Index>(j)) = x.col(std::distance(features.begin(), it));
  }
  out.y = y;
  out.source = source;
  return out;
}

LevelData LevelData::rows(std::span<const std::size_t> indices) const {
  LevelData out;
  out.features = features;
  out.x.resize(static_cast<Eigen::Index>(indices.size()), x.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(indices[i]));
    out.y.push_back(y[indices[i]]);
    out.source.push_back(source.empty() ? indices[i] : source[indices[i]]);
  }
  return out;
}

LevelData level_data(const FeatureTable& table, Level level, std::span<const std::string> features) {
  std::vector<Eigen::Index> columns;
  for (const auto& name : features) {
    const auto it = std::find(table.schema->begin(), table.schema->end(), name);
    if (it == table.schema->end()) throw std::invalid_argument("feature '" + name + "' is not in the table");
    columns.push_back(std::distance(table.schema->begin(), it));
  }
  LevelData out;
  out.features.assign(features.begin(), features.end());
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < table.samples.size(); ++i) {
    if (const auto t = level_target(table.samples[i].label, level)) {
      rows.push_back(i);
      out.y.push_back(*t);
    }
  }
  out.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = table.samples[rows[r]].features.values(columns[c]);
    }
  }
  out.source = std::move(rows);
  return out;
}

// ---- Standardizer ----------------------------------------------------------------

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  const double n = static_cast<double>(x.rows());
  s.mean = x.colwise().sum().transpose() / n;
  const Eigen::MatrixXd centered = x.rowwise() - s.mean.transpose();
  s.scale = (centered.array().square().colwise().sum() / n).sqrt().transpose();
  for (Eigen::Index i = 0; i < s.scale.size(); ++i) {
    if (!(s.scale(i) > 1e-12)) s.scale(i) = 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

// ---- BayesModel ------------------------------------------------------------------

BayesModel::BayesModel(std::vector<std::string> features, Standardizer standardizer,
                       std::array<ClassDensity, 2> classes, int missing_class)
    : features_(std::move(features)),
      standardizer_(std::move(standardizer)),
      classes_(std::move(classes)),
      missing_class_(missing_class) {
  for (std::size_t c = 0; c < 2; ++c) {
    chol_[c].compute(classes_[c].covariance);
    if (chol_[c].info() != Eigen::Success) {
      throw NumericalError("covariance of class '" + classes_[c].name + "' is not positive definite");
    }
    const Eigen::MatrixXd l = chol_[c].matrixL();
    log_det_[c] = 2.0 * l.diagonal().array().log().sum();
  }
}

std::array<double, 2> BayesModel::log_posteriors(const Eigen::VectorXd& raw) const {
  const Eigen::VectorXd z = standardizer_.apply(raw);
  std::array<double, 2> out{};
  for (std::size_t c = 0; c < 2; ++c) {
    const Eigen::VectorXd d = z - classes_[c].mean;
    const Eigen::VectorXd w = chol_[c].matrixL().solve(d);
    out[c] = std::log(classes_[c].prior) - 0.5 * (log_det_[c] + w.squaredNorm());
  }
  return out;
}

BayesModel fit_gaussian_bayes(const LevelData& data, std::array<std::string, 2> class_names,
                              std::optional<int> missing_class) {
  const auto d = data.x.cols();
  if (d < 1) throw std::invalid_argument("fit_gaussian_bayes needs at least one feature");
  std::vector<Eigen::Index> complete;
  std::array<int, 2> counts{0, 0};
  for (Eigen::Index r = 0; r < data.x.rows(); ++r) {
    if (!row_complete(data.x, r)) continue;
    complete.push_back(r);
    ++counts[static_cast<std::size_t>(data.y[static_cast<std::size_t>(r)])];
  }
  for (std::size_t c = 0; c < 2; ++c) {
    if (counts[c] == 0) throw DataError("class '" + class_names[c] + "' is absent from the training data");
    if (counts[c] < d + 2) {
      throw DataError("class '" + class_names[c] + "' has " + std::to_string(counts[c]) +
                      " complete training rows, need at least " + std::to_string(d + 2));
    }
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(complete.size()), d);
  for (std::size_t i = 0; i < complete.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = data.x.row(complete[i]);
  const Standardizer standardizer = Standardizer::fit(x);
  const Eigen::MatrixXd z = standardizer.apply(x);

  std::array<ClassDensity, 2> classes;
  const double total = static_cast<double>(complete.size());
  for (std::size_t c = 0; c < 2; ++c) {
    Eigen::MatrixXd zc(counts[c], d);
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < complete.size(); ++i) {
      if (data.y[static_cast<std::size_t>(complete[i])] == static_cast<int>(c)) zc.row(k++) = z.row(static_cast<Eigen::Index>(i));
    }
    ClassDensity& cd = classes[c];
    cd.name = class_names[c];
    cd.prior = counts[c] / total;
    cd.mean = zc.colwise().mean().transpose();
    const Eigen::MatrixXd centered = zc.rowwise() - cd.mean.transpose();
    cd.covariance = centered.transpose() * centered / static_cast<double>(counts[c]);
    const double ridge = 1e-6 * cd.covariance.trace() / static_cast<double>(d);
    cd.covariance.diagonal().array() += ridge;
  }
  return BayesModel(data.features, standardizer, std::move(classes),
                    missing_class.value_or(default_missing_class(counts)));
}

Decision classify(const BayesModel& model, const Eigen::VectorXd& raw) {
  Decision out;
  if (has_missing(raw)) {
    out.fallback = true;
    out.label = model.missing_class();
    out.score = out.label == 0 ? kInf : -kInf;
    return out;
  }
  const auto lp = model.log_posteriors(raw);
  out.label = lp[0] >= lp[1] ? 0 : 1;
  out.score = lp[0] - lp[1];
  out.margin = std::abs(out.score);
  return out;
}

Decision classify(const BayesModel& model, const FeatureVector& fv) {
  Eigen::VectorXd raw(static_cast<Eigen::Index>(model.features().size()));
  for (std::size_t i = 0; i < model.features().size(); ++i) {
    raw(static_cast<Eigen::Index>(i)) = fv.get(model.features()[i]).value_or(kMissing);
  }
  return classify(model, raw);
}

// ---- ROC -------------------------------------------------------------------------

double RocCurve::auc() const {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].pf - points[i - 1].pf) * 0.5 * (points[i].pd + points[i - 1].pd);
  }
  return area;
}

RocCurve roc_from_scores(std::span<const double> scores, std::span<const int> truth) {
  if (scores.size() != truth.size()) throw std::invalid_argument("roc: scores and labels differ in length");
  std::array<double, 2> totals{0.0, 0.0};
  for (int t : truth) totals[static_cast<std::size_t>(t)] += 1.0;
  if (totals[0] == 0.0 || totals[1] == 0.0) throw std::invalid_argument("roc: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.points.push_back({kInf, 0.0, 0.0});
  double detected = 0.0, false_alarms = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (truth[order[i]] == 0 ? detected : false_alarms) += 1.0;
      ++i;
    }
    roc.points.push_back({threshold, false_alarms / totals[1], detected / totals[0]});
  }
  if (roc.points.back().pf != 1.0 || roc.points.back().pd != 1.0) roc.points.push_back({-kInf, 1.0, 1.0});
  return roc;
}

RocCurve roc_curve(const BayesModel& model, const LevelData& test) {
  const LevelData data = test.select(model.features());
  std::vector<double> scores;
  scores.reserve(static_cast<std::size_t>(data.size()));
  for (Eigen::Index r = 0; r < data.size(); ++r) scores.push_back(classify(model, Eigen::VectorXd(data.x.row(r).transpose())).score);
  return roc_from_scores(scores, data.y);
}

void write_roc_csv(const std::string& path, const RocCurve& roc) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "threshold,pf,pd\n";
  out.precision(17);
  for (const auto& p : roc.points) out << p.threshold << ',' << p.pf << ',' << p.pd << '\n';
}

// ---- performance -----------------------------------------------------------------

Performance performance(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("performance: length mismatch");
  Performance p;
  std::array<int, 2> correct{0, 0};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    ++p.counts[t];
    if (predicted[i] == truth[i]) ++correct[t];
  }
  int present = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    p.class_accuracy[c] = p.counts[c] > 0 ? static_cast<double>(correct[c]) / p.counts[c] : 0.0;
    if (p.counts[c] > 0) {
      p.macro += p.class_accuracy[c];
      ++present;
    }
  }
  if (present > 0) p.macro /= present;
  const int total = p.counts[0] + p.counts[1];
  p.weighted = total > 0 ? static_cast<double>(correct[0] + correct[1]) / total : 0.0;
  return p;
}

Performance evaluate(const BayesModel& model, const LevelData& test) {
  const LevelData data = test.select(model.features());
  std::vector<int> predicted;
  predicted.reserve(static_cast<std::size_t>(data.size()));
  for (Eigen::Index r = 0; r < data.size(); ++r) predicted.push_back(classify(model, Eigen::VectorXd(data.x.row(r).transpose())).label);
  return performance(predicted, data.y);
}

// ---- subset search ---------------------------------------------------------------

std::size_t subset_count(std::size_t pool, int max_size) {
  std::size_t total = 0;
  std::size_t binom = 1;
  for (int k = 1; k <= max_size && static_cast<std::size_t>(k) <= pool; ++k) {
    binom = binom * (pool - static_cast<std::size_t>(k) + 1) / static_cast<std::size_t>(k);
    total += binom;
  }
  return total;
}

SubsetResult subset_search(std::span<const std::string> pool, const LevelData& train, const LevelData& validate,
                           const SubsetSearchOptions& options) {
  if (pool.empty()) throw std::invalid_argument("subset_search: empty feature pool");
  if (options.max_size < 1) throw std::invalid_argument("subset_search: max_size must be >= 1");
  const LevelData train_pool = train.select(pool);
  const LevelData validate_pool = validate.select(pool);

  // Enumerate index subsets by size, each size in lexicographic order.
  std::vector<std::vector<int>> subsets;
  const int n = static_cast<int>(pool.size());
  for (int k = 1; k <= std::min(options.max_size, n); ++k) {
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      subsets.push_back(idx);
      int i = k - 1;
      while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
      if (i < 0) break;
      ++idx[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }

  auto names_of = [&](const std::vector<int>& s) {
    std::vector<std::string> names;
    for (int i : s) names.push_back(pool[static_cast<std::size_t>(i)]);
    return names;
  };

  std::vector<std::optional<Performance>> scores(subsets.size());
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < subsets.size(); i += step) {
      const auto names = names_of(subsets[i]);
      try {
        const BayesModel m = fit_gaussian_bayes(train_pool.select(names), {"class0", "class1"}, options.missing_class);
        scores[i] = evaluate(m, validate_pool);
      } catch (const DataError&) {
      } catch (const NumericalError&) {
      }
    }
  };
  const std::size_t threads = static_cast<std::size_t>(std::max(1, options.threads));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool_threads;
    for (std::size_t t = 0; t < threads; ++t) pool_threads.emplace_back(work, t, threads);
    for (auto& th : pool_threads) th.join();
  }

  SubsetResult best;
  std::vector<std::string> best_sorted;
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    if (!scores[i]) continue;
    ++best.evaluated;
    auto names = names_of(subsets[i]);
    auto sorted = names;
    std::sort(sorted.begin(), sorted.end());
    bool better = best.features.empty() || scores[i]->weighted > best.score.weighted;
    if (!better && scores[i]->weighted == best.score.weighted) {
      better = names.size() < best.features.size() || (names.size() == best.features.size() && sorted < best_sorted);
    }
    if (better) {
      best.features = std::move(names);
      best.score = *scores[i];
      best_sorted = std::move(sorted);
    }
  }
  if (best.features.empty()) throw DataError("subset_search: no subset could be fitted");
  return best;
}

// ---- KNN -------------------------------------------------------------------------

KnnModel::KnnModel(const LevelData& train, int k, std::optional<int> missing_class)
    : features_(train.features), k_(k) {
  if (k < 1) throw std::invalid_argument("knn: k must be >= 1");
  std::vector<Eigen::Index> complete;
  std::array<int, 2> counts{0, 0};
  for (Eigen::Index r = 0; r < train.x.rows(); ++r) {
    if (!row_complete(train.x, r)) continue;
    complete.push_back(r);
    ++counts[static_cast<std::size_t>(train.y[static_cast<std::size_t>(r)])];
  }
  if (complete.empty()) throw DataError("knn: no complete training rows");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(complete.size()), train.x.cols());
  for (std::size_t i = 0; i < complete.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = train.x.row(complete[i]);
    labels_.push_back(train.y[static_cast<std::size_t>(complete[i])]);
  }
  standardizer_ = Standardizer::fit(x);
  points_ = standardizer_.apply(x);
  missing_class_ = missing_class.value_or(default_missing_class(counts));
}

int KnnModel::classify(const Eigen::VectorXd& raw) const {
  if (has_missing(raw)) return missing_class_;
  const Eigen::RowVectorXd z = standardizer_.apply(raw).transpose();
  const Eigen::VectorXd dist = (points_.rowwise() - z).rowwise().squaredNorm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(dist.size()));
  std::iota(order.begin(), order.end(), 0);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(k_), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](Eigen::Index a, Eigen::Index b) { return dist(a) < dist(b) || (dist(a) == dist(b) && a < b); });
  std::array<int, 2> votes{0, 0};
  for (std::size_t i = 0; i < k; ++i) ++votes[static_cast<std::size_t>(labels_[static_cast<std::size_t>(order[i])])];
  if (votes[0] == votes[1]) return labels_[static_cast<std::size_t>(order[0])];
  return votes[0] > votes[1] ? 0 : 1;
}

Performance evaluate(const KnnModel& model, const LevelData& test) {
  const LevelData data = test.select(model.features());
  std::vector<int> predicted;
  for (Eigen::Index r = 0; r < data.size(); ++r) predicted.push_back(model.classify(data.x.row(r).transpose()));
  return performance(predicted, data.y);
}

// ---- hierarchy -------------------------------------------------------------------

std::string_view final_label_name(FinalLabel label) {
  switch (label) {
    case FinalLabel::NonDefective: return "non-defective";
    case FinalLabel::Elongated: return "elongated";
    case FinalLabel::DryKnot: return "dry-knot";
    case FinalLabel::SoundKnot: return "sound-knot";
  }
  return "?";
}

FinalLabel hierarchical_classify(const HierarchyModel& h, const FeatureVector& fv) {
  if (classify(h.defect, fv).label != 0) return FinalLabel::NonDefective;
  if (classify(h.knot, fv).label != 0) return FinalLabel::Elongated;
  return classify(h.dry, fv).label == 0 ? FinalLabel::DryKnot : FinalLabel::SoundKnot;
}

}  // namespace grainspect
