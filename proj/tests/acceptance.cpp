// Acceptance gate: one PASS/FAIL line per criterion. Exit status is non-zero
// when any evaluated criterion fails; criterion 10 is skipped without a dataset.
#include "grainspect/classify.hpp"
#include "grainspect/curves.hpp"
#include "grainspect/features.hpp"
#include "grainspect/filtering.hpp"
#include "grainspect/pipeline.hpp"
#include "grainspect/regions.hpp"
#include "grainspect/synthetic.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace grainspect;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  bool skipped = false;
  std::ostringstream note;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void run(int id, double limit_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.note << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.skipped && limit_s > 0 && secs > limit_s) {
    o.pass = false;
    o.note << " [runtime over " << limit_s << " s]";
  }
  const char* status = o.skipped ? "SKIP" : o.pass ? "PASS" : "FAIL";
  if (!o.skipped && !o.pass) ++failures;
  std::printf("criterion %2d: %s  (%.2f s)%s\n", id, status, secs, o.note.str().c_str());
  std::fflush(stdout);
}

double pct(double v) { return 100.0 * v; }

// ---- 1 ----------------------------------------------------------------------

void filters(Outcome& o) {
  double worst_sum = 0.0;
  for (double tau : {1.0, 2.0, 3.0}) {
    auto [gx, gy] = gaussian_gradient_kernels(tau);
    worst_sum = std::max({worst_sum, std::abs(gx.weights.sum()), std::abs(gy.weights.sum()),
                          std::abs(log_kernel(tau).weights.sum())});
  }
  o.check(worst_sum < 1e-6, "kernel sums");

  ScalarImage ramp(48, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) ramp(y, x) = 0.5 * x;
  const int r = gradient_kernel_size(2.0) / 2;
  const ScalarImage m = gradient_magnitude(ramp, 2.0).magnitude;
  double ramp_err = 0.0;
  for (int y = r; y < 48 - r; ++y)
    for (int x = r; x < 48 - r; ++x) ramp_err = std::max(ramp_err, std::abs(m(y, x) - 0.5));
  o.check(ramp_err < 1e-3, "ramp slope");

  std::mt19937_64 rng(1);
  const ScalarImage img = oracle::random_image(rng, 40, 40);
  ScalarImage rotated = img, expected = gradient_magnitude(img, 2.0).magnitude;
  bool exact = true;
  for (int k = 0; k < 3; ++k) {
    rotated = oracle::rot90(rotated);
    expected = oracle::rot90(expected);
    const ScalarImage got = gradient_magnitude(rotated, 2.0).magnitude;
    exact = exact && (got.block(r, r, 40 - 2 * r, 40 - 2 * r) == expected.block(r, r, 40 - 2 * r, 40 - 2 * r)).all();
  }
  o.check(exact, "rotation invariance");
  o.note << " max |sum w| " << worst_sum << ", ramp error " << ramp_err;
}

// ---- 2, 3 -------------------------------------------------------------------

void hysteresis(Outcome& o) {
  std::mt19937_64 rng(2);
  int matches = 0;
  for (int t = 0; t < 200; ++t) {
    const ScalarImage img = oracle::random_image(rng, 32, 32, 0.0, 0.25);
    matches += (hysteresis_threshold(img, 0.2, 0.15) == oracle::hysteresis_bfs(img, 0.2, 0.15)).all();
  }
  o.check(matches == 200, "oracle mismatch");
  o.note << " " << matches << "/200 maps identical";
}

void labeling(Outcome& o) {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution on(0.45);
  int matches = 0;
  for (int t = 0; t < 200; ++t) {
    BinaryImage m(32, 32);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = on(rng);
    matches += oracle::same_partition(label_components(m).labels, oracle::union_find_labels(m));
  }
  o.check(matches == 200, "partition mismatch");
  o.note << " " << matches << "/200 partitions identical";
}

// ---- 4 ----------------------------------------------------------------------

void fourier(Outcome& o) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 5.0);
  double dft_err = 0.0;
  for (int t = 0; t < 20; ++t) {
    BoundarySequence b;
    for (int i = 0; i < 64; ++i) b.points.emplace_back(n(rng), n(rng));
    const auto full = oracle::full_dft(b.points);
    const FourierBoundary fb = fourier_coefficients(b);
    for (int k = -4; k <= 4; ++k)
      dft_err = std::max(dft_err, std::abs(fb.coefficient(k) - full[static_cast<std::size_t>((k + 64) % 64)]));
  }
  o.check(dft_err <= 1e-9, "DFT oracle");

  double k_err = 0.0;
  for (int r : {10, 20, 40}) {
    const int size = 2 * r + 11;
    const auto region = oracle::only_region(oracle::disk_mask(size, size / 2, size / 2, r));
    const double k = median_curvature(fourier_coefficients(trace_boundary(region)));
    k_err = std::max(k_err, std::abs(k * r - 1.0));
  }
  o.check(k_err < 0.05, "circle curvature");

  double fd_err = 0.0;
  const double h = 1e-4;
  for (int t = 0; t < 20; ++t) {
    std::vector<Complex> c(9);
    for (auto& v : c) v = Complex(n(rng), n(rng));
    const FourierBoundary fb(4, 60 + t, c);
    for (double s : {0.0, 7.7, 31.0}) {
      fd_err = std::max(fd_err, std::abs((fb.evaluate(s + h) - fb.evaluate(s - h)) / (2 * h) - fb.evaluate(s, 1)));
      fd_err = std::max(fd_err, std::abs((fb.evaluate(s + h, 1) - fb.evaluate(s - h, 1)) / (2 * h) - fb.evaluate(s, 2)));
    }
  }
  o.check(fd_err < 1e-6, "finite differences");
  o.note << " DFT error " << dft_err << ", worst |K| r - 1 = " << k_err << ", derivative error " << fd_err;
}

// ---- 5 ----------------------------------------------------------------------

Curve sampled(const std::function<Complex(double)>& f, const std::function<Complex(double)>& df, int n) {
  Curve c;
  for (int i = 0; i < n; ++i) {
    const double u = double(i) / (n - 1);
    c.points.push_back(f(u));
    c.velocity.push_back(df(u));
  }
  return c;
}

void structural(Outcome& o) {
  const Complex dir(2.0, -1.0);
  const double dn_line = normalized_endpoint_distance(sampled([&](double u) { return u * dir; }, [&](double) { return dir; }, 64));
  const double dn_semi = normalized_endpoint_distance(
      sampled([](double u) { return std::polar(9.0, std::numbers::pi * u); },
              [](double u) { return Complex(0, std::numbers::pi) * std::polar(9.0, std::numbers::pi * u); }, 256));
  o.check(std::abs(dn_line - 1.0) <= 1e-3, "d_n straight");
  o.check(std::abs(dn_semi / (2.0 / std::numbers::pi) - 1.0) <= 0.01, "d_n semicircle");

  const double c_disk = compactness(oracle::only_region(oracle::disk_mask(60, 30, 30, 20)));
  const double c_bar = compactness(oracle::only_region(oracle::rect_mask(110, 5, 5, 2, 105, 3)));
  o.check(c_disk >= 0.9 && c_disk <= 1.3, "disk compactness");
  o.check(c_bar >= 8.0, "bar compactness");

  const double e = ellipse_axes_ratio(oracle::only_region(oracle::rect_mask(80, 20, 10, 7, 70, 13))).ratio;
  const double e_rot = ellipse_axes_ratio(
      oracle::only_region(oracle::rotated_rect_mask(100, 50, 50, 60, 6, 37.0 * std::numbers::pi / 180))).ratio;
  o.check(std::abs(e / 10.0 - 1.0) <= 0.1, "ellipse ratio");
  o.check(std::abs(e_rot / e - 1.0) <= 0.05, "ellipse rotation");
  o.note << " d_n " << dn_line << " / " << dn_semi << ", c disk " << c_disk << " bar " << c_bar << ", e " << e
         << " rotated " << e_rot;
}

// ---- 6 ----------------------------------------------------------------------

void conditional(Outcome& o) {
  std::mt19937_64 rng(6);
  const ScalarImage win = oracle::random_image(rng, 60, 60);
  std::vector<double> all;
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 60; ++x) all.push_back(win(y, x));
  o.check(*conditional_statistics(win, BinaryImage::Constant(60, 60, true)) == statistical_features(all), "all-ones mask");
  std::bernoulli_distribution on(0.4);
  int exact = 0;
  for (int t = 0; t < 50; ++t) {
    BinaryImage m(60, 60);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = on(rng);
    std::vector<double> kept;
    for (int y = 0; y < 60; ++y)
      for (int x = 0; x < 60; ++x)
        if (m(y, x)) kept.push_back(win(y, x));
    exact += *conditional_statistics(win, m) == statistical_features(kept);
  }
  o.check(exact == 50, "random masks");
  o.note << " " << exact << "/50 random masks bit-exact";
}

// ---- 7 ----------------------------------------------------------------------

LevelData gaussians(std::mt19937_64& rng, int per_class, int d, double gap, int informative = -1) {
  std::normal_distribution<double> n(0.0, 1.0);
  LevelData out;
  for (int k = 0; k < d; ++k) out.features.push_back("f" + std::to_string(k));
  out.x.resize(2 * per_class, d);
  for (int i = 0; i < 2 * per_class; ++i) {
    const int c = i % 2;
    for (int k = 0; k < d; ++k) {
      const bool shifted = c == 1 && (informative < 0 || k == informative);
      out.x(i, k) = n(rng) + (shifted ? gap : 0.0);
    }
    out.y.push_back(c);
    out.source.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

void classifier(Outcome& o) {
  std::mt19937_64 rng(7);
  const double gap = 6.0 / std::sqrt(2.0);  // 6 sigma between the means
  const BayesModel m = fit_gaussian_bayes(gaussians(rng, 500, 2, gap));
  const double acc = evaluate(m, gaussians(rng, 500, 2, gap)).weighted;
  o.check(acc >= 0.99, "Bayes accuracy");

  LevelData permuted = gaussians(rng, 1000, 2, 2.0);
  std::shuffle(permuted.y.begin(), permuted.y.end(), rng);
  const BayesModel weak = fit_gaussian_bayes(gaussians(rng, 300, 2, 2.0));
  const RocCurve roc = roc_curve(weak, permuted);
  const auto& front = roc.points.front();
  const auto& back = roc.points.back();
  o.check(front.pf == 0 && front.pd == 0 && back.pf == 1 && back.pd == 1, "ROC endpoints");
  o.check(std::abs(roc.auc() - 0.5) <= 0.05, "permuted AUC");

  int recovered = 0;
  for (int t = 0; t < 100; ++t) {
    const int planted = t % 6;
    const LevelData train = gaussians(rng, 100, 6, 2.5, planted);
    const LevelData validate = gaussians(rng, 100, 6, 2.5, planted);
    SubsetSearchOptions so;
    so.max_size = 3;
    const SubsetResult r = subset_search(train.features, train, validate, so);
    recovered += std::find(r.features.begin(), r.features.end(), train.features[planted]) != r.features.end();
  }
  o.check(recovered == 100, "planted feature");
  o.note << " accuracy " << pct(acc) << "%, permuted AUC " << roc.auc() << ", planted feature found " << recovered
         << "/100";
}

// ---- 8, 9 -------------------------------------------------------------------

Manifest synthetic_corpus() {
  const fs::path dir = fs::temp_directory_path() / "grainspect_acceptance" / "corpus";
  fs::remove_all(dir);
  SyntheticOptions so;  // 200 images
  return write_synthetic_corpus(dir.string(), so);
}

void end_to_end(Outcome& o, const Manifest& m) {
  RunConfig cfg;  // tau_g 2, 0.2 / 0.15, min 50
  cfg.with_lgsr = false;
  const FeatureTable table = extract_manifest(m, cfg, 1);
  TrainOptions opts;
  opts.pool = feature_pool(*table.schema, FeatureFamily::Gradient);
  opts.max_size = 3;
  const TrainResult r = train_level(table, Level::Defect, cfg.split_spec(Level::Defect), opts);
  const double det = r.test.class_accuracy[0];
  const double fa = 1.0 - r.test.class_accuracy[1];
  o.check(det >= 0.90, "detection");
  o.check(fa <= 0.10, "false alarms");
  std::ostringstream f;
  for (const auto& s : r.model.features()) f << ' ' << s;
  o.note << " " << m.images.size() << " images, " << table.samples.size() << " windows; detection " << pct(det)
         << "%, false alarms " << pct(fa) << "%; subset" << f.str();
}

void appendix(Outcome& o, const Manifest& m) {
  SweepOptions so;
  so.level = Level::Defect;
  so.train.features = kPublishedDefectSubset;
  so.param = SweepParam::MinRegion;
  so.values = {"10", "50", "100"};
  const SweepResult size = run_sweep(m, RunConfig{}, so);
  so.param = SweepParam::TauG;
  so.values = {"1", "2", "3"};
  const SweepResult tau = run_sweep(m, RunConfig{}, so);

  const auto fa = [](const SweepRow& r) { return 1.0 - r.test.class_accuracy[1]; };
  const auto det = [](const SweepRow& r) { return r.test.class_accuracy[0]; };
  o.check(fa(size.rows[0]) > fa(size.rows[1]), "min 10 false alarms");
  o.check(det(size.rows[2]) < det(size.rows[1]), "min 100 recall");
  double lo = 1.0, hi = 0.0;
  for (const auto& r : tau.rows) {
    lo = std::min(lo, r.test.weighted);
    hi = std::max(hi, r.test.weighted);
  }
  o.check(pct(hi - lo) < 3.0, "tau_g flatness");
  char buf[512];
  std::snprintf(buf, sizeof buf,
                " false alarms %.1f%% (min 10) vs %.1f%% (min 50); detection %.1f%% (min 100) vs %.1f%% (min 50); "
                "average over tau_g 1/2/3: %.2f / %.2f / %.2f",
                pct(fa(size.rows[0])), pct(fa(size.rows[1])), pct(det(size.rows[2])), pct(det(size.rows[1])),
                pct(tau.rows[0].test.weighted), pct(tau.rows[1].test.weighted), pct(tau.rows[2].test.weighted));
  o.note << buf;
}

// ---- 10 ---------------------------------------------------------------------

void original_dataset(Outcome& o) {
  const char* env = std::getenv("GRAINSPECT_DATASET");
  if (!env || !*env || !fs::is_directory(env)) {
    o.skipped = true;
    o.note << " original board dataset not present (set GRAINSPECT_DATASET to a manifest directory)";
    return;
  }
  const Manifest m = load_manifest(env);
  RunConfig cfg;
  cfg.with_lgsr = false;
  const FeatureTable table = extract_manifest(m, cfg, 1);
  TrainOptions opts;
  opts.features = kPublishedDefectSubset;
  const TrainResult r = train_level(table, Level::Defect, cfg.split_spec(Level::Defect), opts);
  const double d = pct(r.test.class_accuracy[0]), n = pct(r.test.class_accuracy[1]), a = pct(r.test.weighted);
  o.check(std::abs(d - 87.0) <= 5 && std::abs(n - 85.1) <= 5 && std::abs(a - 85.2) <= 5, "GMSR row");
  o.note << " defective " << d << ", non-defective " << n << ", average " << a;
}

}  // namespace

int main() {
  run(1, 1.0, filters);
  run(2, 5.0, hysteresis);
  run(3, 5.0, labeling);
  run(4, 0, fourier);
  run(5, 0, structural);
  run(6, 0, conditional);
  run(7, 0, classifier);
  std::optional<Manifest> corpus;
  run(8, 300.0, [&](Outcome& o) {
    corpus = synthetic_corpus();
    end_to_end(o, *corpus);
  });
  run(9, 0, [&](Outcome& o) {
    if (!corpus) corpus = synthetic_corpus();
    appendix(o, *corpus);
  });
  run(10, 0, original_dataset);
  std::printf("%s\n", failures == 0 ? "acceptance: all evaluated criteria passed" : "acceptance: FAILED");
  return failures == 0 ? 0 : 1;
}
