#include "grainspect/cli.hpp"

#include "grainspect/classify.hpp"
#include "grainspect/error.hpp"
#include "grainspect/filtering.hpp"
#include "grainspect/pipeline.hpp"
#include "grainspect/synthetic.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace grainspect {

namespace {

constexpr const char* kOverlayHelp =
    "Overlay colours: GMSR outlines green, LGSR outlines magenta. Window tints: red = elongated defect "
    "(or the first class of a single-level model), yellow = dry knot, cyan = sound knot, none = non-defective.";

// Config keys that also exist as flags. Flags win over --config and GRAINSPECT_SEED.
const std::vector<std::pair<std::string, std::string>> kConfigFlags = {
    {"tau_g", "--tau-g"},
    {"tau_l", "--tau-l"},
    {"high", "--high"},
    {"low", "--low"},
    {"lgsr_threshold", "--lgsr-threshold"},
    {"lgsr_polarity", "--lgsr-polarity"},
    {"min_region", "--min-region"},
    {"window", "--window"},
    {"bands", "--bands"},
    {"seed", "--seed"},
    {"split1", "--split1"},
    {"split2", "--split2"},
    {"split3", "--split3"},
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::string pct(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

void print_performance_header(std::ostream& out) {
  out << std::left << std::setw(6) << "level" << std::setw(12) << "classifier" << std::setw(16) << "class0"
      << std::setw(8) << "acc0" << std::setw(16) << "class1" << std::setw(8) << "acc1" << std::setw(8) << "macro"
      << std::setw(10) << "weighted" << std::setw(8) << "n_test"
      << "features\n";
}

void print_performance_row(std::ostream& out, Level level, const std::string& classifier, const Performance& p,
                           const std::vector<std::string>& features) {
  const auto names = level_class_names(level);
  out << std::left << std::setw(6) << static_cast<int>(level) << std::setw(12) << classifier << std::setw(16)
      << names[0] << std::setw(8) << pct(p.class_accuracy[0]) << std::setw(16) << names[1] << std::setw(8)
      << pct(p.class_accuracy[1]) << std::setw(8) << pct(p.macro) << std::setw(10) << pct(p.weighted) << std::setw(8)
      << (p.counts[0] + p.counts[1]) << join(features, " ") << '\n';
}

// Explicit descriptors (comma list) or a family name resolved against the schema.
std::vector<std::string> resolve_features(const std::string& spec, const FeatureSchema& schema) {
  if (spec == "statistical" || spec == "gmsr" || spec == "lgsr" || spec == "combined") {
    return feature_pool(schema, family_from_name(spec));
  }
  auto names = split_list(spec);
  for (const auto& n : names) {
    FeatureDescriptor::parse(n);
    if (std::find(schema.begin(), schema.end(), n) == schema.end()) {
      throw std::invalid_argument("feature '" + n + "' is not in the feature table");
    }
  }
  return names;
}

struct ConfigFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_path;
  CLI::Option* config_option = nullptr;

  void add(CLI::App& app) {
    config_option = app.add_option("--config", config_path, "key = value configuration file (flags win)");
    for (const auto& [key, flag] : kConfigFlags) {
      options[key] = app.add_option(flag, values[key], "config key " + key);
    }
    app.add_option("--set", extra, "extra config entry key=value (repeatable)");
  }

  RunConfig resolve(std::ostream& err) const {
    RunConfig cfg;
    if (config_option->count() > 0) load_config_file(cfg, config_path);
    if (const char* env = std::getenv("GRAINSPECT_SEED"); env && *env) cfg.set("seed", env);
    for (const auto& entry : extra) {
      const auto eq = entry.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + entry + "'");
      cfg.set(entry.substr(0, eq), entry.substr(eq + 1));
    }
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) cfg.set(key, values.at(key));
    }
    err << "# effective config\n";
    for (const auto& [k, v] : cfg.entries()) err << "#   " << k << " = " << v << '\n';
    return cfg;
  }

  std::vector<std::string> extra;
};

std::vector<std::pair<std::string, BayesModel>> load_models(const std::string& path) {
  std::vector<std::pair<std::string, BayesModel>> out;
  if (is_hierarchy_file(path)) {
    HierarchyModel h = load_hierarchy(path);
    out.emplace_back(path + "#1", std::move(h.defect));
    out.emplace_back(path + "#2", std::move(h.knot));
    out.emplace_back(path + "#3", std::move(h.dry));
  } else {
    out.emplace_back(path, load_model(path));
  }
  return out;
}

Level model_level(const BayesModel& m) {
  if (m.level < 1 || m.level > 3) throw DataError("model does not record its level");
  return static_cast<Level>(m.level);
}

void blend(ColorImage& img, int x, int y, const std::array<double, 3>& c, double alpha) {
  img.r(y, x) = (1 - alpha) * img.r(y, x) + alpha * c[0];
  img.g(y, x) = (1 - alpha) * img.g(y, x) + alpha * c[1];
  img.b(y, x) = (1 - alpha) * img.b(y, x) + alpha * c[2];
}

void draw_outlines(ColorImage& img, const RegionSet& set, const std::array<double, 3>& c) {
  for (const auto& r : set.regions) {
    for (const Pixel& p : trace_outer_boundary(r.pixels)) blend(img, p.x, p.y, c, 1.0);
  }
}

void dump_curves(const std::string& path, const BandAnalysis& band) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "kind,id,t,x,y,K\n";
  out.precision(10);
  for (const RegionSet* set : {&band.gmsr, &band.lgsr}) {
    for (const auto& r : set->regions) {
      const BoundarySequence b = trace_boundary(r);
      if (b.period() < 2 * kFourierOrder + 1) continue;
      const FourierBoundary fb = fourier_coefficients(b);
      for (int i = 0; i < kCurvatureSamples; ++i) {
        const double t = static_cast<double>(i) * fb.period() / kCurvatureSamples;
        const Complex p = fb.evaluate(t);
        const auto k = curvature(fb, t);
        out << region_kind_tag(set->kind) << ',' << r.id << ',' << t << ',' << p.real() << ',' << p.imag() << ','
            << (k ? std::to_string(*k) : std::string("NA")) << '\n';
      }
    }
  }
}

void dump_band(const std::string& dir, const BandAnalysis& band, const RunConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string tag(1, band_tag(band.band));
  const auto path = [&](const std::string& name) { return (fs::path(dir) / name).string(); };
  save_pgm(normalize_max(gradient_magnitude(band.image, cfg.tau_g).magnitude), path("gm_" + tag + ".pgm"));
  save_pgm(normalize_max(log_response(band.image, cfg.tau_l)), path("log_" + tag + ".pgm"), -1.0, 1.0);
  if (band.has_gmsr) save_pgm(band.gmsr.mask().cast<double>(), path("gmsr_" + tag + ".pgm"));
  if (band.has_lgsr) save_pgm(band.lgsr.mask().cast<double>(), path("lgsr_" + tag + ".pgm"));
  dump_curves(path("curves_" + tag + ".csv"), band);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"grainspect: wood surface defect detection with gradient and LoG support regions"};
  app.require_subcommand(1);
  app.fallthrough();
  ConfigFlags flags;
  flags.add(app);
  int jobs = 1;
  app.add_option("--jobs,-j", jobs, "worker threads for extraction and subset search")->check(CLI::PositiveNumber);

  // extract
  auto* extract = app.add_subcommand("extract", "compute window features for every image of a dataset directory");
  std::string manifest_dir, out_path;
  bool no_gmsr = false, no_lgsr = false;
  extract->add_option("dataset", manifest_dir, "directory holding images/ and labels.txt")->required();
  extract->add_option("-o,--output", out_path, "feature CSV")->required();
  extract->add_flag("--no-gmsr", no_gmsr, "skip gradient-magnitude support regions");
  extract->add_flag("--no-lgsr", no_lgsr, "skip LoG support regions");

  // train
  auto* train = app.add_subcommand("train", "fit a Bayes model for one level (or all three)");
  std::string table_path, level_text = "1", features_text, pool_text;
  int max_size = 5;
  std::optional<double> train_fraction;
  train->add_option("features_csv", table_path, "feature CSV from extract")->required();
  train->add_option("--level", level_text, "1, 2, 3 or all")->capture_default_str();
  auto* feat_opt = train->add_option("--features", features_text, "comma-separated descriptors");
  auto* pool_opt = train->add_option("--pool", pool_text, "family (statistical|gmsr|lgsr|combined) or descriptor list to search");
  feat_opt->excludes(pool_opt);
  train->add_option("--max-size", max_size, "largest subset size in the search")->capture_default_str();
  train->add_option("--train-fraction", train_fraction, "train on this fraction of each class instead of the split counts");
  train->add_option("-o,--output", out_path, "model file")->required();

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score models on their held-out test windows");
  std::vector<std::string> model_paths;
  bool with_knn = false;
  evaluate_cmd->add_option("features_csv", table_path, "feature CSV from extract")->required();
  evaluate_cmd->add_option("models", model_paths, "model or hierarchy files")->required();
  evaluate_cmd->add_flag("--knn", with_knn, "also report a 5-nearest-neighbour classifier on the same features");

  // roc
  auto* roc_cmd = app.add_subcommand("roc", "ROC curve by shifting the decision boundary");
  std::string model_path;
  int roc_level = 0;
  roc_cmd->add_option("features_csv", table_path, "feature CSV from extract")->required();
  roc_cmd->add_option("model", model_path, "model or hierarchy file")->required();
  roc_cmd->add_option("--level", roc_level, "level to use from a hierarchy file");
  roc_cmd->add_option("-o,--output", out_path, "ROC CSV (threshold,pf,pd)")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "train once at the base config, then re-extract and re-classify per value");
  std::string param, values_text, sweep_features, sweep_pool;
  int sweep_level = 1;
  int sweep_max_size = 3;
  sweep->add_option("dataset", manifest_dir, "directory holding images/ and labels.txt")->required();
  sweep->add_option("--param", param, "tau_g, min_region or classifier")
      ->required()
      ->check(CLI::IsMember({"tau_g", "min_region", "classifier"}));
  sweep->add_option("--values", values_text, "comma-separated values, e.g. 10,50,100 or bayes,knn")->required();
  sweep->add_option("--level", sweep_level, "classification level")->check(CLI::Range(1, 3))->capture_default_str();
  auto* sweep_feat_opt = sweep->add_option("--features", sweep_features,
                                           "descriptor list (level 1 default: sigma(s)^G,p0.2(g)^G,p10(g)^G)");
  auto* sweep_pool_opt = sweep->add_option("--pool", sweep_pool, "family or descriptor list to search at the base config");
  sweep_feat_opt->excludes(sweep_pool_opt);
  sweep->add_option("--max-size", sweep_max_size, "largest subset size")->capture_default_str();
  sweep->add_option("--train-fraction", train_fraction, "train on this fraction of each class");

  // inspect
  auto* inspect = app.add_subcommand("inspect", std::string("render support regions and window labels of one image. ") + kOverlayHelp);
  std::string image_path, inspect_model, dump_dir, overlay_band = "v";
  inspect->add_option("image", image_path, "PNG or PPM image")->required();
  inspect->add_option("--model", inspect_model, "model or hierarchy file for window labels");
  inspect->add_option("-o,--output", out_path, "overlay PNG")->required();
  inspect->add_option("--band", overlay_band, "band whose regions are outlined")->capture_default_str();
  inspect->add_option("--dump-dir", dump_dir, "write response maps (PGM), masks (PGM) and boundary curves (CSV)");
  inspect->footer(kOverlayHelp);

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic board corpus (images/ + labels.txt)");
  SyntheticOptions synth_opts;
  synth->add_option("dir", out_path, "output directory")->required();
  synth->add_option("--images", synth_opts.images, "number of images")->capture_default_str();
  synth->add_option("--width", synth_opts.width, "image width")->capture_default_str();
  synth->add_option("--height", synth_opts.height, "image height")->capture_default_str();
  synth->add_option("--corpus-seed", synth_opts.seed, "generator seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const RunConfig cfg = flags.resolve(err);

    if (extract->parsed()) {
      RunConfig c = cfg;
      c.with_gmsr = c.with_gmsr && !no_gmsr;
      c.with_lgsr = c.with_lgsr && !no_lgsr;
      const Manifest m = load_manifest(manifest_dir);
      const FeatureTable table = extract_manifest(m, c, jobs);
      write_feature_csv(out_path, table);
      err << "extracted " << table.samples.size() << " windows from " << m.images.size() << " images\n";
      return kExitOk;
    }

    if (train->parsed()) {
      if (feat_opt->count() == 0 && pool_opt->count() == 0) throw std::invalid_argument("train needs --features or --pool");
      const FeatureTable table = read_feature_csv(table_path);
      std::vector<Level> levels;
      if (level_text == "all") {
        levels = {Level::Defect, Level::Knot, Level::DryKnot};
      } else {
        try {
          levels = {level_from_int(std::stoi(level_text))};
        } catch (const std::logic_error&) {
          throw std::invalid_argument("--level must be 1, 2, 3 or all");
        }
      }
      TrainOptions opts;
      if (feat_opt->count() > 0) opts.features = resolve_features(features_text, *table.schema);
      else opts.pool = resolve_features(pool_text, *table.schema);
      opts.max_size = max_size;
      opts.threads = jobs;
      if (!opts.pool.empty()) {
        err << "searching " << subset_count(opts.pool.size(), max_size) << " subsets of " << opts.pool.size()
            << " features\n";
      }
      std::vector<BayesModel> models;
      print_performance_header(out);
      for (Level level : levels) {
        TrainResult r = train_level(table, level, level_split_spec(table, level, cfg, train_fraction), opts);
        if (r.search) {
          err << "level " << static_cast<int>(level) << ": " << r.search->evaluated
              << " subsets fitted, validation weighted accuracy " << pct(r.search->score.weighted) << "\n";
        }
        print_performance_row(out, level, "bayes", r.test, r.model.features());
        models.push_back(std::move(r.model));
      }
      if (models.size() == 3) save_hierarchy({models[0], models[1], models[2]}, out_path);
      else save_model(models[0], out_path);
      return kExitOk;
    }

    if (evaluate_cmd->parsed()) {
      const FeatureTable table = read_feature_csv(table_path);
      print_performance_header(out);
      for (const auto& path : model_paths) {
        for (const auto& [name, model] : load_models(path)) {
          const Level level = model_level(model);
          const LevelData data = level_data(table, level, model.features());
          const LevelSplit parts = split_level(data, model.split);
          print_performance_row(out, level, "bayes", evaluate(model, parts.test), model.features());
          if (with_knn) {
            const KnnModel knn(parts.train, 5, level_missing_class(level));
            print_performance_row(out, level, "knn", evaluate(knn, parts.test), model.features());
          }
        }
      }
      return kExitOk;
    }

    if (roc_cmd->parsed()) {
      const FeatureTable table = read_feature_csv(table_path);
      auto models = load_models(model_path);
      if (models.size() > 1 && (roc_level < 1 || roc_level > 3)) throw std::invalid_argument("hierarchy file: pass --level 1|2|3");
      const BayesModel& model = models.size() > 1 ? models[static_cast<std::size_t>(roc_level - 1)].second : models[0].second;
      const Level level = model_level(model);
      const LevelData data = level_data(table, level, model.features());
      const RocCurve roc = roc_curve(model, split_level(data, model.split).test);
      write_roc_csv(out_path, roc);
      out << "level " << static_cast<int>(level) << " auc " << std::setprecision(4) << roc.auc() << " points "
          << roc.points.size() << '\n';
      return kExitOk;
    }

    if (sweep->parsed()) {
      const Manifest m = load_manifest(manifest_dir);
      SweepOptions so;
      so.param = sweep_param_from_name(param);
      so.values = split_list(values_text);
      so.level = level_from_int(sweep_level);
      so.train_fraction = train_fraction;
      so.jobs = jobs;
      so.train.threads = jobs;
      so.train.max_size = sweep_max_size;
      const auto schema = feature_schema(cfg.bands);
      if (sweep_pool_opt->count() > 0) {
        so.train.pool = resolve_features(sweep_pool, *schema);
      } else if (sweep_feat_opt->count() > 0) {
        so.train.features = resolve_features(sweep_features, *schema);
      } else if (so.level == Level::Defect) {
        so.train.features = resolve_features(join(kPublishedDefectSubset, ","), *schema);
      } else {
        so.train.pool = feature_pool(*schema, FeatureFamily::Gradient);
      }
      const SweepResult r = run_sweep(m, cfg, so);
      const auto names = level_class_names(so.level);
      err << "features: " << join(r.base.model.features(), " ") << '\n';
      out << std::left << std::setw(14) << param << std::setw(16) << names[0] << std::setw(16) << names[1]
          << std::setw(10) << "average" << "macro\n";
      for (const SweepRow& row : r.rows) {
        out << std::left << std::setw(14) << row.value << std::setw(16) << pct(row.test.class_accuracy[0])
            << std::setw(16) << pct(row.test.class_accuracy[1]) << std::setw(10) << pct(row.test.weighted)
            << pct(row.test.macro) << '\n';
      }
      return kExitOk;
    }

    if (inspect->parsed()) {
      const ColorImage image = load_image(image_path);
      const ImageAnalysis analysis = analyze_image(image, cfg);
      const auto schema = feature_schema(cfg.bands);
      std::optional<HierarchyModel> hierarchy;
      std::optional<BayesModel> single;
      if (!inspect_model.empty()) {
        if (is_hierarchy_file(inspect_model)) hierarchy = load_hierarchy(inspect_model);
        else single = load_model(inspect_model);
        std::vector<const BayesModel*> used;
        if (hierarchy) used = {&hierarchy->defect, &hierarchy->knot, &hierarchy->dry};
        else used = {&*single};
        for (const BayesModel* mdl : used) {
          for (const auto& f : mdl->features()) {
            if (std::find(schema->begin(), schema->end(), f) == schema->end()) {
              throw std::invalid_argument("model feature '" + f + "' is not produced by the configured bands");
            }
          }
        }
      }
      ColorImage overlay = image;
      for (const Window& win : analysis.grid.windows) {
        std::string label = "-";
        std::optional<std::array<double, 3>> tint;
        if (hierarchy || single) {
          const FeatureVector fv = window_features(win, analysis.bands, schema);
          if (hierarchy) {
            const FinalLabel fl = hierarchical_classify(*hierarchy, fv);
            label = std::string(final_label_name(fl));
            if (fl == FinalLabel::Elongated) tint = std::array<double, 3>{1, 0, 0};
            if (fl == FinalLabel::DryKnot) tint = std::array<double, 3>{1, 1, 0};
            if (fl == FinalLabel::SoundKnot) tint = std::array<double, 3>{0, 1, 1};
          } else {
            const int c = classify(*single, fv).label;
            label = level_class_names(model_level(*single))[static_cast<std::size_t>(c)];
            if (c == 0) tint = std::array<double, 3>{1, 0, 0};
          }
        }
        if (tint) {
          for (int y = win.y; y < win.y + win.size; ++y) {
            for (int x = win.x; x < win.x + win.size; ++x) blend(overlay, x, y, *tint, 0.3);
          }
        }
        out << win.x << ' ' << win.y << ' ' << label << '\n';
      }
      const Band shown = band_from_name(overlay_band);
      int regions = 0;
      for (const BandAnalysis& b : analysis.bands) {
        if (!dump_dir.empty()) dump_band(dump_dir, b, cfg);
        if (b.band != shown) continue;
        if (b.has_gmsr) draw_outlines(overlay, b.gmsr, {0, 1, 0});
        if (b.has_lgsr) draw_outlines(overlay, b.lgsr, {1, 0, 1});
        regions += static_cast<int>(b.gmsr.regions.size() + b.lgsr.regions.size());
      }
      save_png(overlay, out_path);
      err << regions << " support regions in band " << band_tag(shown) << "\n";
      return kExitOk;
    }

    if (synth->parsed()) {
      const Manifest m = write_synthetic_corpus(out_path, synth_opts);
      err << "wrote " << m.images.size() << " images and " << m.annotations.size() << " annotations\n";
      return kExitOk;
    }
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace grainspect
