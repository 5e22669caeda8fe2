#include "grainspect/pipeline.hpp"

#include "grainspect/error.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace grainspect {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) throw std::invalid_argument("bad value for " + key + ": '" + value + "'");
  return v;
}

int to_int(const std::string& key, const std::string& value) {
  const double v = to_double(key, value);
  if (v != static_cast<int>(v)) throw std::invalid_argument("bad value for " + key + ": '" + value + "'");
  return static_cast<int>(v);
}

double positive(const std::string& key, double v) {
  if (!(v > 0.0)) throw std::invalid_argument(key + " must be positive");
  return v;
}

double unit(const std::string& key, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(key + " must lie in [0, 1]");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw std::invalid_argument("bad value for " + key + ": '" + value + "'");
}

std::string polarity_name(Polarity p) {
  switch (p) {
    case Polarity::Both: return "both";
    case Polarity::Positive: return "positive";
    case Polarity::Negative: return "negative";
  }
  return "both";
}

}  // namespace

std::map<std::string, std::string> RunConfig::entries() const {
  std::map<std::string, std::string> e;
  e["tau_g"] = fmt(tau_g);
  e["tau_l"] = fmt(tau_l);
  e["high"] = fmt(high);
  e["low"] = fmt(low);
  e["lgsr_threshold"] = fmt(lgsr_threshold);
  e["lgsr_polarity"] = polarity_name(lgsr_polarity);
  e["min_region"] = std::to_string(min_region);
  e["window"] = std::to_string(window);
  std::string b;
  for (std::size_t i = 0; i < bands.size(); ++i) b += (i ? "," : "") + std::string(1, band_tag(bands[i]));
  e["bands"] = b;
  e["seed"] = std::to_string(seed);
  for (int l = 0; l < 3; ++l) {
    e["split" + std::to_string(l + 1)] =
        std::to_string(split_counts[static_cast<std::size_t>(l)][0]) + "," + std::to_string(split_counts[static_cast<std::size_t>(l)][1]);
  }
  e["gmsr"] = with_gmsr ? "true" : "false";
  e["lgsr"] = with_lgsr ? "true" : "false";
  return e;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "tau_g") {
    tau_g = positive(key, to_double(key, value));
  } else if (key == "tau_l") {
    tau_l = positive(key, to_double(key, value));
  } else if (key == "high") {
    high = unit(key, to_double(key, value));
  } else if (key == "low") {
    low = unit(key, to_double(key, value));
  } else if (key == "lgsr_threshold") {
    lgsr_threshold = unit(key, to_double(key, value));
  } else if (key == "lgsr_polarity") {
    lgsr_polarity = polarity_from_name(value);
  } else if (key == "min_region") {
    min_region = static_cast<int>(positive(key, to_int(key, value)));
  } else if (key == "window") {
    window = static_cast<int>(positive(key, to_int(key, value)));
  } else if (key == "bands") {
    std::vector<Band> parsed;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) parsed.push_back(band_from_name(trim(item)));
    if (parsed.empty()) throw std::invalid_argument("bands must not be empty");
    bands = parsed;
  } else if (key == "seed") {
    try {
      std::size_t used = 0;
      seed = std::stoull(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad value for seed: '" + value + "'");
    }
  } else if (key == "split1" || key == "split2" || key == "split3") {
    const auto comma = value.find(',');
    if (comma == std::string::npos) throw std::invalid_argument(key + " expects two counts, e.g. 210,228");
    auto& counts = split_counts[static_cast<std::size_t>(key.back() - '1')];
    counts[0] = to_int(key, trim(value.substr(0, comma)));
    counts[1] = to_int(key, trim(value.substr(comma + 1)));
    if (counts[0] < 0 || counts[1] < 0) throw std::invalid_argument(key + " counts must be non-negative");
  } else if (key == "gmsr") {
    with_gmsr = to_bool(key, value);
  } else if (key == "lgsr") {
    with_lgsr = to_bool(key, value);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

void load_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    try {
      config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

ImageAnalysis analyze_image(const ColorImage& image, const RunConfig& config) {
  ImageAnalysis out;
  for (Band b : config.bands) {
    out.bands.push_back(analyze_band(b, to_band(image, b), config.region_params(), config.lgsr_params(),
                                     config.with_gmsr, config.with_lgsr));
  }
  out.grid = tile_windows(image.width(), image.height(), config.window);
  return out;
}

std::vector<Sample> extract_image(const std::string& image_id, const ColorImage& image,
                                  std::span<const DefectAnnotation> annotations, const RunConfig& config,
                                  std::shared_ptr<const FeatureSchema> schema) {
  for (const auto& a : annotations) {
    if (a.x1 > image.width() || a.y1 > image.height()) {
      throw DataError("annotation (" + std::to_string(a.x0) + "," + std::to_string(a.y0) + ")-(" +
                      std::to_string(a.x1) + "," + std::to_string(a.y1) + ") lies outside image " + image_id);
    }
  }
  const ImageAnalysis analysis = analyze_image(image, config);
  const auto labels = label_windows(analysis.grid, annotations);
  std::vector<Sample> out;
  out.reserve(analysis.grid.windows.size());
  for (std::size_t w = 0; w < analysis.grid.windows.size(); ++w) {
    const Window& win = analysis.grid.windows[w];
    out.push_back({image_id, win.x, win.y, labels[w], window_features(win, analysis.bands, schema)});
  }
  return out;
}

FeatureTable extract_manifest(const Manifest& manifest, const RunConfig& config, int jobs) {
  FeatureTable table;
  table.schema = feature_schema(config.bands);
  const std::size_t n = manifest.images.size();
  std::vector<std::vector<Sample>> per_image(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        const auto& [id, path] = manifest.images[i];
        const auto annotations = manifest.annotations_for(id);
        per_image[i] = extract_image(id, load_image(path), annotations, config, table.schema);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const int workers = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < workers; ++t) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  for (auto& rows : per_image) {
    for (auto& s : rows) table.samples.push_back(std::move(s));
  }
  return table;
}

LevelSplit split_level(const LevelData& data, const SplitSpec& spec) {
  const SplitResult parts = split(data.y, spec);
  return {data.rows(parts.train), data.rows(parts.test)};
}

std::optional<int> level_missing_class(Level level) {
  if (level == Level::Defect) return 1;
  return std::nullopt;
}

TrainResult train_level(const FeatureTable& table, Level level, const SplitSpec& spec, const TrainOptions& options) {
  const std::vector<std::string>& columns = options.features.empty() ? options.pool : options.features;
  if (columns.empty()) throw std::invalid_argument("train: no features or pool given");
  const LevelData data = level_data(table, level, columns);
  TrainResult out;
  out.split = split_level(data, spec);
  const auto names = level_class_names(level);
  std::vector<std::string> chosen = options.features;
  if (chosen.empty()) {
    std::array<int, 2> counts{0, 0};
    for (int y : out.split.train.y) ++counts[static_cast<std::size_t>(y)];
    const SplitSpec inner{{counts[0] / 2, counts[1] / 2}, spec.seed + 1};
    const LevelSplit halves = split_level(out.split.train, inner);
    SubsetSearchOptions so;
    so.max_size = options.max_size;
    so.threads = options.threads;
    so.missing_class = level_missing_class(level);
    out.search = subset_search(options.pool, halves.train, halves.test, so);
    chosen = out.search->features;
  }
  out.model = fit_gaussian_bayes(out.split.train.select(chosen), names, level_missing_class(level));
  out.model.level = static_cast<int>(level);
  out.model.split = spec;
  out.test = evaluate(out.model, out.split.test);
  return out;
}

SplitSpec level_split_spec(const FeatureTable& table, Level level, const RunConfig& config,
                           std::optional<double> train_fraction) {
  SplitSpec spec = config.split_spec(level);
  if (!train_fraction) return spec;
  if (!(*train_fraction > 0.0 && *train_fraction < 1.0)) throw std::invalid_argument("train fraction must be in (0, 1)");
  std::array<int, 2> counts{0, 0};
  for (const auto& s : table.samples) {
    if (const auto t = level_target(s.label, level)) ++counts[static_cast<std::size_t>(*t)];
  }
  for (std::size_t c = 0; c < 2; ++c) spec.train_counts[c] = static_cast<int>(*train_fraction * counts[c]);
  return spec;
}

SweepParam sweep_param_from_name(std::string_view name) {
  if (name == "tau_g") return SweepParam::TauG;
  if (name == "min_region") return SweepParam::MinRegion;
  if (name == "classifier") return SweepParam::Classifier;
  throw std::invalid_argument("unknown sweep parameter '" + std::string(name) + "'");
}

SweepResult run_sweep(const Manifest& manifest, const RunConfig& base, const SweepOptions& options) {
  if (options.values.empty()) throw std::invalid_argument("sweep: no values");
  if (options.param == SweepParam::Classifier) {
    for (const auto& v : options.values) {
      if (v != "bayes" && v != "knn") throw std::invalid_argument("classifier must be bayes or knn, got '" + v + "'");
    }
  }
  RunConfig cfg = base;
  const auto& columns = options.train.features.empty() ? options.train.pool : options.train.features;
  cfg.with_lgsr = std::any_of(columns.begin(), columns.end(), [](const std::string& n) {
    return FeatureDescriptor::parse(n).kind == RegionKind::Laplacian;
  });
  const FeatureTable table = extract_manifest(manifest, cfg, options.jobs);
  const SplitSpec spec = level_split_spec(table, options.level, cfg, options.train_fraction);
  SweepResult out;
  out.base = train_level(table, options.level, spec, options.train);
  const BayesModel& model = out.base.model;

  for (const auto& value : options.values) {
    SweepRow row{value, {}};
    if (options.param == SweepParam::Classifier) {
      if (value == "bayes") {
        row.test = out.base.test;
      } else {
        const KnnModel knn(out.base.split.train.select(model.features()), 5, level_missing_class(options.level));
        row.test = evaluate(knn, out.base.split.test);
      }
    } else {
      RunConfig c = cfg;
      c.set(options.param == SweepParam::TauG ? "tau_g" : "min_region", value);
      if (c.entries() == cfg.entries()) {
        row.test = out.base.test;
      } else {
        const FeatureTable t = extract_manifest(manifest, c, options.jobs);
        const LevelData data = level_data(t, options.level, model.features());
        row.test = evaluate(model, split_level(data, spec).test);
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace grainspect
