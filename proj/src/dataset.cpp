#include "grainspect/dataset.hpp"

#include "grainspect/error.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace grainspect {

namespace {

constexpr std::array<std::pair<DefectClass, std::string_view>, 10> kClassNames = {{
    {DefectClass::SoundKnot, "sound_knot"},
    {DefectClass::DryKnot, "dry_knot"},
    {DefectClass::ResinPocket, "resin_pocket"},
    {DefectClass::CoreStripe, "core_stripe"},
    {DefectClass::Split, "split"},
    {DefectClass::Wane, "wane"},
    {DefectClass::Shake, "shake"},
    {DefectClass::BlueStain, "blue_stain"},
    {DefectClass::BrownStain, "brown_stain"},
    {DefectClass::BarkPocket, "bark_pocket"},
}};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

std::string format_double(double v) {
  if (is_missing(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view defect_class_name(DefectClass c) {
  for (const auto& [cls, name] : kClassNames) {
    if (cls == c) return name;
  }
  return "unknown";
}

std::optional<DefectClass> defect_class_from_name(std::string_view name) {
  for (const auto& [cls, n] : kClassNames) {
    if (n == name) return cls;
  }
  return std::nullopt;
}

std::vector<DefectAnnotation> parse_labels_text(std::string_view text, const std::string& source) {
  std::vector<DefectAnnotation> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first)) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    DefectAnnotation a;
    a.image_id = first;
    std::string cls;
    std::string extra;
    if (!(fields >> a.x0 >> a.y0 >> a.x1 >> a.y1 >> cls) || (fields >> extra)) {
      throw DataError(where + "malformed line (expected: image_id x0 y0 x1 y1 class_name)");
    }
    const auto parsed = defect_class_from_name(cls);
    if (!parsed) throw DataError(where + "unknown class name '" + cls + "'");
    a.cls = *parsed;
    if (a.x0 >= a.x1) throw DataError(where + "x0 < x1 violated");
    if (a.y0 >= a.y1) throw DataError(where + "y0 < y1 violated");
    if (a.x0 < 0 || a.y0 < 0) throw DataError(where + "negative coordinate");
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<DefectAnnotation> parse_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_labels_text(buffer.str(), path);
}

std::optional<bool> WindowLabel::knot() const {
  if (!cls) return std::nullopt;
  return *cls == DefectClass::SoundKnot || *cls == DefectClass::DryKnot;
}

std::optional<bool> WindowLabel::dry() const {
  if (!knot().value_or(false)) return std::nullopt;
  return *cls == DefectClass::DryKnot;
}

std::string WindowLabel::str() const { return cls ? std::string(defect_class_name(*cls)) : "none"; }

WindowLabel WindowLabel::parse(std::string_view text) {
  if (text == "none") return {};
  const auto cls = defect_class_from_name(text);
  if (!cls) throw DataError("unknown window label '" + std::string(text) + "'");
  return {cls};
}

std::vector<WindowLabel> label_windows(const WindowGrid& grid, std::span<const DefectAnnotation> annotations) {
  std::vector<WindowLabel> labels(grid.windows.size());
  for (std::size_t w = 0; w < grid.windows.size(); ++w) {
    const Window& win = grid.windows[w];
    const long long area = static_cast<long long>(win.size) * win.size;
    long long best = 0;
    for (const DefectAnnotation& a : annotations) {
      const long long ox = std::max(0, std::min(a.x1, win.x + win.size) - std::max(a.x0, win.x));
      const long long oy = std::max(0, std::min(a.y1, win.y + win.size) - std::max(a.y0, win.y));
      const long long overlap = ox * oy;
      // overlap >= 20% of the window area, in exact integer arithmetic
      if (overlap * 5 >= area && overlap > best) {
        best = overlap;
        labels[w].cls = a.cls;
      }
    }
  }
  return labels;
}

Level level_from_int(int level) {
  if (level < 1 || level > 3) throw std::invalid_argument("level must be 1, 2 or 3");
  return static_cast<Level>(level);
}

std::optional<int> level_target(const WindowLabel& label, Level level) {
  switch (level) {
    case Level::Defect: return label.defective() ? 0 : 1;
    case Level::Knot:
      if (const auto k = label.knot()) return *k ? 0 : 1;
      return std::nullopt;
    case Level::DryKnot:
      if (const auto d = label.dry()) return *d ? 0 : 1;
      return std::nullopt;
  }
  return std::nullopt;
}

std::array<std::string, 2> level_class_names(Level level) {
  switch (level) {
    case Level::Defect: return {"defective", "non-defective"};
    case Level::Knot: return {"knot", "non-knot"};
    case Level::DryKnot: return {"dry knot", "sound knot"};
  }
  return {"?", "?"};
}

SplitSpec default_split(Level level) {
  switch (level) {
    case Level::Defect: return {{210, 228}, kDefaultSeed};
    case Level::Knot: return {{36, 63}, kDefaultSeed};
    case Level::DryKnot: return {{356, 33}, kDefaultSeed};
  }
  return {};
}

SplitResult split(std::span<const int> classes, const SplitSpec& spec) {
  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] < 0 || classes[i] > 1) throw std::invalid_argument("split: class index must be 0 or 1");
    members[static_cast<std::size_t>(classes[i])].push_back(i);
  }
  std::mt19937_64 rng(spec.seed);
  SplitResult result;
  for (std::size_t c = 0; c < 2; ++c) {
    auto& m = members[c];
    const int want = spec.train_counts[c];
    if (want < 0 || static_cast<std::size_t>(want) > m.size()) {
      throw DataError("infeasible split: class " + std::to_string(c) + " has " + std::to_string(m.size()) +
                      " samples, " + std::to_string(want) + " requested for training");
    }
    // Fisher-Yates on raw engine output keeps the order identical across standard libraries.
    for (std::size_t i = m.size(); i > 1; --i) std::swap(m[i - 1], m[rng() % i]);
    result.train.insert(result.train.end(), m.begin(), m.begin() + want);
    result.test.insert(result.test.end(), m.begin() + want, m.end());
  }
  std::sort(result.train.begin(), result.train.end());
  std::sort(result.test.begin(), result.test.end());
  return result;
}

void write_feature_csv(std::ostream& out, const FeatureTable& table) {
  out << "image,x,y,label";
  for (const auto& name : *table.schema) out << ',' << name;
  out << '\n';
  for (const Sample& s : table.samples) {
    out << s.image_id << ',' << s.x << ',' << s.y << ',' << s.label.str();
    for (Eigen::Index i = 0; i < s.features.values.size(); ++i) out << ',' << format_double(s.features.values(i));
    out << '\n';
  }
}

void write_feature_csv(const std::string& path, const FeatureTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write_feature_csv(out, table);
}

FeatureTable read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("feature CSV is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "image" || header[1] != "x" || header[2] != "y" || header[3] != "label") {
    throw DataError("feature CSV header must start with image,x,y,label");
  }
  auto schema = std::make_shared<FeatureSchema>(header.begin() + 4, header.end());
  for (const auto& name : *schema) FeatureDescriptor::parse(name);
  FeatureTable table;
  table.schema = schema;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("feature CSV line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " columns, got " + std::to_string(cells.size()));
    }
    Sample s;
    s.image_id = cells[0];
    try {
      s.x = std::stoi(cells[1]);
      s.y = std::stoi(cells[2]);
      s.label = WindowLabel::parse(cells[3]);
      s.features.schema = schema;
      s.features.values.resize(static_cast<Eigen::Index>(schema->size()));
      for (std::size_t i = 0; i < schema->size(); ++i) {
        const std::string& c = cells[i + 4];
        s.features.values(static_cast<Eigen::Index>(i)) = (c == "NA" || c.empty()) ? kMissing : std::stod(c);
      }
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      throw DataError("feature CSV line " + std::to_string(line_no) + ": " + e.what());
    }
    table.samples.push_back(std::move(s));
  }
  return table;
}

FeatureTable read_feature_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_feature_csv(in);
}

std::vector<DefectAnnotation> Manifest::annotations_for(std::string_view image_id) const {
  std::vector<DefectAnnotation> out;
  for (const auto& a : annotations) {
    if (a.image_id == image_id) out.push_back(a);
  }
  return out;
}

Manifest load_manifest(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  const fs::path images = root / "images";
  if (!fs::is_directory(images)) throw DataError("manifest " + dir + " has no images/ directory");
  Manifest m;
  m.root = dir;
  for (const auto& entry : fs::directory_iterator(images)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".ppm" || ext == ".PNG" || ext == ".PPM") {
      m.images.emplace_back(entry.path().stem().string(), entry.path().string());
    }
  }
  std::sort(m.images.begin(), m.images.end());
  for (std::size_t i = 1; i < m.images.size(); ++i) {
    if (m.images[i].first == m.images[i - 1].first) throw DataError("duplicate image id " + m.images[i].first);
  }
  const fs::path labels = root / "labels.txt";
  if (!fs::exists(labels)) throw DataError("manifest " + dir + " has no labels.txt");
  m.annotations = parse_labels(labels.string());
  for (const auto& a : m.annotations) {
    const bool known = std::binary_search(m.images.begin(), m.images.end(), std::make_pair(a.image_id, std::string()),
                                          [](const auto& l, const auto& r) { return l.first < r.first; });
    if (!known) throw DataError("labels.txt refers to unknown image '" + a.image_id + "'");
  }
  return m;
}

}  // namespace grainspect
