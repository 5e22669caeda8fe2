#include "grainspect/classify.hpp"
#include "grainspect/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace grainspect {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;
constexpr const char* kModelFormat = "grainspect-bayes";
constexpr const char* kHierarchyFormat = "grainspect-hierarchy";

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const json& j, Eigen::Index n) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != n) throw DataError("model: vector has wrong length");
  return Eigen::Map<const Eigen::VectorXd>(values.data(), n);
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index n) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) throw DataError("model: matrix has wrong shape");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) m.row(r) = vector_from(j[static_cast<std::size_t>(r)], n).transpose();
  return m;
}

json model_json(const BayesModel& model) {
  json j;
  j["format"] = kModelFormat;
  j["version"] = kFormatVersion;
  j["level"] = model.level;
  j["split"] = {{"train_counts", model.split.train_counts}, {"seed", model.split.seed}};
  j["features"] = model.features();
  j["missing_class"] = model.missing_class();
  j["standardizer"] = {{"mean", vector_json(model.standardizer().mean)},
                       {"scale", vector_json(model.standardizer().scale)}};
  j["classes"] = json::array();
  for (const auto& c : model.classes()) {
    j["classes"].push_back({{"name", c.name},
                            {"prior", c.prior},
                            {"mean", vector_json(c.mean)},
                            {"covariance", matrix_json(c.covariance)}});
  }
  return j;
}

BayesModel model_from(const json& j) {
  if (j.value("format", "") != kModelFormat) throw DataError("not a grainspect model");
  if (j.value("version", 0) != kFormatVersion) throw DataError("unsupported model version");
  auto features = j.at("features").get<std::vector<std::string>>();
  const auto n = static_cast<Eigen::Index>(features.size());
  Standardizer s;
  s.mean = vector_from(j.at("standardizer").at("mean"), n);
  s.scale = vector_from(j.at("standardizer").at("scale"), n);
  const json& cj = j.at("classes");
  if (!cj.is_array() || cj.size() != 2) throw DataError("model must have two classes");
  std::array<ClassDensity, 2> classes;
  for (std::size_t c = 0; c < 2; ++c) {
    classes[c].name = cj[c].at("name").get<std::string>();
    classes[c].prior = cj[c].at("prior").get<double>();
    classes[c].mean = vector_from(cj[c].at("mean"), n);
    classes[c].covariance = matrix_from(cj[c].at("covariance"), n);
  }
  BayesModel model(std::move(features), std::move(s), std::move(classes), j.at("missing_class").get<int>());
  model.level = j.value("level", 0);
  if (j.contains("split")) {
    model.split.train_counts = j["split"].at("train_counts").get<std::array<int, 2>>();
    model.split.seed = j["split"].at("seed").get<std::uint64_t>();
  }
  return model;
}

template <typename F>
auto parse_guarded(const std::string& text, F&& f) {
  try {
    return f(json::parse(text));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << text << '\n';
}

}  // namespace

std::string serialize_model(const BayesModel& model) { return model_json(model).dump(2); }

BayesModel parse_model(const std::string& text) {
  return parse_guarded(text, [](const json& j) { return model_from(j); });
}

std::string serialize_hierarchy(const HierarchyModel& h) {
  json j;
  j["format"] = kHierarchyFormat;
  j["version"] = kFormatVersion;
  j["levels"] = {model_json(h.defect), model_json(h.knot), model_json(h.dry)};
  return j.dump(2);
}

HierarchyModel parse_hierarchy(const std::string& text) {
  return parse_guarded(text, [](const json& j) {
    if (j.value("format", "") != kHierarchyFormat) throw DataError("not a grainspect hierarchy");
    if (j.value("version", 0) != kFormatVersion) throw DataError("unsupported hierarchy version");
    const json& levels = j.at("levels");
    if (!levels.is_array() || levels.size() != 3) throw DataError("hierarchy must have three levels");
    return HierarchyModel{model_from(levels[0]), model_from(levels[1]), model_from(levels[2])};
  });
}

void save_model(const BayesModel& model, const std::string& path) { write_file(path, serialize_model(model)); }
BayesModel load_model(const std::string& path) { return parse_model(read_file(path)); }
void save_hierarchy(const HierarchyModel& h, const std::string& path) { write_file(path, serialize_hierarchy(h)); }
HierarchyModel load_hierarchy(const std::string& path) { return parse_hierarchy(read_file(path)); }

bool is_hierarchy_file(const std::string& path) {
  return parse_guarded(read_file(path), [](const json& j) { return j.value("format", "") == kHierarchyFormat; });
}

}  // namespace grainspect
