#include "grainspect/classify.hpp"
#include "grainspect/cli.hpp"
#include "grainspect/pipeline.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace grainspect;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "grainspect");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "grainspect_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool contains(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

// One window-level table: defects have a high sigma(s)^G, clean windows mostly none.
void write_table(const fs::path& path, int defects, int clean, bool flat = false) {
  FeatureTable t;
  t.schema = feature_schema(kFeatureBands);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < defects + clean; ++i) {
    Sample s;
    s.image_id = "img" + std::to_string(i / 12);
    s.x = 60 * (i % 4);
    s.y = 60 * ((i / 4) % 3);
    const bool bad = i < defects;
    if (bad) s.label = WindowLabel{i % 3 == 0 ? DefectClass::Shake : i % 3 == 1 ? DefectClass::DryKnot : DefectClass::SoundKnot};
    s.features.schema = t.schema;
    s.features.values = Eigen::VectorXd::Constant(168, kMissing);
    for (int k = 0; k < 40; ++k) s.features.values(k) = n(rng);
    if (bad || i % 2 == 0) {
      for (int k = 40; k < 168; ++k) s.features.values(k) = flat ? 1.0 : n(rng) + (bad ? 3.0 : 0.0) + (k % 2 && i % 3 == 0 ? 3.0 : 0.0);
    }
    t.samples.push_back(s);
  }
  write_feature_csv(path.string(), t);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 1, help with 0") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"bogus"}).code == kExitUsage);
  CHECK(cli({"extract"}).code == kExitUsage);
  CHECK(cli({"extract", "x", "-o", "y", "--frobnicate"}).code == kExitUsage);
  const Run help = cli({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(contains(help.out, "sweep"));
  CHECK(contains(cli({"inspect", "--help"}).out, "magenta"));
}

TEST_CASE("missing data exits with 2") {
  const Run r = cli({"extract", "/nonexistent/grainspect", "-o", "/tmp/x.csv"});
  CHECK(r.code == kExitData);
  CHECK(contains(r.err, "data error"));
  CHECK(cli({"evaluate", "/nonexistent.csv", "m.json"}).code == kExitData);
}

TEST_CASE("bad config values are usage errors") {
  const fs::path dir = fresh_dir("cli_cfg_bad");
  CHECK(cli({"--set", "nope=1", "synth", (dir / "c").string(), "--images", "1"}).code == kExitUsage);
  CHECK(cli({"--tau-g", "-1", "synth", (dir / "c").string(), "--images", "1"}).code == kExitUsage);
  std::ofstream(dir / "bad.cfg") << "min_region\n";
  CHECK(cli({"--config", (dir / "bad.cfg").string(), "synth", (dir / "c").string(), "--images", "1"}).code ==
        kExitUsage);
}

TEST_CASE("config precedence: file < environment seed < --set < flags") {
  const fs::path dir = fresh_dir("cli_cfg");
  std::ofstream(dir / "run.cfg") << "seed = 5\nmin_region = 20\ntau_g = 3\nwindow = 40\n";
  const std::string corpus = (dir / "c").string();
  const std::string cfg = (dir / "run.cfg").string();

  Run r = cli({"--config", cfg, "synth", corpus, "--images", "1"});
  REQUIRE(r.code == kExitOk);
  CHECK(contains(r.err, "# effective config"));
  CHECK(contains(r.err, "seed = 5"));
  CHECK(contains(r.err, "min_region = 20"));

  ::setenv("GRAINSPECT_SEED", "6", 1);
  r = cli({"--config", cfg, "synth", corpus, "--images", "1"});
  CHECK(contains(r.err, "seed = 6"));
  r = cli({"--config", cfg, "--set", "seed=8", "--set", "tau_g=1", "synth", corpus, "--images", "1"});
  CHECK(contains(r.err, "seed = 8"));
  CHECK(contains(r.err, "tau_g = 1\n"));
  r = cli({"--config", cfg, "--set", "seed=8", "--seed", "7", "--min-region", "30", "synth", corpus, "--images", "1"});
  CHECK(contains(r.err, "seed = 7"));
  CHECK(contains(r.err, "min_region = 30"));
  CHECK(contains(r.err, "window = 40"));
  ::unsetenv("GRAINSPECT_SEED");
}

TEST_CASE("numerical failure exits with 3") {
  const fs::path dir = fresh_dir("cli_numeric");
  write_table(dir / "flat.csv", 60, 120, true);
  const Run r = cli({"train", (dir / "flat.csv").string(), "--features", "sigma(s)^G", "--train-fraction", "0.5",
                     "-o", (dir / "m.json").string()});
  CHECK(r.code == kExitNumerical);
  CHECK(contains(r.err, "numerical error"));
}

TEST_CASE("train, evaluate and roc on a feature table") {
  const fs::path dir = fresh_dir("cli_train");
  write_table(dir / "t.csv", 90, 150);
  const std::string table = (dir / "t.csv").string();
  const std::string model = (dir / "m.json").string();
  Run r = cli({"train", table, "--features", "sigma(s)^G,p10(g)^G", "--train-fraction", "0.5", "-o", model});
  REQUIRE(r.code == kExitOk);
  CHECK(contains(r.out, "defective"));
  const BayesModel m = load_model(model);
  CHECK(m.level == 1);
  CHECK(m.features() == std::vector<std::string>{"sigma(s)^G", "p10(g)^G"});

  r = cli({"train", table, "--features", "sigma(s)^G", "--pool", "gmsr", "-o", model});
  CHECK(r.code == kExitUsage);
  r = cli({"train", table, "--features", "sigma(s)^Q", "-o", model});
  CHECK(r.code == kExitUsage);
  r = cli({"train", table, "--features", "sigma(s)^G", "-o", model});  // 210/228 exceeds the table
  CHECK(r.code == kExitData);

  r = cli({"evaluate", table, model, "--knn"});
  REQUIRE(r.code == kExitOk);
  CHECK(contains(r.out, "bayes"));
  CHECK(contains(r.out, "knn"));

  r = cli({"roc", table, model, "-o", (dir / "roc.csv").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(contains(r.out, "auc"));
  const std::string roc = slurp(dir / "roc.csv");
  CHECK(roc.rfind("threshold,pf,pd\n", 0) == 0);

  r = cli({"--set", "split2=10,10", "--set", "split3=10,10", "train", table, "--level", "all", "--pool",
           "sigma(s)^G,p10(g)^G,mu(v)^G", "--max-size", "2", "--train-fraction", "0.5", "-o",
           (dir / "h.json").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(is_hierarchy_file((dir / "h.json").string()));
  r = cli({"roc", table, (dir / "h.json").string(), "-o", (dir / "roc2.csv").string()});
  CHECK(r.code == kExitUsage);
  r = cli({"roc", table, (dir / "h.json").string(), "--level", "2", "-o", (dir / "roc2.csv").string()});
  CHECK(r.code == kExitOk);
}

TEST_CASE("inspect on a constant gray image finds nothing") {
  const fs::path dir = fresh_dir("cli_inspect");
  save_png(ColorImage::filled(180, 120, 0.5, 0.5, 0.5), (dir / "gray.png").string());
  write_table(dir / "t.csv", 90, 150);
  const std::string model = (dir / "m.json").string();
  REQUIRE(cli({"train", (dir / "t.csv").string(), "--features", "sigma(s)^G,p10(g)^G", "--train-fraction", "0.5",
               "-o", model})
              .code == kExitOk);
  const Run r = cli({"inspect", (dir / "gray.png").string(), "--model", model, "-o", (dir / "overlay.png").string(),
                     "--dump-dir", (dir / "dump").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(contains(r.err, "0 support regions"));
  std::istringstream lines(r.out);
  std::string line;
  int windows = 0;
  while (std::getline(lines, line)) {
    ++windows;
    CHECK(line.ends_with(" non-defective"));
  }
  CHECK(windows == 6);
  const ColorImage overlay = load_image((dir / "overlay.png").string());
  const ColorImage input = load_image((dir / "gray.png").string());
  CHECK((overlay.r == input.r).all());
  CHECK((overlay.g == input.g).all());
  CHECK(fs::exists(dir / "dump" / "gm_v.pgm"));
  CHECK(fs::exists(dir / "dump" / "curves_s.csv"));
}

TEST_CASE("extract is deterministic across runs and job counts") {
  const fs::path dir = fresh_dir("cli_extract");
  const std::string corpus = (dir / "corpus").string();
  REQUIRE(cli({"synth", corpus, "--images", "3"}).code == kExitOk);
  REQUIRE(cli({"extract", corpus, "-o", (dir / "a.csv").string()}).code == kExitOk);
  REQUIRE(cli({"--jobs", "2", "extract", corpus, "-o", (dir / "b.csv").string()}).code == kExitOk);
  const std::string a = slurp(dir / "a.csv");
  CHECK(!a.empty());
  CHECK(a == slurp(dir / "b.csv"));
  REQUIRE(cli({"extract", corpus, "--no-lgsr", "-o", (dir / "c.csv").string()}).code == kExitOk);
  const FeatureTable c = read_feature_csv((dir / "c.csv").string());
  for (const auto& s : c.samples) CHECK_FALSE(s.features.get("mu(v)^L").has_value());
}

}  // TEST_SUITE
