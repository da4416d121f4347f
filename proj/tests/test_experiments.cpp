#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "manigeo/experiments.hpp"

using namespace manigeo;
namespace fs = std::filesystem;

namespace {

fs::path temp_root() {
  const fs::path p = fs::temp_directory_path() / "manigeo_exp_test";
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

}  // namespace

TEST_CASE("seed specs parse as ranges and lists") {
  CHECK(parse_seed_spec("0..3") == std::vector<uint64_t>{0, 1, 2, 3});
  CHECK(parse_seed_spec("7") == std::vector<uint64_t>{7});
  CHECK(parse_seed_spec("2, 9,4") == std::vector<uint64_t>{2, 9, 4});
  CHECK_THROWS_AS(parse_seed_spec("5..2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_seed_spec("a"), std::invalid_argument);
  CHECK_THROWS_AS(parse_seed_spec(""), std::invalid_argument);
}

TEST_CASE("gate checks honour operators and fail on NaN") {
  CHECK(make_gate("g", 0.5, ">=", 0.5).pass);
  CHECK_FALSE(make_gate("g", 0.5, ">", 0.5).pass);
  CHECK(make_gate("g", -1.0, "<=", -0.8).pass);
  CHECK_FALSE(make_gate("g", std::numeric_limits<double>::quiet_NaN(), "<=", 1.0).pass);
  CHECK_THROWS_AS(make_gate("g", 0.0, "==", 0.0), std::invalid_argument);
}

TEST_CASE("aggregates cover completed seeds only") {
  ExperimentReport r;
  SeedMetrics a;
  a.seed = 0;
  a.metrics["m"] = 1.0;
  SeedMetrics b;
  b.seed = 1;
  b.metrics["m"] = 3.0;
  SeedMetrics c;
  c.seed = 2;
  c.completed = false;
  c.metrics["m"] = 100.0;
  r.per_seed = {a, b, c};
  aggregate_metrics(r);
  CHECK(r.aggregate.at("m").first == Catch::Approx(2.0));
  CHECK(r.aggregate.at("m").second == Catch::Approx(1.0));
  CHECK(expdetail::metric_min(r, "m") == 1.0);
  CHECK(expdetail::metric_max(r, "m") == 3.0);
}

TEST_CASE("config view records resolved defaults into the hash") {
  ExperimentConfig a = experiment_config(Config{}, "lindyn");
  Config over;
  over.set("train.epochs", "599");
  ExperimentConfig b = experiment_config(over, "lindyn");
  CHECK(a.view.effective.hash() != b.view.effective.hash());
  CHECK(a.view.effective.get_int("train.epochs", -1) == 600);
  // the artifact location is not part of the configuration identity
  Config moved;
  moved.set("run.out", "elsewhere");
  ExperimentConfig c = experiment_config(moved, "lindyn");
  CHECK(a.view.effective.hash() == c.view.effective.hash());
}

TEST_CASE("experiment config validates inputs") {
  CHECK_THROWS_AS(experiment_config(Config{}, "unknown"), std::invalid_argument);
  Config bad_gate;
  bad_gate.set("task.gate", "NAND");
  CHECK_THROWS_AS(experiment_config(bad_gate, "fig1"), std::invalid_argument);
  Config bad_holdout;
  bad_holdout.set("train.holdout", "1,2,3");
  CHECK_THROWS_AS(experiment_config(bad_holdout, "richlazy"), std::invalid_argument);
  Config bad_lr;
  bad_lr.set("train.learning_rate", "0");
  CHECK_THROWS_AS(experiment_config(bad_lr, "fig1"), std::invalid_argument);
}

TEST_CASE("shipped config files mirror the built-in defaults") {
  const fs::path configs = fs::path(MANIGEO_SOURCE_DIR) / "configs";
  for (const char* name : {"fig1", "depth", "richlazy", "noise", "robustness", "lindyn", "bayes",
                           "curvature-oracle"}) {
    INFO(name);
    const Config built_in = parse_config(default_config_text(name));
    const Config shipped = load_config(configs / (std::string(name) + ".cfg"));
    CHECK(built_in.canonical() == shipped.canonical());
  }
}

TEST_CASE("statistics helpers") {
  CHECK(expdetail::pearson({1, 2, 3, 4}, {2, 4, 6, 8}) == Catch::Approx(1.0));
  CHECK(expdetail::pearson({1, 2, 3, 4}, {8, 6, 4, 2}) == Catch::Approx(-1.0));
  CHECK(expdetail::spearman({1, 2, 3, 4, 5}, {1, 4, 9, 16, 25}) == Catch::Approx(1.0));
  CHECK(expdetail::spearman({0, 0.1, 0.2, 0.4, 0.6}, {5, 4, 3, 2, 1}) == Catch::Approx(-1.0));
  // ties share the average rank
  const Vec r = expdetail::ranks({3.0, 1.0, 3.0});
  CHECK(r[0] == Catch::Approx(2.5));
  CHECK(r[1] == Catch::Approx(1.0));
  CHECK(r[2] == Catch::Approx(2.5));
  CHECK_THROWS_AS(expdetail::pearson({1, 1, 1}, {1, 2, 3}), std::domain_error);
}

TEST_CASE("derivative sign changes count cyclically with a floor") {
  Vec wave(64), flat(64, 1.0), two_bumps(64);
  for (int i = 0; i < 64; ++i) {
    wave[i] = std::sin(kTwoPi * i / 64);
    two_bumps[i] = std::sin(kTwoPi * 2 * i / 64);
  }
  CHECK(expdetail::derivative_sign_changes(wave, 0.01) == 2);
  CHECK(expdetail::derivative_sign_changes(two_bumps, 0.01) == 4);
  CHECK(expdetail::derivative_sign_changes(flat, 0.01) == 0);
  // sub-floor ripple on one flank is not an extra oscillation
  Vec ripple = wave;
  for (int i = 0; i < 64; ++i) ripple[i] += 1e-4 * std::sin(kTwoPi * 8 * i / 64);
  CHECK(expdetail::derivative_sign_changes(ripple, 0.01) == 2);
}

TEST_CASE("oracle runner writes a scored report") {
  const fs::path out = temp_root() / "oracle";
  Config over;
  over.set("oracle.resolution", "48");
  over.set("run.out", out.string());
  ExperimentConfig cfg = experiment_config(over, "curvature-oracle");
  const ExperimentReport rep = run_experiment(cfg);
  write_report(rep, cfg);

  CHECK(rep.all_pass);
  CHECK(rep.config_hash.size() == 16);
  CHECK(fs::exists(out / "report.json"));
  CHECK(fs::exists(out / "config.cfg"));
  CHECK(fs::exists(out / "torus_curvature.csv"));
  CHECK(fs::exists(out / "sphere_curvature.csv"));

  const auto j = nlohmann::json::parse(slurp(out / "report.json"));
  CHECK(j["name"] == "curvature-oracle");
  CHECK(j["all_pass"] == true);
  CHECK(j["gates"].size() == 4);
  CHECK(j["per_seed"].size() == 1);
  for (const auto& rel : rep.artifacts) CHECK(fs::exists(out / rel));
  // the emitted effective config carries no artifact location
  CHECK(slurp(out / "config.cfg").find("run.out") == std::string::npos);
}

TEST_CASE("reruns are byte-identical across output directories") {
  const fs::path root = temp_root();
  Config over;
  over.set("run.seeds", "0");
  over.set("train.epochs", "120");
  over.set("train.snapshot_every", "20");

  std::map<std::string, std::string> trees[2];
  for (int pass = 0; pass < 2; ++pass) {
    Config c = over;
    c.set("run.out", (root / ("ld" + std::to_string(pass))).string());
    ExperimentConfig cfg = experiment_config(c, "lindyn");
    write_report(run_experiment(cfg), cfg);
    trees[pass] = tree_contents(cfg.out_dir);
  }
  REQUIRE(trees[0].size() == trees[1].size());
  REQUIRE(trees[0].size() > 3);
  for (const auto& [rel, bytes] : trees[0]) {
    INFO(rel);
    REQUIRE(trees[1].count(rel) == 1);
    CHECK(bytes == trees[1].at(rel));
  }
}

TEST_CASE("training divergence is recorded, not fatal") {
  const fs::path out = temp_root() / "diverge";
  Config over;
  over.set("run.seeds", "0");
  over.set("train.learning_rate", "1000");  // blows up immediately
  over.set("train.epochs", "50");
  over.set("run.out", out.string());
  ExperimentConfig cfg = experiment_config(over, "lindyn");
  const ExperimentReport rep = run_experiment(cfg);
  REQUIRE(rep.per_seed.size() == 1);
  CHECK_FALSE(rep.per_seed[0].completed);
  CHECK_FALSE(rep.per_seed[0].error.empty());
  CHECK_FALSE(rep.all_pass);
}
