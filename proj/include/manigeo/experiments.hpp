#pragma once

// Experiment pipelines. Each runner trains the configured nets, writes CSV
// and JSON artifacts under one output directory, and scores itself against
// thresholds that live in the config file, never in code. A report carries a
// hash over every setting the run resolved, so it names the exact
// configuration that produced it. Runners are deterministic functions of
// (config, seeds); per-seed work is independent and reduced in fixed order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "manigeo/bayes.hpp"
#include "manigeo/config.hpp"
#include "manigeo/geometry.hpp"
#include "manigeo/io.hpp"
#include "manigeo/lindyn.hpp"
#include "manigeo/manifolds.hpp"
#include "manigeo/network.hpp"
#include "manigeo/numerics.hpp"
#include "manigeo/tasks.hpp"

namespace manigeo {

inline constexpr const char* kCodeVersion = "1.0.0";

// Decorrelates the training-noise stream from the init stream of the same
// seed.
inline constexpr uint64_t kTrainSeedOffset = 1000003;

// ---------------------------------------------------------------------------
// Config resolution

// Records every key a run actually reads, with its resolved value. The
// recorded set is what gets hashed into the report, so defaults count.
struct ConfigView {
  Config file;
  mutable Config effective;

  std::string str(const std::string& key, const std::string& fallback) const {
    const std::string v = file.get_string(key, fallback);
    effective.set(key, v);
    return v;
  }
  double num(const std::string& key, double fallback) const {
    const double v = file.get_double(key, fallback);
    effective.set(key, format_g9(v));
    return v;
  }
  int integer(const std::string& key, int fallback) const {
    const int v = file.get_int(key, fallback);
    effective.set(key, std::to_string(v));
    return v;
  }
  bool boolean(const std::string& key, bool fallback) const {
    const bool v = file.get_bool(key, fallback);
    effective.set(key, v ? "true" : "false");
    return v;
  }
  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const {
    const std::vector<double> v = file.get_list(key, fallback);
    std::string joined;
    for (size_t i = 0; i < v.size(); ++i) joined += (i ? "," : "") + format_g9(v[i]);
    effective.set(key, joined);
    return v;
  }
  std::vector<int> int_list(const std::string& key, const std::vector<int>& fallback) const {
    const std::vector<int> v = file.get_int_list(key, fallback);
    std::string joined;
    for (size_t i = 0; i < v.size(); ++i) joined += (i ? "," : "") + std::to_string(v[i]);
    effective.set(key, joined);
    return v;
  }
};

inline Gate parse_gate(const std::string& s) {
  if (s == "XOR") return Gate::XOR;
  if (s == "AND") return Gate::AND;
  if (s == "OR") return Gate::OR;
  throw std::invalid_argument("unknown gate '" + s + "'");
}

inline Domain parse_domain(const std::string& s) {
  if (s == "torus") return Domain::torus;
  if (s == "plane") return Domain::plane;
  throw std::invalid_argument("unknown domain '" + s + "'");
}

inline Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::tanh_act;
  if (s == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

inline OutputActivation parse_output_activation(const std::string& s) {
  if (s == "sigmoid") return OutputActivation::sigmoid;
  if (s == "identity") return OutputActivation::identity;
  throw std::invalid_argument("unknown output activation '" + s + "'");
}

inline LossKind parse_loss(const std::string& s) {
  if (s == "bce") return LossKind::bce;
  if (s == "mse") return LossKind::mse;
  throw std::invalid_argument("unknown loss '" + s + "'");
}

// "a..b" inclusive range, or a comma list.
inline std::vector<uint64_t> parse_seed_spec(const std::string& spec) {
  std::vector<uint64_t> seeds;
  const auto parse_one = [&](const std::string& cell) {
    const std::string t = trim(cell);
    size_t used = 0;
    uint64_t v = 0;
    try {
      v = std::stoull(t, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad seed '" + cell + "'");
    }
    if (used != t.size()) throw std::invalid_argument("bad seed '" + cell + "'");
    return v;
  };
  const size_t dots = spec.find("..");
  if (dots != std::string::npos) {
    const uint64_t a = parse_one(spec.substr(0, dots));
    const uint64_t b = parse_one(spec.substr(dots + 2));
    if (b < a) throw std::invalid_argument("seed range is reversed: " + spec);
    for (uint64_t s = a; s <= b; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(spec);
  std::string cell;
  while (std::getline(ss, cell, ',')) seeds.push_back(parse_one(cell));
  if (seeds.empty()) throw std::invalid_argument("empty seed list");
  return seeds;
}

// Shipped defaults per runner. configs/<name>.cfg mirrors these values; the
// mirror is asserted by a test so the two cannot drift apart.
inline std::string default_config_text(const std::string& name) {
  const std::string base =
      "task.gate = XOR\n"
      "task.alpha = 0\n"
      "task.domain = torus\n"
      "arch.dims = 4,4,4,1\n"
      "arch.hidden = tanh\n"
      "arch.output = sigmoid\n"
      "init.sigma = 0.5\n"
      "train.learning_rate = 0.5\n"
      "train.epochs = 4000\n"
      "train.loss = bce\n"
      "train.grid = 32\n"
      "train.noise_sigma = 0\n"
      "train.snapshot_every = 500\n"
      "train.train_biases = true\n"
      "geometry.field_resolution = 64\n"
      "geometry.det_floor = 1e-9\n"
      "run.seeds = 0,1,2\n";
  std::string extra;
  if (name == "fig1") {
    extra =
        "arch.dims = 4,16,16,1\n"
        "init.sigma = 0.1\n"
        "train.epochs = 2500\n"      // longer runs push curvature off the class centers
        "fig1.plane_epochs = 8000\n"  // the 2-dim plane tasks converge slower
        "fig1.band = 0.392699082\n"
        "fig1.center_radius = 0.785398163\n"
        "fig1.top_quantile = 0.05\n"
        "fig1.alpha_rotated = 0.785398163\n"
        "thresholds.accuracy_min = 0.99\n"
        "thresholds.cos_over_sin_max = 0.1\n"
        "thresholds.trace_ratio_min = 2\n"
        "thresholds.center_fraction_min = 0.9\n"
        "thresholds.alignment_min = 0.95\n";
  } else if (name == "depth") {
    extra =
        "depth.one_layer_dims = 4,16,1\n"
        "depth.two_layer_dims = 4,16,16,1\n"
        "depth.slice_theta2 = 0.785398163\n"
        "depth.derivative_floor = 0.01\n"  // below the shallow net's secondary ridges, above jitter
        "init.sigma = 0.1\n"
        "train.epochs = 2500\n"
        "thresholds.accuracy_min = 0.99\n"
        "thresholds.pearson_min = 0.5\n"
        "thresholds.oscillation_margin_min = 1\n";
  } else if (name == "richlazy") {
    extra =
        "arch.dims = 4,100,1\n"
        "init.sigma = 0\n"  // unused; per-regime scales below
        "train.learning_rate = 1\n"
        "train.epochs = 3000\n"
        "train.snapshot_every = 150\n"
        "train.holdout = 1.57079633,4.71238898,1.57079633,4.71238898\n"
        "richlazy.rich_scale = 0.05\n"
        "richlazy.lazy_scale = 8\n"  // saturates the kernel regime; smaller scales still generalise
        "richlazy.top_quantile = 0.05\n"
        "geometry.field_resolution = 48\n"
        "run.seeds = 0..9\n"
        "thresholds.rich_holdout_min = 0.9\n"
        "thresholds.holdout_gap_min = 0.2\n"
        "thresholds.pr_gap_min = 0\n"
        "thresholds.top_k_gap_min = 0\n";
  } else if (name == "noise") {
    extra =
        "arch.dims = 4,100,1\n"
        "init.sigma = 0.025\n"
        "train.learning_rate = 1\n"
        "train.epochs = 2500\n"
        "sweep.noise_sigmas = 0,0.1,0.2,0.4,0.6\n"
        "noise.slice_sigma = 0.5\n"
        "noise.slice_epochs = 8000\n"      // the posterior plateau needs long noise averaging
        "noise.slice_learning_rate = 0.5\n"
        "noise.slice_theta2_offset = 1.57079633\n"
        "noise.trace_slice_theta2 = 0.785398163\n"
        "noise.curve_bins = 64\n"
        "noise.mc_samples = 200000\n"
        "noise.k_max = 3\n"
        "noise.peak_tolerance = 0.02\n"
        "geometry.field_resolution = 48\n"
        "thresholds.spearman_max = -0.8\n"
        "thresholds.peak_inversions_max = 0\n"
        "thresholds.slice_mse_max = 0.01\n";
  } else if (name == "robustness") {
    extra =
        "sweep.embed_dims = 4,16,64\n"
        "robustness.width = 64\n"
        "robustness.rich_scale = 0.2\n"  // small enough to learn features, escapes the origin in budget
        "robustness.lazy_scale = 8\n"
        "robustness.test_sigmas = 0,0.1,0.2,0.3,0.5\n"
        "robustness.repeats = 3\n"
        "train.learning_rate = 1\n"
        "train.epochs = 6000\n"
        "train.grid = 24\n"
        "run.seeds = 0,1\n"
        "thresholds.gap_growth_min = 0\n"
        "thresholds.task_gap_max = 0.05\n"
        "thresholds.zero_noise_mismatch_max = 1e-12\n";
  } else if (name == "lindyn") {
    extra =
        "task.gate = AND\n"
        "arch.dims = 4,16,1\n"
        "arch.hidden = identity\n"
        "arch.output = identity\n"
        "init.sigma = 0.05\n"
        "train.learning_rate = 0.1\n"
        "train.epochs = 600\n"
        "train.loss = mse\n"
        "train.snapshot_every = 1\n"
        "train.train_biases = false\n"
        "lindyn.after_epoch = 5\n"
        "lindyn.tanh_u_fraction = 0.5\n"
        "thresholds.linear_dev_max = 0.05\n"
        "thresholds.tanh_dev_max = 0.15\n"
        "thresholds.cos_drift_max = 1e-8\n";
  } else if (name == "bayes") {
    extra =
        "arch.dims = 4,100,1\n"
        "init.sigma = 0.025\n"
        "train.learning_rate = 0.5\n"  // gentler late-phase noise averaging
        "train.epochs = 8000\n"
        "train.noise_sigma = 0.5\n"
        "bayes.sigma = 0.5\n"
        "bayes.mc_samples = 1000000\n"
        "bayes.bins = 50\n"
        "bayes.k_max = 3\n"
        "bayes.slice_theta2_offset = 1.57079633\n"
        "thresholds.mc_max_se = 3\n"
        "thresholds.slice_mse_max = 0.01\n";
  } else if (name == "curvature-oracle") {
    extra =
        "oracle.resolution = 128\n"
        "oracle.torus_major = 2\n"
        "oracle.torus_minor = 1\n"
        "oracle.sphere_radius = 2\n"
        "oracle.sphere_cap = 0.2\n"
        "run.seeds = 0\n"  // fully deterministic, seeds play no part
        "thresholds.oracle_err_max = 1e-4\n"
        "thresholds.const_k_max = 1e-10\n";
  } else {
    throw std::invalid_argument("unknown experiment '" + name + "'");
  }
  return base + extra + "run.out = out/" + name + "\n";
}

struct ExperimentConfig {
  std::string name;
  TaskSpec task{Gate::XOR, 0.0, Domain::torus};
  Arch arch;
  TrainConfig train;
  double init_sigma = 0.5;
  int field_resolution = 64;
  double det_floor = 1e-9;
  std::vector<double> noise_sigmas;
  std::vector<int> embed_dims;
  std::vector<uint64_t> seeds;
  std::filesystem::path out_dir;
  ConfigView view;

  double threshold(const std::string& key, double fallback) const {
    return view.num("thresholds." + key, fallback);
  }
};

// Defaults for `name`, overlaid with `file_cfg`. Throws if the merged
// settings do not validate.
inline ExperimentConfig experiment_config(const Config& file_cfg, const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.view.file = merged(parse_config(default_config_text(name)), file_cfg);
  const ConfigView& v = cfg.view;

  cfg.task = TaskSpec(parse_gate(v.str("task.gate", "XOR")), v.num("task.alpha", 0.0),
                      parse_domain(v.str("task.domain", "torus")));
  cfg.arch.dims = v.int_list("arch.dims", {4, 4, 4, 1});
  cfg.arch.hidden_act = parse_activation(v.str("arch.hidden", "tanh"));
  cfg.arch.out_act = parse_output_activation(v.str("arch.output", "sigmoid"));
  cfg.init_sigma = v.num("init.sigma", 0.5);

  cfg.train.learning_rate = v.num("train.learning_rate", 0.5);
  cfg.train.epochs = v.integer("train.epochs", 4000);
  cfg.train.loss = parse_loss(v.str("train.loss", "bce"));
  cfg.train.grid_resolution = v.integer("train.grid", 32);
  cfg.train.noise_sigma = v.num("train.noise_sigma", 0.0);
  cfg.train.snapshot_every = v.integer("train.snapshot_every", 500);
  cfg.train.train_biases = v.boolean("train.train_biases", true);
  if (v.file.has("train.holdout")) {
    const std::vector<double> box = v.list("train.holdout", {});
    if (box.size() != 4)
      throw std::invalid_argument("train.holdout needs 4 values: lo1,hi1,lo2,hi2");
    cfg.train.holdout = AngleBox{box[0], box[1], box[2], box[3]};
  }

  cfg.field_resolution = v.integer("geometry.field_resolution", 64);
  cfg.det_floor = v.num("geometry.det_floor", 1e-9);
  cfg.noise_sigmas = v.list("sweep.noise_sigmas", {});
  cfg.embed_dims = v.int_list("sweep.embed_dims", {4, 16, 64});
  cfg.seeds = parse_seed_spec(v.str("run.seeds", "0"));
  // Where the artifacts land is not part of what they are: the out dir stays
  // out of the effective config, so reruns into different directories stay
  // byte-identical and share a provenance hash.
  cfg.out_dir = v.file.get_string("run.out", "out/" + name);

  if (cfg.seeds.empty()) throw std::invalid_argument("seed list is empty");
  if (cfg.arch.dims.size() < 2) throw std::invalid_argument("architecture needs >= 2 sizes");
  if (!(cfg.train.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (cfg.train.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (cfg.field_resolution < 5) throw std::invalid_argument("field resolution must be >= 5");
  return cfg;
}

// ---------------------------------------------------------------------------
// Reports

struct GateCheck {
  std::string name;
  double value = 0.0;
  std::string op;  // ">=", "<=", ">", "<"
  double threshold = 0.0;
  bool pass = false;
};

struct SeedMetrics {
  uint64_t seed = 0;
  bool completed = true;
  std::string error;
  std::map<std::string, double> metrics;
};

struct ExperimentReport {
  std::string name;
  std::string config_hash;
  std::string code_version = kCodeVersion;
  std::vector<SeedMetrics> per_seed;
  std::map<std::string, std::pair<double, double>> aggregate;  // mean, stddev
  std::vector<GateCheck> gates;
  bool all_pass = false;
  std::vector<std::string> artifacts;
};

inline GateCheck make_gate(const std::string& name, double value, const std::string& op,
                           double threshold) {
  GateCheck g{name, value, op, threshold, false};
  if (std::isfinite(value)) {
    if (op == ">=") g.pass = value >= threshold;
    else if (op == "<=") g.pass = value <= threshold;
    else if (op == ">") g.pass = value > threshold;
    else if (op == "<") g.pass = value < threshold;
    else throw std::invalid_argument("unknown gate op '" + op + "'");
  }
  return g;
}

namespace expdetail {

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

// Reductions over completed seeds; NaN when the metric never appeared.
inline std::vector<double> metric_values(const ExperimentReport& r, const std::string& key) {
  std::vector<double> out;
  for (const SeedMetrics& s : r.per_seed) {
    if (!s.completed) continue;
    auto it = s.metrics.find(key);
    if (it != s.metrics.end()) out.push_back(it->second);
  }
  return out;
}

inline double metric_mean(const ExperimentReport& r, const std::string& key) {
  const std::vector<double> v = metric_values(r, key);
  if (v.empty()) return nan();
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / v.size();
}

inline double metric_min(const ExperimentReport& r, const std::string& key) {
  const std::vector<double> v = metric_values(r, key);
  if (v.empty()) return nan();
  return *std::min_element(v.begin(), v.end());
}

inline double metric_max(const ExperimentReport& r, const std::string& key) {
  const std::vector<double> v = metric_values(r, key);
  if (v.empty()) return nan();
  return *std::max_element(v.begin(), v.end());
}

}  // namespace expdetail

// Aggregates (population stddev) over completed seeds only.
inline void aggregate_metrics(ExperimentReport& r) {
  std::map<std::string, std::vector<double>> all;
  for (const SeedMetrics& s : r.per_seed) {
    if (!s.completed) continue;
    for (const auto& [k, v] : s.metrics) all[k].push_back(v);
  }
  for (const auto& [k, vals] : all) {
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= vals.size();
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= vals.size();
    r.aggregate[k] = {mean, std::sqrt(std::max(0.0, var))};
  }
}

inline void finish_report(ExperimentReport& r, const ExperimentConfig& cfg) {
  aggregate_metrics(r);
  int completed = 0;
  for (const SeedMetrics& s : r.per_seed) completed += s.completed ? 1 : 0;
  r.gates.push_back(make_gate("all_seeds_completed", completed, ">=",
                              static_cast<double>(cfg.seeds.size())));
  r.all_pass = true;
  for (const GateCheck& g : r.gates) r.all_pass = r.all_pass && g.pass;
  r.config_hash = cfg.view.effective.hash();
}

inline nlohmann::ordered_json report_json(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["code_version"] = r.code_version;
  j["config_hash"] = r.config_hash;
  nlohmann::ordered_json per_seed = nlohmann::ordered_json::array();
  for (const SeedMetrics& s : r.per_seed) {
    nlohmann::ordered_json js;
    js["seed"] = s.seed;
    js["completed"] = s.completed;
    if (!s.error.empty()) js["error"] = s.error;
    nlohmann::ordered_json jm;
    for (const auto& [k, v] : s.metrics) jm[k] = v;
    js["metrics"] = std::move(jm);
    per_seed.push_back(std::move(js));
  }
  j["per_seed"] = std::move(per_seed);
  nlohmann::ordered_json agg;
  for (const auto& [k, mv] : r.aggregate) {
    nlohmann::ordered_json ja;
    ja["mean"] = mv.first;
    ja["stddev"] = mv.second;
    agg[k] = std::move(ja);
  }
  j["aggregate"] = std::move(agg);
  nlohmann::ordered_json gates = nlohmann::ordered_json::array();
  for (const GateCheck& g : r.gates) {
    nlohmann::ordered_json jg;
    jg["name"] = g.name;
    jg["value"] = g.value;
    jg["op"] = g.op;
    jg["threshold"] = g.threshold;
    jg["pass"] = g.pass;
    gates.push_back(std::move(jg));
  }
  j["gates"] = std::move(gates);
  j["all_pass"] = r.all_pass;
  j["artifacts"] = r.artifacts;
  return j;
}

inline void write_report(const ExperimentReport& r, const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  write_text(cfg.out_dir / "report.json", report_json(r).dump(2) + "\n");
  write_text(cfg.out_dir / "config.cfg", cfg.view.effective.canonical());
}

// Relative-path recorder; everything a runner writes goes through here so the
// report can list it.
struct ArtifactSink {
  std::filesystem::path root;
  std::vector<std::string>* names = nullptr;

  std::filesystem::path operator()(const std::string& rel) const {
    names->push_back(rel);
    return root / rel;
  }
};

// ---------------------------------------------------------------------------
// Statistics and field summaries

namespace expdetail {

inline double pearson(const Vec& a, const Vec& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson needs two equal vectors");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) throw std::domain_error("pearson of a constant vector");
  return sab / std::sqrt(saa * sbb);
}

// Average ranks, ties share the mean rank.
inline Vec ranks(const Vec& v) {
  std::vector<size_t> idx(v.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](size_t x, size_t y) { return v[x] < v[y]; });
  Vec r(v.size(), 0.0);
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double shared = 0.5 * (i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) r[idx[k]] = shared;
    i = j + 1;
  }
  return r;
}

inline double spearman(const Vec& a, const Vec& b) { return pearson(ranks(a), ranks(b)); }

inline double wrapped_dist(double a, double b) { return std::abs(wrap_to_pi(a - b)); }

inline Vec trace_of(const MetricField& f) {
  Vec t(f.g11.size());
  for (size_t i = 0; i < t.size(); ++i) t[i] = f.g11[i] + f.g22[i];
  return t;
}

// mean |cos-input columns| over mean |sin-input columns| of the first layer.
inline double cos_over_sin(const Mat& w) {
  if (w.cols != 4) throw std::invalid_argument("expects the 4-dim torus embedding");
  double cos_sum = 0.0, sin_sum = 0.0;
  for (int r = 0; r < w.rows; ++r) {
    cos_sum += std::abs(w(r, 0)) + std::abs(w(r, 2));
    sin_sum += std::abs(w(r, 1)) + std::abs(w(r, 3));
  }
  if (sin_sum == 0.0) throw std::domain_error("first layer reads no sin inputs");
  return cos_sum / sin_sum;
}

// Mean metric trace within `band` of a class boundary line (either angle)
// over the mean outside.
inline double boundary_trace_ratio(const MetricField& f, double alpha, double band) {
  const Vec t = trace_of(f);
  double in_sum = 0.0, out_sum = 0.0;
  int in_n = 0, out_n = 0;
  for (size_t i = 0; i < t.size(); ++i) {
    const AnglePoint& p = f.grid.points[i];
    const double d1 = std::min(wrapped_dist(p.theta1, alpha), wrapped_dist(p.theta1, alpha + kPi));
    const double d2 = std::min(wrapped_dist(p.theta2, alpha), wrapped_dist(p.theta2, alpha + kPi));
    if (std::min(d1, d2) <= band) {
      in_sum += t[i];
      ++in_n;
    } else {
      out_sum += t[i];
      ++out_n;
    }
  }
  if (in_n == 0 || out_n == 0) throw std::domain_error("degenerate boundary band");
  return (in_sum / in_n) / (out_sum / out_n);
}

// Fraction of the top-|K| quantile cells lying within `radius` (per axis,
// wrapped) of a class-center point.
inline double top_center_fraction(const CurvatureField& f, double alpha, double quantile,
                                  double radius) {
  std::vector<std::pair<double, size_t>> cells;
  for (size_t i = 0; i < f.k.size(); ++i)
    if (f.valid[i]) cells.push_back({std::abs(f.k[i]), i});
  if (cells.empty()) throw std::domain_error("curvature field is fully masked");
  std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  const size_t take = std::max<size_t>(1, static_cast<size_t>(quantile * cells.size()));
  int near = 0;
  for (size_t c = 0; c < take; ++c) {
    const AnglePoint& p = f.grid.points[cells[c].second];
    const double d1 = std::min(wrapped_dist(p.theta1, alpha + 0.5 * kPi),
                               wrapped_dist(p.theta1, alpha + 1.5 * kPi));
    const double d2 = std::min(wrapped_dist(p.theta2, alpha + 0.5 * kPi),
                               wrapped_dist(p.theta2, alpha + 1.5 * kPi));
    if (std::max(d1, d2) <= radius) ++near;
  }
  return static_cast<double>(near) / take;
}

inline double top_quantile_mean_abs_k(const CurvatureField& f, double quantile) {
  Vec mags;
  for (size_t i = 0; i < f.k.size(); ++i)
    if (f.valid[i]) mags.push_back(std::abs(f.k[i]));
  if (mags.empty()) throw std::domain_error("curvature field is fully masked");
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  const size_t take = std::max<size_t>(1, static_cast<size_t>(quantile * mags.size()));
  double sum = 0.0;
  for (size_t i = 0; i < take; ++i) sum += mags[i];
  return sum / take;
}

// Norm-weighted |cosine| between each unit's per-pair weight direction and
// the rotated latent direction (-sin a, cos a).
inline double pair_alignment(const Mat& w, double alpha) {
  if (w.cols != 4) throw std::invalid_argument("expects the 4-dim torus embedding");
  const double tx = -std::sin(alpha), ty = std::cos(alpha);
  double weighted = 0.0, total = 0.0;
  for (int r = 0; r < w.rows; ++r) {
    for (int pair = 0; pair < 2; ++pair) {
      const double vx = w(r, 2 * pair), vy = w(r, 2 * pair + 1);
      const double norm2 = vx * vx + vy * vy;
      if (norm2 <= 0.0) continue;
      weighted += norm2 * std::abs(vx * tx + vy * ty) / std::sqrt(norm2);
      total += norm2;
    }
  }
  if (total <= 0.0) throw std::domain_error("first layer is all zero");
  return weighted / total;
}

// Grid row index whose theta2 is closest to the requested value.
inline int slice_row(const AngleGrid& grid, double theta2) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int j = 0; j < grid.resolution; ++j) {
    const double d = wrapped_dist(grid.points[grid.index(0, j)].theta2, theta2);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

inline Vec slice_values(const Vec& field, const AngleGrid& grid, int j) {
  Vec out(grid.resolution);
  for (int i = 0; i < grid.resolution; ++i) out[i] = field[grid.index(i, j)];
  return out;
}

// Sign changes of the periodic central-difference derivative around one
// cycle, seam included. Derivatives below floor_frac * max|d| count as zero
// so plateau jitter is not oscillation.
inline int derivative_sign_changes(const Vec& values, double floor_frac) {
  const int n = static_cast<int>(values.size());
  Vec d(n);
  double dmax = 0.0;
  for (int i = 0; i < n; ++i) {
    d[i] = values[(i + 1) % n] - values[(i - 1 + n) % n];
    dmax = std::max(dmax, std::abs(d[i]));
  }
  if (dmax == 0.0) return 0;
  std::vector<int> signs;
  for (int i = 0; i < n; ++i) {
    const int s = d[i] > floor_frac * dmax ? 1 : d[i] < -floor_frac * dmax ? -1 : 0;
    if (s != 0) signs.push_back(s);
  }
  if (signs.size() < 2) return 0;
  int changes = 0;
  for (size_t i = 0; i < signs.size(); ++i)
    if (signs[i] != signs[(i + 1) % signs.size()]) ++changes;
  return changes;
}

// Post-activations of the last hidden layer over a grid, one row per point.
inline Mat hidden_activations(const Mlp& net, const AngleGrid& grid, const Mat* projection) {
  const int layer = static_cast<int>(net.layers.size()) - 2;
  if (layer < 0) throw std::invalid_argument("net has no hidden layer");
  Mat acts(grid.size(), net.layers[layer].w.rows);
  for (int p = 0; p < grid.size(); ++p) {
    Vec x = embed_point(grid.points[p], grid.domain, grid.box);
    if (projection) x = embed_highdim(x, *projection);
    const ForwardPass fp = forward(net, x);
    for (int c = 0; c < acts.cols; ++c) acts(p, c) = fp.acts[layer + 1][c];
  }
  return acts;
}

// Accuracy under test-time noise: tangent noise on the angles, isotropic
// noise on the embedded state, or both. Labels stay clean.
inline double noisy_accuracy(const Mlp& net, const TaskSpec& spec, const AngleGrid& grid,
                             const Mat* projection, double sigma_task, double sigma_emb,
                             int repeats, RngState& rng) {
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  long correct = 0, total = 0;
  for (int rep = 0; rep < repeats; ++rep) {
    for (const AnglePoint& p : grid.points) {
      const AnglePoint pt = sigma_task > 0.0 ? add_tangent_noise(p, sigma_task, rng) : p;
      Vec x = embed_point(pt, spec.domain, grid.box);
      if (projection) x = embed_highdim(x, *projection);
      if (sigma_emb > 0.0)
        for (double& xi : x) xi += sigma_emb * rng.gauss();
      const double out = forward(net, x).output;
      if ((out > 0.5) == (label(spec, p) > 0)) ++correct;
      ++total;
    }
  }
  return static_cast<double>(correct) / total;
}

inline AngleGrid field_grid(const ExperimentConfig& cfg, Domain domain) {
  return domain == Domain::torus ? make_torus_grid(cfg.field_resolution)
                                 : make_plane_grid(cfg.field_resolution, cfg.train.plane_box);
}

inline int last_hidden_index(const Mlp& net) { return static_cast<int>(net.layers.size()) - 2; }

inline std::string seed_dir(uint64_t seed) { return "seed_" + std::to_string(seed); }

}  // namespace expdetail

// ---------------------------------------------------------------------------
// Runners

// Trains the gate tasks on both domains, exports weights, metric and
// curvature fields, and checks the geometry signatures on the torus-XOR run.
inline ExperimentReport run_fig1(const ExperimentConfig& cfg) {
  namespace ed = expdetail;
  ExperimentReport report;
  report.name = cfg.name;
  ArtifactSink art{cfg.out_dir, &report.artifacts};

  const double band = cfg.view.num("fig1.band", kPi / 8);
  const double center_radius = cfg.view.num("fig1.center_radius", kPi / 4);
  const double top_q = cfg.view.num("fig1.top_quantile", 0.05);
  const double alpha_rot = cfg.view.num("fig1.alpha_rotated", kPi / 4);
  const int plane_epochs = cfg.view.integer("fig1.plane_epochs", cfg.train.epochs);

  struct TaskRun {
    std::string tag;
    Gate gate;
    Domain domain;
    double alpha;
  };
  const std::vector<TaskRun> tasks = {
      {"xor_torus", Gate::XOR, Domain::torus, cfg.task.alpha},
      {"and_torus", Gate::AND, Domain::torus, cfg.task.alpha},
      {"or_torus", Gate::OR, Domain::torus, cfg.task.alpha},
      {"and_plane", Gate::AND, Domain::plane, cfg.task.alpha},
      {"or_plane", Gate::OR, Domain::plane, cfg.task.alpha},
      {"xor_torus_rot", Gate::XOR, Domain::torus, alpha_rot},
  };

  for (uint64_t seed : cfg.seeds) {
    SeedMetrics sm;
    sm.seed = seed;
    try {
      for (const TaskRun& t : tasks) {
        const TaskSpec spec(t.gate, t.alpha, t.domain);
        TrainConfig tc = cfg.train;
        tc.seed = seed + kTrainSeedOffset;
        Arch arch = cfg.arch;
        arch.dims[0] = t.domain == Domain::plane ? 2 : 4;  // embedding width
        if (t.domain == Domain::plane) tc.epochs = plane_epochs;
        auto [net, record] = train(init(arch, cfg.init_sigma, seed), spec, tc);

        const std::string dir = t.tag + "/" + ed::seed_dir(seed);
        const AngleGrid fgrid = ed::field_grid(cfg, t.domain);
        const MetricField hidden = pullback_metric(net, ed::last_hidden_index(net), fgrid);
        const CurvatureField curv = gaussian_curvature(hidden, cfg.det_floor);
        const Vec trace = ed::trace_of(hidden);

        write_matrix_csv(art(dir + "/w1.csv"), net.layers[0].w);
        write_train_record(cfg.out_dir / dir, record);
        report.artifacts.push_back(dir + "/record.json");
        write_metric_csv(art(dir + "/metric_hidden.csv"), hidden);
        write_metric_csv(art(dir + "/metric_output.csv"), output_metric(net, fgrid));
        write_grid_csv(art(dir + "/trace.csv"), fgrid, {{"trace", &trace}});
        write_curvature_csv(art(dir + "/curvature.csv"), curv);

        sm.metrics[t.tag + "_accuracy"] = record.snapshots.back().train_accuracy;
        if (t.tag == "xor_torus") {
          sm.metrics["cos_over_sin"] = ed::cos_over_sin(net.layers[0].w);
          sm.metrics["trace_ratio"] = ed::boundary_trace_ratio(hidden, t.alpha, band);
          sm.metrics["center_fraction"] = ed::top_center_fraction(curv, t.alpha, top_q, center_radius);
        } else if (t.tag == "xor_torus_rot") {
          sm.metrics["alignment"] = ed::pair_alignment(net.layers[0].w, t.alpha);
        }
      }
    } catch (const TrainingDiverged& e) {
      sm.completed = false;
      sm.error = e.what();
    }
    report.per_seed.push_back(std::move(sm));
  }

  const double acc_min = cfg.threshold("accuracy_min", 0.99);
  for (const TaskRun& t : tasks)
    report.gates.push_back(
        make_gate(t.tag + "_accuracy", ed::metric_min(report, t.tag + "_accuracy"), ">=", acc_min));
  report.gates.push_back(make_gate("cos_over_sin", ed::metric_max(report, "cos_over_sin"), "<=",
                                   cfg.threshold("cos_over_sin_max", 0.1)));
  report.gates.push_back(make_gate("trace_ratio", ed::metric_min(report, "trace_ratio"), ">=",
                                   cfg.threshold("trace_ratio_min", 2.0)));
  report.gates.push_back(make_gate("center_fraction", ed::metric_min(report, "center_fraction"),
                                   ">=", cfg.threshold("center_fraction_min", 0.9)));
  report.gates.push_back(make_gate("alignment", ed::metric_min(report, "alignment"), ">=",
                                   cfg.threshold("alignment_min", 0.95)));
  finish_report(report, cfg);
  return report;
}

// One versus two hidden layers on the XOR task, plus an AND reference: the
// deep net's first layer should show the same per-angle discretisation
// pattern, the shallow net's metric should oscillate across boundaries.
inline ExperimentReport run_depth_comparison(const ExperimentConfig& cfg) {
  namespace ed = expdetail;
  ExperimentReport report;
  report.name = cfg.name;
  ArtifactSink art{cfg.out_dir, &report.artifacts};

  Arch one = cfg.arch, two = cfg.arch, ref = cfg.arch;
  one.dims = cfg.view.int_list("depth.one_layer_dims", {4, 16, 1});
  two.dims = cfg.view.int_list("depth.two_layer_dims", {4, 4, 4, 1});
  ref.dims = two.dims;
  const double slice_theta2 = cfg.view.num("depth.slice_theta2", kPi / 4);
  const double deriv_floor = cfg.view.num("depth.derivative_floor", 0.05);

  for (uint64_t seed : cfg.seeds) {
    SeedMetrics sm;
    sm.seed = seed;
    try {
      TrainConfig tc = cfg.train;
      tc.seed = seed + kTrainSeedOffset;
      const TaskSpec xor_spec(Gate::XOR, cfg.task.alpha, cfg.task.domain);
      const TaskSpec and_spec(Gate::AND, cfg.task.alpha, cfg.task.domain);
      auto [net1, rec1] = train(init(one, cfg.init_sigma, seed), xor_spec, tc);
      auto [net2, rec2] = train(init(two, cfg.init_sigma, seed), xor_spec, tc);
      auto [netr, recr] = train(init(ref, cfg.init_sigma, seed), and_spec, tc);

      const AngleGrid fgrid = ed::field_grid(cfg, cfg.task.domain);
      const MetricField h1 = pullback_metric(net1, ed::last_hidden_index(net1), fgrid);
      const MetricField h2 = pullback_metric(net2, ed::last_hidden_index(net2), fgrid);
      const MetricField first2 = pullback_metric(net2, 0, fgrid);
      const MetricField firstr = pullback_metric(netr, 0, fgrid);

      const std::string dir = ed::seed_dir(seed);
      const Vec t1 = ed::trace_of(h1), t2 = ed::trace_of(h2);
      const Vec tf2 = ed::trace_of(first2), tfr = ed::trace_of(firstr);
      write_metric_csv(art(dir + "/metric_one_layer.csv"), h1);
      write_metric_csv(art(dir + "/metric_two_layer.csv"), h2);
      write_metric_csv(art(dir + "/metric_output_one.csv"), output_metric(net1, fgrid));
      write_metric_csv(art(dir + "/metric_output_two.csv"), output_metric(net2, fgrid));
      write_grid_csv(art(dir + "/trace_first_two_layer.csv"), fgrid, {{"trace", &tf2}});
      write_grid_csv(art(dir + "/trace_first_and_ref.csv"), fgrid, {{"trace", &tfr}});

      const int j = ed::slice_row(fgrid, slice_theta2);
      sm.metrics["acc_one_layer"] = rec1.snapshots.back().train_accuracy;
      sm.metrics["acc_two_layer"] = rec2.snapshots.back().train_accuracy;
      sm.metrics["acc_and_ref"] = recr.snapshots.back().train_accuracy;
      sm.metrics["pearson_first_hidden"] = ed::pearson(tf2, tfr);
      sm.metrics["osc_one_layer"] =
          ed::derivative_sign_changes(ed::slice_values(t1, fgrid, j), deriv_floor);
      sm.metrics["osc_two_layer"] =
          ed::derivative_sign_changes(ed::slice_values(t2, fgrid, j), deriv_floor);
      sm.metrics["osc_margin"] = sm.metrics["osc_one_layer"] - sm.metrics["osc_two_layer"];
    } catch (const TrainingDiverged& e) {
      sm.completed = false;
      sm.error = e.what();
    }
    report.per_seed.push_back(std::move(sm));
  }

  const double acc_min = cfg.threshold("accuracy_min", 0.99);
  report.gates.push_back(
      make_gate("acc_one_layer", expdetail::metric_min(report, "acc_one_layer"), ">=", acc_min));
  report.gates.push_back(
      make_gate("acc_two_layer", expdetail::metric_min(report, "acc_two_layer"), ">=", acc_min));
  report.gates.push_back(make_gate("pearson_first_hidden",
                                   expdetail::metric_min(report, "pearson_first_hidden"), ">=",
                                   cfg.threshold("pearson_min", 0.5)));
  report.gates.push_back(make_gate("osc_margin", expdetail::metric_min(report, "osc_margin"), ">=",
                                   cfg.threshold("oscillation_margin_min", 1.0)));
  finish_report(report, cfg);
  return report;
}

// Rich versus lazy initialization on held-out XOR: generalisation, effective
// dimensionality over training, and curvature concentration.
inline ExperimentReport run_richlazy(const ExperimentConfig& cfg) {
  namespace ed = expdetail;
  ExperimentReport report;
  report.name = cfg.name;
  ArtifactSink art{cfg.out_dir, &report.artifacts};

  if (cfg.arch.dims.size() < 3 || cfg.arch.dims[1] < 32)
    throw std::invalid_argument("rich/lazy comparison needs hidden width >= 32");
  if (!cfg.train.holdout) throw std::invalid_argument("rich/lazy comparison needs a holdout box");

  const double rich_scale = cfg.view.num("richlazy.rich_scale", 0.05);
  const double lazy_scale = cfg.view.num("richlazy.lazy_scale", 2.0);
  const double top_q = cfg.view.num("richlazy.top_quantile", 0.05);
  const double sqrt_in = std::sqrt(static_cast<double>(cfg.arch.dims[0]));
  const std::vector<std::pair<std::string, double>> regimes = {
      {"rich", rich_scale / sqrt_in}, {"lazy", lazy_scale / sqrt_in}};

  const AngleGrid fgrid = ed::field_grid(cfg, cfg.task.domain);
  const AngleGrid pr_grid = make_torus_grid(cfg.train.grid_resolution);

  // pr_history[regime][seed] aligned with the snapshot schedule
  std::map<std::string, std::vector<Vec>> pr_history;
  std::vector<int> snapshot_epochs;

  for (uint64_t seed : cfg.seeds) {
    SeedMetrics sm;
    sm.seed = seed;
    try {
      for (const auto& [regime, sigma] : regimes) {
        TrainConfig tc = cfg.train;
        tc.seed = seed + kTrainSeedOffset;
        auto [net, record] = train(init(cfg.arch, sigma, seed), cfg.task, tc);

        const std::string dir = regime + "/" + ed::seed_dir(seed);
        write_matrix_csv(art(dir + "/gram.csv"),
                         matmul(transpose(net.layers[0].w), net.layers[0].w));
        write_train_record(cfg.out_dir / dir, record);
        report.artifacts.push_back(dir + "/record.json");

        const MetricField hidden = pullback_metric(net, ed::last_hidden_index(net), fgrid);
        const CurvatureField curv = gaussian_curvature(hidden, cfg.det_floor);
        write_curvature_csv(art(dir + "/curvature.csv"), curv);
        Vec output(fgrid.size());
        for (int p = 0; p < fgrid.size(); ++p)
          output[p] = forward(net, embed_point(fgrid.points[p], cfg.task.domain, fgrid.box)).output;
        write_grid_csv(art(dir + "/output.csv"), fgrid, {{"output", &output}});

        Vec pr_curve;
        for (const TrainSnapshot& s : record.snapshots)
          pr_curve.push_back(participation_ratio(ed::hidden_activations(s.weights, pr_grid, nullptr)));
        if (snapshot_epochs.empty())
          for (const TrainSnapshot& s : record.snapshots) snapshot_epochs.push_back(s.epoch);
        pr_history[regime].push_back(pr_curve);

        const TrainSnapshot& last = record.snapshots.back();
        sm.metrics[regime + "_train_acc"] = last.train_accuracy;
        sm.metrics[regime + "_holdout_acc"] = last.holdout_accuracy;
        sm.metrics[regime + "_pr_final"] = pr_curve.back();
        sm.metrics[regime + "_top_k"] = ed::top_quantile_mean_abs_k(curv, top_q);
      }
      sm.metrics["holdout_gap"] = sm.metrics["rich_holdout_acc"] - sm.metrics["lazy_holdout_acc"];
      sm.metrics["pr_gap"] = sm.metrics["lazy_pr_final"] - sm.metrics["rich_pr_final"];
    } catch (const TrainingDiverged& e) {
      sm.completed = false;
      sm.error = e.what();
    }
    report.per_seed.push_back(std::move(sm));
  }

  // Mean +- stddev PR trajectories over seeds, one matched row per snapshot.
  if (!snapshot_epochs.empty()) {
    std::ostringstream csv;
    csv << "epoch,rich_mean,rich_std,lazy_mean,lazy_std\n";
    for (size_t s = 0; s < snapshot_epochs.size(); ++s) {
      csv << snapshot_epochs[s];
      for (const auto& [regime, sigma] : regimes) {
        (void)sigma;
        const std::vector<Vec>& curves = pr_history[regime];
        double mean = 0.0;
        int n = 0;
        for (const Vec& c : curves)
          if (s < c.size()) {
            mean += c[s];
            ++n;
          }
        mean = n ? mean / n : std::numeric_limits<double>::quiet_NaN();
        double var = 0.0;
        for (const Vec& c : curves)
          if (s < c.size()) var += (c[s] - mean) * (c[s] - mean);
        var = n ? var / n : 0.0;
        csv << ',' << format_g9(mean) << ',' << format_g9(std::sqrt(std::max(0.0, var)));
      }
      csv << '\n';
    }
    write_text(art("pr_curves.csv"), csv.str());
  }

  report.gates.push_back(make_gate("rich_holdout", ed::metric_mean(report, "rich_holdout_acc"),
                                   ">=", cfg.threshold("rich_holdout_min", 0.9)));
  report.gates.push_back(make_gate("holdout_gap", ed::metric_mean(report, "holdout_gap"), ">=",
                                   cfg.threshold("holdout_gap_min", 0.2)));
  report.gates.push_back(make_gate("pr_gap_all_seeds", ed::metric_min(report, "pr_gap"), ">",
                                   cfg.threshold("pr_gap_min", 0.0)));
  report.gates.push_back(make_gate(
      "top_k_gap",
      ed::metric_mean(report, "rich_top_k") - ed::metric_mean(report, "lazy_top_k"), ">",
      cfg.threshold("top_k_gap_min", 0.0)));
  finish_report(report, cfg);
  return report;
}

// Tangent-noise sweep: curvature flattens with noise and the trained output
// slice approaches the analytic posterior.
inline ExperimentReport run_noise_sweep(const ExperimentConfig& cfg) {
  namespace ed = expdetail;
  ExperimentReport report;
  report.name = cfg.name;
  ArtifactSink art{cfg.out_dir, &report.artifacts};

  if (cfg.noise_sigmas.empty()) throw std::invalid_argument("noise sweep needs sweep.noise_sigmas");
  const double slice_sigma = cfg.view.num("noise.slice_sigma", 0.5);
  const int slice_epochs = cfg.view.integer("noise.slice_epochs", cfg.train.epochs);
  const double slice_lr = cfg.view.num("noise.slice_learning_rate", cfg.train.learning_rate);
  const double slice_offset = cfg.view.num("noise.slice_theta2_offset", kPi / 2);
  const double trace_slice_theta2 = cfg.view.num("noise.trace_slice_theta2", kPi / 4);
  const int curve_bins = cfg.view.integer("noise.curve_bins", 64);
  const int mc_samples = cfg.view.integer("noise.mc_samples", 200000);
  const int k_max = cfg.view.integer("noise.k_max", 3);
  const double peak_tol = cfg.view.num("noise.peak_tolerance", 0.02);

  const AngleGrid fgrid = ed::field_grid(cfg, cfg.task.domain);
  const int jslice = ed::slice_row(fgrid, trace_slice_theta2);

  // One Monte-Carlo reference for the slice comparison, shared across seeds.
  RngState mc_rng(cfg.seeds.front() * 2654435761u + 17);
  const McPosterior mc = mc_posterior(slice_sigma, mc_samples, curve_bins, k_max, mc_rng);
  Vec analytic(mc.c_centers.size());
  for (size_t i = 0; i < analytic.size(); ++i) analytic[i] = posterior(mc.c_centers[i], slice_sigma, k_max);

  for (uint64_t seed : cfg.seeds) {
    SeedMetrics sm;
    sm.seed = seed;
    try {
      for (size_t si = 0; si < cfg.noise_sigmas.size(); ++si) {
        TrainConfig tc = cfg.train;
        tc.seed = seed + kTrainSeedOffset;
        tc.noise_sigma = cfg.noise_sigmas[si];
        auto [net, record] = train(init(cfg.arch, cfg.init_sigma, seed), cfg.task, tc);

        const MetricField hidden = pullback_metric(net, ed::last_hidden_index(net), fgrid);
        const CurvatureField curv = gaussian_curvature(hidden, cfg.det_floor);
        const Vec trace = ed::trace_of(hidden);
        const std::string dir = "sigma_" + std::to_string(si) + "/" + ed::seed_dir(seed);
        write_curvature_csv(art(dir + "/curvature.csv"), curv);
        write_grid_csv(art(dir + "/trace.csv"), fgrid, {{"trace", &trace}});

        const Vec slice = ed::slice_values(trace, fgrid, jslice);
        std::ostringstream csv;
        csv << "theta1,trace\n";
        for (int i = 0; i < fgrid.resolution; ++i)
          csv << format_g9(fgrid.points[fgrid.index(i, jslice)].theta1) << ','
              << format_g9(slice[i]) << '\n';
        write_text(art(dir + "/trace_slice.csv"), csv.str());

        double abs_sum = 0.0;
        int abs_n = 0;
        for (size_t i = 0; i < curv.k.size(); ++i)
          if (curv.valid[i]) {
            abs_sum += std::abs(curv.k[i]);
            ++abs_n;
          }
        const std::string tag = "s" + std::to_string(si);
        sm.metrics["mean_abs_k_" + tag] = abs_sum / std::max(1, abs_n);
        sm.metrics["peak_" + tag] = *std::max_element(slice.begin(), slice.end());
        sm.metrics["accuracy_" + tag] = record.snapshots.back().train_accuracy;
      }

      // dedicated run at the posterior-comparison noise level
      TrainConfig tc = cfg.train;
      tc.seed = seed + kTrainSeedOffset;
      tc.noise_sigma = slice_sigma;
      tc.epochs = slice_epochs;
      tc.learning_rate = slice_lr;
      auto [net, record] = train(init(cfg.arch, cfg.init_sigma, seed), cfg.task, tc);
      const SliceCurve slice = network_posterior_slice(
          net, cfg.task, cfg.task.alpha + slice_offset, mc.c_centers);
      double mse = 0.0;
      for (size_t i = 0; i < slice.values.size(); ++i) {
        const double d = slice.values[i] - analytic[i];
        mse += d * d;
      }
      mse /= slice.values.size();
      sm.metrics["slice_mse"] = mse;
      write_curve_csv(art("slice/" + ed::seed_dir(seed) + "/curve.csv"), mc.c_centers, analytic,
                      mc.freq, slice.values);
    } catch (const TrainingDiverged& e) {
      sm.completed = false;
      sm.error = e.what();
    }
    report.per_seed.push_back(std::move(sm));
  }

  // seed-mean curvature magnitude and slice peak per noise level
  aggregate_metrics(report);
  Vec sigmas, mean_k, peaks;
  {
    std::ostringstream csv;
    csv << "sigma,mean_abs_k,mean_abs_k_std,peak,peak_std\n";
    for (size_t si = 0; si < cfg.noise_sigmas.size(); ++si) {
      const std::string tag = "s" + std::to_string(si);
      sigmas.push_back(cfg.noise_sigmas[si]);
      mean_k.push_back(ed::metric_mean(report, "mean_abs_k_" + tag));
      peaks.push_back(ed::metric_mean(report, "peak_" + tag));
      const auto mk = report.aggregate.find("mean_abs_k_" + tag);
      const auto pk = report.aggregate.find("peak_" + tag);
      csv << format_g9(cfg.noise_sigmas[si]) << ',' << format_g9(mean_k.back()) << ','
          << format_g9(mk == report.aggregate.end() ? 0.0 : mk->second.second) << ','
          << format_g9(peaks.back()) << ','
          << format_g9(pk == report.aggregate.end() ? 0.0 : pk->second.second) << '\n';
    }
    write_text(art("curvature_vs_sigma.csv"), csv.str());
  }

  double spearman_value = std::numeric_limits<double>::quiet_NaN();
  if (sigmas.size() >= 2) spearman_value = ed::spearman(sigmas, mean_k);
  int inversions = 0;
  for (size_t i = 0; i + 1 < peaks.size(); ++i)
    if (peaks[i + 1] > peaks[i] * (1.0 + peak_tol)) ++inversions;

  report.gates.push_back(
      make_gate("spearman_sigma_k", spearman_value, "<=", cfg.threshold("spearman_max", -0.8)));
  report.gates.push_back(make_gate("peak_inversions", inversions, "<=",
                                   cfg.threshold("peak_inversions_max", 0.0)));
  report.gates.push_back(make_gate("slice_mse", ed::metric_mean(report, "slice_mse"), "<=",
                                   cfg.threshold("slice_mse_max", 0.01)));
  finish_report(report, cfg);
  return report;
}

// Rich/lazy robustness to test-time noise across embedding dimensions.
inline ExperimentReport run_robustness(const ExperimentConfig& cfg) {
  namespace ed = expdetail;
  ExperimentReport report;
  report.name = cfg.name;
  ArtifactSink art{cfg.out_dir, &report.artifacts};

  if (cfg.embed_dims.empty()) throw std::invalid_argument("robustness needs sweep.embed_dims");
  const int width = cfg.view.integer("robustness.width", 64);
  const double rich_scale = cfg.view.num("robustness.rich_scale", 0.05);
  const double lazy_scale = cfg.view.num("robustness.lazy_scale", 2.0);
  const std::vector<double> test_sigmas =
      cfg.view.list("robustness.test_sigmas", {0.0, 0.1, 0.2, 0.3, 0.5});
  const int repeats = cfg.view.integer("robustness.repeats", 3);
  if (test_sigmas.empty() || test_sigmas.front() != 0.0)
    throw std::invalid_argument("robustness.test_sigmas must start at 0");

  const AngleGrid grid = make_torus_grid(cfg.train.grid_resolution);

  // One embedding per dimension, shared by both regimes and all seeds, so
  // noise comparisons see the same geometry.
  std::map<int, Mat> embeddings;
  for (int d : cfg.embed_dims) {
    if (d < 4) throw std::invalid_argument("embedding dimension must be >= 4");
    RngState qrng(9000 + static_cast<uint64_t>(d));
    embeddings.emplace(d, random_orthonormal_columns(qrng, d, 4));
  }

  const std::vector<std::pair<std::string, double>> regimes = {{"rich", rich_scale},
                                                               {"lazy", lazy_scale}};

  for (uint64_t seed : cfg.seeds) {
    SeedMetrics sm;
    sm.seed = seed;
    try {
      for (int d : cfg.embed_dims) {
        const Mat& q = embeddings.at(d);
        for (const auto& [regime, scale] : regimes) {
          Arch arch = cfg.arch;
          arch.dims = {d, width, 1};
          const double sigma = scale / std::sqrt(static_cast<double>(d));
          TrainConfig tc = cfg.train;
          tc.seed = seed + kTrainSeedOffset;
          tc.projection = q;
          auto [net, record] = train(init(arch, sigma, seed), cfg.task, tc);

          const std::string base = regime + "_d" + std::to_string(d);
          sm.metrics[base + "_clean"] = grid_accuracy(net, cfg.task, grid, &q);
          for (size_t si = 0; si < test_sigmas.size(); ++si) {
            RngState emb_rng(seed * 7919 + d * 131 + si * 17 + (regime == "rich" ? 1 : 2));
            RngState task_rng(seed * 104729 + d * 137 + si * 19 + (regime == "rich" ? 3 : 4));
            sm.metrics[base + "_emb_s" + std::to_string(si)] = ed::noisy_accuracy(
                net, cfg.task, grid, &q, 0.0, test_sigmas[si], repeats, emb_rng);
            sm.metrics[base + "_task_s" + std::to_string(si)] = ed::noisy_accuracy(
                net, cfg.task, grid, &q, test_sigmas[si], 0.0, repeats, task_rng);
          }
        }
        // per-dimension rich-lazy gap under embedding noise, averaged over
        // the nonzero test levels
        double gap = 0.0;
        int n = 0;
        for (size_t si = 1; si < test_sigmas.size(); ++si) {
          gap += sm.metrics["rich_d" + std::to_string(d) + "_emb_s" + std::to_string(si)] -
                 sm.metrics["lazy_d" + std::to_string(d) + "_emb_s" + std::to_string(si)];
          ++n;
        }
        sm.metrics["gap_d" + std::to_string(d)] = gap / n;
      }
      // task-variable noise must not separate the regimes, at any dimension
      double task_gap = 0.0;
      double zero_mismatch = 0.0;
      for (int d : cfg.embed_dims)
        for (size_t si = 0; si < test_sigmas.size(); ++si) {
          const std::string ds = std::to_string(d), ss = std::to_string(si);
          task_gap = std::max(task_gap, std::abs(sm.metrics["rich_d" + ds + "_task_s" + ss] -
                                                 sm.metrics["lazy_d" + ds + "_task_s" + ss]));
        }
      for (int d : cfg.embed_dims)
        for (const auto& [regime, scale] : regimes) {
          (void)scale;
          const std::string base = regime + "_d" + std::to_string(d);
          zero_mismatch = std::max(
              zero_mismatch, std::abs(sm.metrics[base + "_emb_s0"] - sm.metrics[base + "_clean"]));
          zero_mismatch = std::max(
              zero_mismatch, std::abs(sm.metrics[base + "_task_s0"] - sm.metrics[base + "_clean"]));
        }
      sm.metrics["task_gap_max"] = task_gap;
      sm.metrics["zero_noise_mismatch"] = zero_mismatch;
      sm.metrics["gap_growth"] =
          sm.metrics["gap_d" + std::to_string(cfg.embed_dims.back())] -
          sm.metrics["gap_d" + std::to_string(cfg.embed_dims.front())];
    } catch (const TrainingDiverged& e) {
      sm.completed = false;
      sm.error = e.what();
    }
    report.per_seed.push_back(std::move(sm));
  }

  aggregate_metrics(report);
  for (const char* kind : {"emb", "task"}) {
    std::ostringstream csv;
    csv << "dim,regime,sigma,acc_mean,acc_std\n";
    for (int d : cfg.embed_dims)
      for (const auto& [regime, scale] : regimes) {
        (void)scale;
        for (size_t si = 0; si < test_sigmas.size(); ++si) {
          const std::string key =
              regime + "_d" + std::to_string(d) + "_" + kind + "_s" + std::to_string(si);
          const auto it = report.aggregate.find(key);
          const double mean = it == report.aggregate.end()
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : it->second.first;
          const double stddev = it == report.aggregate.end() ? 0.0 : it->second.second;
          csv << d << ',' << regime << ',' << format_g9(test_sigmas[si]) << ','
              << format_g9(mean) << ',' << format_g9(stddev) << '\n';
        }
      }
    write_text(art(std::string("robustness_") + kind + ".csv"), csv.str());
  }

  report.gates.push_back(make_gate("gap_growth", expdetail::metric_min(report, "gap_growth"), ">",
                                   cfg.threshold("gap_growth_min", 0.0)));
  report.gates.push_back(make_gate("task_gap", expdetail::metric_max(report, "task_gap_max"), "<=",
                                   cfg.threshold("task_gap_max", 0.05)));
  report.gates.push_back(make_gate("zero_noise_mismatch",
                                   expdetail::metric_max(report, "zero_noise_mismatch"), "<=",
                                   cfg.threshold("zero_noise_mismatch_max", 1e-12)));
  finish_report(report, cfg);
  return report;
}

// Linear AND dynamics against the closed-form mode trajectory, plus the tanh
// early phase.
inline ExperimentReport run_lindyn(const ExperimentConfig& cfg) {
  namespace ed = expdetail;
  ExperimentReport report;
  report.name = cfg.name;
  ArtifactSink art{cfg.out_dir, &report.artifacts};

  const ModeDecomposition md = analytic_correlations(cfg.task);
  if (cfg.arch.dims.size() != 3) throw std::invalid_argument("mode dynamics need one hidden layer");
  const int width = cfg.arch.dims[1];
  const int after_epoch = cfg.view.integer("lindyn.after_epoch", 5);
  const double u_frac = cfg.view.num("lindyn.tanh_u_fraction", 0.5);
  const double tau = 1.0 / cfg.train.learning_rate;

  for (uint64_t seed : cfg.seeds) {
    SeedMetrics sm;
    sm.seed = seed;
    try {
      TrainConfig tc = cfg.train;
      tc.seed = seed + kTrainSeedOffset;

      // linear run: exact sigmoidal trajectory
      const Mlp net0 = balanced_decoupled_init(width, cfg.init_sigma, seed, md.v1);
      auto [net, record] = train(net0, cfg.task, tc);
      std::vector<int> times;
      Vec u_emp;
      for (const TrainSnapshot& s : record.snapshots) {
        times.push_back(s.epoch);
        u_emp.push_back(s.u);
      }
      const Trajectory theory = closed_form_trajectory(times, md.S, tau, u_emp.front());
      write_trajectory_csv(art(ed::seed_dir(seed) + "/trajectory.csv"), times, u_emp, theory.u);
      write_matrix_csv(art(ed::seed_dir(seed) + "/w1_final.csv"), net.layers[0].w);
      write_train_record(cfg.out_dir / ed::seed_dir(seed), record);
      report.artifacts.push_back(ed::seed_dir(seed) + "/record.json");

      sm.metrics["linear_dev"] = max_relative_deviation(record, md.S, tau, after_epoch);
      const Mat& w_init = record.snapshots.front().weights.layers[0].w;
      double drift = 0.0;
      for (int r = 0; r < width; ++r)
        for (int c : {0, 2})
          drift = std::max(drift, std::abs(net.layers[0].w(r, c) - w_init(r, c)));
      sm.metrics["cos_drift"] = drift;
      sm.metrics["final_u_gap"] = std::abs(u_emp.back() - md.S);

      // tanh run: the closed form only tracks the early phase
      const Mlp tnet0 =
          balanced_decoupled_init(width, cfg.init_sigma, seed + 500, md.v1, Activation::tanh_act);
      auto [tnet, trecord] = train(tnet0, cfg.task, tc);
      std::vector<int> ttimes;
      Vec tu;
      for (const TrainSnapshot& s : trecord.snapshots) {
        ttimes.push_back(s.epoch);
        tu.push_back(mode_projection(s.weights, md.v1));
      }
      const Trajectory ttheory = closed_form_trajectory(ttimes, md.S, tau, tu.front());
      write_trajectory_csv(art(ed::seed_dir(seed) + "/trajectory_tanh.csv"), ttimes, tu, ttheory.u);
      double tdev = 0.0;
      for (size_t i = 0; i < tu.size(); ++i) {
        if (ttimes[i] <= after_epoch || tu[i] > u_frac * md.S) continue;
        tdev = std::max(tdev, std::abs(tu[i] - ttheory.u[i]) / ttheory.u[i]);
      }
      sm.metrics["tanh_dev"] = tdev;
    } catch (const TrainingDiverged& e) {
      sm.completed = false;
      sm.error = e.what();
    }
    report.per_seed.push_back(std::move(sm));
  }

  report.gates.push_back(make_gate("linear_dev", expdetail::metric_max(report, "linear_dev"), "<=",
                                   cfg.threshold("linear_dev_max", 0.05)));
  report.gates.push_back(make_gate("tanh_dev", expdetail::metric_max(report, "tanh_dev"), "<=",
                                   cfg.threshold("tanh_dev_max", 0.15)));
  report.gates.push_back(make_gate("cos_drift", expdetail::metric_max(report, "cos_drift"), "<=",
                                   cfg.threshold("cos_drift_max", 1e-8)));
  finish_report(report, cfg);
  return report;
}

// Analytic circular posterior against Monte Carlo, and a net trained under
// the same noise reproducing it along a slice.
inline ExperimentReport run_bayes(const ExperimentConfig& cfg) {
  namespace ed = expdetail;
  ExperimentReport report;
  report.name = cfg.name;
  ArtifactSink art{cfg.out_dir, &report.artifacts};

  const double sigma = cfg.view.num("bayes.sigma", 0.5);
  const int mc_samples = cfg.view.integer("bayes.mc_samples", 1000000);
  const int bins = cfg.view.integer("bayes.bins", 50);
  const int k_max = cfg.view.integer("bayes.k_max", 3);
  const double slice_offset = cfg.view.num("bayes.slice_theta2_offset", kPi / 2);

  RngState mc_rng(cfg.seeds.front() * 2654435761u + 29);
  const McPosterior mc = mc_posterior(sigma, mc_samples, bins, k_max, mc_rng);
  Vec analytic(mc.c_centers.size());
  for (size_t i = 0; i < analytic.size(); ++i) analytic[i] = posterior(mc.c_centers[i], sigma, k_max);
  double max_se_dev = 0.0;
  for (size_t b = 0; b < mc.freq.size(); ++b) {
    if (mc.counts[b] == 0 || !(mc.se[b] > 0.0)) continue;
    max_se_dev = std::max(max_se_dev, std::abs(mc.freq[b] - mc.expected[b]) / mc.se[b]);
  }

  for (uint64_t seed : cfg.seeds) {
    SeedMetrics sm;
    sm.seed = seed;
    sm.metrics["mc_max_se_dev"] = max_se_dev;
    try {
      TrainConfig tc = cfg.train;
      tc.seed = seed + kTrainSeedOffset;
      tc.noise_sigma = sigma;
      auto [net, record] = train(init(cfg.arch, cfg.init_sigma, seed), cfg.task, tc);
      const SliceCurve slice =
          network_posterior_slice(net, cfg.task, cfg.task.alpha + slice_offset, mc.c_centers);
      double mse = 0.0;
      for (size_t i = 0; i < slice.values.size(); ++i) {
        const double d = slice.values[i] - analytic[i];
        mse += d * d;
      }
      sm.metrics["slice_mse"] = mse / slice.values.size();
      sm.metrics["train_accuracy"] = record.snapshots.back().train_accuracy;
      write_curve_csv(art(ed::seed_dir(seed) + "/curve.csv"), mc.c_centers, analytic, mc.freq,
                      slice.values);
    } catch (const TrainingDiverged& e) {
      sm.completed = false;
      sm.error = e.what();
    }
    report.per_seed.push_back(std::move(sm));
  }

  report.gates.push_back(
      make_gate("mc_max_se_dev", max_se_dev, "<=", cfg.threshold("mc_max_se", 3.0)));
  report.gates.push_back(make_gate("slice_mse", expdetail::metric_mean(report, "slice_mse"), "<=",
                                   cfg.threshold("slice_mse_max", 0.01)));
  finish_report(report, cfg);
  return report;
}

// Curvature implementation against closed-form surfaces.
inline ExperimentReport run_curvature_oracle(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.name = cfg.name;
  ArtifactSink art{cfg.out_dir, &report.artifacts};

  const int res = cfg.view.integer("oracle.resolution", 128);
  const double major = cfg.view.num("oracle.torus_major", 2.0);
  const double minor = cfg.view.num("oracle.torus_minor", 1.0);
  const double radius = cfg.view.num("oracle.sphere_radius", 2.0);
  const double cap = cfg.view.num("oracle.sphere_cap", 0.2);

  SeedMetrics sm;
  sm.seed = cfg.seeds.front();

  {  // round torus: theta1 runs around the tube
    MetricField f;
    f.grid = make_torus_grid(res);
    const size_t n = f.grid.points.size();
    f.g11.assign(n, minor * minor);
    f.g12.assign(n, 0.0);
    f.g22.resize(n);
    for (size_t i = 0; i < n; ++i) {
      const double ring = major + minor * std::cos(f.grid.points[i].theta1);
      f.g22[i] = ring * ring;
    }
    const CurvatureField k = gaussian_curvature(f, cfg.det_floor);
    double max_err = 0.0;
    for (size_t i = 0; i < n; ++i) {
      if (!k.valid[i]) continue;
      const double c = std::cos(k.grid.points[i].theta1);
      max_err = std::max(max_err, std::abs(k.k[i] - c / (minor * (major + minor * c))));
    }
    sm.metrics["torus_max_err"] = max_err;
    write_curvature_csv(art("torus_curvature.csv"), k);
  }

  {  // sphere patch away from the poles, on a plane grid
    MetricField f;
    f.grid = make_plane_grid(res, AngleBox{cap, kPi - cap, cap, kPi - cap});
    const size_t n = f.grid.points.size();
    f.g11.assign(n, radius * radius);
    f.g12.assign(n, 0.0);
    f.g22.resize(n);
    for (size_t i = 0; i < n; ++i) {
      const double s = std::sin(f.grid.points[i].theta1);
      f.g22[i] = radius * radius * s * s;
    }
    const CurvatureField k = gaussian_curvature(f, cfg.det_floor);
    double max_err = 0.0;
    for (size_t i = 0; i < n; ++i)
      if (k.valid[i]) max_err = std::max(max_err, std::abs(k.k[i] - 1.0 / (radius * radius)));
    sm.metrics["sphere_max_err"] = max_err;
    write_curvature_csv(art("sphere_curvature.csv"), k);
  }

  {  // constant metric must be flat to rounding
    MetricField f;
    f.grid = make_torus_grid(res);
    const size_t n = f.grid.points.size();
    f.g11.assign(n, 1.3);
    f.g12.assign(n, 0.2);
    f.g22.assign(n, 0.9);
    const CurvatureField k = gaussian_curvature(f, cfg.det_floor);
    double max_abs = 0.0;
    for (size_t i = 0; i < n; ++i)
      if (k.valid[i]) max_abs = std::max(max_abs, std::abs(k.k[i]));
    sm.metrics["const_max_k"] = max_abs;
  }

  report.per_seed.push_back(std::move(sm));
  const double err_max = cfg.threshold("oracle_err_max", 1e-4);
  report.gates.push_back(
      make_gate("torus_max_err", report.per_seed[0].metrics["torus_max_err"], "<=", err_max));
  report.gates.push_back(
      make_gate("sphere_max_err", report.per_seed[0].metrics["sphere_max_err"], "<=", err_max));
  report.gates.push_back(make_gate("const_max_k", report.per_seed[0].metrics["const_max_k"], "<=",
                                   cfg.threshold("const_k_max", 1e-10)));
  finish_report(report, cfg);
  return report;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.name == "fig1") return run_fig1(cfg);
  if (cfg.name == "depth") return run_depth_comparison(cfg);
  if (cfg.name == "richlazy") return run_richlazy(cfg);
  if (cfg.name == "noise") return run_noise_sweep(cfg);
  if (cfg.name == "robustness") return run_robustness(cfg);
  if (cfg.name == "lindyn") return run_lindyn(cfg);
  if (cfg.name == "bayes") return run_bayes(cfg);
  if (cfg.name == "curvature-oracle") return run_curvature_oracle(cfg);
  throw std::invalid_argument("unknown experiment '" + cfg.name + "'");
}

}  // namespace manigeo
