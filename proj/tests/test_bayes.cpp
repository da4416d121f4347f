#include <catch2/catch_amalgamated.hpp>

#include "manigeo/bayes.hpp"
#include "manigeo/lindyn.hpp"

using namespace manigeo;

TEST_CASE("posterior at the boundary and deep inside a class") {
  for (double sigma : {0.05, 0.2, 0.5, 1.0}) {
    CHECK(posterior(0.0, sigma, 3) == Catch::Approx(0.5).margin(1e-15));
  }
  CHECK(posterior(kPi / 2, 0.1, 1) == Catch::Approx(1.0).margin(1e-10));
  CHECK(posterior(-kPi / 2, 0.1, 1) == Catch::Approx(0.0).margin(1e-10));
  CHECK_THROWS_AS(posterior(0.1, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(posterior(0.1, -0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(posterior(0.1, 0.5, 0), std::invalid_argument);
}

TEST_CASE("posterior antisymmetry and range") {
  RngState rng(61);
  for (double sigma : {0.1, 0.3, 0.6, 1.2}) {
    for (int trial = 0; trial < 200; ++trial) {
      const double c = -kPi + kTwoPi * rng.uniform01();
      const double p = posterior(c, sigma, 2);
      const double q = posterior(-c, sigma, 2);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      CHECK(p + q == Catch::Approx(1.0).margin(1e-10));
    }
  }
}

TEST_CASE("posterior truncation converges fast") {
  double max_diff = 0.0;
  for (int i = 0; i < 64; ++i) {
    const double c = -kPi + kTwoPi * i / 64;
    max_diff = std::max(max_diff, std::abs(posterior(c, 0.5, 1) - posterior(c, 0.5, 5)));
  }
  CHECK(max_diff <= 1e-6);
  // tail bound on dropped terms
  CHECK(max_diff <= std::erfc(kPi * (2 * 1 - 1) / (0.5 * std::sqrt(2.0))));
}

TEST_CASE("posterior is periodic in c at sufficient truncation") {
  RngState rng(62);
  for (int trial = 0; trial < 100; ++trial) {
    const double c = -kPi + kTwoPi * rng.uniform01();
    CHECK(posterior(c + kTwoPi, 0.5, 8) == Catch::Approx(posterior(c, 0.5, 8)).margin(1e-10));
  }
}

TEST_CASE("posterior slope at the boundary flattens with noise") {
  const double h = 1e-5;
  double prev_slope = std::numeric_limits<double>::infinity();
  for (double sigma : {0.1, 0.3, 0.5, 0.8}) {
    const double slope =
        std::abs(posterior(h, sigma, 3) - posterior(-h, sigma, 3)) / (2.0 * h);
    CHECK(slope < prev_slope);
    prev_slope = slope;
  }
}

TEST_CASE("posterior curve approaches a step in the small-noise limit") {
  const int res = 64;
  const PosteriorCurve curve = posterior_curve(1e-3, 1, res);
  const double cell = kTwoPi / res;
  for (int i = 0; i < res; ++i) {
    const double c = curve.c[i];
    if (std::abs(c) < cell || std::abs(std::abs(c) - kPi) < cell) continue;
    const double expected = c > 0.0 ? 1.0 : 0.0;
    CHECK(curve.values[i] == Catch::Approx(expected).margin(1e-6));
  }
}

TEST_CASE("monte-carlo estimate agrees with the analytic posterior per bin") {
  RngState rng(63);
  const McPosterior mc = mc_posterior(0.5, 1000000, 64, 3, rng);
  for (int b = 0; b < 64; ++b) {
    REQUIRE(mc.counts[b] > 0);
    const double allowance = 3.0 * mc.se[b] + 1e-12;
    CHECK(std::abs(mc.freq[b] - mc.expected[b]) <= allowance);
  }
}

TEST_CASE("monte-carlo posterior is deterministic in the seed") {
  RngState a(64), b(64);
  const McPosterior ma = mc_posterior(0.4, 20000, 16, 2, a);
  const McPosterior mb = mc_posterior(0.4, 20000, 16, 2, b);
  CHECK(ma.freq == mb.freq);
  CHECK(ma.expected == mb.expected);
}

TEST_CASE("network slice of an untrained net is flat at 0.5") {
  Arch arch;
  arch.dims = {4, 4, 1};
  const Mlp net = init(arch, 0.0, 0);
  const SliceCurve s =
      network_posterior_slice(net, TaskSpec(Gate::XOR, 0.0, Domain::torus), kPi / 4, 32);
  for (double v : s.values) CHECK(v == Catch::Approx(0.5));
}

TEST_CASE("trained XOR slice steps at the class boundaries") {
  Arch arch;
  arch.dims = {4, 8, 8, 1};
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.epochs = 2000;
  cfg.grid_resolution = 16;
  cfg.snapshot_every = 2000;
  const TaskSpec spec(Gate::XOR, 0.0, Domain::torus);
  auto [net, record] = train(init(arch, 0.3, 15), spec, cfg);
  REQUIRE(record.snapshots.back().train_accuracy >= 0.99);

  const SliceCurve s = network_posterior_slice(net, spec, kPi / 4, 128);
  // class centers sit at c = +-pi/2; the slice must commit there and cross
  // 0.5 within one cell of c = 0 and c = -pi
  double at_pos = 0.0, at_neg = 0.0;
  for (int i = 0; i < 128; ++i) {
    if (std::abs(s.c[i] - kPi / 2) < 0.05) at_pos = s.values[i];
    if (std::abs(s.c[i] + kPi / 2) < 0.05) at_neg = s.values[i];
  }
  CHECK(at_pos >= 0.95);
  CHECK(at_neg <= 0.05);
  // the slice is periodic, so count sign changes around the full cycle
  int crossings = 0;
  for (int i = 0; i < 128; ++i) {
    const int prev = (i + 127) % 128;
    if ((s.values[i] - 0.5) * (s.values[prev] - 0.5) < 0.0) ++crossings;
  }
  CHECK(crossings == 2);
}
