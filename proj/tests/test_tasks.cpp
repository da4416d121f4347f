#include <catch2/catch_amalgamated.hpp>

#include "manigeo/tasks.hpp"

using namespace manigeo;

TEST_CASE("latent values and zero crossings") {
  CHECK(latent(kPi / 2, 0.0) == Catch::Approx(1.0));
  CHECK(latent(kPi / 2, kPi / 2) == Catch::Approx(0.0).margin(1e-15));
  const double alpha = 0.8;
  const double eps = 1e-6;
  CHECK(latent(alpha + eps, alpha) > 0.0);
  CHECK(latent(alpha - eps, alpha) < 0.0);
  CHECK(latent(alpha + kPi + eps, alpha) < 0.0);
  CHECK(latent(alpha + kPi - eps, alpha) > 0.0);
}

TEST_CASE("class_bit follows the half-open convention") {
  CHECK(class_bit(0.0, 0.0));        // theta - alpha = 0 is positive
  CHECK_FALSE(class_bit(kPi, 0.0));  // theta - alpha = pi starts the negative class
  CHECK(class_bit(kPi - 1e-9, 0.0));
  CHECK_FALSE(class_bit(kTwoPi - 1e-9, 0.0));
}

TEST_CASE("gate labels at quadrant centers") {
  const TaskSpec and_task(Gate::AND, 0.0, Domain::torus);
  const TaskSpec xor_task(Gate::XOR, 0.0, Domain::torus);
  const TaskSpec or_task(Gate::OR, 0.0, Domain::torus);
  const AnglePoint pp(kPi / 2, kPi / 2);
  const AnglePoint pm(kPi / 2, 3 * kPi / 2);
  const AnglePoint mm(3 * kPi / 2, 3 * kPi / 2);
  CHECK(label(and_task, pp) == 1);
  CHECK(label(and_task, pm) == 0);
  CHECK(label(xor_task, pp) == 0);
  CHECK(label(xor_task, pm) == 1);
  CHECK(label(xor_task, mm) == 0);
  CHECK(label(or_task, mm) == 0);
  CHECK(label(or_task, pm) == 1);
}

TEST_CASE("boundary shift equals input rotation") {
  RngState rng(31);
  for (Gate g : {Gate::XOR, Gate::AND, Gate::OR}) {
    for (int trial = 0; trial < 200; ++trial) {
      const double alpha = kTwoPi * rng.uniform01();
      const AnglePoint p(kTwoPi * rng.uniform01(), kTwoPi * rng.uniform01());
      const TaskSpec shifted(g, alpha, Domain::torus);
      const TaskSpec base(g, 0.0, Domain::torus);
      const AnglePoint rotated(p.theta1 - alpha, p.theta2 - alpha);
      CHECK(label(shifted, p) == label(base, rotated));
    }
  }
}

TEST_CASE("labels are constant on open quadrants") {
  const TaskSpec spec(Gate::XOR, 1.1, Domain::torus);
  RngState rng(32);
  // quadrant delimiters at alpha and alpha + pi per axis
  for (int q1 = 0; q1 < 2; ++q1)
    for (int q2 = 0; q2 < 2; ++q2) {
      int first = -1;
      for (int trial = 0; trial < 100; ++trial) {
        const double t1 = spec.alpha + q1 * kPi + 1e-4 + (kPi - 2e-4) * rng.uniform01();
        const double t2 = spec.alpha + q2 * kPi + 1e-4 + (kPi - 2e-4) * rng.uniform01();
        const int l = label(spec, AnglePoint(t1, t2));
        if (first < 0) first = l;
        CHECK(l == first);
      }
    }
}

TEST_CASE("optimal_weight_pair recovers the shifted latent") {
  auto [c0, s0] = optimal_weight_pair(0.0);
  CHECK(c0 == Catch::Approx(0.0).margin(1e-15));
  CHECK(s0 == Catch::Approx(1.0));
  auto [c1, s1] = optimal_weight_pair(kPi / 2);
  CHECK(c1 == Catch::Approx(-1.0));
  CHECK(s1 == Catch::Approx(0.0).margin(1e-15));

  RngState rng(33);
  for (int k = 0; k < 8; ++k) {
    const double alpha = kTwoPi * k / 8.0;
    auto [wc, ws] = optimal_weight_pair(alpha);
    CHECK(wc * wc + ws * ws == Catch::Approx(1.0).margin(1e-12));
    CHECK(wc * std::cos(alpha) + ws * std::sin(alpha) == Catch::Approx(0.0).margin(1e-12));
    for (int trial = 0; trial < 125; ++trial) {
      const double theta = kTwoPi * rng.uniform01();
      const double combo = wc * std::cos(theta) + ws * std::sin(theta);
      CHECK(combo == Catch::Approx(latent(theta, alpha)).margin(1e-12));
    }
  }
}

TEST_CASE("holdout_mask full domain and empty-measure line") {
  const AngleGrid g = make_torus_grid(16);
  const auto all = holdout_mask(g, AngleBox{0.0, kTwoPi, 0.0, kTwoPi});
  for (char m : all) CHECK(m == 1);
  const auto none = holdout_mask(g, AngleBox{1.0, 1.0, 0.0, kTwoPi});
  for (char m : none) CHECK(m == 0);
}

TEST_CASE("holdout_mask quadrant block covers a quarter of the grid") {
  const AngleGrid g = make_torus_grid(32);
  const auto mask = holdout_mask(g, AngleBox{kPi / 2, 3 * kPi / 2, kPi / 2, 3 * kPi / 2});
  int n = 0;
  for (char m : mask) n += m;
  CHECK(n == g.size() / 4);
}

TEST_CASE("holdout_mask wraps across zero on the torus") {
  const AngleGrid g = make_torus_grid(32);
  const auto mask = holdout_mask(g, AngleBox{3 * kPi / 2, 5 * kPi / 2, 0.0, kTwoPi});
  int n = 0;
  for (size_t i = 0; i < mask.size(); ++i) {
    n += mask[i];
    if (mask[i]) {
      const double t1 = g.points[i].theta1;
      CHECK((t1 > 3 * kPi / 2 || t1 < kPi / 2));
    }
  }
  CHECK(n == g.size() / 2);
}

TEST_CASE("holdout_mask rejects inverted regions") {
  const AngleGrid g = make_torus_grid(8);
  CHECK_THROWS_AS(holdout_mask(g, AngleBox{2.0, 1.0, 0.0, kTwoPi}), std::invalid_argument);
  CHECK_THROWS_AS(holdout_mask(g, AngleBox{0.0, 3 * kTwoPi, 0.0, kTwoPi}), std::invalid_argument);
}
