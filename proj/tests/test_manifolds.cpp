#include <catch2/catch_amalgamated.hpp>

#include "manigeo/manifolds.hpp"
#include "oracles.hpp"

using namespace manigeo;

TEST_CASE("wrap_angle lands in [0, 2pi)") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kTwoPi) == 0.0);
  CHECK(wrap_angle(-0.5) == Catch::Approx(kTwoPi - 0.5));
  CHECK(wrap_angle(7.0 * kPi) == Catch::Approx(kPi));
  RngState rng(21);
  for (int i = 0; i < 1000; ++i) {
    const double w = wrap_angle(100.0 * (rng.uniform01() - 0.5));
    CHECK(w >= 0.0);
    CHECK(w < kTwoPi);
  }
}

TEST_CASE("embed_torus known points") {
  const Vec a = embed_torus(AnglePoint(0.0, 0.0));
  CHECK(a[0] == Catch::Approx(1.0));
  CHECK(a[1] == Catch::Approx(0.0).margin(1e-15));
  CHECK(a[2] == Catch::Approx(1.0));
  CHECK(a[3] == Catch::Approx(0.0).margin(1e-15));

  const Vec b = embed_torus(AnglePoint(kPi / 2.0, kPi));
  CHECK(b[0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(b[1] == Catch::Approx(1.0));
  CHECK(b[2] == Catch::Approx(-1.0));
  CHECK(b[3] == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("embed_torus stays on the product of unit circles") {
  RngState rng(1);
  for (int i = 0; i < 10000; ++i) {
    const AnglePoint p(kTwoPi * rng.uniform01(), kTwoPi * rng.uniform01());
    const Vec x = embed_torus(p);
    CHECK(x[0] * x[0] + x[1] * x[1] == Catch::Approx(1.0).margin(1e-12));
    CHECK(x[2] * x[2] + x[3] * x[3] == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("embed_plane rescales the box onto [-1,1]^2") {
  AnglePoint corner;
  corner.theta1 = 0.0;
  corner.theta2 = 0.0;
  const Vec a = embed_plane(corner);
  CHECK(a[0] == Catch::Approx(-1.0));
  CHECK(a[1] == Catch::Approx(-1.0));

  const Vec b = embed_plane(AnglePoint(kPi, kPi));
  CHECK(b[0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(b[1] == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("embed_plane is invertible on the box") {
  const AngleBox box{0.5, 4.0, 1.0, 6.0};
  RngState rng(2);
  for (int i = 0; i < 100; ++i) {
    AnglePoint p;
    p.theta1 = box.lo1 + (box.hi1 - box.lo1) * rng.uniform01();
    p.theta2 = box.lo2 + (box.hi2 - box.lo2) * rng.uniform01();
    const Vec x = embed_plane(p, box);
    const double t1 = box.lo1 + (x[0] + 1.0) * (box.hi1 - box.lo1) / 2.0;
    const double t2 = box.lo2 + (x[1] + 1.0) * (box.hi2 - box.lo2) / 2.0;
    CHECK(t1 == Catch::Approx(p.theta1).margin(1e-12));
    CHECK(t2 == Catch::Approx(p.theta2).margin(1e-12));
  }
}

TEST_CASE("embedding_jacobian torus at the origin") {
  const Mat j = embedding_jacobian(AnglePoint(0.0, 0.0), Domain::torus);
  const Mat want = Mat::from_rows({{0, 0}, {1, 0}, {0, 0}, {0, 1}});
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 2; ++k) CHECK(j(i, k) == Catch::Approx(want(i, k)).margin(1e-15));
}

TEST_CASE("embedding_jacobian torus columns are orthonormal everywhere") {
  RngState rng(3);
  for (int i = 0; i < 200; ++i) {
    const AnglePoint p(kTwoPi * rng.uniform01(), kTwoPi * rng.uniform01());
    const Mat j = embedding_jacobian(p, Domain::torus);
    const Mat g = matmul(transpose(j), j);
    CHECK(g(0, 0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(g(1, 1) == Catch::Approx(1.0).margin(1e-12));
    CHECK(g(0, 1) == Catch::Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("embedding_jacobian matches finite differences of the embedding") {
  RngState rng(4);
  auto f = [](const Vec& t) { return embed_torus(AnglePoint(t[0], t[1])); };
  for (int i = 0; i < 50; ++i) {
    const Vec t = {kTwoPi * rng.uniform01(), kTwoPi * rng.uniform01()};
    const Mat fd = oracles::fd_jacobian(f, t, 1e-5);
    const Mat an = embedding_jacobian(AnglePoint(t[0], t[1]), Domain::torus);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 2; ++c) CHECK(an(r, c) == Catch::Approx(fd(r, c)).margin(1e-8));
  }
}

TEST_CASE("add_tangent_noise basics") {
  RngState rng(5);
  const AnglePoint p(1.0, 2.0);
  const AnglePoint same = add_tangent_noise(p, 0.0, rng);
  CHECK(same.theta1 == p.theta1);
  CHECK(same.theta2 == p.theta2);
  CHECK_THROWS_AS(add_tangent_noise(p, -0.1, rng), std::invalid_argument);
  for (int i = 0; i < 1000; ++i) {
    const AnglePoint q = add_tangent_noise(p, 2.0, rng);
    CHECK(q.theta1 >= 0.0);
    CHECK(q.theta1 < kTwoPi);
    CHECK(q.theta2 >= 0.0);
    CHECK(q.theta2 < kTwoPi);
  }
}

TEST_CASE("add_tangent_noise circular variance matches sigma^2") {
  RngState rng(6);
  const double sigma = 0.3;
  const AnglePoint p(3.0, 3.0);
  double sum = 0.0, sumsq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const AnglePoint q = add_tangent_noise(p, sigma, rng);
    double d = q.theta1 - p.theta1;  // wrap into (-pi, pi]
    if (d > kPi) d -= kTwoPi;
    if (d <= -kPi) d += kTwoPi;
    sum += d;
    sumsq += d * d;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(var == Catch::Approx(sigma * sigma).epsilon(0.02));
}

TEST_CASE("wrapped noise preserves the uniform distribution on the circle") {
  RngState rng(7);
  const int n = 100000, bins = 20;
  std::vector<int> counts(bins, 0);
  for (int i = 0; i < n; ++i) {
    const AnglePoint p(kTwoPi * rng.uniform01(), 0.0);
    const AnglePoint q = add_tangent_noise(p, 0.7, rng);
    ++counts[std::min(bins - 1, static_cast<int>(q.theta1 / kTwoPi * bins))];
  }
  const double expected = static_cast<double>(n) / bins;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // chi-square critical value, 19 dof, alpha = 0.001
  CHECK(chi2 < 43.82);
}

TEST_CASE("embed_highdim preserves norms and rejects shape mismatch") {
  RngState rng(8);
  const Mat q = random_orthonormal_columns(rng, 32, 4);
  for (int i = 0; i < 1000; ++i) {
    const Vec x = sample_gaussian(rng, 4, 1.0);
    const Vec y = embed_highdim(x, q);
    REQUIRE(y.size() == 32);
    CHECK(norm2(y) == Catch::Approx(norm2(x)).margin(1e-10));
  }
  const Vec id_x = {1.0, 2.0, 3.0, 4.0};
  const Vec same = embed_highdim(id_x, Mat::identity(4));
  CHECK(same == id_x);
  const Vec bad = {1.0, 2.0};
  CHECK_THROWS_AS(embed_highdim(bad, q), std::invalid_argument);
}

TEST_CASE("torus grid offsets by half a cell and excludes the endpoint") {
  const AngleGrid g = make_torus_grid(8);
  REQUIRE(g.size() == 64);
  CHECK(g.points[0].theta1 == Catch::Approx(kTwoPi * 0.5 / 8));
  CHECK(g.points[g.index(7, 0)].theta1 == Catch::Approx(kTwoPi * 7.5 / 8));
  CHECK(g.points[g.index(7, 0)].theta1 < kTwoPi);
  CHECK(g.step(0) == Catch::Approx(kTwoPi / 8));
  // theta2 is the fast axis
  CHECK(g.points[1].theta1 == g.points[0].theta1);
  CHECK(g.points[1].theta2 == Catch::Approx(kTwoPi * 1.5 / 8));
}

TEST_CASE("plane grid includes both endpoints") {
  const AngleBox box{0.0, 1.0, 2.0, 4.0};
  const AngleGrid g = make_plane_grid(5, box);
  CHECK(g.points[0].theta1 == 0.0);
  CHECK(g.points[g.index(4, 4)].theta1 == Catch::Approx(1.0));
  CHECK(g.points[g.index(4, 4)].theta2 == Catch::Approx(4.0));
  CHECK(g.step(0) == Catch::Approx(0.25));
  CHECK(g.step(1) == Catch::Approx(0.5));
  CHECK_THROWS_AS(make_plane_grid(5, AngleBox{1.0, 0.0, 0.0, 1.0}), std::invalid_argument);
}
