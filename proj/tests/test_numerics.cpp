#include <catch2/catch_amalgamated.hpp>

#include "manigeo/numerics.hpp"
#include "oracles.hpp"

using namespace manigeo;

namespace {

Mat random_mat(RngState& rng, int r, int c, double scale = 1.0) {
  Mat m(r, c);
  for (double& v : m.data) v = scale * rng.gauss();
  return m;
}

double reconstruction_error(const Mat& m, const SvdResult& r) {
  Mat usv(m.rows, m.cols);
  const int k = static_cast<int>(r.s.size());
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) {
      double s = 0.0;
      for (int l = 0; l < k; ++l) s += r.u(i, l) * r.s[l] * r.v(j, l);
      usv(i, j) = s - m(i, j);
    }
  const double denom = std::max(frobenius_norm(m), 1e-300);
  return frobenius_norm(usv) / denom;
}

}  // namespace

TEST_CASE("svd_thin identity") {
  const auto r = svd_thin(Mat::identity(4));
  REQUIRE(r.s.size() == 4);
  for (double s : r.s) CHECK(s == Catch::Approx(1.0).margin(1e-12));
  CHECK(reconstruction_error(Mat::identity(4), r) < 1e-10);
}

TEST_CASE("svd_thin of the 1x4 target correlation row") {
  Mat sigma31(1, 4);
  sigma31(0, 1) = 1.0 / kTwoPi;
  sigma31(0, 3) = 1.0 / kTwoPi;
  const auto r = svd_thin(sigma31);
  REQUIRE(r.s.size() == 1);
  CHECK(r.s[0] == Catch::Approx(1.0 / (std::sqrt(2.0) * kPi)).epsilon(1e-12));
  CHECK(reconstruction_error(sigma31, r) < 1e-10);
}

TEST_CASE("svd_thin matches an independent Jacobi eigensolver on random 8x8") {
  RngState rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat a = random_mat(rng, 8, 8);
    const auto r = svd_thin(a);
    const auto ata_eig = oracles::jacobi_sym_eigvals(matmul(transpose(a), a));
    REQUIRE(ata_eig.size() == 8);
    for (int i = 0; i < 8; ++i) {
      const double expected = std::sqrt(std::max(ata_eig[i], 0.0));
      CHECK(r.s[i] == Catch::Approx(expected).margin(1e-8));
    }
  }
}

TEST_CASE("svd_thin reconstruction and ordering over assorted shapes") {
  RngState rng(7);
  const std::pair<int, int> shapes[] = {{1, 4}, {4, 1}, {3, 7}, {7, 3}, {16, 16}, {5, 5}};
  for (auto [r0, c0] : shapes) {
    const Mat a = random_mat(rng, r0, c0);
    const auto r = svd_thin(a);
    CHECK(reconstruction_error(a, r) < 1e-10);
    for (size_t i = 0; i + 1 < r.s.size(); ++i) CHECK(r.s[i] >= r.s[i + 1]);
    for (double s : r.s) CHECK(s >= 0.0);
  }
}

TEST_CASE("svd_thin rejects non-finite input") {
  Mat a(2, 2);
  a(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(svd_thin(a), std::invalid_argument);
}

TEST_CASE("sym_eigvals on diagonal and analytic 2x2") {
  Mat d(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = 1.0;
  auto eig = sym_eigvals(d);
  CHECK(eig[0] == Catch::Approx(3.0));
  CHECK(eig[1] == Catch::Approx(1.0));

  const Mat a = Mat::from_rows({{2.0, 1.0}, {1.0, 2.0}});
  eig = sym_eigvals(a);
  CHECK(eig[0] == Catch::Approx(3.0).margin(1e-12));
  CHECK(eig[1] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("sym_eigvals matches characteristic-polynomial roots on random 3x3") {
  RngState rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Mat a(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) a(i, j) = a(j, i) = rng.gauss();
    const auto eig = sym_eigvals(a);
    const auto roots = oracles::sym3x3_charpoly_roots(a);
    for (int i = 0; i < 3; ++i) CHECK(eig[i] == Catch::Approx(roots[i]).margin(1e-8));
  }
}

TEST_CASE("sym_eigvals sum equals trace") {
  RngState rng(3);
  for (int n : {2, 4, 9}) {
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) a(i, j) = a(j, i) = rng.gauss();
    const auto eig = sym_eigvals(a);
    const double sum = std::accumulate(eig.begin(), eig.end(), 0.0);
    CHECK(sum == Catch::Approx(trace(a)).margin(1e-10));
  }
}

TEST_CASE("sym_eigvals rejects asymmetric input") {
  const Mat a = Mat::from_rows({{1.0, 2.0}, {0.0, 1.0}});
  CHECK_THROWS_AS(sym_eigvals(a), std::invalid_argument);
}

TEST_CASE("sample_gaussian basics") {
  RngState rng(1);
  const Vec zeros = sample_gaussian(rng, 3, 0.0);
  REQUIRE(zeros.size() == 3);
  for (double v : zeros) CHECK(v == 0.0);

  CHECK_THROWS_AS(sample_gaussian(rng, 3, -1.0), std::invalid_argument);
}

TEST_CASE("sample_gaussian variance at unit sigma") {
  RngState rng(1);
  const int n = 100000;
  const Vec xs = sample_gaussian(rng, n, 1.0);
  double mean = 0.0;
  for (double v : xs) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : xs) var += (v - mean) * (v - mean);
  var /= n;
  CHECK(var > 0.99);
  CHECK(var < 1.01);
}

TEST_CASE("sampling is a pure function of seed and position") {
  RngState a(1234), b(1234);
  const Vec xa = sample_gaussian(a, 64, 1.0);
  const Vec xb = sample_gaussian(b, 64, 1.0);
  CHECK(xa == xb);
  CHECK(a.pos == b.pos);

  RngState c(1235);
  const Vec xc = sample_gaussian(c, 64, 1.0);
  CHECK(xa != xc);
}

TEST_CASE("random_orthonormal_columns") {
  RngState rng(5);
  for (auto [d_out, d_in] : std::vector<std::pair<int, int>>{{4, 4}, {32, 4}}) {
    const Mat q = random_orthonormal_columns(rng, d_out, d_in);
    const Mat qtq = matmul(transpose(q), q);
    for (int i = 0; i < d_in; ++i)
      for (int j = 0; j < d_in; ++j)
        CHECK(qtq(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-10));
  }
  CHECK_THROWS_AS(random_orthonormal_columns(rng, 3, 4), std::invalid_argument);
}

TEST_CASE("projection through orthonormal columns is an isometry on the column space") {
  RngState rng(6);
  const Mat q = random_orthonormal_columns(rng, 32, 4);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec x = sample_gaussian(rng, 4, 1.0);
    const Vec qx = matvec(q, x);
    const Vec back = matvec(transpose(q), qx);
    for (int i = 0; i < 4; ++i) CHECK(back[i] == Catch::Approx(x[i]).margin(1e-10));
    CHECK(norm2(qx) == Catch::Approx(norm2(x)).margin(1e-10));
  }
}

TEST_CASE("eigenvalues of PSD matrices are nonnegative") {
  RngState rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat b = random_mat(rng, 6, 4);
    const auto eig = sym_eigvals(matmul(transpose(b), b));
    for (double v : eig) CHECK(v >= -1e-12);
  }
}
