// Dense matrix storage, deterministic sampling, and the small-matrix
// decompositions shared by every other module. All matrices here are
// experiment-scale (a few hundred rows at most), so the algorithms favor
// determinism and simplicity over asymptotic speed.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace manigeo {

using Vec = std::vector<double>;

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

struct Mat {
  int rows = 0;
  int cols = 0;
  Vec data;  // row-major

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0) {}

  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rs) {
    Mat m(static_cast<int>(rs.size()), static_cast<int>(rs.begin()->size()));
    int i = 0;
    for (const auto& row : rs) {
      if (static_cast<int>(row.size()) != m.cols)
        throw std::invalid_argument("Mat::from_rows: ragged rows");
      int j = 0;
      for (double v : row) m(i, j++) = v;
      ++i;
    }
    return m;
  }
};

inline bool all_finite(const Mat& m) {
  for (double v : m.data)
    if (!std::isfinite(v)) return false;
  return true;
}

inline bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline Mat transpose(const Mat& a) {
  Mat t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: shape mismatch");
  Mat c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline Vec matvec(const Mat& a, const Vec& x) {
  if (a.cols != static_cast<int>(x.size())) throw std::invalid_argument("matvec: shape mismatch");
  Vec y(a.rows, 0.0);
  for (int i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < a.cols; ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double frobenius_norm(const Mat& a) {
  double s = 0.0;
  for (double v : a.data) s += v * v;
  return std::sqrt(s);
}

inline double trace(const Mat& a) {
  if (a.rows != a.cols) throw std::invalid_argument("trace: matrix not square");
  double s = 0.0;
  for (int i = 0; i < a.rows; ++i) s += a(i, i);
  return s;
}

// Counter-based generator (splitmix64 over a stream position). The whole
// sample sequence is a pure function of (seed, pos), which is what makes
// experiment reruns byte-identical.
struct RngState {
  uint64_t seed = 0;
  uint64_t pos = 0;

  explicit RngState(uint64_t s = 0, uint64_t p = 0) : seed(s), pos(p) {}

  uint64_t next_u64() {
    ++pos;
    uint64_t z = seed + pos * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // standard normal via Box-Muller (cosine branch; consumes two uniforms)
  double gauss() {
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps the log finite
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }
};

inline Vec sample_gaussian(RngState& rng, int n, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("sample_gaussian: sigma must be >= 0");
  Vec out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out[i] = sigma * rng.gauss() + 0.0;
  return out;
}

struct SvdResult {
  Mat u;  // rows(m) x k
  Vec s;  // k = min(rows, cols), sorted descending, nonnegative
  Mat v;  // cols(m) x k
};

namespace detail {

// One-sided Jacobi on the columns of a tall (rows >= cols) matrix.
inline SvdResult svd_tall(Mat a) {
  const int m = a.rows, n = a.cols;
  Mat v = Mat::identity(n);

  const double eps = 1e-14;
  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < m; ++i) {
          app += a(i, p) * a(i, p);
          aqq += a(i, q) * a(i, q);
          apq += a(i, p) * a(i, q);
        }
        if (std::abs(apq) <= eps * std::sqrt(app * aqq) + 1e-300) continue;
        rotated = true;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < m; ++i) {
          const double ap = a(i, p), aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
        }
        for (int i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  Vec s(n, 0.0);
  Mat u(m, n);
  for (int j = 0; j < n; ++j) {
    double nrm = 0.0;
    for (int i = 0; i < m; ++i) nrm += a(i, j) * a(i, j);
    nrm = std::sqrt(nrm);
    s[j] = nrm;
    if (nrm > 0.0)
      for (int i = 0; i < m; ++i) u(i, j) = a(i, j) / nrm;
  }

  // sort descending, permuting u and v columns to match
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return s[x] > s[y]; });
  SvdResult r{Mat(m, n), Vec(n), Mat(n, n)};
  for (int j = 0; j < n; ++j) {
    r.s[j] = s[order[j]];
    for (int i = 0; i < m; ++i) r.u(i, j) = u(i, order[j]);
    for (int i = 0; i < n; ++i) r.v(i, j) = v(i, order[j]);
  }
  return r;
}

}  // namespace detail

// Thin SVD, m = U diag(s) V^T with k = min(rows, cols) columns kept.
inline SvdResult svd_thin(const Mat& m) {
  if (!all_finite(m)) throw std::invalid_argument("svd_thin: non-finite input");
  if (m.rows <= 0 || m.cols <= 0) throw std::invalid_argument("svd_thin: empty matrix");
  if (m.rows > 512 || m.cols > 512) throw std::invalid_argument("svd_thin: matrix too large");
  if (m.rows >= m.cols) return detail::svd_tall(m);
  SvdResult r = detail::svd_tall(transpose(m));
  return SvdResult{std::move(r.v), std::move(r.s), std::move(r.u)};
}

// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations,
// sorted descending.
inline Vec sym_eigvals(const Mat& m) {
  if (m.rows != m.cols) throw std::invalid_argument("sym_eigvals: matrix not square");
  if (!all_finite(m)) throw std::invalid_argument("sym_eigvals: non-finite input");
  const int n = m.rows;
  double scale = 0.0;
  for (double v : m.data) scale = std::max(scale, std::abs(v));
  const double sym_tol = 1e-10 * std::max(1.0, scale);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > sym_tol)
        throw std::invalid_argument("sym_eigvals: matrix not symmetric");

  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));

  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= 1e-14 * std::max(1.0, frobenius_norm(a))) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }

  Vec eig(n);
  for (int i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end(), std::greater<double>());
  return eig;
}

// Gaussian matrix orthonormalized by Gram-Schmidt, re-orthogonalized once.
inline Mat random_orthonormal_columns(RngState& rng, int d_out, int d_in) {
  if (d_out < d_in) throw std::invalid_argument("random_orthonormal_columns: d_out < d_in");
  if (d_in <= 0) throw std::invalid_argument("random_orthonormal_columns: d_in must be positive");
  Mat q(d_out, d_in);
  for (int j = 0; j < d_in; ++j) {
    Vec col(d_out);
    while (true) {
      for (int i = 0; i < d_out; ++i) col[i] = rng.gauss();
      for (int pass = 0; pass < 2; ++pass) {
        for (int k = 0; k < j; ++k) {
          double proj = 0.0;
          for (int i = 0; i < d_out; ++i) proj += col[i] * q(i, k);
          for (int i = 0; i < d_out; ++i) col[i] -= proj * q(i, k);
        }
      }
      const double nrm = norm2(col);
      if (nrm > 1e-8) {  // redraw on (vanishingly rare) degeneracy
        for (int i = 0; i < d_out; ++i) q(i, j) = col[i] / nrm;
        break;
      }
    }
  }
  return q;
}

}  // namespace manigeo
