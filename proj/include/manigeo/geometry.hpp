#pragma once

// Riemannian quantities of network representations over the angle grid: the
// pullback metric field, its trace, Gaussian curvature via the Brioschi
// formula with finite-difference metric derivatives, participation ratio of
// activations, and the closed-form hidden-layer metric for first layers that
// ignore the cosine inputs.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "manigeo/manifolds.hpp"
#include "manigeo/network.hpp"
#include "manigeo/numerics.hpp"

namespace manigeo {

// Symmetric 2x2 metric per grid point, in task-variable coordinates.
struct MetricField {
  AngleGrid grid;
  Vec g11, g12, g22;
};

struct CurvatureField {
  AngleGrid grid;
  Vec k;
  std::vector<char> valid;  // false at masked points (degenerate metric, plane edges)
};

struct CurvatureSummary {
  double mean_k = 0.0;
  double max_abs_k = 0.0;
  AnglePoint argmax;
};

// G = J_z^T J_z with J_z = (layer Jacobian) * (optional projection) * J_x.
inline MetricField pullback_metric(const Mlp& net, int layer, const AngleGrid& grid,
                                   const Mat* projection = nullptr) {
  MetricField f;
  f.grid = grid;
  const size_t n = grid.points.size();
  f.g11.resize(n);
  f.g12.resize(n);
  f.g22.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const AnglePoint& p = grid.points[i];
    Vec x = embed_point(p, grid.domain, grid.box);
    Mat jx = embedding_jacobian(p, grid.domain, grid.box);
    if (projection) {
      x = embed_highdim(x, *projection);
      jx = matmul(*projection, jx);
    }
    const Mat jn = jacobian_wrt_input(net, x, layer);
    const Mat jz = matmul(jn, jx);
    double g11 = 0.0, g12 = 0.0, g22 = 0.0;
    for (int r = 0; r < jz.rows; ++r) {
      g11 += jz(r, 0) * jz(r, 0);
      g12 += jz(r, 0) * jz(r, 1);
      g22 += jz(r, 1) * jz(r, 1);
    }
    f.g11[i] = g11;
    f.g12[i] = g12;
    f.g22[i] = g22;
  }
  return f;
}

// Metric of the scalar output curve; the sigmoid slope rescales the final
// layer's Jacobian row.
inline MetricField output_metric(const Mlp& net, const AngleGrid& grid,
                                 const Mat* projection = nullptr) {
  MetricField f;
  f.grid = grid;
  const size_t n = grid.points.size();
  f.g11.resize(n);
  f.g12.resize(n);
  f.g22.resize(n);
  const int last = static_cast<int>(net.layers.size()) - 1;
  for (size_t i = 0; i < n; ++i) {
    const AnglePoint& p = grid.points[i];
    Vec x = embed_point(p, grid.domain, grid.box);
    Mat jx = embedding_jacobian(p, grid.domain, grid.box);
    if (projection) {
      x = embed_highdim(x, *projection);
      jx = matmul(*projection, jx);
    }
    const Mat jz = matmul(jacobian_wrt_input(net, x, last), jx);
    double scale = 1.0;
    if (net.output_activation == OutputActivation::sigmoid) {
      const double out = forward(net, x).output;
      scale = out * (1.0 - out);
    }
    const double d1 = scale * jz(0, 0);
    const double d2 = scale * jz(0, 1);
    f.g11[i] = d1 * d1;
    f.g12[i] = d1 * d2;
    f.g22[i] = d2 * d2;
  }
  return f;
}

namespace detail {

// Cosine with exact zeros at the quarter turns, where the class centers sit.
// Keeps the factor structure of the closed-form metric exact on those lines.
inline double quarter_cos(double theta) {
  const double w = wrap_angle(theta);
  if (w == 0.5 * kPi || w == 1.5 * kPi) return 0.0;
  return std::cos(w);
}

inline double det3(const double m[3][3]) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

}  // namespace detail

// Closed-form hidden metric for a bias-free tanh first layer whose columns on
// the cosine inputs are zero: G_ij = cos(t_i) cos(t_j) sum_k w_k,si w_k,sj
// sech^4(w_k,s1 sin t1 + w_k,s2 sin t2), si the sine-input column of angle i.
inline Mat hidden_metric_analytic(const Mat& w, const AnglePoint& p) {
  if (w.cols != 4) throw std::invalid_argument("expected a first layer over the torus embedding");
  for (int k = 0; k < w.rows; ++k)
    if (std::abs(w(k, 0)) > 1e-8 || std::abs(w(k, 2)) > 1e-8)
      throw std::invalid_argument("cosine-input columns must be zero for the closed form");
  const double s1 = std::sin(p.theta1), s2 = std::sin(p.theta2);
  const double c1 = detail::quarter_cos(p.theta1), c2 = detail::quarter_cos(p.theta2);
  double q11 = 0.0, q12 = 0.0, q22 = 0.0;
  for (int k = 0; k < w.rows; ++k) {
    const double a = w(k, 1), b = w(k, 3);
    const double sech = 1.0 / std::cosh(a * s1 + b * s2);
    const double sech4 = sech * sech * sech * sech;
    q11 += a * a * sech4;
    q12 += a * b * sech4;
    q22 += b * b * sech4;
  }
  Mat g(2, 2);
  g(0, 0) = c1 * c1 * q11;
  g(0, 1) = g(1, 0) = c1 * c2 * q12;
  g(1, 1) = c2 * c2 * q22;
  return g;
}

// Brioschi formula on the sampled metric. Metric derivatives use 5-point
// central stencils (4th order), wrapped on the torus; on plane grids the two
// outermost layers have no full stencil and are masked invalid, as are points
// with det G below det_floor.
inline CurvatureField gaussian_curvature(const MetricField& f, double det_floor = 1e-9) {
  const int n = f.grid.resolution;
  if (n < 5) throw std::invalid_argument("curvature needs grid resolution >= 5 per axis");
  const bool periodic = f.grid.domain == Domain::torus;
  const double hu = f.grid.step(0), hv = f.grid.step(1);

  CurvatureField cf;
  cf.grid = f.grid;
  cf.k.assign(f.grid.points.size(), 0.0);
  cf.valid.assign(f.grid.points.size(), 0);

  static const double c1[5] = {1.0, -8.0, 0.0, 8.0, -1.0};     // f' * 12h
  static const double c2[5] = {-1.0, 16.0, -30.0, 16.0, -1.0}; // f'' * 12h^2

  auto wrap = [n](int i) { return ((i % n) + n) % n; };
  auto at = [&](const Vec& comp, int i, int j) {
    return comp[f.grid.index(wrap(i), wrap(j))];
  };
  auto du = [&](const Vec& comp, int i, int j) {
    double s = 0.0;
    for (int o = -2; o <= 2; ++o) s += c1[o + 2] * at(comp, i + o, j);
    return s / (12.0 * hu);
  };
  auto dv = [&](const Vec& comp, int i, int j) {
    double s = 0.0;
    for (int o = -2; o <= 2; ++o) s += c1[o + 2] * at(comp, i, j + o);
    return s / (12.0 * hv);
  };
  auto duu = [&](const Vec& comp, int i, int j) {
    double s = 0.0;
    for (int o = -2; o <= 2; ++o) s += c2[o + 2] * at(comp, i + o, j);
    return s / (12.0 * hu * hu);
  };
  auto dvv = [&](const Vec& comp, int i, int j) {
    double s = 0.0;
    for (int o = -2; o <= 2; ++o) s += c2[o + 2] * at(comp, i, j + o);
    return s / (12.0 * hv * hv);
  };
  auto duv = [&](const Vec& comp, int i, int j) {
    double s = 0.0;
    for (int a = -2; a <= 2; ++a)
      for (int b = -2; b <= 2; ++b) s += c1[a + 2] * c1[b + 2] * at(comp, i + a, j + b);
    return s / (144.0 * hu * hv);
  };

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int idx = f.grid.index(i, j);
      if (!periodic && (i < 2 || j < 2 || i >= n - 2 || j >= n - 2)) continue;
      const double e = f.g11[idx], ff = f.g12[idx], g = f.g22[idx];
      const double det = e * g - ff * ff;
      if (!(det >= det_floor)) continue;

      const double e_u = du(f.g11, i, j), e_v = dv(f.g11, i, j), e_vv = dvv(f.g11, i, j);
      const double f_u = du(f.g12, i, j), f_v = dv(f.g12, i, j), f_uv = duv(f.g12, i, j);
      const double g_u = du(f.g22, i, j), g_v = dv(f.g22, i, j), g_uu = duu(f.g22, i, j);

      const double m1[3][3] = {
          {-0.5 * e_vv + f_uv - 0.5 * g_uu, 0.5 * e_u, f_u - 0.5 * e_v},
          {f_v - 0.5 * g_u, e, ff},
          {0.5 * g_v, ff, g}};
      const double m2[3][3] = {
          {0.0, 0.5 * e_v, 0.5 * g_u},
          {0.5 * e_v, e, ff},
          {0.5 * g_u, ff, g}};
      const double k = (detail::det3(m1) - detail::det3(m2)) / (det * det);
      if (!std::isfinite(k)) continue;
      cf.k[idx] = k;
      cf.valid[idx] = 1;
    }
  }
  return cf;
}

inline Vec metric_trace(const MetricField& f) {
  Vec t(f.g11.size());
  for (size_t i = 0; i < t.size(); ++i) t[i] = f.g11[i] + f.g22[i];
  return t;
}

// (sum of covariance eigenvalues)^2 / (sum of squares), computed through the
// trace identities tr C and tr C^2 = |C|_F^2 so no eigensolve is needed.
inline double participation_ratio(const Mat& activations) {
  if (activations.rows < 2) throw std::invalid_argument("participation ratio needs >= 2 rows");
  const int n = activations.rows, d = activations.cols;
  Vec mean(d, 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c) mean[c] += activations(r, c);
  for (double& m : mean) m /= n;
  Mat cov(d, d);
  for (int r = 0; r < n; ++r)
    for (int a = 0; a < d; ++a) {
      const double va = activations(r, a) - mean[a];
      for (int b = a; b < d; ++b) cov(a, b) += va * (activations(r, b) - mean[b]);
    }
  double tr = 0.0, fro2 = 0.0;
  for (int a = 0; a < d; ++a) {
    tr += cov(a, a) / n;
    for (int b = a; b < d; ++b) {
      const double v = cov(a, b) / n;
      fro2 += a == b ? v * v : 2.0 * v * v;
    }
  }
  if (tr * tr <= 1e-24) throw std::domain_error("participation ratio undefined for constant activations");
  return tr * tr / fro2;
}

inline CurvatureSummary mean_curvature_summary(const CurvatureField& f) {
  CurvatureSummary s;
  double sum = 0.0;
  int count = 0;
  for (size_t i = 0; i < f.k.size(); ++i) {
    if (!f.valid[i]) continue;
    sum += f.k[i];
    ++count;
    if (std::abs(f.k[i]) >= s.max_abs_k) {
      s.max_abs_k = std::abs(f.k[i]);
      s.argmax = f.grid.points[i];
    }
  }
  if (count == 0) throw std::invalid_argument("curvature field has no valid points");
  s.mean_k = sum / count;
  return s;
}

}  // namespace manigeo
