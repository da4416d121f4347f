#pragma once

// Closed-form learning theory for the two-layer linear network on the torus
// AND task: analytic and Monte-Carlo correlation matrices, the single learned
// mode, the logistic trajectory of its projection, a decoupled balanced
// initializer that keeps off-mode weights frozen under gradient descent, and
// the predicted metric trajectory.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "manigeo/geometry.hpp"
#include "manigeo/manifolds.hpp"
#include "manigeo/network.hpp"
#include "manigeo/numerics.hpp"
#include "manigeo/tasks.hpp"

namespace manigeo {

struct ModeDecomposition {
  Mat sigma11;  // input correlation, 4x4
  Mat sigma31;  // input-target correlation, 1x4
  double s1 = 0.0;
  Vec v1;
  double S = 0.0;  // effective singular value 2*s1
};

struct Trajectory {
  std::vector<int> times;
  Vec u;
  double tau = 0.0;
  double u0 = 0.0;
};

// Exact correlations of the uniform torus AND task at alpha = 0. Only that
// task has a closed form here.
inline ModeDecomposition analytic_correlations(const TaskSpec& spec) {
  if (spec.gate != Gate::AND || spec.domain != Domain::torus || spec.alpha != 0.0)
    throw std::invalid_argument("analytic correlations cover the torus AND task at alpha = 0");
  ModeDecomposition m;
  m.sigma11 = Mat::identity(4);
  for (int i = 0; i < 4; ++i) m.sigma11(i, i) = 0.5;
  m.sigma31 = Mat(1, 4);
  m.sigma31(0, 1) = 1.0 / kTwoPi;
  m.sigma31(0, 3) = 1.0 / kTwoPi;
  m.s1 = 1.0 / (std::sqrt(2.0) * kPi);
  m.v1 = {0.0, 1.0 / std::sqrt(2.0), 0.0, 1.0 / std::sqrt(2.0)};
  m.S = 2.0 * m.s1;
  return m;
}

// Monte-Carlo estimates of E[x x^T] and E[y x^T] over uniform angles.
inline std::pair<Mat, Mat> empirical_correlations(const TaskSpec& spec, int n_samples,
                                                  RngState& rng) {
  if (n_samples < 1000) throw std::invalid_argument("need at least 1000 samples");
  Mat s11(4, 4), s31(1, 4);
  const double inv_n = 1.0 / n_samples;
  for (int s = 0; s < n_samples; ++s) {
    const AnglePoint p(kTwoPi * rng.uniform01(), kTwoPi * rng.uniform01());
    const Vec x = embed_torus(p);
    const double y = label(spec, p);
    for (int i = 0; i < 4; ++i) {
      s31(0, i) += y * x[i] * inv_n;
      for (int j = 0; j < 4; ++j) s11(i, j) += x[i] * x[j] * inv_n;
    }
  }
  return {std::move(s11), std::move(s31)};
}

// u(t) = S e^{St/tau} / (e^{St/tau} - 1 + S/u0), in the overflow-safe form
// u = S / (1 + e^{-St/tau} (S/u0 - 1)).
inline double u_closed_form(double t, double S, double tau, double u0) {
  if (!(u0 > 0.0)) throw std::invalid_argument("u0 must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (t == 0.0) return u0;
  return S / (1.0 + std::exp(-S * t / tau) * (S / u0 - 1.0));
}

inline Trajectory closed_form_trajectory(const std::vector<int>& times, double S, double tau,
                                         double u0) {
  Trajectory tr;
  tr.times = times;
  tr.tau = tau;
  tr.u0 = u0;
  tr.u.reserve(times.size());
  for (int t : times) tr.u.push_back(u_closed_form(t, S, tau, u0));
  return tr;
}

// W2 W1 v1 from the raw weight matrices of a 2-layer net.
inline double mode_projection(const Mlp& net, const Vec& v1) {
  if (net.layers.size() != 2 || net.layers[1].w.rows != 1 ||
      net.layers[0].w.cols != static_cast<int>(v1.size()))
    throw std::invalid_argument("mode projection needs a 2-layer net matching v1");
  return matvec(net.layers[1].w, matvec(net.layers[0].w, v1)).front();
}

// Balanced two-layer init decoupled from the mode: W1 = a v1^T + W_perp with
// the columns of W_perp orthogonal to both v1 (input side) and a (hidden
// side), W2 = a^T. Gradient descent then moves only the a-component, so the
// off-mode weights stay frozen to roundoff.
inline Mlp balanced_decoupled_init(int n_hidden, double sigma, uint64_t seed, const Vec& v1,
                                   Activation hidden_act = Activation::identity) {
  if (n_hidden < 1) throw std::invalid_argument("need at least one hidden unit");
  if (!(sigma > 0.0)) throw std::invalid_argument("init sigma must be positive");
  const int n_in = static_cast<int>(v1.size());
  RngState rng(seed);
  Mat w1(n_hidden, n_in);
  Vec a(n_hidden);
  double a_norm = 0.0;
  while (a_norm <= 1e-8) {
    for (double& v : w1.data) v = sigma * rng.gauss() + 0.0;
    for (int r = 0; r < n_hidden; ++r) {
      double s = 0.0;
      for (int c = 0; c < n_in; ++c) s += w1(r, c) * v1[c];
      a[r] = s;
    }
    a_norm = norm2(a);
  }
  // remove the v1 component, then the a component of what is left
  for (int r = 0; r < n_hidden; ++r)
    for (int c = 0; c < n_in; ++c) w1(r, c) -= a[r] * v1[c];
  for (int c = 0; c < n_in; ++c) {
    double overlap = 0.0;
    for (int r = 0; r < n_hidden; ++r) overlap += a[r] * w1(r, c);
    overlap /= a_norm * a_norm;
    for (int r = 0; r < n_hidden; ++r) w1(r, c) -= overlap * a[r];
  }
  for (int r = 0; r < n_hidden; ++r)
    for (int c = 0; c < n_in; ++c) w1(r, c) += a[r] * v1[c];

  Mlp net;
  net.output_activation = OutputActivation::identity;
  net.init_sigma = sigma;
  Layer l1;
  l1.w = std::move(w1);
  l1.b = Vec(n_hidden, 0.0);
  l1.act = hidden_act;
  Layer l2;
  l2.w = Mat(1, n_hidden);
  for (int r = 0; r < n_hidden; ++r) l2.w(0, r) = a[r];
  l2.b = Vec(1, 0.0);
  l2.act = Activation::identity;
  net.layers = {std::move(l1), std::move(l2)};
  return net;
}

// Metric contribution of the first-layer weights orthogonal to the mode.
inline MetricField perp_metric_field(const Mat& w1, const Vec& v1, const AngleGrid& grid) {
  Mat w_perp = w1;
  for (int r = 0; r < w1.rows; ++r) {
    double proj = 0.0;
    for (int c = 0; c < w1.cols; ++c) proj += w1(r, c) * v1[c];
    for (int c = 0; c < w1.cols; ++c) w_perp(r, c) -= proj * v1[c];
  }
  Mlp net;
  net.output_activation = OutputActivation::identity;
  Layer l;
  l.b = Vec(w_perp.rows, 0.0);
  l.w = std::move(w_perp);
  l.act = Activation::identity;
  net.layers.push_back(std::move(l));
  return pullback_metric(net, 0, grid);
}

// G(t) = a^2/2 [[cos^2 t1, cos t1 cos t2], [., cos^2 t2]] + G_perp.
inline MetricField predict_metric_trajectory(double a_t, const MetricField& w_perp_metric) {
  MetricField f = w_perp_metric;
  const double half_a2 = 0.5 * a_t * a_t;
  for (size_t i = 0; i < f.grid.points.size(); ++i) {
    const double c1 = std::cos(f.grid.points[i].theta1);
    const double c2 = std::cos(f.grid.points[i].theta2);
    f.g11[i] += half_a2 * c1 * c1;
    f.g12[i] += half_a2 * c1 * c2;
    f.g22[i] += half_a2 * c2 * c2;
  }
  return f;
}

// Mode magnitude in hidden space, the a(t) entering the metric prediction.
inline double mode_magnitude(const Mlp& net, const Vec& v1) {
  if (net.layers.empty() || net.layers[0].w.cols != static_cast<int>(v1.size()))
    throw std::invalid_argument("first layer does not match v1");
  return norm2(matvec(net.layers[0].w, v1));
}

// Largest relative deviation between recorded mode projections and the
// closed form, over snapshots past after_epoch; u0 is read from epoch 0.
inline double max_relative_deviation(const TrainRecord& record, double S, double tau,
                                     int after_epoch) {
  if (record.snapshots.empty()) throw std::invalid_argument("empty training record");
  const double u0 = record.snapshots.front().u;
  if (!(u0 > 0.0)) throw std::invalid_argument("record has no mode projection at epoch 0");
  double worst = 0.0;
  for (const TrainSnapshot& s : record.snapshots) {
    if (s.epoch <= after_epoch) continue;
    const double theory = u_closed_form(s.epoch, S, tau, u0);
    worst = std::max(worst, std::abs(s.u - theory) / std::abs(theory));
  }
  return worst;
}

}  // namespace manigeo
