#pragma once

// Circular Bayesian posterior for a noisy angle measurement: the true angle
// is uniform on the circle, the class bit is its semicircle, and the
// measurement carries wrapped Gaussian noise. Includes the truncated erf-sum
// posterior, a Monte-Carlo estimator of the same quantity, and the aligned
// output slice of a trained network.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "manigeo/manifolds.hpp"
#include "manigeo/network.hpp"
#include "manigeo/numerics.hpp"
#include "manigeo/tasks.hpp"

namespace manigeo {

// Reduce into [-pi, pi).
inline double wrap_to_pi(double x) { return wrap_angle(x + kPi) - kPi; }

// P(A=1 | measured offset c), truncated at |k| <= k_max wrapped copies.
inline double posterior(double c, double sigma, int k_max) {
  if (!(sigma > 0.0)) throw std::invalid_argument("posterior needs sigma > 0");
  if (k_max < 1) throw std::invalid_argument("posterior needs k_max >= 1");
  const double s = sigma * std::sqrt(2.0);
  double num = 0.0, den = 0.0;
  for (int k = -k_max; k <= k_max; ++k) {
    const double shared = std::erf((kPi - c + kTwoPi * k) / s);
    num += shared + std::erf((c - kTwoPi * k) / s);
    den += shared + std::erf((kPi + c - kTwoPi * k) / s);
  }
  return num / den;
}

struct PosteriorCurve {
  Vec c;  // uniform in [-pi, pi)
  double sigma = 0.0;
  int k_max = 1;
  Vec values;
};

inline PosteriorCurve posterior_curve(double sigma, int k_max, int resolution) {
  if (resolution < 2) throw std::invalid_argument("curve needs resolution >= 2");
  PosteriorCurve curve;
  curve.sigma = sigma;
  curve.k_max = k_max;
  curve.c.reserve(resolution);
  curve.values.reserve(resolution);
  for (int i = 0; i < resolution; ++i) {
    const double c = -kPi + kTwoPi * i / resolution;
    curve.c.push_back(c);
    curve.values.push_back(posterior(c, sigma, k_max));
  }
  return curve;
}

struct SliceCurve {
  Vec c;  // boundary-relative coordinate, c = theta1 - alpha
  Vec values;
};

// Network output along the theta1 circle at fixed theta2, aligned so the
// values estimate P(A=1|c) for the theta1 bit. When the fixed theta2 sits in
// the positive class, an XOR output answers the negated bit, so it is
// flipped back.
inline SliceCurve network_posterior_slice(const Mlp& net, const TaskSpec& spec,
                                          double theta2_fixed, const Vec& c_values) {
  if (c_values.size() < 2) throw std::invalid_argument("slice needs >= 2 sample points");
  const bool flip = spec.gate == Gate::XOR && class_bit(theta2_fixed, spec.alpha);
  SliceCurve curve;
  curve.c = c_values;
  curve.values.reserve(c_values.size());
  for (double c : c_values) {
    const AnglePoint p(spec.alpha + c, theta2_fixed);
    const double out = forward(net, embed_torus(p)).output;
    curve.values.push_back(flip ? 1.0 - out : out);
  }
  return curve;
}

inline SliceCurve network_posterior_slice(const Mlp& net, const TaskSpec& spec,
                                          double theta2_fixed, int resolution) {
  if (resolution < 2) throw std::invalid_argument("slice needs resolution >= 2");
  Vec c(resolution);
  for (int i = 0; i < resolution; ++i) c[i] = -kPi + kTwoPi * i / resolution;
  return network_posterior_slice(net, spec, theta2_fixed, c);
}

// Monte-Carlo estimate of the posterior, binned over c. freq holds the
// empirical class frequency per bin; expected holds the analytic posterior
// averaged over the same samples, with its binomial standard error, so the
// two columns are directly comparable.
struct McPosterior {
  Vec c_centers;
  Vec freq;
  Vec expected;
  Vec se;
  std::vector<int> counts;
};

inline McPosterior mc_posterior(double sigma, int n_samples, int bins, int k_max,
                                RngState& rng) {
  if (!(sigma > 0.0)) throw std::invalid_argument("mc posterior needs sigma > 0");
  if (n_samples < bins) throw std::invalid_argument("too few samples for the bin count");
  McPosterior mc;
  mc.c_centers.resize(bins);
  mc.freq.assign(bins, 0.0);
  mc.expected.assign(bins, 0.0);
  mc.se.assign(bins, 0.0);
  mc.counts.assign(bins, 0);
  Vec hits(bins, 0.0), sum_p(bins, 0.0), sum_var(bins, 0.0);
  for (int s = 0; s < n_samples; ++s) {
    const double delta = -kPi + kTwoPi * rng.uniform01();
    const int a = delta >= 0.0 ? 1 : 0;
    const double c = wrap_to_pi(delta + sigma * rng.gauss());
    int b = static_cast<int>((c + kPi) / kTwoPi * bins);
    if (b < 0) b = 0;
    if (b >= bins) b = bins - 1;
    ++mc.counts[b];
    hits[b] += a;
    const double p = posterior(c, sigma, k_max);
    sum_p[b] += p;
    sum_var[b] += p * (1.0 - p);
  }
  for (int b = 0; b < bins; ++b) {
    mc.c_centers[b] = -kPi + kTwoPi * (b + 0.5) / bins;
    if (mc.counts[b] == 0) {
      mc.freq[b] = mc.expected[b] = mc.se[b] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    mc.freq[b] = hits[b] / mc.counts[b];
    mc.expected[b] = sum_p[b] / mc.counts[b];
    mc.se[b] = std::sqrt(sum_var[b]) / mc.counts[b];
  }
  return mc;
}

}  // namespace manigeo
