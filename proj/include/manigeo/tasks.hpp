#pragma once

// Boolean targets on the two angular variables: latent boundary functions,
// gate labels with a shiftable boundary, the rotated optimal weight pair, and
// hold-out region masks.

#include <stdexcept>
#include <string>
#include <vector>

#include "manigeo/manifolds.hpp"

namespace manigeo {

enum class Gate { XOR, AND, OR };

inline std::string gate_name(Gate g) {
  switch (g) {
    case Gate::XOR: return "xor";
    case Gate::AND: return "and";
    default: return "or";
  }
}

struct TaskSpec {
  Gate gate = Gate::XOR;
  double alpha = 0.0;  // boundary shift, kept in [0, 2pi)
  Domain domain = Domain::torus;

  TaskSpec() = default;
  TaskSpec(Gate g, double a, Domain d) : gate(g), alpha(wrap_angle(a)), domain(d) {}
};

struct LabeledPoint {
  AnglePoint point;
  int label = 0;
};

// Signed distance-like latent whose sign encodes the class bit.
inline double latent(double theta, double alpha) { return std::sin(theta - alpha); }

// Half-open convention: theta - alpha in [0, pi) is the positive class. Using
// the wrapped difference directly keeps boundary points exact where
// sin(theta - alpha) would round away from zero.
inline bool class_bit(double theta, double alpha) { return wrap_angle(theta - alpha) < kPi; }

inline int label(const TaskSpec& spec, const AnglePoint& p) {
  const bool b1 = class_bit(p.theta1, spec.alpha);
  const bool b2 = class_bit(p.theta2, spec.alpha);
  switch (spec.gate) {
    case Gate::XOR: return b1 != b2 ? 1 : 0;
    case Gate::AND: return b1 && b2 ? 1 : 0;
    default: return b1 || b2 ? 1 : 0;
  }
}

// Weight pair on (cos t, sin t) inputs that reproduces the shifted latent:
// w_cos cos t + w_sin sin t = sin(t - alpha). Unit norm for all alpha.
inline std::pair<double, double> optimal_weight_pair(double alpha) {
  return {-std::sin(alpha), std::cos(alpha)};
}

namespace detail {

// Strict interior test on one axis. Torus axes wrap, so a box may straddle 0;
// extent 2pi means the whole circle.
inline bool axis_inside(double theta, double lo, double extent, bool periodic) {
  if (periodic) {
    if (extent >= kTwoPi) return true;
    const double d = wrap_angle(theta - lo);
    return d > 0.0 && d < extent;
  }
  return theta > lo && theta < lo + extent;
}

}  // namespace detail

// True marks points inside the held-out region (excluded from training).
inline std::vector<char> holdout_mask(const AngleGrid& grid, const AngleBox& region) {
  const double e1 = region.hi1 - region.lo1;
  const double e2 = region.hi2 - region.lo2;
  if (!(e1 >= 0.0) || !(e2 >= 0.0)) throw std::invalid_argument("holdout region is empty");
  const bool periodic = grid.domain == Domain::torus;
  if (periodic && (e1 > kTwoPi || e2 > kTwoPi))
    throw std::invalid_argument("holdout region exceeds the torus domain");
  std::vector<char> mask(grid.points.size());
  for (size_t i = 0; i < grid.points.size(); ++i) {
    const AnglePoint& p = grid.points[i];
    mask[i] = detail::axis_inside(p.theta1, region.lo1, e1, periodic) &&
              detail::axis_inside(p.theta2, region.lo2, e2, periodic);
  }
  return mask;
}

}  // namespace manigeo
