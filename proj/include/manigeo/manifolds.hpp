#pragma once

// Input manifolds (flat torus, bounded plane), their embeddings into network
// input space, embedding Jacobians, on-manifold noise, and isometric
// re-embedding into higher dimension.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "manigeo/numerics.hpp"

namespace manigeo {

// Reduces an angle into [0, 2pi). Result is never negative.
inline double wrap_angle(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

struct AnglePoint {
  double theta1 = 0.0;
  double theta2 = 0.0;

  AnglePoint() = default;
  AnglePoint(double t1, double t2) : theta1(wrap_angle(t1)), theta2(wrap_angle(t2)) {}
};

enum class Domain { torus, plane };

inline std::string domain_name(Domain d) { return d == Domain::torus ? "torus" : "plane"; }

// Axis-aligned box in angle space. For plane grids it is the sampling window;
// for torus regions the extents are read modulo 2pi.
struct AngleBox {
  double lo1 = 0.0;
  double hi1 = kTwoPi;
  double lo2 = 0.0;
  double hi2 = kTwoPi;
};

// Square sampling lattice. Torus grids offset by half a cell so no point lands
// on a class boundary and the duplicate periodic endpoint is excluded. Plane
// grids include both box endpoints.
struct AngleGrid {
  int resolution = 0;
  Domain domain = Domain::torus;
  AngleBox box;
  std::vector<AnglePoint> points;  // row-major: index = i * resolution + j, theta1 = axis i

  int index(int i, int j) const { return i * resolution + j; }
  int size() const { return resolution * resolution; }

  // Grid spacing along theta1 (axis 0) and theta2 (axis 1).
  double step(int axis) const {
    if (domain == Domain::torus) return kTwoPi / resolution;
    const double lo = axis == 0 ? box.lo1 : box.lo2;
    const double hi = axis == 0 ? box.hi1 : box.hi2;
    return (hi - lo) / (resolution - 1);
  }
};

inline AngleGrid make_torus_grid(int resolution) {
  if (resolution < 2) throw std::invalid_argument("torus grid needs resolution >= 2");
  AngleGrid g;
  g.resolution = resolution;
  g.domain = Domain::torus;
  g.points.reserve(static_cast<size_t>(resolution) * resolution);
  for (int i = 0; i < resolution; ++i) {
    const double t1 = kTwoPi * (i + 0.5) / resolution;
    for (int j = 0; j < resolution; ++j) {
      const double t2 = kTwoPi * (j + 0.5) / resolution;
      g.points.emplace_back(t1, t2);
    }
  }
  return g;
}

inline AngleGrid make_plane_grid(int resolution, const AngleBox& box = AngleBox{}) {
  if (resolution < 2) throw std::invalid_argument("plane grid needs resolution >= 2");
  if (!(box.hi1 > box.lo1) || !(box.hi2 > box.lo2))
    throw std::invalid_argument("plane grid box must have positive extent");
  AngleGrid g;
  g.resolution = resolution;
  g.domain = Domain::plane;
  g.box = box;
  g.points.reserve(static_cast<size_t>(resolution) * resolution);
  for (int i = 0; i < resolution; ++i) {
    const double t1 = box.lo1 + (box.hi1 - box.lo1) * i / (resolution - 1);
    for (int j = 0; j < resolution; ++j) {
      const double t2 = box.lo2 + (box.hi2 - box.lo2) * j / (resolution - 1);
      AnglePoint p;  // keep raw coordinates, plane boxes may exceed [0, 2pi)
      p.theta1 = t1;
      p.theta2 = t2;
      g.points.push_back(p);
    }
  }
  return g;
}

// [cos t1, sin t1, cos t2, sin t2]; each circle lands on the unit circle.
inline Vec embed_torus(const AnglePoint& p) {
  return {std::cos(p.theta1), std::sin(p.theta1), std::cos(p.theta2), std::sin(p.theta2)};
}

// Affine rescale of the box onto [-1, 1]^2.
inline Vec embed_plane(const AnglePoint& p, const AngleBox& box = AngleBox{}) {
  const double x1 = 2.0 * (p.theta1 - box.lo1) / (box.hi1 - box.lo1) - 1.0;
  const double x2 = 2.0 * (p.theta2 - box.lo2) / (box.hi2 - box.lo2) - 1.0;
  return {x1, x2};
}

inline Vec embed_point(const AnglePoint& p, Domain domain, const AngleBox& box = AngleBox{}) {
  return domain == Domain::torus ? embed_torus(p) : embed_plane(p, box);
}

// d(embedding)/d(theta). Torus columns are orthonormal everywhere, so the
// flat-torus pullback metric is the identity.
inline Mat embedding_jacobian(const AnglePoint& p, Domain domain,
                              const AngleBox& box = AngleBox{}) {
  if (domain == Domain::torus) {
    Mat j(4, 2);
    j(0, 0) = -std::sin(p.theta1);
    j(1, 0) = std::cos(p.theta1);
    j(2, 1) = -std::sin(p.theta2);
    j(3, 1) = std::cos(p.theta2);
    return j;
  }
  Mat j(2, 2);
  j(0, 0) = 2.0 / (box.hi1 - box.lo1);
  j(1, 1) = 2.0 / (box.hi2 - box.lo2);
  return j;
}

// Wrapped-normal perturbation of both angles, sampled as Gaussian-then-mod.
inline AnglePoint add_tangent_noise(const AnglePoint& p, double sigma, RngState& rng) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  if (sigma == 0.0) return p;
  const double d1 = sigma * rng.gauss();
  const double d2 = sigma * rng.gauss();
  return AnglePoint(p.theta1 + d1, p.theta2 + d2);
}

// Isometric re-embedding x -> Qx for Q with orthonormal columns.
inline Vec embed_highdim(const Vec& x, const Mat& q) {
  if (q.cols != static_cast<int>(x.size()))
    throw std::invalid_argument("projection width does not match input dimension");
  return matvec(q, x);
}

}  // namespace manigeo
