#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gvf/errors.hpp"
#include "gvf/numeric.hpp"

namespace gvf {

// A desired path given by n coordinate functions of a scalar parameter,
// together with exact first and second derivatives. All maps are total:
// they must be defined for every finite w.
struct ParametricPath {
  int n = 0;
  std::function<Vec(double)> f;
  std::function<Vec(double)> f1;
  std::function<Vec(double)> f2;
  std::string name;
};

struct PathPoint {
  Vec point;
  Vec d1;
  Vec d2;
};

inline PathPoint eval_path(const ParametricPath& path, double w) {
  if (!std::isfinite(w)) throw std::domain_error("eval_path: non-finite parameter w");
  return PathPoint{path.f(w), path.f1(w), path.f2(w)};
}

// Planar rotation by alpha (first two coordinates) plus a translation.
// Offsets beyond the path dimension are ignored.
struct AffinePose {
  double alpha = 0.0;                        // radians
  Eigen::Vector3d offset{0.0, 0.0, 0.0};     // meters
};

// Rotation acts on f, f' and f''; the translation only on f, since the
// derivative of a constant offset is zero.
inline ParametricPath apply_affine(const ParametricPath& path, const AffinePose& pose) {
  if (path.n != 2 && path.n != 3)
    throw parameter_error("apply_affine: path dimension must be 2 or 3");
  const int n = path.n;
  const double c = std::cos(pose.alpha);
  const double s = std::sin(pose.alpha);
  Vec shift = pose.offset.head(n);
  auto rotate = [c, s](Vec v) {
    const double x = v[0], y = v[1];
    v[0] = c * x - s * y;
    v[1] = s * x + c * y;
    return v;
  };
  ParametricPath out;
  out.n = n;
  out.name = path.name;
  out.f = [f = path.f, rotate, shift](double w) { return Vec(rotate(f(w)) + shift); };
  out.f1 = [f1 = path.f1, rotate](double w) { return rotate(f1(w)); };
  out.f2 = [f2 = path.f2, rotate](double w) { return rotate(f2(w)); };
  return out;
}

// Linear re-parameterization g(w) = param_gain * w. The paper overloads the
// symbol beta for this gain and for the heading error; here the two live in
// different modules under different names.
struct Reparameterization {
  double param_gain = 1.0;
};

inline ParametricPath reparameterize(const ParametricPath& path, const Reparameterization& rep) {
  if (!(rep.param_gain > 0.0))
    throw parameter_error("reparameterize: param_gain must be positive");
  const double b = rep.param_gain;
  ParametricPath out;
  out.n = path.n;
  out.name = path.name;
  out.f = [f = path.f, b](double w) { return f(b * w); };
  out.f1 = [f1 = path.f1, b](double w) { return Vec(b * f1(b * w)); };
  out.f2 = [f2 = path.f2, b](double w) { return Vec(b * b * f2(b * w)); };
  return out;
}

// Embed a planar path at z = 0; a vertical offset comes from apply_affine.
inline ParametricPath lift_to_3d(const ParametricPath& path) {
  if (path.n != 2) throw parameter_error("lift_to_3d: expected a planar path");
  auto pad = [](const Vec& v) {
    Vec out(3);
    out << v[0], v[1], 0.0;
    return out;
  };
  ParametricPath out;
  out.n = 3;
  out.name = path.name;
  out.f = [f = path.f, pad](double w) { return pad(f(w)); };
  out.f1 = [f1 = path.f1, pad](double w) { return pad(f1(w)); };
  out.f2 = [f2 = path.f2, pad](double w) { return pad(f2(w)); };
  return out;
}

// The unbounded (n+1)-dimensional curve w -> (f(w), w) traced by the zero
// set of the stacked surface functions.
inline ParametricPath lifted_path(const ParametricPath& path) {
  const int n = path.n;
  ParametricPath out;
  out.n = n + 1;
  out.name = path.name + "-lifted";
  out.f = [f = path.f, n](double w) {
    Vec v(n + 1);
    v.head(n) = f(w);
    v[n] = w;
    return v;
  };
  out.f1 = [f1 = path.f1, n](double w) {
    Vec v(n + 1);
    v.head(n) = f1(w);
    v[n] = 1.0;
    return v;
  };
  out.f2 = [f2 = path.f2, n](double w) {
    Vec v(n + 1);
    v.head(n) = f2(w);
    v[n] = 0.0;
    return v;
  };
  return out;
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

using PathParams = std::map<std::string, std::vector<double>>;

namespace detail {

inline double scalar_param(const PathParams& p, const std::string& key, double fallback,
                           bool required = false) {
  auto it = p.find(key);
  if (it == p.end()) {
    if (required) throw parameter_error("catalog_make: missing parameter '" + key + "'");
    return fallback;
  }
  if (it->second.size() != 1)
    throw parameter_error("catalog_make: parameter '" + key + "' must be a scalar");
  return it->second[0];
}

inline std::vector<double> vector_param(const PathParams& p, const std::string& key,
                                        std::vector<double> fallback, bool required = false) {
  auto it = p.find(key);
  if (it == p.end()) {
    if (required) throw parameter_error("catalog_make: missing parameter '" + key + "'");
    return fallback;
  }
  return it->second;
}

inline void reject_unknown(const PathParams& p, std::initializer_list<const char*> known) {
  for (const auto& [key, value] : p) {
    (void)value;
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) throw parameter_error("catalog_make: unknown parameter '" + key + "'");
  }
}

}  // namespace detail

inline ParametricPath make_circle(double r) {
  if (!(r > 0.0)) throw parameter_error("circle: radius must be positive");
  ParametricPath p;
  p.n = 2;
  p.name = "circle";
  p.f = [r](double w) { return Vec(Eigen::Vector2d(r * std::cos(w), r * std::sin(w))); };
  p.f1 = [r](double w) { return Vec(Eigen::Vector2d(-r * std::sin(w), r * std::cos(w))); };
  p.f2 = [r](double w) { return Vec(Eigen::Vector2d(-r * std::cos(w), -r * std::sin(w))); };
  return p;
}

inline ParametricPath make_ellipse(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw parameter_error("ellipse: semi-axes must be positive");
  ParametricPath p;
  p.n = 2;
  p.name = "ellipse";
  p.f = [a, b](double w) { return Vec(Eigen::Vector2d(a * std::cos(w), b * std::sin(w))); };
  p.f1 = [a, b](double w) { return Vec(Eigen::Vector2d(-a * std::sin(w), b * std::cos(w))); };
  p.f2 = [a, b](double w) { return Vec(Eigen::Vector2d(-a * std::cos(w), -b * std::sin(w))); };
  return p;
}

inline ParametricPath make_line(const Vec& point, const Vec& direction) {
  if (point.size() != direction.size())
    throw parameter_error("line: point and direction dimensions differ");
  if (point.size() != 2 && point.size() != 3)
    throw parameter_error("line: dimension must be 2 or 3");
  if (direction.norm() == 0.0) throw parameter_error("line: direction must be nonzero");
  ParametricPath p;
  p.n = static_cast<int>(point.size());
  p.name = "line";
  const Vec zero = Vec::Zero(p.n);
  p.f = [point, direction](double w) { return Vec(point + w * direction); };
  p.f1 = [direction](double) { return direction; };
  p.f2 = [zero](double) { return zero; };
  return p;
}

// Planar trefoil traced in 3D at zero altitude:
//   f1 = cos(w w1) (a cos(w w2) + b),  f2 = sin(w w1) (a cos(w w2) + b),  f3 = 0.
inline ParametricPath make_trefoil(double a, double b, double w1, double w2) {
  ParametricPath p;
  p.n = 3;
  p.name = "trefoil";
  p.f = [=](double w) {
    const double radial = a * std::cos(w * w2) + b;
    Vec v(3);
    v << std::cos(w * w1) * radial, std::sin(w * w1) * radial, 0.0;
    return v;
  };
  p.f1 = [=](double w) {
    const double c1 = std::cos(w * w1), s1 = std::sin(w * w1);
    const double c2 = std::cos(w * w2), s2 = std::sin(w * w2);
    const double radial = a * c2 + b;
    const double radial_d = -a * w2 * s2;
    Vec v(3);
    v << -w1 * s1 * radial + c1 * radial_d, w1 * c1 * radial + s1 * radial_d, 0.0;
    return v;
  };
  p.f2 = [=](double w) {
    const double c1 = std::cos(w * w1), s1 = std::sin(w * w1);
    const double c2 = std::cos(w * w2), s2 = std::sin(w * w2);
    const double radial = a * c2 + b;
    const double radial_d = -a * w2 * s2;
    const double radial_dd = -a * w2 * w2 * c2;
    Vec v(3);
    v << -w1 * w1 * c1 * radial - 2.0 * w1 * s1 * radial_d + c1 * radial_dd,
        -w1 * w1 * s1 * radial + 2.0 * w1 * c1 * radial_d + s1 * radial_dd, 0.0;
    return v;
  };
  return p;
}

// 3D Lissajous figure: f_i = c_i cos(w_i w + d_i).
inline ParametricPath make_lissajous3d(const Eigen::Vector3d& c, const Eigen::Vector3d& omega,
                                       const Eigen::Vector3d& delta) {
  ParametricPath p;
  p.n = 3;
  p.name = "lissajous3d";
  p.f = [=](double w) {
    Vec v(3);
    for (int i = 0; i < 3; ++i) v[i] = c[i] * std::cos(omega[i] * w + delta[i]);
    return v;
  };
  p.f1 = [=](double w) {
    Vec v(3);
    for (int i = 0; i < 3; ++i) v[i] = -c[i] * omega[i] * std::sin(omega[i] * w + delta[i]);
    return v;
  };
  p.f2 = [=](double w) {
    Vec v(3);
    for (int i = 0; i < 3; ++i) v[i] = -c[i] * omega[i] * omega[i] * std::cos(omega[i] * w + delta[i]);
    return v;
  };
  return p;
}

// Named catalog. Trefoil and Lissajous defaults are the values flown in the
// reference experiments so reproduction runs need no manual entry.
inline ParametricPath catalog_make(const std::string& name, const PathParams& params = {}) {
  if (name == "circle") {
    detail::reject_unknown(params, {"r"});
    return make_circle(detail::scalar_param(params, "r", 1.0));
  }
  if (name == "ellipse") {
    detail::reject_unknown(params, {"a", "b"});
    return make_ellipse(detail::scalar_param(params, "a", 0.0, true),
                        detail::scalar_param(params, "b", 0.0, true));
  }
  if (name == "line") {
    detail::reject_unknown(params, {"point", "direction"});
    auto pt = detail::vector_param(params, "point", {}, true);
    auto dir = detail::vector_param(params, "direction", {}, true);
    return make_line(Eigen::Map<const Vec>(pt.data(), static_cast<int>(pt.size())),
                     Eigen::Map<const Vec>(dir.data(), static_cast<int>(dir.size())));
  }
  if (name == "trefoil") {
    detail::reject_unknown(params, {"a", "b", "omega1", "omega2"});
    return make_trefoil(detail::scalar_param(params, "a", 80.0),
                        detail::scalar_param(params, "b", 160.0),
                        detail::scalar_param(params, "omega1", 0.02),
                        detail::scalar_param(params, "omega2", 0.03));
  }
  if (name == "lissajous3d") {
    detail::reject_unknown(params, {"c", "omega", "delta"});
    auto c = detail::vector_param(params, "c", {225.0, 225.0, -20.0});
    auto om = detail::vector_param(params, "omega", {1.0, 2.0, 2.0});
    auto de = detail::vector_param(params, "delta", {0.0, kPi / 2.0, 0.0});
    if (c.size() != 3 || om.size() != 3 || de.size() != 3)
      throw parameter_error("lissajous3d: c, omega, delta must each have 3 entries");
    return make_lissajous3d(Eigen::Vector3d(c[0], c[1], c[2]), Eigen::Vector3d(om[0], om[1], om[2]),
                            Eigen::Vector3d(de[0], de[1], de[2]));
  }
  throw catalog_error("catalog_make: unknown path type '" + name + "'");
}

}  // namespace gvf
