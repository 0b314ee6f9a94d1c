#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>

namespace gvf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

// Axis-aligned box, used by scans and Monte-Carlo sampling.
struct Box {
  Vec lo;
  Vec hi;
};

// Principal value in (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r = kPi;
  return r;
}

// Central difference of a scalar-valued map.
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Central difference of a vector-valued map of a scalar.
inline Vec central_diff_vec(const std::function<Vec(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Column-wise central-difference Jacobian of a map R^m -> R^p.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double step = 1e-6) {
  const Vec fx = f(x);
  Mat J(fx.size(), x.size());
  for (int j = 0; j < x.size(); ++j) {
    const double h = step * std::max(1.0, std::abs(x[j]));
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

// splitmix64: cheap stateless hash used for reproducible random access
// (disturbance noise windows, derived sweep seeds).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double uniform_from_bits(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;  // [0,1)
}

// Golden-section minimization of a unimodal scalar function on [lo, hi].
inline double golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                                 double tol = 1e-10, int max_iter = 200) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace gvf
