#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gvf/errors.hpp"
#include "gvf/numeric.hpp"
#include "gvf/path.hpp"

namespace gvf {

// Implicit description of a desired path in R^m as the intersection of
// m-1 hypersurfaces phi_i = 0. `grad` stacks the gradients as columns,
// `hess` supplies one Hessian per surface and may be absent for
// user-supplied stacks that lack second derivatives.
struct SurfaceStack {
  int m = 0;
  int count = 0;  // m - 1
  std::function<Vec(const Vec&)> phi;
  std::function<Mat(const Vec&)> grad;
  std::function<std::vector<Mat>(const Vec&)> hess;
  std::string name;

  bool has_hessians() const { return static_cast<bool>(hess); }
};

// Lifted stack for a parametric path: phi_i(xi) = L (x_i - f_i(g(w))) with
// g(w) = param_gain * w, on R^{n+1}. Gradients and Hessians are analytic.
inline SurfaceStack implicit_from_parametric(const ParametricPath& path, double L,
                                             const Reparameterization& rep) {
  if (!(L > 0.0) || L > 1.0)
    throw parameter_error("implicit_from_parametric: L must lie in (0, 1]");
  if (!(rep.param_gain > 0.0))
    throw parameter_error("implicit_from_parametric: param_gain must be positive");
  const int n = path.n;
  const double b = rep.param_gain;
  SurfaceStack s;
  s.m = n + 1;
  s.count = n;
  s.name = path.name + "-lifted";
  s.phi = [f = path.f, L, b, n](const Vec& xi) {
    const Vec fw = f(b * xi[n]);
    Vec e(n);
    for (int i = 0; i < n; ++i) e[i] = L * (xi[i] - fw[i]);
    return e;
  };
  s.grad = [f1 = path.f1, L, b, n](const Vec& xi) {
    const Vec d1 = f1(b * xi[n]);
    Mat N = Mat::Zero(n + 1, n);
    for (int i = 0; i < n; ++i) {
      N(i, i) = L;
      N(n, i) = -L * b * d1[i];
    }
    return N;
  };
  s.hess = [f2 = path.f2, L, b, n](const Vec& xi) {
    const Vec d2 = f2(b * xi[n]);
    std::vector<Mat> H(n, Mat::Zero(n + 1, n + 1));
    for (int i = 0; i < n; ++i) H[i](n, n) = -L * b * b * d2[i];
    return H;
  };
  return s;
}

// Stack assembled from user-supplied implicit functions. Gradients (and
// Hessians, when given) are checked against central finite differences at
// seeded sample points before the stack is returned.
inline SurfaceStack implicit_direct(int m, std::vector<std::function<double(const Vec&)>> phis,
                                    std::vector<std::function<Vec(const Vec&)>> grads,
                                    std::vector<std::function<Mat(const Vec&)>> hessians = {},
                                    double check_radius = 2.0, int check_samples = 64) {
  const int count = m - 1;
  if (static_cast<int>(phis.size()) != count || static_cast<int>(grads.size()) != count)
    throw shape_error("implicit_direct: need exactly m-1 surface functions and gradients");
  if (!hessians.empty() && static_cast<int>(hessians.size()) != count)
    throw shape_error("implicit_direct: Hessian list size mismatch");

  std::uint64_t state = 0x9b97f4a7c15ULL;
  for (int sample = 0; sample < check_samples; ++sample) {
    Vec xi(m);
    for (int i = 0; i < m; ++i) {
      state = splitmix64(state);
      xi[i] = (2.0 * uniform_from_bits(state) - 1.0) * check_radius;
    }
    for (int i = 0; i < count; ++i) {
      const Vec g = grads[i](xi);
      if (g.size() != m) throw shape_error("implicit_direct: gradient dimension mismatch");
      Vec g_fd(m);
      for (int j = 0; j < m; ++j) {
        const double h = 1e-5 * std::max(1.0, std::abs(xi[j]));
        Vec xp = xi, xm = xi;
        xp[j] += h;
        xm[j] -= h;
        g_fd[j] = (phis[i](xp) - phis[i](xm)) / (2.0 * h);
      }
      const double scale = std::max(1.0, g_fd.norm());
      if ((g - g_fd).norm() > 1e-4 * scale)
        throw validation_error("implicit_direct: gradient of phi_" + std::to_string(i + 1) +
                               " disagrees with finite differences");
      if (!hessians.empty()) {
        const Mat H = hessians[i](xi);
        std::function<Vec(const Vec&)> gfun = grads[i];
        const Mat H_fd = fd_jacobian(gfun, xi, 1e-5);
        if ((H - H_fd).norm() > 1e-4 * std::max(1.0, H_fd.norm()))
          throw validation_error("implicit_direct: Hessian of phi_" + std::to_string(i + 1) +
                                 " disagrees with finite differences");
      }
    }
  }

  SurfaceStack s;
  s.m = m;
  s.count = count;
  s.name = "implicit";
  s.phi = [phis, count](const Vec& xi) {
    Vec e(count);
    for (int i = 0; i < count; ++i) e[i] = phis[i](xi);
    return e;
  };
  s.grad = [grads, m, count](const Vec& xi) {
    Mat N(m, count);
    for (int i = 0; i < count; ++i) N.col(i) = grads[i](xi);
    return N;
  };
  if (!hessians.empty()) {
    s.hess = [hessians, count](const Vec& xi) {
      std::vector<Mat> H(count);
      for (int i = 0; i < count; ++i) H[i] = hessians[i](xi);
      return H;
    };
  }
  return s;
}

// Unit circle, phi = x^2 + y^2 - 1.
inline SurfaceStack circle_implicit_stack() {
  auto phi = [](const Vec& xi) { return xi[0] * xi[0] + xi[1] * xi[1] - 1.0; };
  auto grad = [](const Vec& xi) { return Vec(Eigen::Vector2d(2.0 * xi[0], 2.0 * xi[1])); };
  auto hess = [](const Vec&) { return Mat(2.0 * Mat::Identity(2, 2)); };
  auto s = implicit_direct(2, {phi}, {grad}, {hess});
  s.name = "circle-implicit";
  return s;
}

// Figure "8", phi = x^2 - 4 y^2 (1 - y^2); self-intersects at the origin.
inline SurfaceStack figure8_implicit_stack() {
  auto phi = [](const Vec& xi) {
    const double y2 = xi[1] * xi[1];
    return xi[0] * xi[0] - 4.0 * y2 * (1.0 - y2);
  };
  auto grad = [](const Vec& xi) {
    const double y = xi[1];
    return Vec(Eigen::Vector2d(2.0 * xi[0], -8.0 * y + 16.0 * y * y * y));
  };
  auto hess = [](const Vec& xi) {
    Mat H = Mat::Zero(2, 2);
    H(0, 0) = 2.0;
    H(1, 1) = -8.0 + 48.0 * xi[1] * xi[1];
    return H;
  };
  auto s = implicit_direct(2, {phi}, {grad}, {hess});
  s.name = "figure8-implicit";
  return s;
}

}  // namespace gvf
