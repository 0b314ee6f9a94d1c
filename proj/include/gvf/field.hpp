#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "gvf/errors.hpp"
#include "gvf/numeric.hpp"
#include "gvf/path.hpp"
#include "gvf/surface.hpp"

namespace gvf {

struct GvfParams {
  Vec k;                    // converging gains, one per surface, all > 0
  double orientation = 1.0; // +1 or -1, selects traversal direction
  double k_theta = 1.0;     // heading-correction gain (used by guidance)
};

inline void validate_gains(const GvfParams& params, int count) {
  if (params.k.size() != count)
    throw shape_error("gvf: gain vector size does not match surface count");
  for (int i = 0; i < count; ++i)
    if (!(params.k[i] > 0.0)) throw parameter_error("gvf: gains k_i must be positive");
  if (params.orientation != 1.0 && params.orientation != -1.0)
    throw parameter_error("gvf: orientation must be +1 or -1");
}

// Evaluated guiding vector together with its decomposition. chi is exactly
// propagation + converging; the propagation term is orthogonal to every
// column of N.
struct FieldSample {
  Vec chi;
  Vec propagation;  // orientation * cross(grad phi_1, ..., grad phi_{m-1})
  Vec converging;   // -N K e
  Vec e;
  Mat N;
  std::optional<Mat> jacobian;
};

// Generalized cross product of m-1 vectors in R^m: stack the inputs as rows,
// the k-th component is (-1)^{k-1} times the determinant with column k removed.
inline Vec cross_n(const std::vector<Vec>& vectors) {
  const int count = static_cast<int>(vectors.size());
  if (count < 1) throw shape_error("cross_n: need at least one vector");
  const int m = count + 1;
  for (const Vec& v : vectors)
    if (v.size() != m) throw shape_error("cross_n: expected m-1 vectors of length m");
  Mat rows(count, m);
  for (int i = 0; i < count; ++i) rows.row(i) = vectors[i].transpose();
  Vec out(m);
  Mat minor(count, count);
  for (int k = 0; k < m; ++k) {
    int c = 0;
    for (int j = 0; j < m; ++j) {
      if (j == k) continue;
      minor.col(c++) = rows.col(j);
    }
    out[k] = (k % 2 == 0 ? 1.0 : -1.0) * minor.determinant();
  }
  return out;
}

// Same, with the vectors given as matrix columns.
inline Vec cross_cols(const Mat& cols) {
  std::vector<Vec> vs(cols.cols());
  for (int i = 0; i < cols.cols(); ++i) vs[i] = cols.col(i);
  return cross_n(vs);
}

namespace detail {

// d/dxi of cross(grad phi_1, ..., grad phi_{m-1}), by multilinearity.
inline Mat cross_jacobian(const Mat& N, const std::vector<Mat>& hessians) {
  const int m = static_cast<int>(N.rows());
  const int count = static_cast<int>(N.cols());
  Mat J(m, m);
  std::vector<Vec> vs(count);
  for (int j = 0; j < m; ++j) {
    Vec col = Vec::Zero(m);
    for (int l = 0; l < count; ++l) {
      for (int i = 0; i < count; ++i) vs[i] = (i == l) ? Vec(hessians[l].col(j)) : Vec(N.col(i));
      col += cross_n(vs);
    }
    J.col(j) = col;
  }
  return J;
}

}  // namespace detail

// chi(xi) = orientation * cross(grad phis) - N K e. With m = 2 the cross of
// the single gradient equals -E grad(phi), so orientation = -1 reproduces the
// classic planar field E grad(phi) - k phi grad(phi).
inline FieldSample eval_conventional(const SurfaceStack& stack, const GvfParams& params,
                                     const Vec& xi, bool want_jacobian = false) {
  if (xi.size() != stack.m) throw shape_error("eval_conventional: point dimension mismatch");
  validate_gains(params, stack.count);
  FieldSample s;
  s.e = stack.phi(xi);
  s.N = stack.grad(xi);
  s.propagation = params.orientation * cross_cols(s.N);
  s.converging = -s.N * params.k.cwiseProduct(s.e);
  s.chi = s.propagation + s.converging;
  if (want_jacobian) {
    if (!stack.has_hessians())
      throw parameter_error("eval_conventional: stack has no second derivatives");
    const std::vector<Mat> H = stack.hess(xi);
    Mat J = params.orientation * detail::cross_jacobian(s.N, H);
    for (int i = 0; i < stack.count; ++i)
      J -= params.k[i] * (s.N.col(i) * s.N.col(i).transpose() + s.e[i] * H[i]);
    s.jacobian = J;
  }
  return s;
}

// Analytic Jacobian of the singularity-free field built from a parametric
// path with gain g(w) = b w and surface scaling L. Derived from the closed
// form below and cross-checked against finite differences in the tests.
inline Mat jacobian_field(const ParametricPath& path, double L, const Reparameterization& rep,
                          const GvfParams& params, const Vec& xi) {
  const int n = path.n;
  if (xi.size() != n + 1) throw shape_error("jacobian_field: point dimension mismatch");
  validate_gains(params, n);
  const double b = rep.param_gain;
  const double sigma = params.orientation * ((n % 2 == 0) ? 1.0 : -1.0);
  const double Ln = std::pow(L, n);
  const double gw = b * xi[n];
  const Vec fw = path.f(gw);
  const Vec d1 = path.f1(gw);
  const Vec d2 = path.f2(gw);
  Mat J = Mat::Zero(n + 1, n + 1);
  double last = 0.0;
  for (int i = 0; i < n; ++i) {
    const double ei = L * (xi[i] - fw[i]);
    J(i, i) = -params.k[i] * L * L;
    J(i, n) = sigma * Ln * b * b * d2[i] + params.k[i] * L * L * b * d1[i];
    J(n, i) = L * L * b * params.k[i] * d1[i];
    last += params.k[i] * (ei * d2[i] - L * d1[i] * d1[i]);
  }
  J(n, n) = L * b * b * last;
  return J;
}

// Closed-form evaluation of the lifted field chi on R^{n+1}:
//   chi_i = sigma L^n b f_i'(b w) - k_i e_i L,          i = 1..n
//   chi_m = sigma L^n + L b sum_i k_i e_i f_i'(b w)
// with e_i = L (x_i - f_i(b w)) and sigma = orientation * (-1)^n. Identical
// to eval_conventional on implicit_from_parametric, without the generic
// determinant machinery. The last propagation component is sigma L^n, so
// the field never vanishes.
inline FieldSample eval_singularity_free(const ParametricPath& path, double L,
                                         const Reparameterization& rep, const GvfParams& params,
                                         const Vec& xi, bool want_jacobian = false) {
  const int n = path.n;
  if (!(L > 0.0) || L > 1.0)
    throw parameter_error("eval_singularity_free: L must lie in (0, 1]");
  if (!(rep.param_gain > 0.0))
    throw parameter_error("eval_singularity_free: param_gain must be positive");
  if (xi.size() != n + 1)
    throw shape_error("eval_singularity_free: point dimension mismatch");
  validate_gains(params, n);
  const double b = rep.param_gain;
  const double sigma = params.orientation * ((n % 2 == 0) ? 1.0 : -1.0);
  const double Ln = std::pow(L, n);
  const double gw = b * xi[n];
  const Vec fw = path.f(gw);
  const Vec d1 = path.f1(gw);

  FieldSample s;
  s.e = Vec(n);
  s.propagation = Vec(n + 1);
  s.converging = Vec(n + 1);
  s.N = Mat::Zero(n + 1, n);
  double coupling = 0.0;
  for (int i = 0; i < n; ++i) {
    const double ei = L * (xi[i] - fw[i]);
    s.e[i] = ei;
    s.propagation[i] = sigma * Ln * b * d1[i];
    s.converging[i] = -params.k[i] * ei * L;
    s.N(i, i) = L;
    s.N(n, i) = -L * b * d1[i];
    coupling += params.k[i] * ei * d1[i];
  }
  s.propagation[n] = sigma * Ln;
  s.converging[n] = L * b * coupling;
  s.chi = s.propagation + s.converging;
  if (want_jacobian) s.jacobian = jacobian_field(path, L, rep, params, xi);
  return s;
}

inline Vec normalize(const FieldSample& sample) {
  const double norm = sample.chi.norm();
  if (norm == 0.0)
    throw singularity_error("normalize: field vanishes at this point");
  return sample.chi / norm;
}

// chi divided by the norm of its first n_physical components; regulates the
// physical speed while leaving the virtual coordinate scaled consistently.
inline Vec partial_normalize(const FieldSample& sample, int n_physical) {
  if (n_physical < 1 || n_physical > sample.chi.size())
    throw shape_error("partial_normalize: invalid physical sub-vector size");
  const double norm = sample.chi.head(n_physical).norm();
  if (norm == 0.0)
    throw singularity_error("partial_normalize: physical sub-vector vanishes");
  return sample.chi / norm;
}

// Jacobian of the planar direction (chi_hat_1, chi_hat_2):
//   J(chi^p) = F (I - chi_hat chi_hat^T) J(chi) / |chi|,
// with F selecting the first two rows.
inline Mat projected_direction_jacobian(const FieldSample& sample) {
  if (!sample.jacobian)
    throw parameter_error("projected_direction_jacobian: sample carries no Jacobian");
  const double norm = sample.chi.norm();
  if (norm == 0.0)
    throw singularity_error("projected_direction_jacobian: field vanishes at this point");
  const Vec hat = sample.chi / norm;
  const int m = static_cast<int>(sample.chi.size());
  const Mat full = (Mat::Identity(m, m) - hat * hat.transpose()) * (*sample.jacobian) / norm;
  return full.topRows(2);
}

}  // namespace gvf
