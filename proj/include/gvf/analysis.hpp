#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "gvf/errors.hpp"
#include "gvf/numeric.hpp"
#include "gvf/path.hpp"
#include "gvf/sim.hpp"
#include "gvf/surface.hpp"

namespace gvf {

// V(e) = 1/2 e^T K e.
inline double lyapunov_value(const Vec& e, const Vec& k) {
  if (e.size() != k.size()) throw shape_error("lyapunov_value: dimension mismatch");
  return 0.5 * e.dot(k.cwiseProduct(e));
}

// Along xi_dot = chi the derivative reduces to -|N K e|^2: the propagation
// term drops out by orthogonality.
inline double lyapunov_rate(const Vec& e, const Vec& k, const Mat& N) {
  if (e.size() != k.size() || N.cols() != e.size())
    throw shape_error("lyapunov_rate: dimension mismatch");
  return -(N * k.cwiseProduct(e)).squaredNorm();
}

struct DistanceResult {
  double distance = 0.0;
  double bound = 0.0;  // how much the estimate may exceed the true distance
  double w_at = 0.0;
};

// Distance from a point to the trace of a parametric path over [w_lo, w_hi]:
// dense sampling followed by golden-section refinement around the best
// bracket. Works for every catalog path, closed form or not.
inline DistanceResult distance_to_path(const Vec& point, const ParametricPath& path, double w_lo,
                                       double w_hi, int samples = 256) {
  if (!std::isfinite(w_lo) || !std::isfinite(w_hi) || !(w_hi > w_lo))
    throw parameter_error("distance_to_path: invalid parameter range");
  if (samples < 64) throw parameter_error("distance_to_path: need at least 64 samples");
  if (point.size() != path.n) throw shape_error("distance_to_path: point dimension mismatch");

  const double h = (w_hi - w_lo) / (samples - 1);
  double best = std::numeric_limits<double>::infinity();
  int best_idx = 0;
  double max_speed = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double w = w_lo + i * h;
    const double d = (point - path.f(w)).norm();
    max_speed = std::max(max_speed, path.f1(w).norm());
    if (d < best) {
      best = d;
      best_idx = i;
    }
  }
  const double bracket_lo = w_lo + std::max(0, best_idx - 1) * h;
  const double bracket_hi = w_lo + std::min(samples - 1, best_idx + 1) * h;
  auto dist_at = [&](double w) { return (point - path.f(w)).norm(); };
  const double tol = 1e-10 * std::max(1.0, w_hi - w_lo);
  const double w_star = golden_section_min(dist_at, bracket_lo, bracket_hi, tol);

  DistanceResult out;
  out.w_at = w_star;
  out.distance = std::min(best, dist_at(w_star));
  out.bound = 0.5 * h * max_speed + path.f1(w_star).norm() * tol;
  return out;
}

struct RateFit {
  double lambda = 0.0;
  double r2 = 0.0;
  int points = 0;
};

// Least-squares slope of log e(t) after a burn-in window; lambda = -slope.
// Nonpositive entries are dropped before fitting.
inline RateFit fit_exponential_rate(const std::vector<double>& t, const std::vector<double>& e,
                                    double burn_in_fraction = 0.2) {
  if (t.size() != e.size()) throw shape_error("fit_exponential_rate: series length mismatch");
  if (!(burn_in_fraction >= 0.0) || burn_in_fraction >= 1.0)
    throw parameter_error("fit_exponential_rate: burn-in fraction must lie in [0, 1)");
  const std::size_t start = static_cast<std::size_t>(burn_in_fraction * t.size());
  std::vector<double> xs, ys;
  for (std::size_t i = start; i < t.size(); ++i) {
    if (e[i] > 0.0) {
      xs.push_back(t[i]);
      ys.push_back(std::log(e[i]));
    }
  }
  const int n = static_cast<int>(xs.size());
  if (n < 10) throw insufficient_data_error("fit_exponential_rate: fewer than 10 usable points");

  double sx = 0.0, sy = 0.0;
  for (int i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw insufficient_data_error("fit_exponential_rate: degenerate time axis");
  const double slope = sxy / sxx;
  double ss_res = 0.0;
  for (int i = 0; i < n; ++i) {
    const double fit = my + slope * (xs[i] - mx);
    ss_res += (ys[i] - fit) * (ys[i] - fit);
  }
  // A flat series only varies at rounding level; that is a perfect fit.
  const double noise_floor = 64.0 * n * 4.93e-32 * std::max(1.0, my * my);
  RateFit out;
  out.lambda = -slope;
  out.r2 = (syy <= noise_floor) ? 1.0 : 1.0 - ss_res / syy;
  out.points = n;
  return out;
}

struct Assumption2Row {
  double kappa = 0.0;
  double inf_e = std::numeric_limits<double>::infinity();
  long support = 0;  // samples with dist >= kappa
  bool suspicious = false;
};

// Monte-Carlo lower envelope of |e(xi)| over {xi : dist(xi, P) >= kappa}
// within a sampling box. Advisory: a near-zero estimate flags a surface
// stack for which the error norm is a poor distance proxy on that box.
inline std::vector<Assumption2Row> assumption2_diagnostic(
    const SurfaceStack& stack, const ParametricPath& path, const Box& box,
    const std::vector<double>& kappas, double w_lo, double w_hi, long samples = 20000,
    std::uint64_t seed = 7) {
  if (static_cast<int>(box.lo.size()) != stack.m)
    throw shape_error("assumption2_diagnostic: box dimension mismatch");
  if (path.n != stack.m)
    throw shape_error("assumption2_diagnostic: path must live in the stack's ambient space");
  for (double kappa : kappas)
    if (!(kappa > 0.0)) throw parameter_error("assumption2_diagnostic: kappa must be positive");

  std::vector<Assumption2Row> rows;
  rows.reserve(kappas.size());
  for (double kappa : kappas) rows.push_back({kappa});

  std::uint64_t state = seed ^ 0xA2D1A6ULL;
  for (long s = 0; s < samples; ++s) {
    Vec xi(stack.m);
    for (int i = 0; i < stack.m; ++i) {
      state = splitmix64(state);
      xi[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * uniform_from_bits(state);
    }
    const double d = distance_to_path(xi, path, w_lo, w_hi, 256).distance;
    const double err = stack.phi(xi).norm();
    for (auto& row : rows) {
      if (d >= row.kappa) {
        row.support += 1;
        row.inf_e = std::min(row.inf_e, err);
      }
    }
  }
  for (auto& row : rows) row.suspicious = row.support > 0 && row.inf_e <= 1e-9;
  return rows;
}

struct GuidingPointTrace {
  std::vector<Vec> points;     // f(g(w(t)))
  std::vector<int> w_dot_sign; // sign of the virtual speed at each record
  bool bidirectional = false;
};

// The on-path point implied by the virtual coordinate, with the sign
// pattern of its motion. Expects the path with the re-parameterization
// already folded in, so points are path.f(w(t)).
inline GuidingPointTrace guiding_point_trace(const Trajectory& traj, const ParametricPath& path,
                                             int w_index) {
  GuidingPointTrace out;
  bool pos = false, neg = false;
  for (const auto& rec : traj.records) {
    if (w_index < 0 || w_index >= rec.state.size())
      throw shape_error("guiding_point_trace: w index out of range");
    out.points.push_back(path.f(rec.state[w_index]));
    const double last = rec.chi[rec.chi.size() - 1];
    const int sign = (last > 0.0) ? 1 : (last < 0.0 ? -1 : 0);
    out.w_dot_sign.push_back(sign);
    pos = pos || sign > 0;
    neg = neg || sign < 0;
  }
  out.bidirectional = pos && neg;
  return out;
}

// Sampled lower bound of the smallest eigenvalue of Q = K N^T N K over a box.
inline double sampled_q_lambda_min(const SurfaceStack& stack, const Vec& k, const Box& box,
                                   long samples = 2000, std::uint64_t seed = 11) {
  if (static_cast<int>(box.lo.size()) != stack.m)
    throw shape_error("sampled_q_lambda_min: box dimension mismatch");
  double lo = std::numeric_limits<double>::infinity();
  std::uint64_t state = seed ^ 0x51B0ULL;
  for (long s = 0; s < samples; ++s) {
    Vec xi(stack.m);
    for (int i = 0; i < stack.m; ++i) {
      state = splitmix64(state);
      xi[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * uniform_from_bits(state);
    }
    const Mat N = stack.grad(xi);
    const Mat K = k.asDiagonal();
    const Mat Q = K * N.transpose() * N * K;
    Eigen::SelfAdjointEigenSolver<Mat> eig(Q);
    lo = std::min(lo, eig.eigenvalues().minCoeff());
  }
  return lo;
}

struct ConvergenceReport {
  std::vector<double> err;       // |e(t)|
  std::vector<double> dist;      // dist(position(t), P), decimated
  std::optional<double> lambda;  // reported only when the fit is trustworthy
  double r2 = 0.0;
  double ultimate_bound = 0.0;   // sup |e| after burn-in
  double final_error = 0.0;
  Termination termination = Termination::completed;
};

inline ConvergenceReport analyze_trajectory(const Trajectory& traj,
                                            const ParametricPath& physical_path, double w_lo,
                                            double w_hi, double burn_in_fraction = 0.2,
                                            double r2_threshold = 0.9) {
  ConvergenceReport rep;
  rep.termination = traj.termination;
  if (traj.records.empty()) return rep;

  std::vector<double> t;
  t.reserve(traj.records.size());
  for (const auto& rec : traj.records) {
    t.push_back(rec.t);
    rep.err.push_back(rec.err_norm);
  }
  rep.final_error = rep.err.back();

  const std::size_t start = static_cast<std::size_t>(burn_in_fraction * rep.err.size());
  double bound = 0.0;
  for (std::size_t i = start; i < rep.err.size(); ++i) bound = std::max(bound, rep.err[i]);
  rep.ultimate_bound = bound;

  const std::size_t stride = std::max<std::size_t>(1, traj.records.size() / 256);
  for (std::size_t i = 0; i < traj.records.size(); i += stride) {
    const Vec pos = traj.records[i].state.head(physical_path.n);
    rep.dist.push_back(distance_to_path(pos, physical_path, w_lo, w_hi).distance);
  }

  try {
    const RateFit fit = fit_exponential_rate(t, rep.err, burn_in_fraction);
    rep.r2 = fit.r2;
    if (fit.r2 >= r2_threshold && fit.lambda > 0.0) rep.lambda = fit.lambda;
  } catch (const insufficient_data_error&) {
    // On-path runs have no decaying tail to fit; leave lambda unset.
  }
  return rep;
}

}  // namespace gvf
