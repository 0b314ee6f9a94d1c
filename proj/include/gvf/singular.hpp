#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "gvf/errors.hpp"
#include "gvf/field.hpp"
#include "gvf/numeric.hpp"

namespace gvf {

namespace detail {

// Damped Newton iteration on chi(xi) = 0 with a finite-difference Jacobian,
// so it also works for user-supplied stacks without second derivatives.
inline Vec newton_refine(const std::function<Vec(const Vec&)>& field, Vec xi, int max_iter = 60) {
  double res = field(xi).norm();
  for (int it = 0; it < max_iter; ++it) {
    if (res <= 1e-14) break;
    const Vec chi = field(xi);
    const Mat J = fd_jacobian(field, xi, 1e-6);
    const Vec step = J.colPivHouseholderQr().solve(chi);
    if (!step.allFinite()) break;
    double t = 1.0;
    Vec next = xi;
    double next_res = res;
    bool improved = false;
    while (t >= 1e-6) {
      const Vec candidate = xi - t * step;
      const double cand_res = field(candidate).norm();
      if (std::isfinite(cand_res) && cand_res < next_res) {
        next = candidate;
        next_res = cand_res;
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;
    xi = next;
    res = next_res;
  }
  return xi;
}

}  // namespace detail

// Coarse grid sweep of |chi| over an axis-aligned box, Newton refinement of
// the grid-local minima, and deduplication. An empty result is meaningful:
// it is what the singularity-free construction is expected to produce.
inline std::vector<Vec> singular_scan(const std::function<Vec(const Vec&)>& field, const Box& box,
                                      int grid) {
  const int dim = static_cast<int>(box.lo.size());
  if (dim < 1 || box.hi.size() != dim) throw shape_error("singular_scan: malformed box");
  for (int i = 0; i < dim; ++i)
    if (!(box.lo[i] < box.hi[i])) throw parameter_error("singular_scan: degenerate box");
  if (grid < 8) throw parameter_error("singular_scan: grid must be at least 8 per axis");

  long total = 1;
  for (int i = 0; i < dim; ++i) total *= grid;

  auto point_at = [&](long flat) {
    Vec xi(dim);
    for (int i = 0; i < dim; ++i) {
      const long idx = flat % grid;
      flat /= grid;
      xi[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * static_cast<double>(idx) / (grid - 1);
    }
    return xi;
  };

  std::vector<double> norms(total);
  for (long flat = 0; flat < total; ++flat) norms[flat] = field(point_at(flat)).norm();

  // Grid-local minima against axis-aligned neighbors.
  std::vector<long> candidates;
  std::vector<long> strides(dim);
  strides[0] = 1;
  for (int i = 1; i < dim; ++i) strides[i] = strides[i - 1] * grid;
  for (long flat = 0; flat < total; ++flat) {
    bool is_min = true;
    long rest = flat;
    for (int i = 0; i < dim && is_min; ++i) {
      const long idx = rest % grid;
      rest /= grid;
      if (idx > 0 && norms[flat - strides[i]] < norms[flat]) is_min = false;
      if (idx < grid - 1 && norms[flat + strides[i]] < norms[flat]) is_min = false;
    }
    if (is_min) candidates.push_back(flat);
  }

  std::vector<Vec> found;
  for (long flat : candidates) {
    const Vec refined = detail::newton_refine(field, point_at(flat));
    if (!refined.allFinite()) continue;
    if (field(refined).norm() > 1e-10) continue;
    bool duplicate = false;
    for (const Vec& p : found)
      if ((p - refined).norm() <= 1e-6) duplicate = true;
    if (!duplicate) found.push_back(refined);
  }

  // Lexicographic order with a tolerance matching the dedup radius, so the
  // result order is stable under refinement noise.
  std::sort(found.begin(), found.end(), [](const Vec& a, const Vec& b) {
    for (int i = 0; i < a.size(); ++i) {
      if (std::abs(a[i] - b[i]) > 1e-6) return a[i] < b[i];
    }
    return false;
  });
  return found;
}

}  // namespace gvf
