#pragma once

#include <cmath>
#include <optional>

#include "gvf/errors.hpp"
#include "gvf/field.hpp"
#include "gvf/numeric.hpp"

namespace gvf {

// Unicycle state: planar position + altitude, heading on the XY plane,
// virtual coordinate and constant ground speed.
struct VehicleState {
  Eigen::Vector3d position{0.0, 0.0, 0.0};  // meters
  double theta = 0.0;                       // radians, principal value (-pi, pi]
  double w = 0.0;
  double v = 12.0;                          // m/s
};

struct GuidanceOutput {
  double u_theta = 0.0;      // rad/s
  double u_z = 0.0;          // m/s
  double w_dot = 0.0;        // virtual speed
  double theta_d_dot = 0.0;  // feedforward term of u_theta
  double heading_error = 0.0;  // beta in (-pi, pi]
};

// Signed angle rotating the planar field direction onto the heading
// h = (cos theta, sin theta). Undefined where chi_1^2 + chi_2^2 = 0.
inline double heading_error(const VehicleState& state, const FieldSample& sample) {
  const double cx = sample.chi[0];
  const double cy = sample.chi[1];
  if (cx == 0.0 && cy == 0.0)
    throw excluded_set_error("heading_error: planar field components vanish");
  const double hx = std::cos(state.theta);
  const double hy = std::sin(state.theta);
  const double beta = std::atan2(cx * hy - cy * hx, cx * hx + cy * hy);
  return (beta <= -kPi) ? kPi : beta;
}

// Angular-rate, climb and virtual-coordinate commands:
//   w_dot   = v chi_4 / sqrt(chi_1^2 + chi_2^2)
//   u_z     = v chi_3 / sqrt(chi_1^2 + chi_2^2)
//   u_theta = theta_d_dot - k_theta h^T E chi_p_hat
// where theta_d_dot = (-1/|chi^p|) chi_p_hat^T E J(chi^p) xi_dot tracks the
// rotation of the field direction. When xi_dot is not supplied, the model's
// own generalized velocity (v cos theta, v sin theta, u_z, w_dot) of the
// same step is used.
inline GuidanceOutput guidance_step(const VehicleState& state, const FieldSample& sample,
                                    double k_theta,
                                    const std::optional<Vec>& xi_dot_override = std::nullopt) {
  if (sample.chi.size() != 4)
    throw shape_error("guidance_step: expected a 4D field sample");
  if (!(state.v > 0.0)) throw parameter_error("guidance_step: speed must be positive");
  if (!(k_theta > 0.0)) throw parameter_error("guidance_step: k_theta must be positive");

  const double planar = std::hypot(sample.chi[0], sample.chi[1]);
  if (planar == 0.0)
    throw excluded_set_error("guidance_step: planar field components vanish");

  GuidanceOutput out;
  out.w_dot = state.v * sample.chi[3] / planar;
  out.u_z = state.v * sample.chi[2] / planar;
  out.heading_error = heading_error(state, sample);

  Vec xi_dot(4);
  if (xi_dot_override) {
    if (xi_dot_override->size() != 4)
      throw shape_error("guidance_step: xi_dot must have 4 components");
    xi_dot = *xi_dot_override;
  } else {
    xi_dot << state.v * std::cos(state.theta), state.v * std::sin(state.theta), out.u_z, out.w_dot;
  }

  const Mat Jp = projected_direction_jacobian(sample);  // 2 x 4
  const double chi_norm = sample.chi.norm();
  const double chi_p_norm = planar / chi_norm;  // |(chi_hat_1, chi_hat_2)|
  const Eigen::Vector2d dir(sample.chi[0] / planar, sample.chi[1] / planar);
  const Eigen::Vector2d rate = Jp * xi_dot;
  // chi_p_hat^T E rate with E = [[0,-1],[1,0]]
  out.theta_d_dot = (-1.0 / chi_p_norm) * (dir.x() * (-rate.y()) + dir.y() * rate.x());

  const double hx = std::cos(state.theta);
  const double hy = std::sin(state.theta);
  const double h_E_chi = hx * (-dir.y()) + hy * dir.x();
  out.u_theta = out.theta_d_dot - k_theta * h_E_chi;
  return out;
}

}  // namespace gvf
