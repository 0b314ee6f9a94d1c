#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gvf/errors.hpp"
#include "gvf/field.hpp"
#include "gvf/guidance.hpp"
#include "gvf/numeric.hpp"
#include "gvf/path.hpp"
#include "gvf/surface.hpp"

namespace gvf {

// ---------------------------------------------------------------------------
// Projection onto the hyperplane orthogonal to a: P_a = I - a_hat a_hat^T.
// For a = b_{n+1} this zeroes the virtual coordinate, carrying lifted
// trajectories to the physical subspace.
// ---------------------------------------------------------------------------
struct ProjectionOperator {
  Vec a;
  Mat P;

  explicit ProjectionOperator(const Vec& axis) : a(axis) {
    const double norm = a.norm();
    if (norm == 0.0) throw parameter_error("ProjectionOperator: axis must be nonzero");
    const Vec hat = a / norm;
    P = Mat::Identity(a.size(), a.size()) - hat * hat.transpose();
  }

  Vec apply(const Vec& x) const { return P * x; }

  static ProjectionOperator drop_last(int m) {
    Vec axis = Vec::Zero(m);
    axis[m - 1] = 1.0;
    return ProjectionOperator(axis);
  }
};

// ---------------------------------------------------------------------------
// Disturbance d(t): piecewise continuous and bounded.
// ---------------------------------------------------------------------------
enum class DisturbanceKind { none, constant, decaying, noise };

struct DisturbanceSpec {
  DisturbanceKind kind = DisturbanceKind::none;
  Eigen::Vector3d vector{0.0, 0.0, 0.0};  // value / initial amplitude / per-axis noise bound
  double lambda = 0.0;                    // decay rate, decaying kind only
  std::uint64_t seed = 0;                 // noise kind only
};

inline std::function<Eigen::Vector3d(double)> make_disturbance(const DisturbanceSpec& spec) {
  if (!spec.vector.allFinite())
    throw parameter_error("disturbance: vector must be finite");
  switch (spec.kind) {
    case DisturbanceKind::none:
      return [](double) { return Eigen::Vector3d::Zero().eval(); };
    case DisturbanceKind::constant:
      return [v = spec.vector](double) { return v; };
    case DisturbanceKind::decaying: {
      if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda))
        throw parameter_error("disturbance: decaying kind needs lambda >= 0");
      return [v = spec.vector, l = spec.lambda](double t) {
        return Eigen::Vector3d(v * std::exp(-l * t));
      };
    }
    case DisturbanceKind::noise: {
      // Piecewise-constant over 1 s windows, uniform in [-bound_i, bound_i],
      // randomly accessible so integrator stage times stay consistent.
      return [v = spec.vector, seed = spec.seed](double t) {
        const auto window = static_cast<std::uint64_t>(std::floor(t));
        Eigen::Vector3d d;
        for (int i = 0; i < 3; ++i) {
          const double u = uniform_from_bits(splitmix64(seed ^ (window * 3ULL + i + 1ULL)));
          d[i] = v[i] * (2.0 * u - 1.0);
        }
        return d;
      };
    }
  }
  throw parameter_error("disturbance: unknown kind");
}

// ---------------------------------------------------------------------------
// Trajectories and integration
// ---------------------------------------------------------------------------
enum class Termination { completed, singularity_reached, excluded_set, non_finite };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::singularity_reached: return "singularity_reached";
    case Termination::excluded_set: return "excluded_set";
    case Termination::non_finite: return "non_finite";
  }
  return "unknown";
}

struct TrajectoryRecord {
  double t = 0.0;
  Vec state;
  Vec e;
  double err_norm = 0.0;
  double V = 0.0;
  Vec chi;
  std::optional<double> theta;
  std::optional<double> beta;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  Termination termination = Termination::completed;
  std::string message;
};

struct Dynamics {
  int dim = 0;
  std::function<Vec(double, const Vec&)> rhs;
  std::function<TrajectoryRecord(double, const Vec&)> observe;
  std::function<void(Vec&)> post_step;  // optional state normalization (angle wrap)
};

enum class Method { euler, rk4 };

struct IntegrationSettings {
  double dt = 0.02;
  double T = 600.0;
  Method method = Method::rk4;
};

// Fixed-step explicit Euler / classical RK4. Produces ceil(T/dt)+1 records
// unless the dynamics raises a typed error or the state leaves the finite
// range, in which case the run stops early with the matching reason.
inline Trajectory integrate(const Dynamics& dyn, const Vec& x0, const IntegrationSettings& s) {
  if (!(s.dt > 0.0)) throw parameter_error("integrate: dt must be positive");
  if (!(s.T >= s.dt)) throw parameter_error("integrate: T must be at least dt");
  const long steps = std::max<long>(1, static_cast<long>(std::ceil(s.T / s.dt - 1e-9)));

  Trajectory traj;
  Vec x = x0;
  traj.records.push_back(dyn.observe(0.0, x));

  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * s.dt;
    try {
      if (s.method == Method::euler) {
        x += s.dt * dyn.rhs(t, x);
      } else {
        const Vec k1 = dyn.rhs(t, x);
        const Vec k2 = dyn.rhs(t + 0.5 * s.dt, x + 0.5 * s.dt * k1);
        const Vec k3 = dyn.rhs(t + 0.5 * s.dt, x + 0.5 * s.dt * k2);
        const Vec k4 = dyn.rhs(t + s.dt, x + s.dt * k3);
        x += (s.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
    } catch (const singularity_error& err) {
      traj.termination = Termination::singularity_reached;
      traj.message = err.what();
      return traj;
    } catch (const excluded_set_error& err) {
      traj.termination = Termination::excluded_set;
      traj.message = err.what();
      return traj;
    }
    if (dyn.post_step) dyn.post_step(x);
    const double t_next = static_cast<double>(k + 1) * s.dt;
    traj.records.push_back(dyn.observe(t_next, x));
    if (!x.allFinite()) {
      traj.termination = Termination::non_finite;
      traj.message = "state left the finite range";
      return traj;
    }
  }
  traj.termination = Termination::completed;
  return traj;
}

// ---------------------------------------------------------------------------
// Field evaluation bundle shared by the dynamics factories
// ---------------------------------------------------------------------------
struct FieldEval {
  int m = 0;
  Vec k;  // converging gains, for the Lyapunov diagnostic
  std::function<FieldSample(const Vec&, bool)> sample;
};

inline FieldEval make_field(const SurfaceStack& stack, const GvfParams& params) {
  validate_gains(params, stack.count);
  FieldEval f;
  f.m = stack.m;
  f.k = params.k;
  f.sample = [stack, params](const Vec& xi, bool jac) {
    return eval_conventional(stack, params, xi, jac);
  };
  return f;
}

inline FieldEval make_field(const ParametricPath& path, double L, const Reparameterization& rep,
                            const GvfParams& params) {
  validate_gains(params, path.n);
  FieldEval f;
  f.m = path.n + 1;
  f.k = params.k;
  f.sample = [path, L, rep, params](const Vec& xi, bool jac) {
    return eval_singularity_free(path, L, rep, params, xi, jac);
  };
  return f;
}

namespace detail {

inline TrajectoryRecord field_record(const FieldEval& field, double t, const Vec& xi,
                                     const Vec& full_state) {
  const FieldSample s = field.sample(xi, false);
  TrajectoryRecord rec;
  rec.t = t;
  rec.state = full_state;
  rec.e = s.e;
  rec.err_norm = s.e.norm();
  rec.V = 0.5 * s.e.dot(field.k.cwiseProduct(s.e));
  rec.chi = s.chi;
  return rec;
}

}  // namespace detail

// xi_dot = chi(xi), or s * chi_hat(xi). The normalized variant declares a
// singularity when |chi| < 1e-12, the numerical proxy for reaching the
// singular set in finite time.
inline Dynamics single_integrator(const FieldEval& field, double speed = 1.0,
                                  bool normalized = false) {
  if (normalized && !(speed > 0.0))
    throw parameter_error("single_integrator: speed must be positive");
  Dynamics dyn;
  dyn.dim = field.m;
  dyn.rhs = [field, speed, normalized](double, const Vec& xi) {
    const FieldSample s = field.sample(xi, false);
    if (!normalized) return s.chi;
    const double norm = s.chi.norm();
    if (norm < 1e-12)
      throw singularity_error("single_integrator: singular point reached");
    return Vec(speed * s.chi / norm);
  };
  dyn.observe = [field](double t, const Vec& xi) {
    return detail::field_record(field, t, xi, xi);
  };
  return dyn;
}

inline Vec extended_initial(const ProjectionOperator& op, const Vec& xi0) {
  Vec x0(2 * xi0.size());
  x0.head(xi0.size()) = xi0;
  x0.tail(xi0.size()) = op.apply(xi0);
  return x0;
}

// Joint system (xi, xi_check) with xi_check_dot = P_a xi_dot and
// xi_check(0) = P_a xi(0); the transformed block follows G_l(xi(t)).
inline Dynamics extended_dynamics(const FieldEval& field, const ProjectionOperator& op,
                                  double speed = 1.0, bool normalized = false) {
  if (op.a.size() != field.m)
    throw shape_error("extended_dynamics: operator dimension mismatch");
  const Dynamics base = single_integrator(field, speed, normalized);
  const int m = field.m;
  Dynamics dyn;
  dyn.dim = 2 * m;
  dyn.rhs = [base, op, m](double t, const Vec& x) {
    const Vec xi_dot = base.rhs(t, x.head(m));
    Vec out(2 * m);
    out.head(m) = xi_dot;
    out.tail(m) = op.P * xi_dot;
    return out;
  };
  dyn.observe = [field, m](double t, const Vec& x) {
    return detail::field_record(field, t, x.head(m), x);
  };
  return dyn;
}

// Unicycle model under the Prop.-3 guidance law, state (x, y, z, theta, w):
//   x_dot = v cos theta + d_x,  y_dot = v sin theta + d_y,
//   z_dot = u_z + d_z,          theta_dot = u_theta,  w_dot per the law.
// Wind enters the position kinematics only. A heading exactly antipodal to
// the planar field direction is rejected as the Prop.-3 excluded set.
inline Dynamics unicycle(const FieldEval& field, double v, double k_theta,
                         const DisturbanceSpec& wind = {}) {
  if (field.m != 4) throw shape_error("unicycle: requires a 4D field");
  if (!(v > 0.0)) throw parameter_error("unicycle: speed must be positive");
  if (!(k_theta > 0.0)) throw parameter_error("unicycle: k_theta must be positive");
  auto dist = make_disturbance(wind);

  auto unpack = [v](const Vec& x) {
    VehicleState st;
    st.position = x.head(3);
    st.theta = x[3];
    st.w = x[4];
    st.v = v;
    return st;
  };
  auto lift = [](const Vec& x) {
    Vec xi(4);
    xi << x[0], x[1], x[2], x[4];
    return xi;
  };

  Dynamics dyn;
  dyn.dim = 5;
  dyn.rhs = [field, k_theta, dist, unpack, lift](double t, const Vec& x) {
    const VehicleState st = unpack(x);
    const FieldSample s = field.sample(lift(x), true);
    const GuidanceOutput g = guidance_step(st, s, k_theta);
    if (g.heading_error == kPi)
      throw excluded_set_error("unicycle: heading antipodal to the field direction");
    const Eigen::Vector3d d = dist(t);
    Vec out(5);
    out << st.v * std::cos(st.theta) + d[0], st.v * std::sin(st.theta) + d[1], g.u_z + d[2],
        g.u_theta, g.w_dot;
    return out;
  };
  dyn.observe = [field, unpack, lift](double t, const Vec& x) {
    TrajectoryRecord rec = detail::field_record(field, t, lift(x), x);
    rec.theta = wrap_angle(x[3]);
    const VehicleState st = unpack(x);
    const FieldSample s = field.sample(lift(x), false);
    if (s.chi[0] != 0.0 || s.chi[1] != 0.0) rec.beta = heading_error(st, s);
    return rec;
  };
  dyn.post_step = [](Vec& x) { x[3] = wrap_angle(x[3]); };
  return dyn;
}

}  // namespace gvf
