#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gvf/sim.hpp"

using namespace gvf;
using Catch::Approx;

namespace {

Dynamics scalar_decay() {
  Dynamics dyn;
  dyn.dim = 1;
  dyn.rhs = [](double, const Vec& x) { return Vec(-x); };
  dyn.observe = [](double t, const Vec& x) {
    TrajectoryRecord rec;
    rec.t = t;
    rec.state = x;
    rec.e = Vec::Zero(1);
    rec.chi = x;
    return rec;
  };
  return dyn;
}

FieldEval lifted_circle_field(double k = 1.0, double L = 1.0) {
  GvfParams params;
  params.k = Vec::Constant(2, k);
  return make_field(catalog_make("circle"), L, Reparameterization{1.0}, params);
}

FieldEval trefoil_field(double k = 0.002) {
  GvfParams params;
  params.k = Vec::Constant(3, k);
  AffinePose pose;
  pose.offset = Eigen::Vector3d(79.0, -68.10, 50.0);
  return make_field(apply_affine(catalog_make("trefoil"), pose), 0.1, Reparameterization{0.45},
                    params);
}

// Resample a polyline by arc length at count uniform stations on [0, total].
std::vector<Vec> resample_by_arc(const std::vector<Vec>& pts, double total, int count) {
  std::vector<double> arc(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i)
    arc[i] = arc[i - 1] + (pts[i] - pts[i - 1]).norm();
  std::vector<Vec> out;
  out.reserve(count);
  std::size_t seg = 0;
  for (int i = 0; i < count; ++i) {
    const double target = total * i / (count - 1);
    while (seg + 1 < arc.size() && arc[seg + 1] < target) ++seg;
    const double span = arc[seg + 1] - arc[seg];
    const double u = (span > 0.0) ? (target - arc[seg]) / span : 0.0;
    out.push_back(pts[seg] + u * (pts[seg + 1] - pts[seg]));
  }
  return out;
}

double discrete_frechet(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  const std::size_t na = a.size(), nb = b.size();
  std::vector<double> prev(nb), cur(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    const double d = (a[0] - b[j]).norm();
    prev[j] = (j == 0) ? d : std::max(prev[j - 1], d);
  }
  for (std::size_t i = 1; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      const double d = (a[i] - b[j]).norm();
      if (j == 0) {
        cur[0] = std::max(prev[0], d);
      } else {
        cur[j] = std::max(std::min({prev[j], prev[j - 1], cur[j - 1]}), d);
      }
    }
    std::swap(prev, cur);
  }
  return prev[nb - 1];
}

}  // namespace

TEST_CASE("rk4 integrates exponential decay accurately") {
  const Trajectory traj = integrate(scalar_decay(), Vec::Constant(1, 1.0),
                                    {0.01, 1.0, Method::rk4});
  REQUIRE(traj.termination == Termination::completed);
  REQUIRE(traj.records.size() == 101);
  REQUIRE(traj.records.back().state[0] == Approx(std::exp(-1.0)).margin(1e-7));
}

TEST_CASE("dt equal to T gives exactly two records") {
  const Trajectory traj = integrate(scalar_decay(), Vec::Constant(1, 1.0),
                                    {0.5, 0.5, Method::euler});
  REQUIRE(traj.records.size() == 2);
  REQUIRE(traj.records[1].t == 0.5);
}

TEST_CASE("non-finite dynamics terminate with the matching reason") {
  Dynamics bad = scalar_decay();
  bad.rhs = [](double, const Vec& x) { return Vec(Vec::Constant(x.size(), std::nan(""))); };
  const Trajectory traj = integrate(bad, Vec::Constant(1, 1.0), {0.1, 1.0, Method::euler});
  REQUIRE(traj.termination == Termination::non_finite);
  REQUIRE(traj.records.size() == 2);  // initial + the offending step
}

TEST_CASE("integration settings are validated") {
  REQUIRE_THROWS_AS(integrate(scalar_decay(), Vec::Constant(1, 1.0), {0.0, 1.0, Method::rk4}),
                    parameter_error);
  REQUIRE_THROWS_AS(integrate(scalar_decay(), Vec::Constant(1, 1.0), {0.5, 0.1, Method::rk4}),
                    parameter_error);
}

TEST_CASE("halving dt improves the rk4 terminal error about sixteen-fold") {
  const FieldEval field = lifted_circle_field();
  const Dynamics dyn = single_integrator(field);
  Vec start(3);
  start << 2.0, -0.5, 0.0;
  auto terminal = [&](double dt) {
    return integrate(dyn, start, {dt, 2.0, Method::rk4}).records.back().state;
  };
  const Vec reference = terminal(0.1 / 16.0);
  const double err_coarse = (terminal(0.1) - reference).norm();
  const double err_fine = (terminal(0.05) - reference).norm();
  const double factor = err_coarse / err_fine;
  REQUIRE(factor >= 12.0);
  REQUIRE(factor <= 20.0);
}

TEST_CASE("on-path starts stay on the lifted path") {
  const FieldEval field = lifted_circle_field();
  Vec start(3);
  start << 1.0, 0.0, 0.0;  // f(0), w=0
  const Trajectory traj = integrate(single_integrator(field), start, {0.01, 10.0, Method::rk4});
  REQUIRE(traj.termination == Termination::completed);
  for (const auto& rec : traj.records) REQUIRE(rec.err_norm <= 1e-9);
}

TEST_CASE("conventional circle field: origin is an equilibrium") {
  const FieldEval field = make_field(circle_implicit_stack(), [] {
    GvfParams p;
    p.k = Vec::Constant(1, 1.0);
    p.orientation = -1.0;
    return p;
  }());
  const Trajectory traj =
      integrate(single_integrator(field), Vec::Zero(2), {0.02, 5.0, Method::rk4});
  REQUIRE(traj.termination == Termination::completed);
  for (const auto& rec : traj.records) REQUIRE(rec.state.norm() == 0.0);
}

TEST_CASE("normalized field at a singular point terminates immediately") {
  const FieldEval field = make_field(circle_implicit_stack(), [] {
    GvfParams p;
    p.k = Vec::Constant(1, 1.0);
    p.orientation = -1.0;
    return p;
  }());
  const Trajectory traj =
      integrate(single_integrator(field, 1.0, true), Vec::Zero(2), {0.02, 5.0, Method::rk4});
  REQUIRE(traj.termination == Termination::singularity_reached);
  REQUIRE(traj.records.size() == 1);
  REQUIRE(traj.records[0].t == 0.0);
}

TEST_CASE("projection operator basics") {
  Vec axis(3);
  axis << 0.0, 0.0, 1.0;
  const ProjectionOperator op(axis);
  Vec v(3);
  v << 2.0, 5.0, 7.0;
  const Vec projected = op.apply(v);
  REQUIRE(projected[0] == 2.0);
  REQUIRE(projected[1] == 5.0);
  REQUIRE(projected[2] == 0.0);
  REQUIRE((op.P * op.P - op.P).norm() <= 1e-12);
  REQUIRE((op.P - op.P.transpose()).norm() == 0.0);
  REQUIRE((op.P * axis).norm() == 0.0);
  REQUIRE_THROWS_AS(ProjectionOperator(Vec::Zero(3)), parameter_error);

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  Vec generic(4);
  for (int i = 0; i < 4; ++i) generic[i] = dist(rng);
  const ProjectionOperator oblique(generic);
  REQUIRE((oblique.P * oblique.P - oblique.P).norm() <= 1e-12);
  REQUIRE((oblique.P * generic).norm() <= 1e-12 * generic.norm());
}

TEST_CASE("extended dynamics track the projected trajectory") {
  const FieldEval field = trefoil_field();
  const ProjectionOperator op = ProjectionOperator::drop_last(4);
  const Dynamics dyn = extended_dynamics(field, op);
  Vec xi0(4);
  xi0 << 150.0, -60.0, 20.0, 4.0;
  const Trajectory traj = integrate(dyn, extended_initial(op, xi0), {0.02, 10.0, Method::rk4});
  REQUIRE(traj.termination == Termination::completed);
  for (const auto& rec : traj.records) {
    const Vec first = rec.state.head(4);
    const Vec second = rec.state.tail(4);
    REQUIRE((second - op.apply(first)).norm() <= 1e-12);
    REQUIRE(second[3] == 0.0);
  }
}

TEST_CASE("unicycle stays on the trefoil over one period when started aligned") {
  const FieldEval field = trefoil_field();
  AffinePose pose;
  pose.offset = Eigen::Vector3d(79.0, -68.10, 50.0);
  const ParametricPath path =
      reparameterize(apply_affine(catalog_make("trefoil"), pose), Reparameterization{0.45});

  Vec xi0(4);
  xi0.head(3) = path.f(0.0);
  xi0[3] = 0.0;
  const FieldSample s0 = field.sample(xi0, false);
  Vec state0(5);
  state0 << xi0[0], xi0[1], xi0[2], std::atan2(s0.chi[1], s0.chi[0]), xi0[3];

  const Dynamics dyn = unicycle(field, 12.0, 1.0);
  const Trajectory traj = integrate(dyn, state0, {0.02, 130.0, Method::rk4});
  REQUIRE(traj.termination == Termination::completed);
  double w_span = 0.0;
  for (const auto& rec : traj.records) {
    REQUIRE(rec.err_norm <= 1e-6);
    w_span = std::min(w_span, rec.state[4]);
  }
  // one full trefoil period in w is 2*pi/(0.45*0.02) ~ 698
  REQUIRE(std::abs(w_span) >= 2.0 * kPi / (0.45 * 0.02));
}

TEST_CASE("unicycle under constant wind keeps a finite ultimate error bound") {
  const FieldEval field = trefoil_field();
  DisturbanceSpec wind;
  wind.kind = DisturbanceKind::constant;
  wind.vector = Eigen::Vector3d(1.0, 0.0, 0.0);

  Vec state0(5);
  state0 << 0.0, 0.0, 60.0, 0.0, 0.0;
  const Trajectory traj = integrate(unicycle(field, 12.0, 1.0, wind), state0,
                                    {0.02, 200.0, Method::rk4});
  REQUIRE(traj.termination == Termination::completed);
  double tail_bound = 0.0;
  for (std::size_t i = traj.records.size() / 2; i < traj.records.size(); ++i)
    tail_bound = std::max(tail_bound, traj.records[i].err_norm);
  REQUIRE(std::isfinite(tail_bound));
  REQUIRE(tail_bound > 0.0);
  REQUIRE(tail_bound < 1.0);
}

TEST_CASE("heading exactly antipodal to the field is rejected at t = 0") {
  // Straight line toward +x: on the path the planar field direction is
  // exactly (-1, 0), so theta = 0 is the exact Prop.-3 boundary.
  PathParams params;
  params["point"] = {0.0, 0.0, 0.0};
  params["direction"] = {1.0, 0.0, 0.0};
  GvfParams gains;
  gains.k = Vec::Constant(3, 1.0);
  const FieldEval field =
      make_field(catalog_make("line", params), 1.0, Reparameterization{1.0}, gains);

  Vec state0(5);
  state0 << 0.0, 0.0, 0.0, 0.0, 0.0;
  const Trajectory traj = integrate(unicycle(field, 12.0, 1.0), state0, {0.02, 1.0, Method::rk4});
  REQUIRE(traj.termination == Termination::excluded_set);
  REQUIRE(traj.records.size() == 1);
  REQUIRE(traj.records[0].beta.has_value());
  REQUIRE(*traj.records[0].beta == kPi);
}

TEST_CASE("heading errors shrink monotonically in closed loop") {
  const FieldEval field = trefoil_field();
  for (double beta0 : {-1.5, 0.5, 2.0}) {
    Vec xi0(4);
    xi0 << -50.0, 30.0, 45.0, 0.0;
    const FieldSample s0 = field.sample(xi0, false);
    Vec state0(5);
    state0 << xi0[0], xi0[1], xi0[2],
        wrap_angle(std::atan2(s0.chi[1], s0.chi[0]) + beta0), xi0[3];
    const Trajectory traj = integrate(unicycle(field, 12.0, 1.0), state0,
                                      {0.02, 30.0, Method::rk4});
    REQUIRE(traj.termination == Termination::completed);
    double prev = std::abs(*traj.records[0].beta);
    REQUIRE(prev == Approx(std::abs(beta0)).margin(1e-9));
    for (const auto& rec : traj.records) {
      const double current = std::abs(*rec.beta);
      REQUIRE(current <= prev + 1e-6);
      prev = current;
    }
    REQUIRE(prev <= 1e-3);
  }
}

TEST_CASE("disturbance catalog") {
  DisturbanceSpec none;
  REQUIRE(make_disturbance(none)(3.7).norm() == 0.0);

  DisturbanceSpec constant;
  constant.kind = DisturbanceKind::constant;
  constant.vector = Eigen::Vector3d(1.0, 0.0, 0.0);
  REQUIRE(make_disturbance(constant)(5.0).isApprox(Eigen::Vector3d(1.0, 0.0, 0.0), 1e-15));

  DisturbanceSpec decaying;
  decaying.kind = DisturbanceKind::decaying;
  decaying.vector = Eigen::Vector3d(1.0, 0.0, 0.0);
  decaying.lambda = 1.0;
  const Eigen::Vector3d d = make_disturbance(decaying)(std::log(2.0));
  REQUIRE(d[0] == Approx(0.5).margin(1e-14));
  REQUIRE(d[1] == 0.0);

  DisturbanceSpec noise;
  noise.kind = DisturbanceKind::noise;
  noise.vector = Eigen::Vector3d(0.5, 0.25, 0.0);
  noise.seed = 99;
  const auto fn = make_disturbance(noise);
  for (double t : {0.0, 0.3, 1.7, 42.9}) {
    const Eigen::Vector3d x = fn(t);
    REQUIRE(std::abs(x[0]) <= 0.5);
    REQUIRE(std::abs(x[1]) <= 0.25);
    REQUIRE(x[2] == 0.0);
    REQUIRE(fn(t).isApprox(x, 0.0));  // deterministic
  }

  DisturbanceSpec bad;
  bad.kind = DisturbanceKind::constant;
  bad.vector = Eigen::Vector3d(std::nan(""), 0.0, 0.0);
  REQUIRE_THROWS_AS(make_disturbance(bad), parameter_error);
  DisturbanceSpec growing;
  growing.kind = DisturbanceKind::decaying;
  growing.vector = Eigen::Vector3d(1.0, 0.0, 0.0);
  growing.lambda = -0.5;
  REQUIRE_THROWS_AS(make_disturbance(growing), parameter_error);
}

TEST_CASE("Lyapunov value is nonincreasing along unnormalized runs") {
  const FieldEval field = trefoil_field(2.0);
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> pos(-400.0, 400.0);
  std::uniform_real_distribution<double> wdist(-50.0, 50.0);
  for (int run = 0; run < 3; ++run) {
    Vec start(4);
    start << pos(rng), pos(rng), pos(rng), wdist(rng);
    const Trajectory traj =
        integrate(single_integrator(field), start, {0.02, 40.0, Method::rk4});
    REQUIRE(traj.termination == Termination::completed);
    for (std::size_t i = 1; i < traj.records.size(); ++i)
      REQUIRE(traj.records[i].V <= traj.records[i - 1].V + 1e-9 * 0.02);
  }
}

TEST_CASE("normalized and unnormalized runs trace the same path set") {
  const FieldEval field = lifted_circle_field();
  Vec start(3);
  start << 2.0, 0.0, 0.0;
  const Trajectory raw = integrate(single_integrator(field), start, {0.002, 8.0, Method::rk4});
  const Trajectory scaled =
      integrate(single_integrator(field, 1.0, true), start, {0.002, 16.0, Method::rk4});

  auto positions = [](const Trajectory& t) {
    std::vector<Vec> p;
    for (const auto& rec : t.records) p.push_back(rec.state);
    return p;
  };
  auto arc_total = [](const std::vector<Vec>& pts) {
    double a = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) a += (pts[i] - pts[i - 1]).norm();
    return a;
  };
  const auto pa = positions(raw);
  const auto pb = positions(scaled);
  const double arc = 0.98 * std::min(arc_total(pa), arc_total(pb));
  const auto ra = resample_by_arc(pa, arc, 1500);
  const auto rb = resample_by_arc(pb, arc, 1500);
  REQUIRE(discrete_frechet(ra, rb) <= 1e-3);
}
