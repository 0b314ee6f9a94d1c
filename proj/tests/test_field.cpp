#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "gvf/field.hpp"

using namespace gvf;
using Catch::Approx;

namespace {

GvfParams params_of(std::initializer_list<double> gains, double orientation = 1.0) {
  GvfParams p;
  p.k = Vec(static_cast<int>(gains.size()));
  int i = 0;
  for (double g : gains) p.k[i++] = g;
  p.orientation = orientation;
  return p;
}

struct NamedField {
  ParametricPath path;
  double L;
  Reparameterization rep;
  GvfParams params;
};

std::vector<NamedField> catalog_fields() {
  AffinePose pose;
  pose.alpha = 0.66;
  pose.offset = Eigen::Vector3d(79.0, -68.10, 50.0);
  std::vector<NamedField> fields;
  fields.push_back({catalog_make("circle"), 1.0, {1.0}, params_of({1.0, 1.0})});
  fields.push_back({catalog_make("ellipse", {{"a", {2.0}}, {"b", {0.5}}}), 0.5, {2.0},
                    params_of({0.3, 0.7}, -1.0)});
  fields.push_back({apply_affine(catalog_make("trefoil"), pose), 0.1, {0.45},
                    params_of({0.002, 0.002, 0.002})});
  fields.push_back({apply_affine(catalog_make("lissajous3d"), pose), 0.1, {0.01},
                    params_of({0.002, 0.002, 0.0025})});
  return fields;
}

}  // namespace

TEST_CASE("generalized cross product") {
  Vec e1(3), e2(3);
  e1 << 1.0, 0.0, 0.0;
  e2 << 0.0, 1.0, 0.0;
  const Vec c3 = cross_n({e1, e2});
  REQUIRE(c3.isApprox(Eigen::Vector3d(0.0, 0.0, 1.0), 1e-15));

  Vec p(2);
  p << 1.0, 0.0;
  const Vec c2 = cross_n({p});
  REQUIRE(c2[0] == 0.0);
  REQUIRE(c2[1] == -1.0);

  // 4D: gradients of the lifted surfaces for a 3D path reduce to -(f', 1).
  const ParametricPath trefoil = catalog_make("trefoil");
  const double w = 17.0;
  const Vec d1 = trefoil.f1(w);
  std::vector<Vec> grads;
  for (int i = 0; i < 3; ++i) {
    Vec g = Vec::Zero(4);
    g[i] = 1.0;
    g[3] = -d1[i];
    grads.push_back(g);
  }
  const Vec c4 = cross_n(grads);
  Vec expected(4);
  expected << -d1[0], -d1[1], -d1[2], -1.0;
  REQUIRE(c4.isApprox(expected, 1e-13));

  REQUIRE_THROWS_AS(cross_n({e1}), shape_error);
  REQUIRE_THROWS_AS(cross_n(std::vector<Vec>{}), shape_error);
}

TEST_CASE("conventional planar field on the circle") {
  const SurfaceStack stack = circle_implicit_stack();
  const GvfParams params = params_of({1.0}, -1.0);

  Vec xi(2);
  xi << 2.0, 0.0;
  const FieldSample s = eval_conventional(stack, params, xi);
  REQUIRE(s.chi[0] == Approx(-12.0).margin(1e-12));
  REQUIRE(s.chi[1] == Approx(4.0).margin(1e-12));
  REQUIRE((s.propagation + s.converging).isApprox(s.chi, 1e-15));

  xi << 1.0, 0.0;
  const FieldSample on_path = eval_conventional(stack, params, xi);
  REQUIRE(on_path.chi[0] == Approx(0.0).margin(1e-15));
  REQUIRE(on_path.chi[1] == Approx(2.0).margin(1e-15));
  REQUIRE(on_path.converging.norm() == 0.0);

  xi << 0.0, 0.0;
  REQUIRE(eval_conventional(stack, params, xi).chi.norm() == 0.0);
}

TEST_CASE("figure-8 crossing point is singular") {
  const SurfaceStack stack = figure8_implicit_stack();
  Vec origin(2);
  origin << 0.0, 0.0;
  const FieldSample s = eval_conventional(stack, params_of({1.0}, -1.0), origin);
  REQUIRE(s.chi.norm() == 0.0);
}

TEST_CASE("singularity-free circle field closed form") {
  const ParametricPath circle = catalog_make("circle");
  const GvfParams params = params_of({1.0, 1.0});
  Vec xi(3);
  xi << 2.0, 0.0, 0.0;
  const FieldSample s = eval_singularity_free(circle, 1.0, {1.0}, params, xi);
  REQUIRE(s.chi[0] == Approx(-1.0).margin(1e-15));
  REQUIRE(s.chi[1] == Approx(1.0).margin(1e-15));
  REQUIRE(s.chi[2] == Approx(1.0).margin(1e-15));
}

TEST_CASE("on-path samples reduce to the scaled propagation term") {
  const ParametricPath trefoil = catalog_make("trefoil");
  const double L = 0.1;
  const Reparameterization rep{0.45};
  const GvfParams params = params_of({0.002, 0.002, 0.002});
  const double w = 37.0;
  Vec xi(4);
  xi.head(3) = trefoil.f(rep.param_gain * w);
  xi[3] = w;
  const FieldSample s = eval_singularity_free(trefoil, L, rep, params, xi);
  REQUIRE(s.converging.norm() == 0.0);
  const double sigma = -1.0;  // orientation +1, n = 3
  Vec expected(4);
  expected.head(3) = sigma * std::pow(L, 3) * rep.param_gain * trefoil.f1(rep.param_gain * w);
  expected[3] = sigma * std::pow(L, 3);
  REQUIRE(s.chi.isApprox(expected, 1e-13));
}

TEST_CASE("norm of the singularity-free field never drops below L^n") {
  const ParametricPath trefoil = catalog_make("trefoil");
  const double L = 0.1;
  const GvfParams params = params_of({0.002, 0.002, 0.002});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-400.0, 400.0);
  std::uniform_real_distribution<double> wdist(-50.0, 50.0);
  const double floor = std::pow(L, 3) * (1.0 - 1e-12);
  for (int i = 0; i < 10000; ++i) {
    Vec xi(4);
    xi << pos(rng), pos(rng), pos(rng), wdist(rng);
    REQUIRE(eval_singularity_free(trefoil, L, {0.45}, params, xi).chi.norm() >= floor);
  }
}

TEST_CASE("normalization") {
  FieldSample s;
  s.chi = Vec(3);
  s.chi << 3.0, 4.0, 0.0;
  const Vec unit = normalize(s);
  REQUIRE(unit.isApprox(Eigen::Vector3d(0.6, 0.8, 0.0), 1e-15));

  FieldSample four;
  four.chi = Vec(4);
  four.chi << 1.0, 0.0, 2.0, 3.0;
  REQUIRE(partial_normalize(four, 2).isApprox(four.chi, 1e-15));

  FieldSample zero;
  zero.chi = Vec(2);
  zero.chi << 0.0, 0.0;
  REQUIRE_THROWS_AS(normalize(zero), singularity_error);
  REQUIRE_THROWS_AS(partial_normalize(zero, 2), singularity_error);
}

TEST_CASE("analytic Jacobian of a constant path is diagonal") {
  Vec value(3);
  value << 5.0, -2.0, 1.0;
  ParametricPath constant;
  constant.n = 3;
  constant.name = "constant";
  const Vec zero = Vec::Zero(3);
  constant.f = [value](double) { return value; };
  constant.f1 = [zero](double) { return zero; };
  constant.f2 = [zero](double) { return zero; };

  const GvfParams params = params_of({1.0, 2.0, 3.0});
  Vec xi(4);
  xi << 1.0, 1.0, 1.0, 0.5;
  const Mat J = jacobian_field(constant, 1.0, {1.0}, params, xi);
  Mat expected = Mat::Zero(4, 4);
  expected(0, 0) = -1.0;
  expected(1, 1) = -2.0;
  expected(2, 2) = -3.0;
  REQUIRE(J.isApprox(expected, 1e-15));
}

TEST_CASE("analytic Jacobian matches finite differences") {
  std::mt19937_64 rng(5);
  for (const NamedField& field : catalog_fields()) {
    const int m = field.path.n + 1;
    std::uniform_real_distribution<double> dist(-50.0, 50.0);
    for (int i = 0; i < 60; ++i) {
      Vec xi(m);
      for (int j = 0; j < m; ++j) xi[j] = dist(rng);
      const Mat J = jacobian_field(field.path, field.L, field.rep, field.params, xi);
      auto chi = [&](const Vec& p) {
        return eval_singularity_free(field.path, field.L, field.rep, field.params, p).chi;
      };
      const Mat J_fd = fd_jacobian(chi, xi, 1e-5);
      REQUIRE((J - J_fd).norm() <= 1e-5 * std::max(1.0, J_fd.norm()));
    }
  }
}

TEST_CASE("Jacobian sparsity matches the published structure") {
  AffinePose pose;
  pose.offset = Eigen::Vector3d(79.0, -68.10, 50.0);
  const ParametricPath trefoil = apply_affine(catalog_make("trefoil"), pose);
  Vec xi(4);
  xi << 319.0, -68.10, 50.0, 0.0;
  const Mat J =
      jacobian_field(trefoil, 0.1, {0.45}, params_of({0.002, 0.002, 0.002}), xi);
  REQUIRE(J(0, 1) == 0.0);
  REQUIRE(J(0, 2) == 0.0);
  REQUIRE(J(1, 0) == 0.0);
  REQUIRE(J(1, 2) == 0.0);
  REQUIRE(J(2, 0) == 0.0);
  REQUIRE(J(2, 1) == 0.0);
}

TEST_CASE("projected direction Jacobian") {
  FieldSample s;
  s.chi = Vec(4);
  s.chi << 2.0, 0.0, 0.0, 0.0;
  s.jacobian = Mat::Zero(4, 4);
  REQUIRE(projected_direction_jacobian(s).norm() == 0.0);

  s.jacobian = Mat::Identity(4, 4);
  const Mat Jp = projected_direction_jacobian(s);
  REQUIRE(Jp.row(0).norm() == Approx(0.0).margin(1e-15));
  REQUIRE(Jp(1, 1) == Approx(0.5).margin(1e-15));

  FieldSample no_jac;
  no_jac.chi = s.chi;
  REQUIRE_THROWS_AS(projected_direction_jacobian(no_jac), parameter_error);
}

TEST_CASE("projected direction Jacobian matches the normalized-direction map") {
  const ParametricPath trefoil = catalog_make("trefoil");
  const GvfParams params = params_of({0.002, 0.002, 0.002});
  const double L = 0.1;
  const Reparameterization rep{0.45};
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dist(-150.0, 150.0);
  for (int i = 0; i < 40; ++i) {
    Vec xi(4);
    for (int j = 0; j < 4; ++j) xi[j] = dist(rng);
    const FieldSample s = eval_singularity_free(trefoil, L, rep, params, xi, true);
    const Mat Jp = projected_direction_jacobian(s);
    auto direction = [&](const Vec& p) {
      const FieldSample q = eval_singularity_free(trefoil, L, rep, params, p);
      return Vec(q.chi.head(2) / q.chi.norm());
    };
    const Mat fd = fd_jacobian(direction, xi, 1e-6);
    REQUIRE((Jp - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("propagation term is orthogonal to every gradient") {
  std::mt19937_64 rng(29);
  for (const NamedField& field : catalog_fields()) {
    const int m = field.path.n + 1;
    std::uniform_real_distribution<double> dist(-200.0, 200.0);
    for (int i = 0; i < 500; ++i) {
      Vec xi(m);
      for (int j = 0; j < m; ++j) xi[j] = dist(rng);
      const FieldSample s =
          eval_singularity_free(field.path, field.L, field.rep, field.params, xi);
      for (int col = 0; col < field.path.n; ++col) {
        const double bound = 1e-9 * s.propagation.norm() * s.N.col(col).norm();
        REQUIRE(std::abs(s.propagation.dot(s.N.col(col))) <= bound);
      }
    }
  }
}

TEST_CASE("determinant identity and Pythagorean decomposition") {
  std::mt19937_64 rng(31);
  for (const NamedField& field : catalog_fields()) {
    const int m = field.path.n + 1;
    std::uniform_real_distribution<double> dist(-200.0, 200.0);
    for (int i = 0; i < 500; ++i) {
      Vec xi(m);
      for (int j = 0; j < m; ++j) xi[j] = dist(rng);
      const FieldSample s =
          eval_singularity_free(field.path, field.L, field.rep, field.params, xi);
      const double cross_sq = s.propagation.squaredNorm();
      const double det = (s.N.transpose() * s.N).determinant();
      REQUIRE(std::abs(det - cross_sq) <= 1e-8 * std::max(1.0, cross_sq));
      const double lhs = s.chi.squaredNorm();
      const double rhs = cross_sq + s.converging.squaredNorm();
      REQUIRE(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, lhs));
    }
  }
}

TEST_CASE("orientation flip negates only the propagation term") {
  const ParametricPath trefoil = catalog_make("trefoil");
  GvfParams fwd = params_of({0.002, 0.002, 0.002}, 1.0);
  GvfParams bwd = params_of({0.002, 0.002, 0.002}, -1.0);
  Vec xi(4);
  xi << 10.0, -40.0, 3.0, 12.0;
  const FieldSample a = eval_singularity_free(trefoil, 0.1, {0.45}, fwd, xi);
  const FieldSample b = eval_singularity_free(trefoil, 0.1, {0.45}, bwd, xi);
  REQUIRE(a.propagation.isApprox(-b.propagation, 1e-15));
  REQUIRE(a.converging.isApprox(b.converging, 1e-15));
}

TEST_CASE("closed form equals the generic evaluation on the lifted stack") {
  std::mt19937_64 rng(37);
  for (const NamedField& field : catalog_fields()) {
    const SurfaceStack stack = implicit_from_parametric(field.path, field.L, field.rep);
    const int m = field.path.n + 1;
    std::uniform_real_distribution<double> dist(-200.0, 200.0);
    for (int i = 0; i < 250; ++i) {
      Vec xi(m);
      for (int j = 0; j < m; ++j) xi[j] = dist(rng);
      const FieldSample fast =
          eval_singularity_free(field.path, field.L, field.rep, field.params, xi, true);
      const FieldSample generic = eval_conventional(stack, field.params, xi, true);
      const double scale = std::max(1.0, generic.chi.norm());
      REQUIRE((fast.chi - generic.chi).norm() <= 1e-12 * scale);
      REQUIRE((fast.propagation - generic.propagation).norm() <= 1e-12 * scale);
      REQUIRE((*fast.jacobian - *generic.jacobian).norm() <=
              1e-10 * std::max(1.0, generic.jacobian->norm()));
    }
  }
}

TEST_CASE("gain validation") {
  const ParametricPath circle = catalog_make("circle");
  Vec xi(3);
  xi << 1.0, 0.0, 0.0;
  REQUIRE_THROWS_AS(eval_singularity_free(circle, 1.0, {1.0}, params_of({1.0, -1.0}), xi),
                    parameter_error);
  REQUIRE_THROWS_AS(eval_singularity_free(circle, 1.0, {1.0}, params_of({1.0}), xi), shape_error);
  GvfParams bad = params_of({1.0, 1.0});
  bad.orientation = 0.5;
  REQUIRE_THROWS_AS(eval_singularity_free(circle, 1.0, {1.0}, bad, xi), parameter_error);
}
