#include "doctest.h"

#include "oscilab/pde.hpp"

#include <cmath>
#include <random>

using namespace oscilab;

namespace {

CoefficientField identity_field() {
  FamilySpec s;
  s.family = Family::Constant;
  s.params = {1.0};
  return build_family(s);
}

CoefficientField laminate_raw() {
  FamilySpec s;
  s.family = Family::Laminate;
  s.params = {2.0, 1.0};
  return build_family(s);
}

double sup_nodal_error(const SolutionField& s, const PlanarField& exact) {
  double e = 0.0;
  const auto& mesh = s.mesh();
  for (std::size_t v = 0; v < mesh.node_count(); ++v) {
    e = std::max(e, std::abs(s.nodal_values()[static_cast<Eigen::Index>(v)] - exact.value(mesh.nodes[v])));
  }
  return e;
}

SolveOptions coarse(double h) {
  SolveOptions o;
  o.h = h;
  o.allow_coarse_mesh = true;
  return o;
}

}  // namespace

TEST_CASE("boundary data validation") {
  CHECK_NOTHROW(BoundaryData::cosine(2).validate());
  BoundaryData g;
  g.a = {1.0};
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g.a = std::vector<double>(10, 0.0);
  g.a[9] = 1.0;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g.a = {0.0, NAN};
  CHECK_THROWS_AS(g.validate(), ConfigError);
  CHECK(BoundaryData::cosine(3).degree() == 3);
  CHECK(BoundaryData::cosine(2)(0.0) == 1.0);
}

TEST_CASE("harmonic reference examples") {
  const auto u0 = harmonic_reference(BoundaryData::cosine(2), 1.0);
  CHECK(u0.value(Vec2(0.5, 0.0)) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(u0.gradient(Vec2::Zero()).norm() == 0.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  for (int i = 0; i < 50; ++i) {
    const Vec2 x(u(rng), u(rng));
    if (x.norm() < 1e-3) continue;
    CHECK(u0.gradient(x).norm() > 0.0);
    CHECK(u0.value(x) == doctest::Approx(x.x() * x.x() - x.y() * x.y()).epsilon(1e-14));
  }

  BoundaryData g;
  g.a = {0.0, 1.0};
  g.b = {0.0, 0.0, 0.0, 0.3};
  const double R = 1.7;
  const auto w = harmonic_reference(g, R);
  for (int i = 0; i < 50; ++i) {
    const Vec2 x(u(rng), u(rng));
    const double r = x.norm() / R, t = std::atan2(x.y(), x.x());
    CHECK(w.value(x) == doctest::Approx(r * std::cos(t) + 0.3 * r * r * r * std::sin(3 * t)).epsilon(1e-13));
    const double s = 1e-6;
    const Vec2 fd((w.value(x + Vec2(s, 0)) - w.value(x - Vec2(s, 0))) / (2 * s),
                  (w.value(x + Vec2(0, s)) - w.value(x - Vec2(0, s))) / (2 * s));
    CHECK((fd - w.gradient(x)).norm() <= 1e-8);
  }
  // Boundary values reproduce g.
  for (double t : {0.0, 0.4, 2.0, 5.5}) {
    CHECK(w.value(Vec2(R * std::cos(t), R * std::sin(t))) == doctest::Approx(g(t)).epsilon(1e-13));
  }
}

TEST_CASE("constant-coefficient solves converge at second order") {
  const auto I = identity_field();
  REQUIRE(I.normalized());
  for (int ell : {1, 2}) {
    INFO("ell ", ell);
    const auto g = BoundaryData::cosine(ell);
    const auto exact = harmonic_reference(g, 1.0);
    std::vector<double> err, hs;
    for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
      const auto s = assemble_solve(EpsProblem{I, 1.0, 1.0, g}, coarse(h));
      CHECK(s.info().residual <= 1e-10);
      hs.push_back(s.mesh().h());
      err.push_back(sup_nodal_error(s, exact));
      CHECK(err.back() <= 10.0 * hs.back() * hs.back());
    }
    // P1 reproduces u = x: only round-off is left and an order is meaningless.
    if (ell == 1) {
      for (double e : err) CHECK(e <= 1e-9);
      continue;
    }
    for (std::size_t i = 1; i < err.size(); ++i) {
      const double order = std::log(err[i - 1] / err[i]) / std::log(hs[i - 1] / hs[i]);
      CHECK(order >= 1.9);
    }
  }
}

TEST_CASE("boundary nodal values equal g exactly and the maximum principle holds") {
  const auto [t, lam] = normalize(solve_cell_problem(laminate_raw(), 128), laminate_raw());
  BoundaryData g;
  g.a = {0.0, 0.0, 1.0};
  g.b = {0.0, 0.4};
  const auto s = assemble_solve(EpsProblem{lam, 1.0 / 8, 1.0, g});
  const auto& mesh = s.mesh();
  for (std::size_t v = mesh.interior_count(); v < mesh.node_count(); ++v) {
    const double th = kTwoPi * static_cast<double>(v - mesh.interior_count()) / (6.0 * mesh.m);
    CHECK(s.nodal_values()[static_cast<Eigen::Index>(v)] == g(th));
  }
  CHECK(s.info().residual <= 1e-10);
  CHECK(s.info().max_principle_excess <= 1e-8);
  double umin = 1e300, umax = -1e300, gmin = 1e300, gmax = -1e300;
  for (std::size_t v = 0; v < mesh.node_count(); ++v) {
    const double x = s.nodal_values()[static_cast<Eigen::Index>(v)];
    umin = std::min(umin, x);
    umax = std::max(umax, x);
    if (mesh.is_boundary(static_cast<int>(v))) {
      gmin = std::min(gmin, x);
      gmax = std::max(gmax, x);
    }
  }
  CHECK(umin >= gmin - 1e-8);
  CHECK(umax <= gmax + 1e-8);
}

TEST_CASE("solve preconditions") {
  const auto I = identity_field();
  const auto g = BoundaryData::cosine(2);
  SolveOptions o;
  o.h = 1.0 / 32;
  CHECK_THROWS_AS(assemble_solve(EpsProblem{I, 1.0 / 8, 1.0, g}, o), ConfigError);
  CHECK_THROWS_AS(assemble_solve(EpsProblem{laminate_raw(), 1.0 / 8, 1.0, g}), ConfigError);
  CHECK_THROWS_AS(assemble_solve(EpsProblem{I, 0.0, 1.0, g}), ConfigError);
  CHECK_THROWS_AS(assemble_solve(EpsProblem{I, 2.0, 1.0, g}), ConfigError);
  CHECK(mesh_rule(1.0 / 8) == 1.0 / 64);
  CHECK(mesh_rule(1.0 / 32) == 1.0 / 256);
}

TEST_CASE("discrete energy approaches the exact energy under refinement") {
  // The disk polygon grows with m, so energy is not monotone; the error is.
  const auto I = identity_field();
  const auto g = BoundaryData::cosine(2);
  double prev = 1e300;
  for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
    const auto s = assemble_solve(EpsProblem{I, 1.0, 1.0, g}, coarse(h));
    const double err = std::abs(s.info().energy - kTwoPi);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev <= 1e-2);
}

TEST_CASE("mesh disk mean square tracks the closed form") {
  const auto I = identity_field();
  const auto s = assemble_solve(EpsProblem{I, 1.0, 1.0, BoundaryData::cosine(1)}, coarse(1.0 / 64));
  for (double r : {0.25, 0.5, 0.9}) {
    CHECK(s.disk_mean_square(Vec2::Zero(), r) == doctest::Approx(r * r / 4).epsilon(2e-2));
  }
  CHECK_THROWS_AS(s.disk_mean_square(Vec2(0.5, 0.0), 0.6), GeometryError);
}

TEST_CASE("solution interpolation") {
  const auto I = identity_field();
  const auto s = assemble_solve(EpsProblem{I, 1.0, 1.0, BoundaryData::cosine(1)}, coarse(1.0 / 32));
  // u = x is reproduced exactly by P1, so values and gradients are exact up to rounding.
  for (const Vec2& x : {Vec2(0.1, 0.2), Vec2(-0.5, 0.3), Vec2(0.0, -0.9)}) {
    CHECK(s.value(x) == doctest::Approx(x.x()).epsilon(1e-9));
    CHECK((s.element_gradient(x) - Vec2(1, 0)).norm() <= 1e-9);
  }
  CHECK_THROWS_AS(s.value(Vec2(1.5, 0.0)), GeometryError);
}

TEST_CASE("corrector expansion") {
  const auto I = identity_field();
  const auto chi0 = solve_cell_problem(I, 32);
  const auto u0 = harmonic_reference(BoundaryData::cosine(3), 1.0);
  std::vector<Vec2> pts{Vec2(0.1, 0.2), Vec2(-0.4, 0.3), Vec2(0.55, -0.1), Vec2(2.0, 0.0)};
  const auto e = corrector_expansion(u0, chi0, 1.0 / 16, pts);
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(e[i].ok);
    CHECK(e[i].G == u0.gradient(pts[i]));
  }
  CHECK_FALSE(e[3].ok);

  // Laminate, u0 = x: G = (a_hat / a(x1 / eps), 0) with a_hat the harmonic mean.
  const auto lam = laminate_raw();
  const auto chi = solve_cell_problem(lam, 512);
  const auto x = harmonic_reference(BoundaryData::cosine(1), 1.0);
  const double eps = 1.0 / 8;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  std::vector<Vec2> q;
  for (int i = 0; i < 200; ++i) q.emplace_back(u(rng), u(rng));
  const auto gl = corrector_expansion(x, chi, eps, q);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double a = 2.0 + std::sin(kTwoPi * q[i].x() / eps);
    CHECK(gl[i].G.x() == doctest::Approx(std::sqrt(3.0) / a).epsilon(2e-3));
    CHECK(std::abs(gl[i].G.y()) <= 1e-8);
  }
}

TEST_CASE("convergence report") {
  const auto I = identity_field();
  const auto chi0 = solve_cell_problem(I, 32);
  const auto g = BoundaryData::cosine(2);
  const auto a = assemble_solve(EpsProblem{I, 1.0 / 8, 1.0, g});
  const auto b = assemble_solve(EpsProblem{I, 1.0 / 16, 1.0, g});
  CHECK_THROWS_AS(convergence_report({&a}, chi0), ConfigError);
  const auto rep = convergence_report({&a, &b}, chi0);
  REQUIRE(rep.rows.size() == 2);
  for (const auto& row : rep.rows) CHECK(row.sup_value_error <= 10.0 * row.h * row.h);
  CHECK(rep.value_strictly_decreasing);
  const auto other = assemble_solve(EpsProblem{I, 1.0 / 16, 1.0, BoundaryData::cosine(3)});
  CHECK_THROWS_AS(convergence_report({&a, &other}, chi0), ConfigError);
}
