#include "doctest.h"

#include "oscilab/field.hpp"
#include "oscilab/mesh.hpp"

#include <cmath>
#include <random>

using namespace oscilab;

namespace {

double polygon_area(int m, double R) { return 0.5 * 6 * m * R * R * std::sin(kTwoPi / (6.0 * m)); }

void check_invariants(const DiskMesh& mesh) {
  const auto st = mesh_stats(mesh);
  CHECK(st.triangles == static_cast<std::size_t>(6 * mesh.m * mesh.m));
  CHECK(st.boundary_nodes == static_cast<std::size_t>(6 * mesh.m));
  CHECK(st.min_area > 0.0);
  CHECK(st.max_diameter / st.min_diameter <= 2.5);
  CHECK(st.boundary_radius_error <= 1e-14 * mesh.R);
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) total += mesh.area(t);
  CHECK(total == doctest::Approx(polygon_area(mesh.m, mesh.R)).epsilon(1e-12));
}

}  // namespace

TEST_CASE("ring count rule") {
  CHECK(ring_count_for(1.0, 1.0 / 32) == 34);
  CHECK(ring_count_for(2.0, 1.0 / 256) == 544);
  CHECK(ring_count_for(1.0, 1.0 / 8) == 9);
  for (double h : {1.0 / 16, 1.0 / 40, 1.0 / 64, 1.0 / 100}) {
    const int m = ring_count_for(1.0, h);
    CHECK(kPi / (3.0 * m) <= h);
  }
}

TEST_CASE("triangulate_disk R=1 h=1/32") {
  const auto mesh = triangulate_disk(1.0, 1.0 / 32);
  CHECK(mesh.m == 34);
  CHECK(mesh.triangle_count() == 6936);
  CHECK(mesh.h() <= 1.0 / 32);
  // Boundary angular resolution
  CHECK(kTwoPi / (6 * mesh.m) <= mesh.h() / mesh.R + 1e-15);
  check_invariants(mesh);
  CHECK(mesh.levels.back() == mesh.m);
  CHECK(mesh.levels.front() >= 16);
}

TEST_CASE("triangulate_disk R=2 h=1/256 stays within budget") {
  const auto mesh = triangulate_disk(2.0, 1.0 / 256);
  CHECK(mesh.triangle_count() == 1775616);
  CHECK(mesh_stats(mesh).min_area > 0.0);
}

TEST_CASE("triangulate_disk preconditions") {
  CHECK_THROWS_AS(triangulate_disk(1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(triangulate_disk(1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(triangulate_disk(2.0, 1.0 / 4096), BudgetError);
}

TEST_CASE("ring meshes: invariants over random radii and spacings") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> rr(0.3, 3.0), hh(1.0 / 64, 1.0 / 8);
  for (int trial = 0; trial < 25; ++trial) {
    const double R = rr(rng);
    const double h = hh(rng) * R;
    INFO("trial ", trial, " R=", R, " h=", h);
    const auto mesh = triangulate_disk(R, h);
    CHECK(mesh.h() <= h);
    check_invariants(mesh);
  }
}

TEST_CASE("ring_prolongation is exact on spokes and sagitta-close elsewhere") {
  const int mc = 17;
  const auto coarse = ring_mesh(1.0, mc);
  const auto fine = ring_mesh(1.0, 2 * mc);
  const auto P = ring_prolongation(mc);
  REQUIRE(P.rows() == static_cast<Eigen::Index>(fine.interior_count()));
  REQUIRE(P.cols() == static_cast<Eigen::Index>(coarse.interior_count()));
  Vector cx(P.cols());
  for (Eigen::Index i = 0; i < P.cols(); ++i) {
    const Vec2& p = coarse.nodes[static_cast<std::size_t>(i)];
    cx[i] = 0.3 + 1.7 * p.x() - 0.6 * p.y();
  }
  const Vector fx = P * cx;
  // Lattice midpoints of nodes placed on circles: a linear f is off by at most
  // |grad f| times the largest chord sagitta, reached on the first coarse ring.
  const double sagitta = std::hypot(1.7, 0.6) * (1.0 - std::cos(kPi / 6)) / mc;
  const double inner = 1.0 - 1.0 / mc - 1e-12;
  int checked = 0;
  for (int k = 1; k < 2 * mc - 1; ++k) {
    for (int j = 0; j < 6 * k; ++j) {
      const int i = ring_node(k, j);
      const Vec2& p = fine.nodes[static_cast<std::size_t>(i)];
      if (p.norm() > inner) continue;
      const double err = std::abs(fx[i] - (0.3 + 1.7 * p.x() - 0.6 * p.y()));
      if (j % k == 0) {
        CHECK(err <= 1e-14);
      } else {
        CHECK(err <= sagitta);
      }
      ++checked;
    }
  }
  CHECK(checked > 1000);
  // Coarse nodes are injected.
  for (Eigen::Index i = 0; i < P.cols(); ++i) {
    const Vec2& p = coarse.nodes[static_cast<std::size_t>(i)];
    if (p.norm() > inner) continue;
    const int k = static_cast<int>(std::lround(p.norm() * mc));
    if (k == 0) continue;
    const double t = std::atan2(p.y(), p.x());
    const int j = static_cast<int>(std::lround((t < 0 ? t + kTwoPi : t) / (kTwoPi / (6 * k)))) % (6 * k);
    CHECK(fx[ring_node(2 * k, 2 * j)] == doctest::Approx(cx[i]).epsilon(1e-14));
  }
}

TEST_CASE("MeshLocator finds the containing triangle") {
  const auto mesh = triangulate_disk(1.5, 1.0 / 20);
  const MeshLocator loc(mesh);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  int inside = 0;
  for (int i = 0; i < 4000; ++i) {
    const Vec2 x(u(rng), u(rng));
    if (x.norm() > 1.49) continue;
    ++inside;
    const auto hit = loc.locate(x);
    REQUIRE(hit.triangle >= 0);
    const auto& t = mesh.triangles[static_cast<std::size_t>(hit.triangle)];
    Vec2 back = Vec2::Zero();
    for (int k = 0; k < 3; ++k) back += hit.bary[k] * mesh.nodes[static_cast<std::size_t>(t[k])];
    CHECK((back - x).norm() <= 1e-12);
    if (x.norm() < 1.4) {
      for (double b : hit.bary) CHECK(b >= -1e-12);
    }
  }
  CHECK(inside > 2000);
  CHECK(loc.locate(Vec2(1.6, 0.0)).triangle == -1);
  CHECK(loc.locate(Vec2(0.0, -2.0)).triangle == -1);
  // Boundary sliver between polygon and circle still resolves.
  CHECK(loc.locate(Vec2(1.5 * std::cos(0.01), 1.5 * std::sin(0.01))).triangle >= 0);
}

TEST_CASE("harmonic_polynomial value and gradient") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int ell = 1; ell <= 5; ++ell) {
    const double a = u(rng), b = u(rng);
    const auto f = harmonic_polynomial(ell, a, b);
    for (int i = 0; i < 20; ++i) {
      const Vec2 x(u(rng), u(rng));
      const double r = x.norm(), t = std::atan2(x.y(), x.x());
      const double expect = std::pow(r, ell) * (a * std::cos(ell * t) + b * std::sin(ell * t));
      CHECK(f->value(x) == doctest::Approx(expect).epsilon(1e-12));
      const double s = 1e-6;
      const Vec2 fd((f->value(x + Vec2(s, 0)) - f->value(x - Vec2(s, 0))) / (2 * s),
                    (f->value(x + Vec2(0, s)) - f->value(x - Vec2(0, s))) / (2 * s));
      CHECK((fd - f->gradient(x)).norm() <= 1e-7 * std::max(1.0, fd.norm()));
    }
  }
  CHECK_THROWS_AS(harmonic_polynomial(-1), ConfigError);
}

TEST_CASE("default disk mean square matches closed forms") {
  const auto x = harmonic_polynomial(1);
  CHECK(x->disk_mean_square(Vec2::Zero(), 0.8) == doctest::Approx(0.64 / 4).epsilon(1e-13));
  // mean of (x^2 - y^2)^2 over B(0, r) is r^4 / 6
  const auto q = harmonic_polynomial(2);
  CHECK(q->disk_mean_square(Vec2::Zero(), 0.5) == doctest::Approx(std::pow(0.5, 4) / 6).epsilon(1e-13));
  // Off-center: mean of x^2 over B(c, r) is c_x^2 + r^2 / 4
  CHECK(x->disk_mean_square(Vec2(0.3, -0.2), 0.5) == doctest::Approx(0.09 + 0.0625).epsilon(1e-13));
}

TEST_CASE("translated and dilated wrappers") {
  auto base = std::shared_ptr<const PlanarField>(harmonic_polynomial(3, 0.7, -0.2));
  const Vec2 s(0.375, -1.25);
  const TranslatedField t(base, s);
  const Vec2 x0(0.125, 0.5), d(0.3, 0.1);
  CHECK(t.value_offset(x0 + s, d) == base->value_offset(x0, d));
  CHECK(t.gradient_offset(x0 + s, d) == base->gradient_offset(x0, d));
  CHECK(t.value(x0) == doctest::Approx(base->value(x0 - s)).epsilon(1e-14));

  const DilatedField v(base, 2.0);
  CHECK(v.value(x0) == doctest::Approx(base->value(2.0 * x0)).epsilon(1e-14));
  CHECK((v.gradient(x0) - 2.0 * base->gradient(2.0 * x0)).norm() <= 1e-14);
  CHECK_THROWS_AS(DilatedField(base, 0.0), ConfigError);
}
