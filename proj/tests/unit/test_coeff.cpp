#include "doctest.h"

#include "oscilab/coeff.hpp"

#include <cmath>
#include <random>

using namespace oscilab;

namespace {

FamilySpec spec(Family f, std::vector<double> p, LatticeBasis l = LatticeBasis::unit_square()) {
  FamilySpec s;
  s.family = f;
  s.params = std::move(p);
  s.lattice = l;
  return s;
}

LatticeBasis parallelogram() { return {Vec2(1.0, 0.0), Vec2(0.5, 1.0)}; }

FamilySpec sample_fourier() {
  return spec(Family::FourierGeneral,
              {2.0, 0.3, 1.5,                            //
               1, 0, 0.5, 0.1, 0.2, 0.0, 0.0, 0.0,       //
               0, 1, 0.0, 0.0, 0.0, 0.2, 0.0, 0.4,       //
               1, 1, 0.1, 0.1, 0.1, 0.05, 0.0, -0.05},
              parallelogram());
}

}  // namespace

TEST_CASE("constant identity field") {
  const auto f = build_family(spec(Family::Constant, {1.0}));
  CHECK(f.lambda_decl() == 1.0);
  const auto est = validate_ellipticity(f, 256);
  CHECK(est.lambda_est == doctest::Approx(1.0));
  CHECK(est.Lambda_est == doctest::Approx(1.0));
  CHECK(est.passes);
  CHECK(estimate_lipschitz(f, 1024) == 0.0);
  CHECK(check_periodicity(f, f.lattice(), 1024) == 0.0);
  CHECK(f.normalized());
}

TEST_CASE("laminate 2 + sin(2 pi y1)") {
  const auto f = build_family(spec(Family::Laminate, {2.0, 1.0}));
  CHECK(f.lambda_decl() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(f.projection_factor() == 1.0);
  const auto est = validate_ellipticity(f, 1024);
  CHECK(std::abs(est.lambda_est - 1.0) <= 1e-6);
  CHECK(std::abs(est.Lambda_est - 3.0) <= 1e-6);
  // |diag(a', a')|_F peaks at sqrt(2) * 2 pi.
  const double m = estimate_lipschitz(f, 256 * 256);
  CHECK(m == doctest::Approx(std::sqrt(2.0) * kTwoPi).epsilon(1e-3));
  CHECK(m <= f.lipschitz_decl() * (1 + 1e-12));
  CHECK(check_periodicity(f, f.lattice(), 1024) <= 1e-12);
}

TEST_CASE("separable-scalar extremes") {
  const auto f = build_family(spec(Family::SeparableScalar, {2.0, 0.5}));
  CHECK(f.lambda_decl() == doctest::Approx(0.4));
  const auto est = validate_ellipticity(f, 1024);
  CHECK(est.lambda_est == doctest::Approx(1.5));
  CHECK(est.Lambda_est == doctest::Approx(2.5));
  CHECK(estimate_lipschitz(f, 256 * 256) == doctest::Approx(kPi * std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("rotating-anisotropic keeps its eigenvalues") {
  const auto f = build_family(spec(Family::RotatingAnisotropic, {1.0, 2.0, 0.7}));
  const auto est = validate_ellipticity(f, 4096);
  CHECK(std::abs(est.lambda_est - 1.0) <= 1e-6);
  CHECK(std::abs(est.Lambda_est - 2.0) <= 1e-6);
  CHECK(f.lambda_decl() == doctest::Approx(0.5));
  CHECK(estimate_lipschitz(f, 128 * 128) <= f.lipschitz_decl());
}

TEST_CASE("fourier-general on a parallelogram lattice is exactly periodic") {
  const auto f = build_family(sample_fourier());
  CHECK(check_periodicity(f, parallelogram(), 1024) <= 1e-12);
  const auto est = validate_ellipticity(f, 4096);
  CHECK(est.passes);
  CHECK(est.lambda_est >= f.eig_lower());
  CHECK(est.Lambda_est <= f.eig_upper());
  CHECK_THROWS_AS(check_periodicity(f, LatticeBasis::unit_square(), 16), ConfigError);
}

TEST_CASE("amplitude projection shrinks oversized oscillations") {
  auto s = spec(Family::Laminate, {2.0, 3.0});
  s.lambda_target = 0.2;
  const auto f = build_family(s);
  // Feasible factor is min((2 - 0.2) / 3, (5 - 2) / 3) = 0.6, then the 0.95 safety factor.
  CHECK(f.projection_factor() == doctest::Approx(0.57).epsilon(1e-9));
  CHECK(f.params()[1] == doctest::Approx(1.71).epsilon(1e-9));
  CHECK(f.lambda_decl() >= 0.2);
}

TEST_CASE("rejections") {
  CHECK_THROWS_AS(build_family(spec(Family::Laminate, {2.0, 1.0}, {Vec2(1, 0), Vec2(2, 0)})),
                  ConfigError);
  CHECK_THROWS_AS(build_family(spec(Family::Laminate, {0.01, 0.005})), ConfigError);
  CHECK_THROWS_AS(build_family(spec(Family::Laminate, {30.0, 1.0})), ConfigError);
  CHECK_THROWS_AS(build_family(spec(Family::Laminate, {2.0})), ConfigError);
  CHECK_THROWS_AS(build_family(spec(Family::Constant, {1.0, NAN})), ConfigError);
  CHECK_THROWS_AS(build_family(spec(Family::FourierGeneral, {1, 0, 1, 0.5, 0, 0, 0, 0, 0, 0, 0})),
                  ConfigError);
  auto low = spec(Family::Constant, {1.0});
  low.lambda_target = 0.01;
  CHECK_THROWS_AS(build_family(low), ConfigError);
  CHECK_THROWS_AS(parse_family("checkerboard"), ConfigError);
  CHECK(parse_family("separable-scalar") == Family::SeparableScalar);
}

TEST_CASE("pushed-forward field keeps exact periodicity on the transformed lattice") {
  const auto f = build_family(sample_fourier());
  Mat2 p;
  p << 1.3, 0.2, 0.2, 0.9;
  const auto g = f.pushed_forward(p, true);
  CHECK(g.normalized());
  CHECK(check_periodicity(g, g.lattice(), 512) <= 1e-12);
  const Vec2 z(0.37, -0.81);
  const Mat2 expect = p.inverse() * f(p * z) * p.inverse();
  CHECK((g(z) - expect).norm() <= 1e-13);
  const auto est = validate_ellipticity(g, 4096);
  CHECK(est.lambda_est >= g.eig_lower());
  CHECK(est.Lambda_est <= g.eig_upper());
}

TEST_CASE("property: random admissible specs satisfy the declared bounds") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    FamilySpec s;
    const int which = trial % 5;
    s.lattice = {Vec2(0.5 + u(rng), 0.3 * (u(rng) - 0.5)), Vec2(0.3 * (u(rng) - 0.5), 0.5 + u(rng))};
    switch (which) {
      case 0:
        s = spec(Family::Constant, {0.5 + 2 * u(rng), 0.2 * u(rng), 0.5 + 2 * u(rng)}, s.lattice);
        break;
      case 1:
        s = spec(Family::Laminate, {1 + 2 * u(rng), 4 * u(rng)}, s.lattice);
        break;
      case 2:
        s = spec(Family::SeparableScalar, {1 + 2 * u(rng), 4 * u(rng)}, s.lattice);
        break;
      case 3:
        s = spec(Family::RotatingAnisotropic, {0.5 + u(rng), 1 + 2 * u(rng), 2 * u(rng)}, s.lattice);
        break;
      default: {
        std::vector<double> p{2 + u(rng), 0.2 * u(rng), 2 + u(rng)};
        for (int m = 0; m < 2; ++m) {
          p.insert(p.end(), {double(m + 1), double(m), u(rng), 0.3 * u(rng), u(rng), u(rng),
                             0.3 * u(rng), u(rng)});
        }
        s = spec(Family::FourierGeneral, p, s.lattice);
      }
    }
    s.lambda_target = 0.1;
    INFO("trial ", trial);
    const auto f = build_family(s);
    const auto again = build_family(s);
    CHECK(again.params() == f.params());
    CHECK(check_periodicity(f, f.lattice(), 1024) <= 1e-12);
    const double lam = f.lambda_decl();
    CHECK(lam >= 0.05);
    for (int k = 0; k < 1024; ++k) {
      const Vec2 y(6 * u(rng) - 3, 6 * u(rng) - 3);
      const Vec2 ev = sym_eigenvalues(f(y));
      CHECK(ev(0) >= lam * (1 - 1e-12));
      CHECK(ev(1) <= (1 + 1e-12) / lam);
    }
  }
}
