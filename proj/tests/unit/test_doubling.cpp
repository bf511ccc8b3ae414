#include "doctest.h"

#include "oscilab/doubling.hpp"

#include <cmath>
#include <random>

using namespace oscilab;

namespace {

// Closed form that pretends to be a mesh field with spacing h and scale eps,
// so the floor-radius logic can be exercised without a solve.
class PretendMeshField : public PlanarField {
 public:
  PretendMeshField(std::shared_ptr<const PlanarField> inner, double h, double eps)
      : inner_(std::move(inner)), h_(h), eps_(eps) {}
  double value(const Vec2& x) const override { return inner_->value(x); }
  Vec2 gradient(const Vec2& x) const override { return inner_->gradient(x); }
  bool contains_disk(const Vec2& c, double r) const override { return c.norm() + r <= 2.0; }
  double mesh_size() const override { return h_; }
  double oscillation_scale() const override { return eps_; }

 private:
  std::shared_ptr<const PlanarField> inner_;
  double h_, eps_;
};

std::shared_ptr<ClosedFormField> sum_field(double c1, int l1, double c2, int l2) {
  auto a = harmonic_polynomial(l1, c1);
  auto b = harmonic_polynomial(l2, c2);
  return std::make_shared<ClosedFormField>([a, b](const Vec2& x) { return a->value(x) + b->value(x); },
                                           [a, b](const Vec2& x) { return Vec2(a->gradient(x) + b->gradient(x)); });
}

// Circle mean square of r cos t + c r^k cos kt (orthogonal modes, u(0) = 0).
double two_mode_mean(double r, double c, int k) { return 0.5 * r * r + 0.5 * c * c * std::pow(r, 2 * k); }

}  // namespace

TEST_CASE("circle mean square examples") {
  CHECK(circle_mean_square(*harmonic_polynomial(1), Vec2::Zero(), 1.0) == doctest::Approx(0.5).epsilon(1e-14));
  for (double r : {0.1, 0.5, 1.3}) {
    CHECK(circle_mean_square(*harmonic_polynomial(2), Vec2::Zero(), r) ==
          doctest::Approx(std::pow(r, 4) / 2).epsilon(1e-13));
  }
  const ClosedFormField constant([](const Vec2&) { return 3.0; }, [](const Vec2&) { return Vec2(0, 0); });
  CHECK_THROWS_AS(circle_mean_square(constant, Vec2::Zero(), 0.5), DegenerateError);
  CHECK_THROWS_AS(circle_mean_square(*harmonic_polynomial(1), Vec2::Zero(), 0.5, 256), ConfigError);
  const ClosedFormField disk([](const Vec2& x) { return x.x(); }, [](const Vec2&) { return Vec2(1, 0); }, 1.0);
  CHECK_THROWS_AS(circle_mean_square(disk, Vec2(0.5, 0.0), 0.6), GeometryError);
}

TEST_CASE("doubling index is exact on homogeneous harmonic polynomials") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int ell = 1; ell <= 4; ++ell) {
    for (double r : {0.25, 0.5}) {
      CHECK(doubling_index(*harmonic_polynomial(ell), Vec2::Zero(), r) == doctest::Approx(ell).epsilon(1e-6));
      const auto f = harmonic_polynomial(ell, u(rng), u(rng));
      CHECK(std::abs(doubling_index(*f, Vec2::Zero(), r) - ell) <= 1e-6);
    }
  }
  // Ratio 16 gives 2.
  CHECK(std::log(16.0) / std::log(4.0) == doctest::Approx(2.0));
}

TEST_CASE("profiles") {
  const auto p = doubling_profile(*harmonic_polynomial(3), Vec2::Zero(), 0.5, 4);
  REQUIRE(p.radii.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(p.radii[k] == std::ldexp(0.5, -static_cast<int>(k)));
    CHECK(std::abs(p.values[k] - 3.0) <= 1e-6);
    CHECK(p.reliable[k]);
    CHECK(p.errors[k].empty());
    CHECK(p.outer[k] > 0.0);
    CHECK(p.inner[k] > 0.0);
  }

  // x + 0.05 r^2 cos 2t: values decrease toward 1 as r shrinks; oracle from
  // the orthogonal mode decomposition of the circle average.
  const auto f = sum_field(1.0, 1, 0.05, 2);
  const auto q = doubling_profile(*f, Vec2::Zero(), 1.0, 6);
  for (std::size_t k = 0; k < q.radii.size(); ++k) {
    const double r = q.radii[k];
    const double expect = std::log(two_mode_mean(r, 0.05, 2) / two_mode_mean(0.5 * r, 0.05, 2)) / std::log(4.0);
    CHECK(q.values[k] == doctest::Approx(expect).epsilon(1e-10));
    if (k > 0) CHECK(q.values[k] < q.values[k - 1]);
    CHECK(q.values[k] > 1.0);
  }
  CHECK(q.values.back() - 1.0 < 1e-4);

  // Rungs below the floor max(4 eps, 2 h) are flagged, not erased.
  const PretendMeshField mesh(harmonic_polynomial(2), 0.05, 0.01);
  const auto m = doubling_profile(mesh, Vec2::Zero(), 0.5, 4);
  CHECK(m.floor_radius == doctest::Approx(0.1));
  CHECK(m.reliable[0]);
  CHECK(m.reliable[2]);
  CHECK_FALSE(m.reliable[3]);
  CHECK(std::abs(m.values[3] - 2.0) <= 1e-6);
}

TEST_CASE("reduction radius and parameter validation") {
  CHECK(reduction_radius({2, 0.5}, 1.0) == 1.0 / 32);
  CHECK(reduction_radius({4, 0.25}, 1.0) == 1.0 / 128);
  CHECK(reduction_radius({1, 0.5}, 2.0) == 1.0 / 8);
  CHECK_THROWS_AS(ReductionParams({0, 0.25}).validate(), ConfigError);
  CHECK_THROWS_AS(ReductionParams({2, 0.0}).validate(), ConfigError);
  CHECK_THROWS_AS(ReductionParams({2, 0.6}).validate(), ConfigError);
  CHECK_THROWS_AS(ReductionParams({9, 0.25, 9}).validate(), ConfigError);
  CHECK_THROWS_AS(ReductionParams({5, 0.25, 4}).validate(), ConfigError);
  // delta / (8 ell) stays in (0, 1/16].
  for (int ell = 1; ell <= 8; ++ell) {
    for (double d : {0.01, 0.25, 0.5}) {
      const double rho = reduction_radius({ell, d}, 1.0);
      CHECK(rho > 0.0);
      CHECK(rho <= 1.0 / 16);
    }
  }
}

TEST_CASE("persistence check") {
  const ReductionParams p{2, 0.25};
  const auto sat = check_persistence(*harmonic_polynomial(2), Vec2::Zero(), 1.0, p);
  CHECK(sat.verdict == Verdict::Satisfied);
  CHECK(sat.slack == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(sat.conclusions.size() == 5);

  const auto lin = check_persistence(*harmonic_polynomial(1), Vec2::Zero(), 1.0, p);
  CHECK(lin.verdict == Verdict::Satisfied);
  CHECK(lin.hypotheses[1].value == doctest::Approx(1.0).epsilon(1e-9));

  // N* = 3 > ell + delta: hypothesis fails, never a violation.
  const auto na = check_persistence(*harmonic_polynomial(3), Vec2::Zero(), 1.0, p);
  CHECK(na.verdict == Verdict::NotApplicable);
  CHECK(na.conclusions.empty());

  // Conclusion below the floor only: unresolvable.
  const PretendMeshField coarse(harmonic_polynomial(2), 0.2, 0.1);
  CHECK(check_persistence(coarse, Vec2::Zero(), 1.0, p).verdict == Verdict::Unresolvable);

  // u = phi(r) cos t has N*(r) = log2(phi(r) / phi(r/2)). With phi = r^3 on
  // [0, 1/4] and r/16 beyond: N*(1) = N*(1/2) = 1 but N*(1/4) = 3.
  const ClosedFormField steep(
      [](const Vec2& x) {
        const double r = x.norm();
        if (r == 0.0) return 0.0;
        const double phi = r <= 0.25 ? r * r * r : r / 16.0;
        return phi * x.x() / r;
      },
      [](const Vec2&) { return Vec2(1.0, 0.0); });
  const auto v = check_persistence(steep, Vec2::Zero(), 1.0, p, 1);
  CHECK(v.verdict == Verdict::Violated);
  REQUIRE(v.conclusions.size() == 2);
  CHECK(v.conclusions[0].value == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(v.slack == doctest::Approx(-0.75).epsilon(1e-8));
}

TEST_CASE("reduction check") {
  const ReductionParams p{2, 0.5};
  const auto x = check_reduction(*harmonic_polynomial(1), Vec2::Zero(), 1.0, p);
  CHECK(x.verdict == Verdict::Satisfied);
  REQUIRE(x.conclusions.size() == 1);
  CHECK(x.conclusions[0].radius == 1.0 / 32);
  CHECK(x.conclusions[0].value == doctest::Approx(1.0).epsilon(1e-9));

  const auto f = sum_field(1.0, 1, 0.02, 3);
  const auto y = check_reduction(*f, Vec2::Zero(), 1.0, p);
  CHECK(y.verdict == Verdict::Satisfied);
  for (const auto& h : y.hypotheses) {
    CHECK(h.value == doctest::Approx(std::log(two_mode_mean(h.radius, 0.02, 3) /
                                              two_mode_mean(0.5 * h.radius, 0.02, 3)) /
                                     std::log(4.0))
                         .epsilon(1e-10));
  }

  CHECK(check_reduction(*harmonic_polynomial(2), Vec2::Zero(), 1.0, p).verdict == Verdict::NotApplicable);
  const PretendMeshField coarse(harmonic_polynomial(1), 1.0 / 64, 1.0 / 16);
  const auto u = check_reduction(coarse, Vec2::Zero(), 1.0, p);
  CHECK(u.verdict == Verdict::Unresolvable);
  CHECK(u.note.find("floor") != std::string::npos);
}

TEST_CASE("scaling identity, translation covariance and quadrature convergence") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    INFO("trial ", trial);
    const int l1 = 1 + trial % 3, l2 = l1 + 1 + trial % 2;
    std::shared_ptr<const PlanarField> f = sum_field(u(rng), l1, u(rng), l2);
    const double theta = (trial % 2) ? 2.0 : 4.0;
    const DilatedField v(f, theta);
    for (double r : {0.05, 0.1}) {
      CHECK(std::abs(doubling_index(v, Vec2::Zero(), r) - doubling_index(*f, Vec2::Zero(), theta * r)) <= 1e-8);
    }
    // Dyadic shift and center: the shifted pipeline repeats the same arithmetic.
    const Vec2 shift(std::ldexp(std::round(u(rng) * 64), -5), std::ldexp(std::round(u(rng) * 64), -5));
    const Vec2 x0(0.125, -0.25);
    const TranslatedField t(f, shift);
    const auto a = doubling_profile(*f, x0, 0.5, 4);
    const auto b = doubling_profile(t, x0 + shift, 0.5, 4);
    for (std::size_t k = 0; k < 4; ++k) CHECK(a.values[k] == b.values[k]);
    for (double r : {0.25, 0.5}) {
      CHECK(std::abs(doubling_index(*f, x0, r, 512) - doubling_index(*f, x0, r, 1024)) <= 1e-8);
    }
  }
}

TEST_CASE("ball doubling exponent") {
  for (int ell = 1; ell <= 4; ++ell) {
    CHECK(ball_doubling(*harmonic_polynomial(ell), Vec2::Zero(), 0.5) == doctest::Approx(ell).epsilon(1e-10));
  }
}
