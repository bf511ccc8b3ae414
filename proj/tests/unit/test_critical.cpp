#include "doctest.h"

#include "oscilab/critical.hpp"
#include "oscilab/pde.hpp"

#include <cmath>
#include <random>

using namespace oscilab;

namespace {

CoefficientField normalized(const FamilySpec& spec, int n = 128) {
  const auto raw = build_family(spec);
  return normalize(solve_cell_problem(raw, n), raw).second;
}

FamilySpec family(Family f) {
  for (const auto& s : builtin_families()) {
    if (s.family == f) return s;
  }
  throw std::logic_error("missing family");
}

// Gradient-only view of the corrector expansion G(x) = (I + grad chi(x/eps)) grad u0.
class ExpansionField : public PlanarField {
 public:
  ExpansionField(const HarmonicReference& u0, const CorrectorSolution& chi, double eps)
      : u0_(u0), chi_(chi), eps_(eps) {}
  double value(const Vec2& x) const override { return u0_.value(x); }
  Vec2 gradient(const Vec2& x) const override {
    return corrector_expansion(u0_, chi_, eps_, {x}).front().G;
  }
  bool contains_disk(const Vec2& c, double r) const override { return u0_.contains_disk(c, r); }

 private:
  const HarmonicReference& u0_;
  const CorrectorSolution& chi_;
  double eps_;
};

// Independent oracle: local minima of |grad u| on a grid of step `step`
// over B(0, radius), kept when the minimum is small relative to the local
// gradient scale (a zero of a Lipschitz gradient is within reach).
std::vector<Vec2> scan_minima(const PlanarField& u, double radius, double step) {
  const int n = static_cast<int>(std::ceil(radius / step));
  const int w = 2 * n + 1;
  std::vector<double> mag(static_cast<std::size_t>(w * w));
  auto at = [&](int i, int j) { return Vec2((i - n) * step, (j - n) * step); };
  for (int j = 0; j < w; ++j) {
    for (int i = 0; i < w; ++i) mag[static_cast<std::size_t>(i + w * j)] = u.gradient(at(i, j)).norm();
  }
  std::vector<Vec2> out;
  for (int j = 1; j + 1 < w; ++j) {
    for (int i = 1; i + 1 < w; ++i) {
      const Vec2 x = at(i, j);
      if (x.norm() >= radius) continue;
      const double m = mag[static_cast<std::size_t>(i + w * j)];
      bool strict = true;
      double nb = 0.0;
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          const double o = mag[static_cast<std::size_t>(i + di + w * (j + dj))];
          nb = std::max(nb, o);
          if (o <= m) strict = false;
        }
      }
      if (strict && m <= 0.5 * nb) out.push_back(x);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("gradient winding examples") {
  CHECK(gradient_winding(*harmonic_polynomial(2), Vec2::Zero(), 0.5) == -1);
  CHECK(gradient_winding(*harmonic_polynomial(3), Vec2::Zero(), 0.5) == -2);
  CHECK(gradient_winding(*harmonic_polynomial(1), Vec2(0.3, 0.1), 0.2) == 0);
  // Loops that do not enclose the saddle.
  CHECK(gradient_winding(*harmonic_polynomial(2), Vec2(1.0, 0.0), 0.5) == 0);
  const ClosedFormField flat([](const Vec2&) { return 1.0; }, [](const Vec2&) { return Vec2(0, 0); });
  CHECK_THROWS_AS(gradient_winding(flat, Vec2::Zero(), 0.5), UncertifiableLoop);
  // A gradient vanishing on the loop cannot be certified.
  CHECK_THROWS_AS(gradient_winding(*harmonic_polynomial(2), Vec2(0.5, 0.0), 0.5), UncertifiableLoop);
  // Extrema have winding +1.
  const ClosedFormField bowl([](const Vec2& x) { return x.squaredNorm(); }, [](const Vec2& x) { return Vec2(2 * x); });
  CHECK(gradient_winding(bowl, Vec2::Zero(), 0.3) == 1);
}

TEST_CASE("winding oracle by brute-force angle accumulation") {
  // grad of r^l cos(l t) is l conj(z)^(l-1) in complex form: turning -(l-1).
  for (int ell = 1; ell <= 5; ++ell) {
    const auto f = harmonic_polynomial(ell);
    double turn = 0.0;
    const int n = 100000;
    Vec2 prev = f->gradient(Vec2(0.5, 0.0));
    for (int k = 1; k <= n; ++k) {
      const double t = kTwoPi * k / n;
      const Vec2 g = f->gradient(Vec2(0.5 * std::cos(t), 0.5 * std::sin(t)));
      turn += std::atan2(prev.x() * g.y() - prev.y() * g.x(), prev.dot(g));
      prev = g;
    }
    CHECK(std::lround(turn / kTwoPi) == -(ell - 1));
    CHECK(gradient_winding(*f, Vec2::Zero(), 0.5) == -(ell - 1));
  }
}

TEST_CASE("harmonic polynomial oracle") {
  const auto two = harmonic_poly_critical(2);
  REQUIRE(two.points.size() == 1);
  CHECK(two.points[0] == Vec2::Zero());
  CHECK(two.windings[0] == -1);
  CHECK(harmonic_poly_critical(1).points.empty());
  CHECK(harmonic_poly_critical(5).windings[0] == -4);
  CHECK_THROWS_AS(harmonic_poly_critical(0), ConfigError);
  CHECK_THROWS_AS(harmonic_poly_critical(9), ConfigError);
}

TEST_CASE("detector agrees with the oracle on sampled harmonic polynomials") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 1.0 / 64;
  for (int trial = 0; trial < 25; ++trial) {
    const int ell = 1 + trial % 5;
    double a = u(rng), b = u(rng);
    if (std::hypot(a, b) < 0.2) a += 0.5;
    INFO("trial ", trial, " ell ", ell);
    const auto f = harmonic_polynomial(ell, a, b);
    const auto rep = detect_critical_points(*f, Vec2::Zero(), 0.5, {h});
    const auto oracle = harmonic_poly_critical(ell);
    CHECK(rep.consistent);
    CHECK(rep.degree_sum == rep.boundary_winding);
    REQUIRE(rep.count == static_cast<int>(oracle.points.size()));
    for (std::size_t k = 0; k < oracle.points.size(); ++k) {
      CHECK((rep.points[k].location - oracle.points[k]).norm() <= 2 * h);
      CHECK(rep.points[k].winding == oracle.windings[k]);
    }
  }
}

TEST_CASE("detector on translated polynomials and off-center regions") {
  std::shared_ptr<const PlanarField> f = harmonic_polynomial(2);
  const Vec2 shift(0.13, -0.07);
  const TranslatedField t(f, shift);
  const auto rep = detect_critical_points(t, Vec2::Zero(), 0.5, {1.0 / 64});
  REQUIRE(rep.count == 1);
  CHECK((rep.points[0].location - shift).norm() <= 1e-8);
  // Region that excludes the saddle.
  const auto none = detect_critical_points(t, Vec2(0.8, 0.8), 0.3, {1.0 / 64});
  CHECK(none.count == 0);
  CHECK(none.boundary_winding == 0);
  CHECK(none.consistent);
}

TEST_CASE("two saddles of a sum of polynomials") {
  // u = x^3 - 3 x y^2 - 3 a^2 x has saddles at (+-a, 0).
  const double a = 0.2;
  const ClosedFormField u([a](const Vec2& x) { return x.x() * x.x() * x.x() - 3 * x.x() * x.y() * x.y() - 3 * a * a * x.x(); },
                          [a](const Vec2& x) {
                            return Vec2(3 * x.x() * x.x() - 3 * x.y() * x.y() - 3 * a * a, -6 * x.x() * x.y());
                          });
  const auto rep = detect_critical_points(u, Vec2::Zero(), 0.5, {1.0 / 64});
  CHECK(rep.consistent);
  REQUIRE(rep.count == 2);
  CHECK(rep.degree_sum == -2);
  for (const auto& p : rep.points) {
    CHECK(p.winding == -1);
    CHECK(std::abs(std::abs(p.location.x()) - a) <= 1e-8);
    CHECK(std::abs(p.location.y()) <= 1e-8);
  }
}

TEST_CASE("detection on disk solutions") {
  const auto I = build_family(family(Family::Constant));
  const auto Iid = normalized(family(Family::Constant), 32);
  const double eps = 1.0 / 8;
  const double h = mesh_rule(eps);

  SUBCASE("A = I, g = cos 2t") {
    const auto s = assemble_solve(EpsProblem{Iid, eps, 2.0, BoundaryData::cosine(2)});
    const auto hb = count_in_half_ball(s);
    REQUIRE(hb.report.count == 1);
    CHECK(hb.report.points[0].winding == -1);
    CHECK(hb.report.points[0].location.norm() <= 2 * h);
    CHECK(hb.doubling.value() == doctest::Approx(2.0).epsilon(1e-2));
  }
  SUBCASE("A = I, g = cos 3t") {
    const auto s = assemble_solve(EpsProblem{Iid, eps, 2.0, BoundaryData::cosine(3)});
    const auto rep = detect_critical_points(s, Vec2::Zero(), 0.5);
    CHECK(rep.boundary_winding == -2);
    CHECK(rep.degree_sum == -2);
    CHECK(rep.consistent);
    for (const auto& p : rep.points) CHECK(p.location.norm() <= 2 * h);
  }
  SUBCASE("A = I, g = cos t: low index, no critical points") {
    const auto s = assemble_solve(EpsProblem{Iid, eps, 2.0, BoundaryData::cosine(1)});
    const auto hb = count_in_half_ball(s);
    CHECK(hb.report.count == 0);
    CHECK(check_low_index_noncritical(s, Vec2::Zero(), {}, &hb.report).verdict == Verdict::Satisfied);
  }
  CHECK_FALSE(I.normalized());
}

TEST_CASE("laminate eps = 1/16: detector matches a brute-force scan of the same solve") {
  const auto lam = normalized(family(Family::Laminate));
  const double eps = 1.0 / 16;
  const auto s = assemble_solve(EpsProblem{lam, eps, 2.0, BoundaryData::cosine(2)});
  const double h = s.mesh_size();
  const auto rep = detect_critical_points(s, Vec2::Zero(), 0.5);
  CHECK(rep.consistent);
  REQUIRE(rep.count == 1);
  CHECK(rep.degree_sum == -1);
  const auto minima = scan_minima(s, 0.5, h / 4);
  REQUIRE(minima.size() == 1);
  CHECK((minima[0] - rep.points[0].location).norm() <= 2 * h);

  // Perturbing the region radius by h/10 changes no count.
  for (double d : {-0.1 * h, 0.1 * h}) {
    const auto r2 = detect_critical_points(s, Vec2::Zero(), 0.5 + d);
    CHECK(r2.count == rep.count);
  }
}

TEST_CASE("low-index check") {
  const auto x = check_low_index_noncritical(*harmonic_polynomial(1), Vec2::Zero());
  CHECK(x.verdict == Verdict::Satisfied);
  const auto q = check_low_index_noncritical(*harmonic_polynomial(2), Vec2::Zero());
  CHECK(q.verdict == Verdict::NotApplicable);
  // A saddle at distance h/2 of x0 with low index at x0 would violate it.
  const ClosedFormField nearby([](const Vec2& x) { return x.x() + 0.2 * (x.x() * x.x() - x.y() * x.y()); },
                               [](const Vec2& x) { return Vec2(1 + 0.4 * x.x(), -0.4 * x.y()); });
  // Saddle of this field is at (-2.5, 0): outside B(0, 1/2), so satisfied.
  CHECK(check_low_index_noncritical(nearby, Vec2::Zero()).verdict == Verdict::Satisfied);
}

TEST_CASE("orientation preservation of the corrector expansion") {
  for (const auto& spec : builtin_families()) {
    INFO(family_name(spec.family));
    const auto raw = build_family(spec);
    const auto [t, field] = normalize(solve_cell_problem(raw, 128), raw);
    const auto chi = solve_cell_problem(field, 128);
    for (int ell : {1, 2, 3}) {
      const auto u0 = harmonic_reference(BoundaryData::cosine(ell), 2.0);
      const ExpansionField G(u0, chi, 1.0 / 16);
      CHECK(gradient_winding(G, Vec2::Zero(), 0.5, 4096) == gradient_winding(u0, Vec2::Zero(), 0.5));
    }
  }
}
