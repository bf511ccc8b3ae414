#include "oscilab/doubling.hpp"

#include <cmath>
#include <limits>

namespace oscilab {
namespace {

struct Hypothesis {
  Measured record;
  bool measurable = true;
};

Hypothesis hypothesis(const PlanarField& u, const Vec2& x0, double r, double bound, const std::string& name,
                      double noise) {
  Hypothesis h;
  h.record.name = name;
  h.record.radius = r;
  h.record.bound = bound;
  try {
    h.record.value = doubling_index(u, x0, r);
    h.record.holds = h.record.value <= bound - noise;
  } catch (const DegenerateError& e) {
    h.measurable = false;
    h.record.value = std::numeric_limits<double>::quiet_NaN();
    h.record.note = e.what();
  }
  return h;
}

}  // namespace

double circle_mean_square(const PlanarField& u, const Vec2& x0, double r, int samples) {
  if (samples < 512) throw ConfigError("circle quadrature needs at least 512 samples");
  if (!(r > 0.0)) throw GeometryError("circle radius must be positive");
  if (!u.contains_disk(x0, r)) throw GeometryError("circle leaves the domain of the field");
  if (u.mesh_size() > 0.0) {
    samples = std::max(samples, 8 * static_cast<int>(std::ceil(kTwoPi * r / u.mesh_size())));
  }
  const double center = u.value_offset(x0, Vec2::Zero());
  double sum = 0.0;
  double scale = std::abs(center);
  for (int k = 0; k < samples; ++k) {
    const double th = kTwoPi * k / samples;
    const double v = u.value_offset(x0, Vec2(r * std::cos(th), r * std::sin(th)));
    scale = std::max(scale, std::abs(v));
    const double d = v - center;
    sum += d * d;
  }
  const double mean = sum / samples;
  // Differences at the rounding level of the samples carry no information.
  const double floor = 1e-26 * scale * scale;
  if (!(mean > floor) || mean < std::numeric_limits<double>::min()) {
    throw DegenerateError("degenerate denominator: circle mean square vanishes at r = " + std::to_string(r));
  }
  return mean;
}

DoublingMeasurement measure_doubling(const PlanarField& u, const Vec2& x0, double r, int samples) {
  DoublingMeasurement m;
  m.center_value = u.value_offset(x0, Vec2::Zero());
  m.outer = circle_mean_square(u, x0, r, samples);
  m.inner = circle_mean_square(u, x0, 0.5 * r, samples);
  m.value = std::log(m.outer / m.inner) / std::log(4.0);
  return m;
}

double doubling_index(const PlanarField& u, const Vec2& x0, double r, int samples) {
  return measure_doubling(u, x0, r, samples).value;
}

double ball_doubling(const PlanarField& u, const Vec2& center, double r) {
  if (!(r > 0.0)) throw GeometryError("ball radius must be positive");
  if (!u.contains_disk(center, 2.0 * r)) throw GeometryError("ball leaves the domain of the field");
  const double outer = u.disk_mean_square(center, 2.0 * r);
  const double inner = u.disk_mean_square(center, r);
  if (!(inner > 0.0)) throw DegenerateError("degenerate denominator: mean of u^2 vanishes on the inner ball");
  return std::log(outer / inner) / std::log(4.0);
}

double floor_radius(const PlanarField& u) { return std::max(4.0 * u.oscillation_scale(), 2.0 * u.mesh_size()); }

DoublingProfile doubling_profile(const PlanarField& u, const Vec2& x0, double r_top, int rungs, int samples) {
  if (rungs < 1) throw ConfigError("profile needs at least one rung");
  if (!u.contains_disk(x0, r_top)) throw GeometryError("profile top radius leaves the domain");
  DoublingProfile p;
  p.x0 = x0;
  p.floor_radius = floor_radius(u);
  const std::size_t n = static_cast<std::size_t>(rungs);
  p.radii.resize(n);
  p.values.assign(n, std::numeric_limits<double>::quiet_NaN());
  p.outer.assign(n, 0.0);
  p.inner.assign(n, 0.0);
  p.errors.assign(n, std::string());
  p.reliable.assign(n, true);
  for (std::size_t k = 0; k < n; ++k) {
    p.radii[k] = std::ldexp(r_top, -static_cast<int>(k));
    p.reliable[k] = p.radii[k] >= p.floor_radius;
  }
  parallel_for(n, [&](std::size_t k) {
    try {
      const auto m = measure_doubling(u, x0, p.radii[k], samples);
      p.values[k] = m.value;
      p.outer[k] = m.outer;
      p.inner[k] = m.inner;
    } catch (const DegenerateError& e) {
      p.errors[k] = e.what();
    }
  });
  return p;
}

void ReductionParams::validate() const {
  if (ell < 1) throw ConfigError("ell must be >= 1");
  if (L > 8) throw ConfigError("L must be <= 8");
  if (ell > L) throw ConfigError("ell must not exceed L");
  if (!(delta > 0.0 && delta <= 0.5)) throw ConfigError("delta must lie in (0, 1/2]");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("noise margin must be finite and >= 0");
}

double reduction_radius(const ReductionParams& params, double r) {
  params.validate();
  return params.delta * r / (8.0 * params.ell);
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Satisfied:
      return "satisfied";
    case Verdict::Violated:
      return "violated";
    case Verdict::NotApplicable:
      return "not-applicable";
    case Verdict::Unresolvable:
      return "unresolvable";
  }
  return "unknown";
}

CheckReport check_persistence(const PlanarField& u, const Vec2& x0, double r, const ReductionParams& params,
                              int chain) {
  params.validate();
  if (chain < 0) throw ConfigError("persistence chain length must be >= 0");
  if (!u.contains_disk(x0, r)) throw GeometryError("persistence radius leaves the domain");
  CheckReport rep;
  rep.check = "persistence";
  rep.floor_radius = floor_radius(u);
  const double bound = params.ell + params.delta;
  const auto h1 = hypothesis(u, x0, r, params.L + 1.0, "N*(r) <= L + 1", params.noise);
  const auto h2 = hypothesis(u, x0, 0.5 * r, bound, "N*(r/2) <= ell + delta", params.noise);
  rep.hypotheses = {h1.record, h2.record};
  if (!h1.measurable || !h2.measurable || !h1.record.holds || !h2.record.holds) {
    rep.verdict = Verdict::NotApplicable;
    rep.note = "hypotheses not met with margin";
    return rep;
  }
  rep.slack = std::numeric_limits<double>::infinity();
  bool violated = false;
  bool evaluated = false;
  for (int j = 2; j <= chain + 2; ++j) {
    const double rj = std::ldexp(r, -j);
    Measured c;
    c.name = "N*(r/2^" + std::to_string(j) + ") <= ell + delta";
    c.radius = rj;
    c.bound = bound;
    c.reliable = rj >= rep.floor_radius;
    if (!c.reliable) {
      c.note = "below floor radius";
      c.value = std::numeric_limits<double>::quiet_NaN();
      rep.conclusions.push_back(c);
      break;
    }
    try {
      c.value = doubling_index(u, x0, rj);
      c.holds = c.value <= bound + params.noise;
      violated = violated || !c.holds;
      rep.slack = std::min(rep.slack, bound - c.value);
      evaluated = true;
    } catch (const DegenerateError& e) {
      c.value = std::numeric_limits<double>::quiet_NaN();
      c.reliable = false;
      c.note = e.what();
    }
    rep.conclusions.push_back(c);
  }
  if (violated) {
    rep.verdict = Verdict::Violated;
  } else if (evaluated) {
    rep.verdict = Verdict::Satisfied;
  } else {
    rep.verdict = Verdict::Unresolvable;
    rep.slack = 0.0;
    rep.note = "r/4 is below the floor radius " + std::to_string(rep.floor_radius);
  }
  return rep;
}

CheckReport check_reduction(const PlanarField& u, const Vec2& x0, double r, const ReductionParams& params) {
  params.validate();
  if (!u.contains_disk(x0, r)) throw GeometryError("reduction radius leaves the domain");
  CheckReport rep;
  rep.check = "reduction";
  rep.floor_radius = floor_radius(u);
  const auto h1 = hypothesis(u, x0, r, params.L + 1.0, "N*(r) <= L + 1", params.noise);
  const auto h2 = hypothesis(u, x0, 0.5 * r, params.ell - params.delta, "N*(r/2) <= ell - delta", params.noise);
  rep.hypotheses = {h1.record, h2.record};
  if (!h1.measurable || !h2.measurable || !h1.record.holds || !h2.record.holds) {
    rep.verdict = Verdict::NotApplicable;
    rep.note = "hypotheses not met with margin";
    return rep;
  }
  Measured c;
  c.name = "N*(delta r / (8 ell)) <= ell - 1 + delta";
  c.radius = reduction_radius(params, r);
  c.bound = params.ell - 1.0 + params.delta;
  if (c.radius < rep.floor_radius) {
    c.reliable = false;
    c.value = std::numeric_limits<double>::quiet_NaN();
    c.note = "below floor radius";
    rep.conclusions.push_back(c);
    rep.verdict = Verdict::Unresolvable;
    rep.note = "reduction radius " + std::to_string(c.radius) + " is below the floor radius " +
               std::to_string(rep.floor_radius) + " at this eps/h";
    return rep;
  }
  try {
    c.value = doubling_index(u, x0, c.radius);
  } catch (const DegenerateError& e) {
    c.value = std::numeric_limits<double>::quiet_NaN();
    c.reliable = false;
    c.note = e.what();
    rep.conclusions.push_back(c);
    rep.verdict = Verdict::Unresolvable;
    rep.note = "conclusion not measurable";
    return rep;
  }
  c.holds = c.value <= c.bound + params.noise;
  rep.slack = c.bound - c.value;
  rep.conclusions.push_back(c);
  rep.verdict = c.holds ? Verdict::Satisfied : Verdict::Violated;
  return rep;
}

}  // namespace oscilab
