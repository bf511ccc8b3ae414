#include "oscilab/critical.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace oscilab {
namespace {

constexpr int kMaxLoopSamples = 1 << 16;

template <class Param>
WindingResult wind(const PlanarField& u, const Param& point_at, int samples) {
  samples = std::max(samples, 8);
  for (int m = samples; m <= kMaxLoopSamples; m *= 2) {
    std::vector<Vec2> g(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) g[static_cast<std::size_t>(k)] = u.gradient(point_at(static_cast<double>(k) / m));
    double min_norm = std::numeric_limits<double>::infinity();
    double max_step = 0.0;
    for (int k = 0; k < m; ++k) {
      const Vec2& a = g[static_cast<std::size_t>(k)];
      const Vec2& b = g[static_cast<std::size_t>((k + 1) % m)];
      min_norm = std::min(min_norm, a.norm());
      max_step = std::max(max_step, (b - a).norm());
    }
    if (!(min_norm > 0.0) || min_norm < 10.0 * max_step) continue;
    double turn = 0.0;
    for (int k = 0; k < m; ++k) {
      const Vec2& a = g[static_cast<std::size_t>(k)];
      const Vec2& b = g[static_cast<std::size_t>((k + 1) % m)];
      turn += std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
    }
    WindingResult r;
    r.winding = static_cast<int>(std::lround(turn / kTwoPi));
    r.samples = m;
    r.min_gradient = min_norm;
    return r;
  }
  throw UncertifiableLoop("gradient winding not certified with " + std::to_string(kMaxLoopSamples) + " samples");
}

std::vector<Vec2> box_polygon(const Vec2& lo, const Vec2& hi) {
  return {lo, Vec2(hi.x(), lo.y()), hi, Vec2(lo.x(), hi.y())};
}

struct Leaf {
  Vec2 lo;
  double side;
  Vec2 center() const { return lo + Vec2(0.5 * side, 0.5 * side); }
};

double distance_to_box(const Vec2& p, const Vec2& lo, const Vec2& hi) {
  const double dx = std::max({lo.x() - p.x(), 0.0, p.x() - hi.x()});
  const double dy = std::max({lo.y() - p.y(), 0.0, p.y() - hi.y()});
  return std::hypot(dx, dy);
}

void subdivide(const Vec2& lo, double side, double leaf, const Vec2& c, double r, std::vector<Leaf>& out) {
  if (distance_to_box(c, lo, lo + Vec2(side, side)) > r) return;
  if (side <= leaf * (1.0 + 1e-12)) {
    out.push_back({lo, side});
    return;
  }
  const double s = 0.5 * side;
  subdivide(lo, s, leaf, c, r, out);
  subdivide(lo + Vec2(s, 0.0), s, leaf, c, r, out);
  subdivide(lo + Vec2(0.0, s), s, leaf, c, r, out);
  subdivide(lo + Vec2(s, s), s, leaf, c, r, out);
}

struct Cluster {
  std::vector<std::size_t> leaves;
  Vec2 lo, hi;
  int winding = 0;
  bool certified = false;
};

std::size_t find(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

struct Attempt {
  CriticalReport report;
  bool certified = true;
};

Vec2 newton(const PlanarField& u, Vec2 x, double step, int iterations, const Vec2& lo, const Vec2& hi,
            double scale, bool& converged) {
  converged = false;
  Vec2 f = u.gradient(x);
  for (int it = 0; it < iterations; ++it) {
    if (f.norm() <= 1e-13 * scale) {
      converged = true;
      break;
    }
    Mat2 J;
    J.col(0) = (u.gradient(x + Vec2(step, 0.0)) - u.gradient(x - Vec2(step, 0.0))) / (2.0 * step);
    J.col(1) = (u.gradient(x + Vec2(0.0, step)) - u.gradient(x - Vec2(0.0, step))) / (2.0 * step);
    if (!(std::abs(J.determinant()) > 0.0)) break;
    const Vec2 dx = -J.partialPivLu().solve(f);
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 20; ++k, t *= 0.5) {
      const Vec2 y = x + t * dx;
      if (distance_to_box(y, lo, hi) > 0.0) continue;
      const Vec2 fy = u.gradient(y);
      if (fy.norm() < f.norm()) {
        x = y;
        f = fy;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    if ((t * dx).norm() <= 1e-12 * step) {
      converged = true;
      break;
    }
  }
  if (!converged && f.norm() <= 1e-8 * scale) converged = true;
  return x;
}

// A cluster whose loop winds more than once may hold several simple zeros
// closer than the merge distance. Newton from a grid of starts in every
// candidate leaf; distinct converged zeros replace the cluster point when
// their own small loops account for the whole cluster winding.
std::vector<CriticalPoint> split_cluster(const PlanarField& u, const std::vector<std::size_t>& members,
                                         const std::vector<Leaf>& leaves, const Cluster& cl, double h, double scale,
                                         const DetectOptions& options) {
  constexpr int kStarts = 4;
  std::vector<Vec2> zeros;
  for (std::size_t i : members) {
    for (int a = 0; a < kStarts; ++a) {
      for (int b = 0; b < kStarts; ++b) {
        const Vec2 start = leaves[i].lo + leaves[i].side * Vec2((a + 0.5) / kStarts, (b + 0.5) / kStarts);
        bool ok = false;
        const Vec2 z = newton(u, start, 0.25 * h, options.newton_iterations, cl.lo, cl.hi, scale, ok);
        if (!ok) continue;
        const bool known = std::any_of(zeros.begin(), zeros.end(),
                                       [&](const Vec2& q) { return (q - z).norm() <= 0.25 * h; });
        if (!known) zeros.push_back(z);
      }
    }
  }
  if (zeros.size() < 2) return {};
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < zeros.size(); ++i) {
    for (std::size_t j = i + 1; j < zeros.size(); ++j) sep = std::min(sep, (zeros[i] - zeros[j]).norm());
  }
  const double rho = std::min(sep / 3.0, 0.5 * (cl.hi - cl.lo).minCoeff());
  std::vector<CriticalPoint> out;
  int total = 0;
  for (const Vec2& z : zeros) {
    CriticalPoint p;
    p.location = z;
    p.newton_converged = true;
    p.cell_size = 2.0 * rho;
    try {
      p.winding = wind(
                      u, [&](double s) { return Vec2(z + rho * Vec2(std::cos(kTwoPi * s), std::sin(kTwoPi * s))); },
                      64)
                      .winding;
    } catch (const UncertifiableLoop&) {
      return {};
    }
    if (p.winding == 0) return {};
    total += p.winding;
    out.push_back(p);
  }
  if (total != cl.winding) return {};
  return out;
}

Attempt detect_once(const PlanarField& u, const Vec2& c, double radius, double loop_radius, double h,
                    const Vec2& offset, const DetectOptions& options) {
  Attempt a;
  CriticalReport& rep = a.report;
  rep.center = c;
  rep.radius = radius;
  rep.loop_radius = loop_radius;
  rep.h = h;

  const double target = 4.0 * h;
  const double span = 2.0 * (loop_radius + target);
  const int levels = std::max(0, static_cast<int>(std::ceil(std::log2(span / target))));
  const double leaf = std::ldexp(span, -levels);
  rep.leaf_size = leaf;
  const Vec2 root_lo = c - Vec2(0.5 * span, 0.5 * span) + offset * leaf;
  std::vector<Leaf> leaves;
  subdivide(root_lo, span, leaf, c, loop_radius, leaves);

  // Boundary winding first: the reference every candidate set must match.
  const int circle_samples = std::max(256, 8 * static_cast<int>(std::ceil(kTwoPi * loop_radius / h)));
  try {
    rep.boundary_winding = wind(
        u, [&](double s) { return Vec2(c + loop_radius * Vec2(std::cos(kTwoPi * s), std::sin(kTwoPi * s))); },
        circle_samples).winding;
  } catch (const UncertifiableLoop&) {
    a.certified = false;
    rep.note = "boundary loop not certified";
    return a;
  }

  const std::size_t n = leaves.size();
  std::vector<int> winding(n, 0);
  std::vector<char> certified(n, 1);
  std::vector<double> center_grad(n, 0.0);
  parallel_for(
      n,
      [&](std::size_t i) {
        const Vec2 lo = leaves[i].lo;
        const Vec2 hi = lo + Vec2(leaves[i].side, leaves[i].side);
        center_grad[i] = u.gradient(leaves[i].center()).norm();
        try {
          winding[i] = loop_winding(u, box_polygon(lo, hi), 32).winding;
        } catch (const UncertifiableLoop&) {
          certified[i] = 0;
        }
      },
      0);
  const double scale = std::max(1e-300, *std::max_element(center_grad.begin(), center_grad.end()));

  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < n; ++i) {
    if (winding[i] != 0 || !certified[i]) cand.push_back(i);
  }
  std::vector<std::size_t> parent(cand.size());
  std::iota(parent.begin(), parent.end(), 0);
  const double merge = 2.0 * std::sqrt(2.0) * leaf * (1.0 + 1e-9);
  for (std::size_t i = 0; i < cand.size(); ++i) {
    for (std::size_t j = i + 1; j < cand.size(); ++j) {
      if ((leaves[cand[i]].center() - leaves[cand[j]].center()).norm() <= merge) {
        parent[find(parent, j)] = find(parent, i);
      }
    }
  }

  std::vector<Cluster> clusters;
  {
    std::vector<long> slot(cand.size(), -1);
    for (std::size_t i = 0; i < cand.size(); ++i) {
      const std::size_t root = find(parent, i);
      if (slot[root] < 0) {
        slot[root] = static_cast<long>(clusters.size());
        clusters.emplace_back();
      }
      clusters[static_cast<std::size_t>(slot[root])].leaves.push_back(cand[i]);
    }
  }
  auto set_box = [&](Cluster& cl) {
    cl.lo = Vec2::Constant(std::numeric_limits<double>::infinity());
    cl.hi = -cl.lo;
    for (std::size_t i : cl.leaves) {
      cl.lo = cl.lo.cwiseMin(leaves[i].lo);
      cl.hi = cl.hi.cwiseMax(leaves[i].lo + Vec2(leaves[i].side, leaves[i].side));
    }
    cl.lo -= Vec2::Constant(0.5 * leaf);
    cl.hi += Vec2::Constant(0.5 * leaf);
  };
  for (auto& cl : clusters) set_box(cl);
  // Isolating boxes must be disjoint.
  for (bool merged = true; merged;) {
    merged = false;
    for (std::size_t i = 0; i < clusters.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < clusters.size() && !merged; ++j) {
        const bool overlap = clusters[i].lo.x() <= clusters[j].hi.x() && clusters[j].lo.x() <= clusters[i].hi.x() &&
                             clusters[i].lo.y() <= clusters[j].hi.y() && clusters[j].lo.y() <= clusters[i].hi.y();
        if (overlap) {
          clusters[i].leaves.insert(clusters[i].leaves.end(), clusters[j].leaves.begin(), clusters[j].leaves.end());
          clusters.erase(clusters.begin() + static_cast<long>(j));
          set_box(clusters[i]);
          merged = true;
        }
      }
    }
  }

  for (auto& cl : clusters) {
    for (int k = 0; k <= options.max_retries && !cl.certified; ++k) {
      const Vec2 grow = Vec2::Constant(0.1 * h * k);
      try {
        cl.winding = loop_winding(u, box_polygon(cl.lo - grow, cl.hi + grow), 64).winding;
        cl.certified = true;
        cl.lo -= grow;
        cl.hi += grow;
      } catch (const UncertifiableLoop&) {
      }
    }
    if (!cl.certified) {
      a.certified = false;
      rep.note = "candidate cluster loop not certified";
      return a;
    }
    if (cl.winding == 0) continue;
    const double cell = std::max(cl.hi.x() - cl.lo.x(), cl.hi.y() - cl.lo.y());
    std::vector<CriticalPoint> found;
    if (cl.winding <= -2 || cl.winding >= 2) found = split_cluster(u, cl.leaves, leaves, cl, h, scale, options);
    if (found.empty()) {
      std::size_t best = cl.leaves.front();
      for (std::size_t i : cl.leaves) {
        if (center_grad[i] < center_grad[best]) best = i;
      }
      CriticalPoint p;
      p.winding = cl.winding;
      const Vec2 start = leaves[best].center();
      p.location = newton(u, start, 0.25 * h, options.newton_iterations, cl.lo, cl.hi, scale, p.newton_converged);
      if (!p.newton_converged) p.location = start;
      found.push_back(p);
    }
    for (auto& p : found) {
      if (p.cell_size == 0.0) p.cell_size = cell;
      p.refine_residual = u.gradient(p.location).norm();
      const double dist = (p.location - c).norm();
      if (!(dist < loop_radius)) continue;
      p.boundary_uncertain = std::abs(dist - radius) <= 4.0 * h;
      rep.points.push_back(p);
    }
  }
  rep.count = static_cast<int>(rep.points.size());
  rep.degree_sum = 0;
  for (const auto& p : rep.points) rep.degree_sum += p.winding;
  rep.consistent = rep.degree_sum == rep.boundary_winding;
  return a;
}

}  // namespace

WindingResult loop_winding(const PlanarField& u, const std::vector<Vec2>& polygon, int samples) {
  if (polygon.size() < 3) throw GeometryError("loop needs at least three vertices");
  const std::size_t nv = polygon.size();
  std::vector<double> cum(nv + 1, 0.0);
  for (std::size_t i = 0; i < nv; ++i) cum[i + 1] = cum[i] + (polygon[(i + 1) % nv] - polygon[i]).norm();
  const double perimeter = cum[nv];
  if (!(perimeter > 0.0)) throw GeometryError("degenerate loop");
  return wind(
      u,
      [&](double s) {
        const double t = s * perimeter;
        const auto it = std::upper_bound(cum.begin(), cum.end(), t);
        const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()) - 1, nv - 1);
        const double len = cum[i + 1] - cum[i];
        const double w = len > 0.0 ? (t - cum[i]) / len : 0.0;
        return Vec2((1.0 - w) * polygon[i] + w * polygon[(i + 1) % nv]);
      },
      samples);
}

int gradient_winding(const PlanarField& u, const Vec2& center, double r, int samples) {
  if (!(r > 0.0)) throw GeometryError("loop radius must be positive");
  if (!u.contains_disk(center, r)) throw GeometryError("loop leaves the domain of the field");
  return wind(
             u, [&](double s) { return Vec2(center + r * Vec2(std::cos(kTwoPi * s), std::sin(kTwoPi * s))); },
             samples)
      .winding;
}

CriticalReport detect_critical_points(const PlanarField& u, const Vec2& center, double radius,
                                      const DetectOptions& options) {
  if (!(radius > 0.0)) throw GeometryError("region radius must be positive");
  double h = options.h > 0.0 ? options.h : u.mesh_size();
  if (!(h > 0.0)) h = radius / 64.0;
  if (!(h <= radius / 4.0)) throw ConfigError("detection resolution too coarse for the region");
  // Leaves straddling the region reach up to two leaf diagonals past it.
  const double margin = std::max(2.0 * h, 2.0 * std::sqrt(2.0) * 4.0 * h);
  if (!u.contains_disk(center, radius + margin)) {
    throw GeometryError("detection region is not compactly inside the field's domain");
  }
  Attempt last;
  for (int k = 0; k <= options.max_retries; ++k) {
    // Attempt 0 uses the requested radius; later ones alternate +-h/10 steps
    // and shift the quadtree so that no point sits on a leaf edge twice.
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    const double loop_radius = radius + (k == 0 ? 0.0 : sign * 0.1 * h * ((k + 1) / 2));
    const Vec2 offset(0.1234 + 0.0917 * k, 0.0789 + 0.1361 * k);
    last = detect_once(u, center, radius, loop_radius, h, Vec2(offset.x() - std::floor(offset.x()) - 0.5,
                                                             offset.y() - std::floor(offset.y()) - 0.5) * 0.5,
                       options);
    last.report.attempts = k + 1;
    if (last.certified && last.report.consistent) return last.report;
  }
  last.report.consistent = false;
  if (last.report.note.empty()) last.report.note = "argument-principle closure failed after retries";
  return last.report;
}

HalfBallCount count_in_half_ball(const PlanarField& u, const DetectOptions& options) {
  if (!u.contains_disk(Vec2::Zero(), 2.0 * (1.0 - 1e-12))) {
    throw GeometryError("half-ball count expects a field on B(0, 2)");
  }
  HalfBallCount out;
  out.report = detect_critical_points(u, Vec2::Zero(), 0.5, options);
  try {
    out.doubling = ball_doubling(u, Vec2::Zero(), 1.0);
  } catch (const DegenerateError& e) {
    out.doubling_error = e.what();
  }
  return out;
}

OracleRecord harmonic_poly_critical(int ell) {
  if (ell < 1 || ell > 8) throw ConfigError("harmonic polynomial degree must lie in [1, 8]");
  OracleRecord r;
  r.ell = ell;
  if (ell >= 2) {
    r.points.push_back(Vec2::Zero());
    r.windings.push_back(-(ell - 1));
  }
  return r;
}

CheckReport check_low_index_noncritical(const PlanarField& u, const Vec2& x0, const DetectOptions& options,
                                        const CriticalReport* detected, double noise) {
  CheckReport rep;
  rep.check = "low-index";
  rep.floor_radius = floor_radius(u);
  Measured hyp;
  hyp.name = "N*(x0, 1/2) <= 3/2";
  hyp.radius = 0.5;
  hyp.bound = 1.5;
  try {
    hyp.value = doubling_index(u, x0, 0.5);
    hyp.holds = hyp.value <= 1.5 - noise;
  } catch (const DegenerateError& e) {
    hyp.value = std::numeric_limits<double>::quiet_NaN();
    hyp.note = e.what();
  }
  rep.hypotheses.push_back(hyp);
  if (!hyp.holds) {
    rep.verdict = Verdict::NotApplicable;
    rep.note = "hypothesis not met with margin";
    return rep;
  }
  double h = options.h > 0.0 ? options.h : u.mesh_size();
  if (!(h > 0.0)) h = 0.5 / 64.0;
  const double exclusion = 4.0 * h;
  CriticalReport own;
  const bool covers = detected != nullptr && (detected->center - x0).norm() + exclusion <= detected->loop_radius;
  if (!covers) {
    own = detect_critical_points(u, x0, 0.5, options);
    detected = &own;
  }
  Measured c;
  c.name = "no critical point within 4h of x0";
  c.radius = exclusion;
  c.bound = exclusion;
  if (!detected->consistent) {
    c.reliable = false;
    c.value = std::numeric_limits<double>::quiet_NaN();
    c.note = "critical report inconsistent";
    rep.conclusions.push_back(c);
    rep.verdict = Verdict::Unresolvable;
    rep.note = c.note;
    return rep;
  }
  double nearest = std::numeric_limits<double>::infinity();
  for (const auto& p : detected->points) nearest = std::min(nearest, (p.location - x0).norm());
  c.value = nearest;
  c.holds = nearest > exclusion;
  c.note = "value is the distance to the nearest detected critical point";
  rep.conclusions.push_back(c);
  rep.slack = std::isfinite(nearest) ? nearest - exclusion : detected->loop_radius - exclusion;
  rep.verdict = c.holds ? Verdict::Satisfied : Verdict::Violated;
  return rep;
}

}  // namespace oscilab
