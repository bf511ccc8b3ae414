#include "oscilab/pde.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <sstream>

namespace oscilab {
namespace {

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

// Gradients of the three hat functions of a triangle and its area.
struct Shape {
  std::array<Vec2, 3> grad;
  double area = 0.0;
};

Shape shape_of(const DiskMesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const Vec2& p0 = mesh.nodes[tri[0]];
  const Vec2& p1 = mesh.nodes[tri[1]];
  const Vec2& p2 = mesh.nodes[tri[2]];
  const double twice = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
  Shape s;
  s.area = 0.5 * twice;
  const std::array<const Vec2*, 3> p{&p0, &p1, &p2};
  for (int v = 0; v < 3; ++v) {
    const Vec2& pj = *p[(v + 1) % 3];
    const Vec2& pk = *p[(v + 2) % 3];
    s.grad[v] = Vec2(pj.y() - pk.y(), pk.x() - pj.x()) / twice;
  }
  return s;
}

// Node -> incident triangles, CSR layout.
struct Incidence {
  std::vector<int> start;
  std::vector<int> items;
};

Incidence incidence(const DiskMesh& mesh) {
  Incidence inc;
  inc.start.assign(mesh.node_count() + 1, 0);
  for (const auto& tri : mesh.triangles) {
    for (int v : tri) ++inc.start[v + 1];
  }
  for (std::size_t v = 0; v < mesh.node_count(); ++v) inc.start[v + 1] += inc.start[v];
  inc.items.resize(static_cast<std::size_t>(inc.start.back()));
  std::vector<int> fill(inc.start.begin(), inc.start.end() - 1);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    for (int v : mesh.triangles[t]) inc.items[fill[v]++] = static_cast<int>(t);
  }
  return inc;
}

}  // namespace

BoundaryData BoundaryData::cosine(int ell, double amplitude) {
  BoundaryData g;
  g.a.assign(ell + 1, 0.0);
  g.a[ell] = amplitude;
  return g;
}

void BoundaryData::validate() const {
  if (static_cast<int>(a.size()) > kMaxDegree + 1 || static_cast<int>(b.size()) > kMaxDegree + 1) {
    throw ConfigError("boundary data degree exceeds 8");
  }
  bool oscillates = false;
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (!std::isfinite(a[l])) throw ConfigError("boundary coefficient a is not finite");
    if (l > 0 && a[l] != 0.0) oscillates = true;
  }
  for (std::size_t l = 0; l < b.size(); ++l) {
    if (!std::isfinite(b[l])) throw ConfigError("boundary coefficient b is not finite");
    if (l > 0 && b[l] != 0.0) oscillates = true;
  }
  if (!oscillates) throw ConfigError("boundary data has no l >= 1 term; the solution would be constant");
}

double BoundaryData::operator()(double t) const {
  double v = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) v += a[l] * std::cos(static_cast<double>(l) * t);
  for (std::size_t l = 0; l < b.size(); ++l) v += b[l] * std::sin(static_cast<double>(l) * t);
  return v;
}

int BoundaryData::degree() const {
  int d = 0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (a[l] != 0.0) d = std::max(d, static_cast<int>(l));
  }
  for (std::size_t l = 0; l < b.size(); ++l) {
    if (b[l] != 0.0) d = std::max(d, static_cast<int>(l));
  }
  return d;
}

bool BoundaryData::operator==(const BoundaryData& o) const {
  auto coef = [](const std::vector<double>& v, std::size_t l) { return l < v.size() ? v[l] : 0.0; };
  for (std::size_t l = 0; l <= static_cast<std::size_t>(kMaxDegree); ++l) {
    if (coef(a, l) != coef(o.a, l) || coef(b, l) != coef(o.b, l)) return false;
  }
  return true;
}

HarmonicReference::HarmonicReference(BoundaryData g, double R) : g_(std::move(g)), R_(R) {
  g_.validate();
  if (!(R > 0.0)) throw ConfigError("reference radius must be positive");
}

double HarmonicReference::value(const Vec2& x) const {
  using C = std::complex<double>;
  const C z(x.x() / R_, x.y() / R_);
  C power(1.0, 0.0);
  double v = 0.0;
  const std::size_t n = std::max(g_.a.size(), g_.b.size());
  for (std::size_t l = 0; l < n; ++l) {
    const double al = l < g_.a.size() ? g_.a[l] : 0.0;
    const double bl = l < g_.b.size() ? g_.b[l] : 0.0;
    v += (C(al, -bl) * power).real();
    power *= z;
  }
  return v;
}

Vec2 HarmonicReference::gradient(const Vec2& x) const {
  using C = std::complex<double>;
  const C z(x.x() / R_, x.y() / R_);
  C power(1.0, 0.0);  // (z/R)^(l-1)
  C d(0.0, 0.0);
  const std::size_t n = std::max(g_.a.size(), g_.b.size());
  for (std::size_t l = 1; l < n; ++l) {
    const double al = l < g_.a.size() ? g_.a[l] : 0.0;
    const double bl = l < g_.b.size() ? g_.b[l] : 0.0;
    d += static_cast<double>(l) * C(al, -bl) * power;
    power *= z;
  }
  d /= R_;
  return Vec2(d.real(), -d.imag());
}

HarmonicReference harmonic_reference(const BoundaryData& g, double R) { return HarmonicReference(g, R); }

double mesh_rule(double epsilon) { return std::min(epsilon / 8.0, 1.0 / 64.0); }

std::string problem_key(const EpsProblem& problem) {
  std::ostringstream os;
  os << problem.field.fingerprint() << " R " << hexfloat(problem.R) << " g";
  for (std::size_t l = 0; l <= static_cast<std::size_t>(BoundaryData::kMaxDegree); ++l) {
    const double al = l < problem.g.a.size() ? problem.g.a[l] : 0.0;
    const double bl = l < problem.g.b.size() ? problem.g.b[l] : 0.0;
    os << ' ' << hexfloat(al) << ' ' << hexfloat(bl);
  }
  return os.str();
}

SolutionField::SolutionField(std::shared_ptr<const DiskMesh> mesh, Vector u, double epsilon,
                             BoundaryData g, std::string problem_key, SolveInfo info, bool oscillates)
    : mesh_(std::move(mesh)),
      locator_(*mesh_),
      u_(std::move(u)),
      epsilon_(epsilon),
      g_(std::move(g)),
      key_(std::move(problem_key)),
      info_(std::move(info)),
      oscillates_(oscillates) {
  const DiskMesh& m = *mesh_;
  if (static_cast<std::size_t>(u_.size()) != m.node_count()) {
    throw InconsistencyError("nodal vector does not match the mesh");
  }
  element_grad_.resize(m.triangle_count());
  parallel_for(m.triangle_count(), [&](std::size_t t) {
    const Shape s = shape_of(m, t);
    const auto& tri = m.triangles[t];
    element_grad_[t] = u_[tri[0]] * s.grad[0] + u_[tri[1]] * s.grad[1] + u_[tri[2]] * s.grad[2];
  });
  const Incidence inc = incidence(m);
  nodal_grad_.assign(m.node_count(), Vec2::Zero());
  parallel_for(m.node_count(), [&](std::size_t v) {
    Vec2 sum = Vec2::Zero();
    double area = 0.0;
    for (int k = inc.start[v]; k < inc.start[v + 1]; ++k) {
      const double a = m.area(static_cast<std::size_t>(inc.items[k]));
      sum += a * element_grad_[inc.items[k]];
      area += a;
    }
    nodal_grad_[v] = sum / area;
  });
}

MeshLocator::Hit SolutionField::locate_or_throw(const Vec2& x) const {
  const auto hit = locator_.locate(x);
  if (hit.triangle < 0) {
    throw GeometryError("point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) +
                        ") is outside the solution domain");
  }
  return hit;
}

double SolutionField::value(const Vec2& x) const {
  const auto hit = locate_or_throw(x);
  const auto& tri = mesh_->triangles[hit.triangle];
  return hit.bary[0] * u_[tri[0]] + hit.bary[1] * u_[tri[1]] + hit.bary[2] * u_[tri[2]];
}

Vec2 SolutionField::gradient(const Vec2& x) const {
  const auto hit = locate_or_throw(x);
  const auto& tri = mesh_->triangles[hit.triangle];
  return hit.bary[0] * nodal_grad_[tri[0]] + hit.bary[1] * nodal_grad_[tri[1]] +
         hit.bary[2] * nodal_grad_[tri[2]];
}

Vec2 SolutionField::element_gradient(const Vec2& x) const {
  return element_grad_[locate_or_throw(x).triangle];
}

double SolutionField::disk_mean_square(const Vec2& center, double r) const {
  if (!contains_disk(center, r)) throw GeometryError("disk mean square: ball leaves the domain");
  const DiskMesh& m = *mesh_;
  double integral = 0.0;
  double area = 0.0;
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    if ((m.barycenter(t) - center).norm() >= r) continue;
    const auto& tri = m.triangles[t];
    // Edge-midpoint rule, exact for quadratics.
    const double m01 = 0.5 * (u_[tri[0]] + u_[tri[1]]);
    const double m12 = 0.5 * (u_[tri[1]] + u_[tri[2]]);
    const double m20 = 0.5 * (u_[tri[2]] + u_[tri[0]]);
    const double a = m.area(t);
    integral += a * (m01 * m01 + m12 * m12 + m20 * m20) / 3.0;
    area += a;
  }
  if (area == 0.0) throw GeometryError("disk mean square: ball contains no element");
  return integral / area;
}

SolutionField assemble_solve(const EpsProblem& problem, const SolveOptions& options) {
  if (!(problem.epsilon > 0.0 && problem.epsilon <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");
  const double rule = mesh_rule(problem.epsilon);
  const double h = options.h > 0.0 ? options.h : rule;
  if (h > rule * (1.0 + 1e-12) && !options.allow_coarse_mesh) {
    throw ConfigError("mesh rule violated: h = " + std::to_string(h) + " > min(eps/8, 1/64) = " +
                      std::to_string(rule));
  }
  auto mesh = std::make_shared<const DiskMesh>(triangulate_disk(problem.R, h, options.max_triangles));
  return assemble_solve(problem, std::move(mesh), options);
}

SolutionField assemble_solve(const EpsProblem& problem, std::shared_ptr<const DiskMesh> mesh_ptr,
                             const SolveOptions& options) {
  problem.g.validate();
  if (!(problem.epsilon > 0.0 && problem.epsilon <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");
  if (!options.allow_unnormalized && !problem.field.normalized()) {
    throw ConfigError("coefficient field is not normalized (A_hat + A_hat^T != 2I); normalize first");
  }
  const DiskMesh& mesh = *mesh_ptr;
  if (std::abs(mesh.R - problem.R) > 1e-14 * problem.R) throw ConfigError("mesh radius differs from problem");
  if (mesh.h() > mesh_rule(problem.epsilon) * (1.0 + 1e-12) && !options.allow_coarse_mesh) {
    throw ConfigError("mesh rule violated by the supplied mesh");
  }
  const unsigned workers = options.workers;
  const std::size_t nt = mesh.triangle_count();
  const std::size_t nn = mesh.node_count();
  const std::size_t ni = mesh.interior_count();

  // Coefficient A(x / eps) at barycenters, stored as (a11, a12, a22).
  std::vector<std::array<double, 3>> coeff(nt);
  parallel_for(
      nt,
      [&](std::size_t t) {
        const Mat2 a = problem.field(mesh.barycenter(t) / problem.epsilon);
        coeff[t] = {a(0, 0), 0.5 * (a(0, 1) + a(1, 0)), a(1, 1)};
      },
      workers);

  const Incidence inc = incidence(mesh);

  // Row pattern: sorted neighbours (including the node itself).
  std::vector<int> row_size(nn);
  auto row_columns = [&](std::size_t v, std::vector<int>& cols) {
    cols.clear();
    for (int k = inc.start[v]; k < inc.start[v + 1]; ++k) {
      for (int w : mesh.triangles[inc.items[k]]) cols.push_back(w);
    }
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  };
  {
    std::vector<int> cols;
    for (std::size_t v = 0; v < nn; ++v) {
      row_columns(v, cols);
      row_size[v] = static_cast<int>(cols.size());
    }
  }
  std::vector<int> outer(nn + 1, 0);
  for (std::size_t v = 0; v < nn; ++v) outer[v + 1] = outer[v] + row_size[v];
  std::vector<int> inner(static_cast<std::size_t>(outer[nn]));
  std::vector<double> values(inner.size(), 0.0);

  // Gather assembly: each row sums its incident element contributions, so the
  // result does not depend on how rows are distributed over threads.
  parallel_for(
      nn,
      [&](std::size_t v) {
        std::vector<int> cols;
        row_columns(v, cols);
        std::copy(cols.begin(), cols.end(), inner.begin() + outer[v]);
        for (int k = inc.start[v]; k < inc.start[v + 1]; ++k) {
          const std::size_t t = static_cast<std::size_t>(inc.items[k]);
          const auto& tri = mesh.triangles[t];
          const Shape s = shape_of(mesh, t);
          const auto& c = coeff[t];
          int lv = 0;
          while (tri[lv] != static_cast<int>(v)) ++lv;
          const Vec2 ag(c[0] * s.grad[lv].x() + c[1] * s.grad[lv].y(),
                        c[1] * s.grad[lv].x() + c[2] * s.grad[lv].y());
          for (int w = 0; w < 3; ++w) {
            const int col = tri[w];
            const auto pos = std::lower_bound(cols.begin(), cols.end(), col) - cols.begin();
            values[outer[v] + pos] += s.area * ag.dot(s.grad[w]);
          }
        }
      },
      workers);

  Vector u = Vector::Zero(static_cast<Eigen::Index>(nn));
  double gmin = std::numeric_limits<double>::infinity();
  double gmax = -gmin;
  for (std::size_t v = ni; v < nn; ++v) {
    // Boundary node j sits at angle 2 pi j / (6m) by construction.
    const double th = kTwoPi * static_cast<double>(v - ni) / (6.0 * mesh.m);
    u[static_cast<Eigen::Index>(v)] = problem.g(th);
    gmin = std::min(gmin, u[static_cast<Eigen::Index>(v)]);
    gmax = std::max(gmax, u[static_cast<Eigen::Index>(v)]);
  }

  // Interior block and lifted right-hand side. Boundary indices are the
  // largest, so each interior row's interior columns form a prefix.
  std::vector<int> outer_i(ni + 1, 0);
  for (std::size_t v = 0; v < ni; ++v) {
    int k = outer[v];
    while (k < outer[v + 1] && static_cast<std::size_t>(inner[k]) < ni) ++k;
    outer_i[v + 1] = outer_i[v] + (k - outer[v]);
  }
  std::vector<int> inner_i(static_cast<std::size_t>(outer_i[ni]));
  std::vector<double> values_i(inner_i.size());
  Vector rhs = Vector::Zero(static_cast<Eigen::Index>(ni));
  for (std::size_t v = 0; v < ni; ++v) {
    int out = outer_i[v];
    for (int k = outer[v]; k < outer[v + 1]; ++k) {
      if (static_cast<std::size_t>(inner[k]) < ni) {
        inner_i[out] = inner[k];
        values_i[out] = values[k];
        ++out;
      } else {
        rhs[static_cast<Eigen::Index>(v)] -= values[k] * u[inner[k]];
      }
    }
  }
  const auto n_int = static_cast<Eigen::Index>(ni);
  SparseMatrix k_ii = Eigen::Map<const SparseMatrix>(n_int, n_int, static_cast<Eigen::Index>(inner_i.size()),
                                                     outer_i.data(), inner_i.data(), values_i.data());
  inner_i = {};
  values_i = {};

  std::vector<SparseMatrix> prolongations;
  for (std::size_t l = mesh.levels.size() - 1; l > 0; --l) {
    prolongations.push_back(ring_prolongation(mesh.levels[l - 1]));
  }
  const Multigrid mg(std::move(k_ii), std::move(prolongations), /*singular=*/false);
  const Preconditioner pre = [&mg](const Vector& r, Vector& z) { mg.apply(r, z); };
  Vector x = Vector::Zero(n_int);
  const CgResult res = preconditioned_cg(mg.fine_operator(), rhs, x, pre, options.tolerance, 5000);
  if (!res.converged) {
    throw SolverFailure("disk solve did not converge (relative residual " +
                            std::to_string(res.relative_residual) + ")",
                        res.history);
  }
  u.head(n_int) = x;

  SolveInfo info;
  info.residual = res.relative_residual;
  info.iterations = res.iterations;
  info.residual_history = res.history;
  info.max_principle_excess = std::max({0.0, u.maxCoeff() - gmax, gmin - u.minCoeff()});
  double energy = 0.0;
  for (std::size_t t = 0; t < nt; ++t) {
    const Shape s = shape_of(mesh, t);
    const auto& tri = mesh.triangles[t];
    const Vec2 g = u[tri[0]] * s.grad[0] + u[tri[1]] * s.grad[1] + u[tri[2]] * s.grad[2];
    const auto& c = coeff[t];
    energy += s.area * (c[0] * g.x() * g.x() + 2.0 * c[1] * g.x() * g.y() + c[2] * g.y() * g.y());
  }
  info.energy = energy;
  return SolutionField(std::move(mesh_ptr), std::move(u), problem.epsilon, problem.g, problem_key(problem),
                       std::move(info), problem.field.family() != Family::Constant);
}

std::vector<ExpansionSample> corrector_expansion(const PlanarField& u0, const CorrectorSolution& corrector,
                                                 double epsilon, const std::vector<Vec2>& points) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  std::vector<ExpansionSample> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out[i].point = points[i];
    if (!points[i].allFinite() || !u0.contains_disk(points[i], 0.0)) continue;
    const Mat2 jac = Mat2::Identity() + corrector.grad_chi_at(points[i] / epsilon);
    out[i].G = jac * u0.gradient(points[i]);
    out[i].ok = true;
  }
  return out;
}

ConvergenceReport convergence_report(const std::vector<const SolutionField*>& ladder,
                                     const CorrectorSolution& corrector, double radius_fraction) {
  if (ladder.size() < 2) throw ConfigError("convergence report needs at least two ladder entries");
  for (const auto* s : ladder) {
    if (s == nullptr) throw ConfigError("null ladder entry");
    if (s->problem_key() != ladder.front()->problem_key()) {
      throw ConfigError("ladder entries differ in field, radius or boundary data");
    }
  }
  ConvergenceReport report;
  for (const auto* s : ladder) {
    const HarmonicReference u0(s->boundary(), s->radius());
    const DiskMesh& mesh = s->mesh();
    const double limit = radius_fraction * mesh.R;
    std::vector<Vec2> pts;
    std::vector<std::size_t> ids;
    for (std::size_t v = 0; v < mesh.node_count(); ++v) {
      if (mesh.nodes[v].norm() <= limit) {
        pts.push_back(mesh.nodes[v]);
        ids.push_back(v);
      }
    }
    const auto expansion = corrector_expansion(u0, corrector, s->epsilon(), pts);
    ConvergenceRow row;
    row.epsilon = s->epsilon();
    row.h = mesh.h();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const double du = std::abs(s->nodal_values()[static_cast<Eigen::Index>(ids[i])] - u0.value(pts[i]));
      row.sup_value_error = std::max(row.sup_value_error, du);
      const double dg = (s->nodal_gradients()[ids[i]] - expansion[i].G).norm();
      row.sup_gradient_error = std::max(row.sup_gradient_error, dg);
    }
    report.rows.push_back(row);
  }
  report.value_strictly_decreasing = true;
  report.gradient_strictly_decreasing = true;
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const auto& p = report.rows[i - 1];
    const auto& c = report.rows[i];
    if (!(c.sup_value_error < p.sup_value_error)) report.value_strictly_decreasing = false;
    if (!(c.sup_gradient_error < p.sup_gradient_error)) report.gradient_strictly_decreasing = false;
    // Growth between solver-noise errors (u0 exactly representable) is not degradation.
    auto grew = [](double prev, double cur) { return cur > 1.1 * prev && cur > kSolverNoise; };
    if (grew(p.sup_value_error, c.sup_value_error) || grew(p.sup_gradient_error, c.sup_gradient_error)) {
      report.degradation_flag = true;
    }
  }
  return report;
}

}  // namespace oscilab
