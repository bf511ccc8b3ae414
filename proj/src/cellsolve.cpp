#include "oscilab/cellsolve.hpp"

#include <cmath>

namespace oscilab {
namespace {

using Local = std::array<double, 9>;

// Gradients of the three hat functions on the two element shapes.
struct ShapeGradients {
  std::array<std::array<Vec2, 3>, 2> grad;
};

ShapeGradients shape_gradients(const PeriodicGrid& grid) {
  const Mat2 b = grid.lattice.matrix() / grid.n;
  const std::array<std::array<Vec2, 3>, 2> corners{{
      {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1)},
      {Vec2(0, 0), Vec2(1, 1), Vec2(0, 1)},
  }};
  ShapeGradients out;
  for (int t = 0; t < 2; ++t) {
    std::array<Vec2, 3> p;
    for (int v = 0; v < 3; ++v) p[v] = b * corners[t][v];
    const double twice_area =
        (p[1] - p[0]).x() * (p[2] - p[0]).y() - (p[1] - p[0]).y() * (p[2] - p[0]).x();
    for (int v = 0; v < 3; ++v) {
      const Vec2& pj = p[(v + 1) % 3];
      const Vec2& pk = p[(v + 2) % 3];
      out.grad[t][v] = Vec2(pj.y() - pk.y(), pk.x() - pj.x()) / twice_area;
    }
  }
  return out;
}

SparseMatrix torus_prolongation(int n_coarse) {
  const int nf = 2 * n_coarse;
  auto coarse = [&](int i, int j) {
    i = ((i % n_coarse) + n_coarse) % n_coarse;
    j = ((j % n_coarse) + n_coarse) % n_coarse;
    return i + n_coarse * j;
  };
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(nf) * nf * 2);
  for (int fj = 0; fj < nf; ++fj) {
    for (int fi = 0; fi < nf; ++fi) {
      const int row = fi + nf * fj;
      const int ci = fi / 2;
      const int cj = fj / 2;
      const bool odd_i = fi % 2 != 0;
      const bool odd_j = fj % 2 != 0;
      if (!odd_i && !odd_j) {
        t.emplace_back(row, coarse(ci, cj), 1.0);
      } else {
        t.emplace_back(row, coarse(ci, cj), 0.5);
        t.emplace_back(row, coarse(ci + (odd_i ? 1 : 0), cj + (odd_j ? 1 : 0)), 0.5);
      }
    }
  }
  SparseMatrix p(nf * nf, n_coarse * n_coarse);
  p.setFromTriplets(t.begin(), t.end());
  return p;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

int PeriodicGrid::node(int i, int j) const {
  i = ((i % n) + n) % n;
  j = ((j % n) + n) % n;
  return i + n * j;
}

std::array<int, 3> PeriodicGrid::element(std::size_t e) const {
  const int k = static_cast<int>(e / 2);
  const int i = k % n;
  const int j = k / n;
  if (e % 2 == 0) return {node(i, j), node(i + 1, j), node(i + 1, j + 1)};
  return {node(i, j), node(i + 1, j + 1), node(i, j + 1)};
}

Vec2 PeriodicGrid::barycenter(std::size_t e) const {
  const int k = static_cast<int>(e / 2);
  const double i = k % n;
  const double j = k / n;
  if (e % 2 == 0) return Vec2(i + 2.0 / 3.0, j + 1.0 / 3.0) / n;
  return Vec2(i + 1.0 / 3.0, j + 2.0 / 3.0) / n;
}

Mat2 CorrectorSolution::grad_chi_at(const Vec2& y) const {
  const int n = grid.n;
  const Vec2 s = grid.lattice.matrix().inverse() * y * n;
  const double fi = std::floor(s.x());
  const double fj = std::floor(s.y());
  const double fx = s.x() - fi;
  const double fy = s.y() - fj;
  const int i = static_cast<int>(static_cast<long long>(fi) % n);
  const int j = static_cast<int>(static_cast<long long>(fj) % n);
  if (fx >= fy) {
    return (1.0 - fx) * grad_chi_nodal[grid.node(i, j)] +
           (fx - fy) * grad_chi_nodal[grid.node(i + 1, j)] +
           fy * grad_chi_nodal[grid.node(i + 1, j + 1)];
  }
  return (1.0 - fy) * grad_chi_nodal[grid.node(i, j)] + fx * grad_chi_nodal[grid.node(i + 1, j + 1)] +
         (fy - fx) * grad_chi_nodal[grid.node(i, j + 1)];
}

CorrectorSolution solve_cell_problem(const CoefficientField& field, int n) {
  if (n < 32 || !is_power_of_two(n)) throw ConfigError("cell grid n must be a power of two >= 32");
  CorrectorSolution sol;
  sol.grid = PeriodicGrid{n, field.lattice()};
  const PeriodicGrid& grid = sol.grid;
  const ShapeGradients shapes = shape_gradients(grid);
  const double area = grid.element_area();
  const std::size_t ne = grid.element_count();
  const std::size_t nn = grid.node_count();

  std::vector<Mat2> coeff(ne);
  std::vector<Local> local(ne);
  parallel_for(ne, [&](std::size_t e) {
    const Mat2 a = field.at_lattice(grid.barycenter(e));
    coeff[e] = a;
    const auto& g = shapes.grad[e % 2];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) local[e][3 * r + c] = area * g[r].dot(a * g[c]);
    }
  });

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * ne);
  std::array<Vector, 2> rhs{Vector::Zero(nn), Vector::Zero(nn)};
  Vector load_scale = Vector::Zero(nn);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto nodes = grid.element(e);
    const auto& g = shapes.grad[e % 2];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) triplets.emplace_back(nodes[r], nodes[c], local[e][3 * r + c]);
      for (int j = 0; j < 2; ++j) {
        const double contrib = area * g[r].dot(coeff[e].col(j));
        rhs[j][nodes[r]] -= contrib;
        load_scale[nodes[r]] += std::abs(contrib);
      }
    }
  }
  local.clear();
  local.shrink_to_fit();
  SparseMatrix k(static_cast<Eigen::Index>(nn), static_cast<Eigen::Index>(nn));
  k.setFromTriplets(triplets.begin(), triplets.end());
  triplets.clear();
  triplets.shrink_to_fit();

  std::vector<SparseMatrix> prolongations;
  for (int m = n / 2; m >= 4; m /= 2) prolongations.push_back(torus_prolongation(m));
  const Multigrid mg(std::move(k), std::move(prolongations), /*singular=*/true);
  const Preconditioner pre = [&mg](const Vector& r, Vector& z) { mg.apply(r, z); };
  const Projection mean_zero = [](Vector& v) { remove_mean(v); };

  const int cap = 10 * n * n;
  // Residuals are measured against the load before cancellation: a laminate's
  // chi_2 or a constant field has a round-off-sized right-hand side.
  const double reference = std::max({rhs[0].norm(), rhs[1].norm(), load_scale.norm()});
  for (int j = 0; j < 2; ++j) {
    Vector x = Vector::Zero(static_cast<Eigen::Index>(nn));
    const CgResult res =
        preconditioned_cg(mg.fine_operator(), rhs[j], x, pre, 1e-10, cap, mean_zero, reference);
    if (!res.converged) {
      throw SolverFailure("cell problem did not converge (relative residual " +
                              std::to_string(res.relative_residual) + ")",
                          res.history);
    }
    sol.residual = std::max(sol.residual, res.relative_residual);
    sol.iterations = std::max(sol.iterations, res.iterations);
    remove_mean(x);
    sol.chi[j] = std::move(x);
  }

  sol.grad_chi.resize(ne);
  sol.grad_chi_nodal.assign(nn, Mat2::Zero());
  std::vector<int> incident(nn, 0);
  double mu = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < ne; ++e) {
    const auto nodes = grid.element(e);
    const auto& g = shapes.grad[e % 2];
    Mat2 grad = Mat2::Zero();
    for (int v = 0; v < 3; ++v) {
      for (int j = 0; j < 2; ++j) grad.col(j) += sol.chi[j][nodes[v]] * g[v];
    }
    sol.grad_chi[e] = grad;
    mu = std::min(mu, (Mat2::Identity() + grad).determinant());
    for (int v = 0; v < 3; ++v) {
      sol.grad_chi_nodal[nodes[v]] += grad;
      ++incident[nodes[v]];
    }
  }
  for (std::size_t v = 0; v < nn; ++v) sol.grad_chi_nodal[v] /= incident[v];
  sol.mu_min = mu;
  sol.A_hat = homogenized_matrix(sol, field, &sol.quadratic_form_discrepancy);
  return sol;
}

Mat2 homogenized_matrix(const CorrectorSolution& corrector, const CoefficientField& field,
                        double* discrepancy) {
  const PeriodicGrid& grid = corrector.grid;
  const std::size_t ne = grid.element_count();
  if (corrector.grad_chi.size() != ne) throw InconsistencyError("corrector has no element gradients");
  const std::array<Vec2, 3> probes{Vec2(1, 0), Vec2(0, 1), Vec2(1, 1)};
  Mat2 flux = Mat2::Zero();
  std::array<double, 3> energy{0.0, 0.0, 0.0};
  for (std::size_t e = 0; e < ne; ++e) {
    const Mat2 a = field.at_lattice(grid.barycenter(e));
    const Mat2 jac = Mat2::Identity() + corrector.grad_chi[e];
    flux += a * jac;
    for (int k = 0; k < 3; ++k) {
      const Vec2 g = jac * probes[k];
      energy[k] += g.dot(a * g);
    }
  }
  // All elements have equal area, so the cell average is the element mean.
  flux /= static_cast<double>(ne);
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double q_energy = energy[k] / static_cast<double>(ne);
    const double q_flux = probes[k].dot(flux * probes[k]);
    worst = std::max(worst, std::abs(q_flux - q_energy) / std::abs(q_energy));
  }
  if (discrepancy != nullptr) *discrepancy = worst;
  if (worst > 1e-8) {
    throw InconsistencyError("flux and energy forms of the homogenized matrix disagree (" +
                             std::to_string(worst) + "); cell problem under-resolved");
  }
  return flux;
}

MarginReport invertibility_margin(const CorrectorSolution& corrector, const CoefficientField* field) {
  MarginReport report{corrector.mu_min, corrector.grid.n, MarginReport::Status::Positive};
  if (report.mu_min > 0.0) return report;
  if (field != nullptr) {
    const CorrectorSolution finer = solve_cell_problem(*field, 2 * corrector.grid.n);
    report.mu_min = finer.mu_min;
    report.n = finer.grid.n;
    if (finer.mu_min > 0.0) {
      report.status = MarginReport::Status::ResolvedAtRefinement;
      return report;
    }
  }
  report.status = MarginReport::Status::Violation;
  return report;
}

Mat2 spd_sqrt(const Mat2& m) {
  const Mat2 s = 0.5 * (m + m.transpose());
  const double det = s.determinant();
  const double tr = s.trace();
  if (!(det > 0.0) || !(tr > 0.0)) throw InconsistencyError("matrix is not symmetric positive definite");
  const double root_det = std::sqrt(det);
  Mat2 r = (s + root_det * Mat2::Identity()) / std::sqrt(tr + 2.0 * root_det);
  r(0, 1) = r(1, 0) = 0.5 * (r(0, 1) + r(1, 0));
  return r;
}

std::pair<NormalizingTransform, CoefficientField> normalize(const CorrectorSolution& corrector,
                                                            const CoefficientField& field) {
  NormalizingTransform t;
  t.P = spd_sqrt(corrector.A_hat);
  t.P_inv = t.P.inverse();
  CoefficientField pushed = field.pushed_forward(t.P, /*marks_normalized=*/true);
  t.lattice = pushed.lattice();
  return {t, std::move(pushed)};
}

}  // namespace oscilab
