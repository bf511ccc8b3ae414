#include "oscilab/linalg.hpp"

#include <cmath>

namespace oscilab {

Multigrid::Multigrid(SparseMatrix fine, std::vector<SparseMatrix> prolongations, bool singular,
                     int sweeps)
    : prolong_(std::move(prolongations)), singular_(singular), sweeps_(sweeps) {
  ops_.push_back(std::move(fine));
  for (const auto& p : prolong_) {
    if (p.rows() != ops_.back().rows()) throw AssemblyError("prolongation does not match level size");
    SparseMatrix r = p.transpose();
    SparseMatrix coarse = r * ops_.back() * p;
    coarse.prune(0.0);
    restrict_.push_back(std::move(r));
    ops_.push_back(std::move(coarse));
  }
  for (const auto& op : ops_) {
    Vector d = op.diagonal();
    if ((d.array() <= 0.0).any()) throw AssemblyError("non-positive diagonal in assembled operator");
    inv_diag_.push_back(d.cwiseInverse());
  }
  Eigen::SparseMatrix<double> coarsest = ops_.back();
  if (singular_) {
    const Eigen::Index n = coarsest.rows();
    coarsest = Eigen::SparseMatrix<double>(coarsest.bottomRightCorner(n - 1, n - 1));
  }
  coarse_.compute(coarsest);
  if (coarse_.info() != Eigen::Success || (coarse_.vectorD().array() <= 0.0).any()) {
    throw AssemblyError("coarse operator is not positive definite");
  }
}

void Multigrid::smooth(std::size_t level, const Vector& b, Vector& x, bool forward) const {
  const SparseMatrix& a = ops_[level];
  const Vector& dinv = inv_diag_[level];
  const Eigen::Index n = a.rows();
  const int* outer = a.outerIndexPtr();
  const int* inner = a.innerIndexPtr();
  const double* val = a.valuePtr();
  auto relax = [&](Eigen::Index i) {
    double s = b[i];
    for (int k = outer[i]; k < outer[i + 1]; ++k) {
      const int j = inner[k];
      if (j != i) s -= val[k] * x[j];
    }
    x[i] = s * dinv[i];
  };
  for (int sweep = 0; sweep < sweeps_; ++sweep) {
    if (forward) {
      for (Eigen::Index i = 0; i < n; ++i) relax(i);
    } else {
      for (Eigen::Index i = n - 1; i >= 0; --i) relax(i);
    }
  }
}

void Multigrid::cycle(std::size_t level, const Vector& b, Vector& x) const {
  if (level + 1 == ops_.size()) {
    if (singular_) {
      const Eigen::Index n = b.size();
      x.setZero(n);
      x.tail(n - 1) = coarse_.solve(b.tail(n - 1));
    } else {
      x = coarse_.solve(b);
    }
    return;
  }
  x.setZero(b.size());
  smooth(level, b, x, true);
  const Vector residual = b - ops_[level] * x;
  const Vector coarse_rhs = restrict_[level] * residual;
  Vector coarse_x;
  cycle(level + 1, coarse_rhs, coarse_x);
  x += prolong_[level] * coarse_x;
  smooth(level, b, x, false);
}

void Multigrid::apply(const Vector& r, Vector& z) const { cycle(0, r, z); }

void remove_mean(Vector& v) {
  if (v.size() > 0) v.array() -= v.mean();
}

CgResult preconditioned_cg(const SparseMatrix& a, const Vector& b, Vector& x,
                           const Preconditioner& precondition, double tol, int max_iterations,
                           const Projection& project, double reference_norm) {
  CgResult result;
  const double bnorm = std::max(b.norm(), reference_norm);
  if (x.size() != b.size()) x.setZero(b.size());
  if (bnorm == 0.0) {
    x.setZero();
    result.converged = true;
    result.history.push_back(0.0);
    return result;
  }
  if (project) project(x);
  Vector r = b - a * x;
  Vector z(b.size());
  precondition(r, z);
  if (project) project(z);
  Vector p = z;
  double rz = r.dot(z);
  result.relative_residual = r.norm() / bnorm;
  result.history.push_back(result.relative_residual);
  if (result.relative_residual <= tol) {
    result.converged = true;
    return result;
  }
  Vector ap(b.size());
  for (int it = 0; it < max_iterations; ++it) {
    ap.noalias() = a * p;
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) throw AssemblyError("indefinite operator encountered in conjugate gradients");
    const double alpha = rz / pap;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    if (project) project(x);
    result.iterations = it + 1;
    bool restart = false;
    if (r.norm() <= tol * bnorm) {
      // Replace the recursive residual by the true one before trusting it.
      r = b - a * x;
      restart = true;
    } else if (result.iterations % 50 == 0) {
      r = b - a * x;
    }
    result.relative_residual = r.norm() / bnorm;
    result.history.push_back(result.relative_residual);
    if (result.relative_residual <= tol) {
      result.converged = true;
      break;
    }
    precondition(r, z);
    if (project) project(z);
    const double rz_next = r.dot(z);
    p = restart ? Vector(z) : Vector(z + (rz_next / rz) * p);
    rz = rz_next;
  }
  return result;
}

}  // namespace oscilab
