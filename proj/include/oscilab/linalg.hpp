#pragma once

#include "oscilab/common.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <functional>
#include <vector>

namespace oscilab {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Geometric multigrid V-cycle used as a CG preconditioner.
///
/// Coarse operators are Galerkin products P^T A P. Smoothing is forward
/// Gauss-Seidel before and backward Gauss-Seidel after the coarse correction,
/// so the cycle is a symmetric operator. For singular (periodic) problems the
/// coarsest solve pins the first unknown.
class Multigrid {
 public:
  /// prolongations[l] maps level l+1 (coarser) onto level l; level 0 is `fine`.
  Multigrid(SparseMatrix fine, std::vector<SparseMatrix> prolongations, bool singular,
            int sweeps = 1);

  const SparseMatrix& fine_operator() const { return ops_.front(); }
  std::size_t levels() const { return ops_.size(); }
  std::size_t coarsest_size() const { return static_cast<std::size_t>(ops_.back().rows()); }

  /// z = B r for one V-cycle B.
  void apply(const Vector& r, Vector& z) const;

 private:
  void cycle(std::size_t level, const Vector& b, Vector& x) const;
  void smooth(std::size_t level, const Vector& b, Vector& x, bool forward) const;

  std::vector<SparseMatrix> ops_;
  std::vector<SparseMatrix> prolong_;
  std::vector<SparseMatrix> restrict_;
  std::vector<Vector> inv_diag_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> coarse_;
  bool singular_ = false;
  int sweeps_ = 1;
};

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  std::vector<double> history;
};

using Preconditioner = std::function<void(const Vector&, Vector&)>;
using Projection = std::function<void(Vector&)>;

/// Preconditioned conjugate gradients on a symmetric positive (semi)definite
/// system. When `project` is given it is applied to the iterate and to the
/// preconditioned residual after every step (used to stay in a complement of
/// the kernel). Convergence is ||b - A x|| <= tol max(||b||, reference_norm);
/// the reference keeps a right-hand side that is zero up to round-off from
/// chasing its own noise.
CgResult preconditioned_cg(const SparseMatrix& a, const Vector& b, Vector& x,
                           const Preconditioner& precondition, double tol, int max_iterations,
                           const Projection& project = {}, double reference_norm = 0.0);

/// Subtracts the arithmetic mean.
void remove_mean(Vector& v);

}  // namespace oscilab
