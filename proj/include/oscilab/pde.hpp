#pragma once

#include "oscilab/cellsolve.hpp"
#include "oscilab/field.hpp"
#include "oscilab/mesh.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace oscilab {

/// g(t) = sum_{l <= 8} a_l cos(l t) + b_l sin(l t) on the circle |x| = R.
struct BoundaryData {
  std::vector<double> a;
  std::vector<double> b;

  static constexpr int kMaxDegree = 8;

  static BoundaryData cosine(int ell, double amplitude = 1.0);
  /// Throws ConfigError for non-finite coefficients, degree above 8, or data
  /// without any l >= 1 term (the solution would be constant).
  void validate() const;
  double operator()(double t) const;
  int degree() const;
  bool operator==(const BoundaryData& o) const;
};

/// Harmonic extension u0 = Re sum (a_l - i b_l) (z / R)^l of the boundary data.
class HarmonicReference : public PlanarField {
 public:
  HarmonicReference(BoundaryData g, double R);

  double value(const Vec2& x) const override;
  Vec2 gradient(const Vec2& x) const override;
  bool contains_disk(const Vec2& center, double r) const override {
    return center.norm() + r <= R_ * (1.0 + 1e-12);
  }
  const BoundaryData& boundary() const { return g_; }
  double radius() const { return R_; }

 private:
  BoundaryData g_;
  double R_;
};

struct EpsProblem {
  CoefficientField field;
  double epsilon = 1.0;
  double R = 2.0;
  BoundaryData g;
};

struct SolveOptions {
  /// Requested spacing; 0 selects the mesh rule min(epsilon / 8, 1/64).
  double h = 0.0;
  /// Accept h coarser than the mesh rule (convergence studies on constant coefficients).
  bool allow_coarse_mesh = false;
  /// Accept a field that did not go through normalize().
  bool allow_unnormalized = false;
  double max_triangles = 2e7;
  double tolerance = 1e-10;
  unsigned workers = 0;
};

/// min(epsilon / 8, 1/64).
double mesh_rule(double epsilon);

struct SolveInfo {
  double residual = 0.0;
  int iterations = 0;
  double energy = 0.0;
  /// max(0, max u - max g, min g - min u) over nodes.
  double max_principle_excess = 0.0;
  std::vector<double> residual_history;
};

/// Piecewise-linear solution on a disk mesh. Immutable after construction.
class SolutionField : public PlanarField {
 public:
  SolutionField(std::shared_ptr<const DiskMesh> mesh, Vector u, double epsilon, BoundaryData g,
                std::string problem_key, SolveInfo info = {}, bool oscillates = true);

  const DiskMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const DiskMesh> mesh_ptr() const { return mesh_; }
  const Vector& nodal_values() const { return u_; }
  const std::vector<Vec2>& element_gradients() const { return element_grad_; }
  const std::vector<Vec2>& nodal_gradients() const { return nodal_grad_; }
  const BoundaryData& boundary() const { return g_; }
  const std::string& problem_key() const { return key_; }
  const SolveInfo& info() const { return info_; }
  double epsilon() const { return epsilon_; }
  double radius() const { return mesh_->R; }

  double value(const Vec2& x) const override;
  /// Barycentric interpolation of the recovered nodal gradient.
  Vec2 gradient(const Vec2& x) const override;
  Vec2 element_gradient(const Vec2& x) const;
  bool contains_disk(const Vec2& center, double r) const override {
    return center.norm() + r <= mesh_->R * (1.0 + 1e-12);
  }
  double mesh_size() const override { return mesh_->h(); }
  /// epsilon, or 0 for a constant coefficient (nothing oscillates).
  double oscillation_scale() const override { return oscillates_ ? epsilon_ : 0.0; }
  bool oscillates() const { return oscillates_; }
  /// Exact integration of the piecewise-linear u^2 over the elements whose
  /// barycenter lies in the ball, divided by their area.
  double disk_mean_square(const Vec2& center, double r) const override;

 private:
  MeshLocator::Hit locate_or_throw(const Vec2& x) const;

  std::shared_ptr<const DiskMesh> mesh_;
  MeshLocator locator_;
  Vector u_;
  std::vector<Vec2> element_grad_;
  std::vector<Vec2> nodal_grad_;
  double epsilon_;
  BoundaryData g_;
  std::string key_;
  SolveInfo info_;
  bool oscillates_;
};

/// Stable identity of (field, R, g) used to match ladder entries.
std::string problem_key(const EpsProblem& problem);

SolutionField assemble_solve(const EpsProblem& problem, const SolveOptions& options = {});
/// Same, on a caller-supplied mesh (shared between ladder entries or reloads).
SolutionField assemble_solve(const EpsProblem& problem, std::shared_ptr<const DiskMesh> mesh,
                             const SolveOptions& options = {});

HarmonicReference harmonic_reference(const BoundaryData& g, double R);

struct ExpansionSample {
  Vec2 point = Vec2::Zero();
  Vec2 G = Vec2::Zero();
  bool ok = false;
};

/// G(x) = (I + grad chi(x / epsilon)) grad u0(x) at each point; points outside
/// u0's domain come back with ok = false.
std::vector<ExpansionSample> corrector_expansion(const PlanarField& u0, const CorrectorSolution& corrector,
                                                 double epsilon, const std::vector<Vec2>& points);

struct ConvergenceRow {
  double epsilon = 0.0;
  double h = 0.0;
  /// sup over nodes in B(0, 3R/4) of |u_eps - u0|.
  double sup_value_error = 0.0;
  /// sup over the same nodes of |recovered grad u_eps - G|.
  double sup_gradient_error = 0.0;
};

/// Errors at or below this size count as exact in the degradation flag: the
/// algebraic error of a solve at relative residual 1e-10 on h >= 1/512 stays
/// well under it.
inline constexpr double kSolverNoise = 1e-7;

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  bool value_strictly_decreasing = false;
  bool gradient_strictly_decreasing = false;
  /// Some column grew by more than 10% between consecutive entries (to a
  /// value above kSolverNoise).
  bool degradation_flag = false;
};

/// Rows follow the order of `ladder` (expected: decreasing epsilon).
ConvergenceReport convergence_report(const std::vector<const SolutionField*>& ladder,
                                     const CorrectorSolution& corrector, double radius_fraction = 0.75);

}  // namespace oscilab
