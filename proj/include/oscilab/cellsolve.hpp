#pragma once

#include "oscilab/coeff.hpp"
#include "oscilab/linalg.hpp"

#include <array>
#include <utility>
#include <vector>

namespace oscilab {

/// Uniform n x n triangulation of the period cell with opposite edges
/// identified. Square (i, j) is split along its (i, j)-(i+1, j+1) diagonal
/// into elements 2k and 2k+1, k = i + n j.
struct PeriodicGrid {
  int n = 0;
  LatticeBasis lattice;

  int node(int i, int j) const;
  std::size_t node_count() const { return static_cast<std::size_t>(n) * n; }
  std::size_t element_count() const { return 2 * node_count(); }
  std::array<int, 3> element(std::size_t e) const;
  /// Barycenter of element e in lattice coordinates.
  Vec2 barycenter(std::size_t e) const;
  double element_area() const { return lattice.cell_area() / (2.0 * n * n); }
};

struct CorrectorSolution {
  PeriodicGrid grid;
  /// Nodal values of chi_1, chi_2 (discrete cell average zero).
  std::array<Vector, 2> chi;
  /// Per-element gradient matrix G with G(k, j) = d chi_j / d y_k.
  std::vector<Mat2> grad_chi;
  /// Patch-averaged nodal recovery of grad_chi.
  std::vector<Mat2> grad_chi_nodal;
  Mat2 A_hat = Mat2::Identity();
  /// min over elements of det(I + grad chi).
  double mu_min = 1.0;
  /// Largest final relative residual of the two solves.
  double residual = 0.0;
  int iterations = 0;
  /// Relative gap between flux-average and energy forms of A_hat.
  double quadratic_form_discrepancy = 0.0;

  /// Periodic P1 interpolation of the recovered gradient at physical point y.
  Mat2 grad_chi_at(const Vec2& y) const;
  /// Discrete cell average of chi_j.
  double cell_average(int j) const { return chi[j].mean(); }
};

CorrectorSolution solve_cell_problem(const CoefficientField& field, int n);

/// Flux average a_ij = avg_Y (a_ij + a_ik d_k chi_j). Also compares
/// <A_hat xi, xi> with the averaged energy of v_xi for three test vectors and
/// throws InconsistencyError when the relative gap exceeds 1e-8.
Mat2 homogenized_matrix(const CorrectorSolution& corrector, const CoefficientField& field,
                        double* discrepancy = nullptr);

struct MarginReport {
  enum class Status { Positive, ResolvedAtRefinement, Violation };
  double mu_min = 0.0;
  int n = 0;
  Status status = Status::Positive;
};

/// Reports min det(I + grad chi). A non-positive value triggers one re-solve at
/// 2n when `field` is supplied before it is reported as a violation.
MarginReport invertibility_margin(const CorrectorSolution& corrector,
                                  const CoefficientField* field = nullptr);

struct NormalizingTransform {
  Mat2 P = Mat2::Identity();
  Mat2 P_inv = Mat2::Identity();
  LatticeBasis lattice;
};

/// P = (sym A_hat)^{1/2}; returns P and the pushed-forward field
/// A'(z) = P^{-1} A(P z) P^{-1}, whose homogenized matrix has A' + A'^T = 2I.
std::pair<NormalizingTransform, CoefficientField> normalize(const CorrectorSolution& corrector,
                                                            const CoefficientField& field);

/// Square root of a symmetric positive definite 2x2 matrix.
Mat2 spd_sqrt(const Mat2& m);

}  // namespace oscilab
