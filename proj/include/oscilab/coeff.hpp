#pragma once

#include "oscilab/common.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace oscilab {

enum class Family { Constant, Laminate, SeparableScalar, RotatingAnisotropic, FourierGeneral };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

/// Basis of the period lattice. Periodic evaluators work in lattice
/// coordinates s = B^{-1} y, so A(y + b_i) = A(y) holds up to rounding.
struct LatticeBasis {
  Vec2 b1{1.0, 0.0};
  Vec2 b2{0.0, 1.0};

  static LatticeBasis unit_square() { return {}; }
  Mat2 matrix() const;
  double cell_area() const;
  void validate() const;
  bool operator==(const LatticeBasis& o) const { return b1 == o.b1 && b2 == o.b2; }
};

/// Input to build_family.
///
/// Parameter layouts (all sinusoids have period one in lattice coordinates):
///   constant              [a] | [a11, a22] | [a11, a12, a22]
///   laminate              [a0, amp]            a = a0 + amp sin(2 pi s1), A = a I
///   separable-scalar      [a0, amp]            a = a0 + amp sin(2 pi s1) sin(2 pi s2)
///   rotating-anisotropic  [d1, d2, phi_amp]    A = R(phi) diag(d1, d2) R(phi)^T,
///                                              phi = phi_amp (sin 2 pi s1 + cos 2 pi s2)
///   fourier-general       [a11, a12, a22, {k1, k2, c11, c12, c22, s11, s12, s22}...]
///                         A = A0 + sum_k C_k cos(2 pi k.s) + S_k sin(2 pi k.s)
struct FamilySpec {
  Family family = Family::Constant;
  std::vector<double> params;
  LatticeBasis lattice;
  /// Ellipticity floor the amplitude projection must reach.
  double lambda_target = 0.05;
};

/// Periodic, symmetric 2x2 coefficient field. Immutable after construction.
class CoefficientField {
 public:
  Mat2 operator()(const Vec2& y) const;
  Mat2 at_lattice(const Vec2& s) const;
  Vec2 to_lattice(const Vec2& y) const { return lattice_inverse_ * y; }

  Family family() const { return family_; }
  const std::vector<double>& params() const { return params_; }
  const LatticeBasis& lattice() const { return lattice_; }
  const Mat2& congruence() const { return congruence_; }

  double lambda_decl() const { return std::min(eig_lower_, 1.0 / eig_upper_); }
  double eig_lower() const { return eig_lower_; }
  double eig_upper() const { return eig_upper_; }
  double lipschitz_decl() const { return lipschitz_; }
  /// Factor applied to the oscillatory part by the amplitude projection (1 = untouched).
  double projection_factor() const { return projection_factor_; }

  /// True when this field came out of normalize() (or is a constant field with sym A = I).
  bool normalized() const;

  /// A'(z) = P^{-1} A(P z) P^{-T}, periodic on the lattice P^{-1} Gamma.
  /// `marks_normalized` records that the result has sym(A_hat') = I.
  CoefficientField pushed_forward(const Mat2& P, bool marks_normalized = false) const;

  /// Stable textual identity of the evaluator (family, stored params, lattice, congruence).
  std::string fingerprint() const;

 private:
  friend CoefficientField build_family(const FamilySpec& spec);

  Mat2 base(const Vec2& s) const;

  Family family_ = Family::Constant;
  std::vector<double> params_;
  LatticeBasis lattice_;
  Mat2 lattice_inverse_ = Mat2::Identity();
  Mat2 congruence_ = Mat2::Identity();
  double eig_lower_ = 1.0;
  double eig_upper_ = 1.0;
  double lipschitz_ = 0.0;
  double projection_factor_ = 1.0;
  bool normalized_flag_ = false;
};

CoefficientField build_family(const FamilySpec& spec);

/// One representative per family, on the unit square lattice: the default sweep.
std::vector<FamilySpec> builtin_families();

struct EllipticityEstimate {
  double lambda_est = 0.0;
  double Lambda_est = 0.0;
  bool passes = false;
};

EllipticityEstimate validate_ellipticity(const CoefficientField& field, int n_samples);
double estimate_lipschitz(const CoefficientField& field, int n_samples);
double check_periodicity(const CoefficientField& field, const LatticeBasis& lattice,
                         int n_samples);

/// Eigenvalues (ascending) of the symmetric part of m.
Vec2 sym_eigenvalues(const Mat2& m);

}  // namespace oscilab
