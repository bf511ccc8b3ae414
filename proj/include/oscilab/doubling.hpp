#pragma once

#include "oscilab/field.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace oscilab {

/// Average of (u - u(x0))^2 over M equispaced points of the circle |x - x0| = r
/// (trapezoid rule). For mesh fields M is raised to 8 ceil(2 pi r / h).
/// Throws GeometryError if the circle leaves the domain, ConfigError for
/// M < 512 and DegenerateError when the samples do not separate from u(x0).
double circle_mean_square(const PlanarField& u, const Vec2& x0, double r, int samples = 512);

struct DoublingMeasurement {
  double value = 0.0;
  double outer = 0.0;  // circle mean square at r
  double inner = 0.0;  // circle mean square at r / 2
  double center_value = 0.0;
};

/// N*(u, x0, r) = log_4 of the ratio of circle mean squares at r and r/2.
DoublingMeasurement measure_doubling(const PlanarField& u, const Vec2& x0, double r, int samples = 512);
double doubling_index(const PlanarField& u, const Vec2& x0, double r, int samples = 512);

/// Growth exponent N with mean_{B(2r)} u^2 = 4^N mean_{B(r)} u^2 (area means, no
/// subtraction of u(x0)).
double ball_doubling(const PlanarField& u, const Vec2& center, double r);

/// Smallest radius at which measurements are trusted: max(4 eps, 2 h).
double floor_radius(const PlanarField& u);

struct DoublingProfile {
  Vec2 x0 = Vec2::Zero();
  std::vector<double> radii;
  std::vector<double> values;
  std::vector<double> outer;
  std::vector<double> inner;
  /// false when the rung lies below the floor radius.
  std::vector<bool> reliable;
  /// Empty for measured rungs, otherwise the reason (degenerate denominator).
  std::vector<std::string> errors;
  double floor_radius = 0.0;
};

/// Rungs r_top, r_top/2, ..., r_top/2^(rungs-1). All circles must lie in the domain.
DoublingProfile doubling_profile(const PlanarField& u, const Vec2& x0, double r_top, int rungs,
                                 int samples = 512);

struct ReductionParams {
  int ell = 2;
  double delta = 0.25;
  int L = 8;
  /// Margin separating measured values from bounds: hypotheses must hold by
  /// this much, and conclusions only fail when exceeded by more than this.
  double noise = 1e-6;

  void validate() const;
};

/// delta r / (8 ell).
double reduction_radius(const ReductionParams& params, double r);

enum class Verdict { Satisfied, Violated, NotApplicable, Unresolvable };
std::string_view verdict_name(Verdict v);

struct Measured {
  std::string name;
  double radius = 0.0;
  double value = 0.0;
  double bound = 0.0;
  bool holds = false;
  bool reliable = true;
  std::string note;
};

struct CheckReport {
  std::string check;
  Verdict verdict = Verdict::NotApplicable;
  std::vector<Measured> hypotheses;
  std::vector<Measured> conclusions;
  /// min over evaluated conclusions of bound - value.
  double slack = 0.0;
  double floor_radius = 0.0;
  std::string note;
};

/// Hypotheses N*(r) <= L + 1 and N*(r/2) <= ell + delta; conclusion
/// N*(r/2^j) <= ell + delta for j = 2 .. chain + 2 down to the floor radius.
CheckReport check_persistence(const PlanarField& u, const Vec2& x0, double r, const ReductionParams& params,
                              int chain = 4);

/// Hypotheses N*(r) <= L + 1 and N*(r/2) <= ell - delta; conclusion
/// N*(delta r / (8 ell)) <= ell - 1 + delta.
CheckReport check_reduction(const PlanarField& u, const Vec2& x0, double r, const ReductionParams& params);

}  // namespace oscilab
