#pragma once

#include "oscilab/doubling.hpp"
#include "oscilab/field.hpp"

#include <optional>
#include <string>
#include <vector>

namespace oscilab {

struct WindingResult {
  int winding = 0;
  int samples = 0;
  double min_gradient = 0.0;
};

/// Total turning of grad u along the closed polygon (counterclockwise), in
/// units of 2 pi. Samples double until every step is certified:
/// min |grad u| >= 10 max |grad u(k+1) - grad u(k)|. Throws UncertifiableLoop
/// past 2^16 samples.
WindingResult loop_winding(const PlanarField& u, const std::vector<Vec2>& polygon, int samples = 256);

/// Winding of grad u on the circle |x - center| = r.
int gradient_winding(const PlanarField& u, const Vec2& center, double r, int samples = 256);

struct CriticalPoint {
  Vec2 location = Vec2::Zero();
  int winding = 0;
  /// |grad u| at the refined location.
  double refine_residual = 0.0;
  /// Side of the square that isolates the point.
  double cell_size = 0.0;
  bool newton_converged = false;
  /// Within 4h of the region boundary.
  bool boundary_uncertain = false;
};

struct DetectOptions {
  /// Resolution; 0 takes the field's mesh size, or radius / 64 for closed forms.
  double h = 0.0;
  int max_retries = 5;
  int newton_iterations = 50;
};

struct CriticalReport {
  std::vector<CriticalPoint> points;
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  /// Radius actually used for the boundary loop (perturbed on retries).
  double loop_radius = 0.0;
  int boundary_winding = 0;
  int count = 0;
  int degree_sum = 0;
  /// degree_sum == boundary_winding.
  bool consistent = false;
  int attempts = 0;
  double h = 0.0;
  double leaf_size = 0.0;
  std::string note;
};

/// Quadtree over the bounding square of the region, subdivided down to
/// leaves of side <= 4h. Leaves with nonzero (or uncertifiable) boundary
/// winding are candidates; candidates within two leaf diagonals merge; each
/// cluster gets one point refined by damped Newton on the gradient.
CriticalReport detect_critical_points(const PlanarField& u, const Vec2& center, double radius,
                                      const DetectOptions& options = {});

/// Detection on B(0, 1/2) of a solution on B(0, 2), with N*(u, 0, 1/2) attached.
struct HalfBallCount {
  CriticalReport report;
  std::optional<double> doubling;
  std::string doubling_error;
};
HalfBallCount count_in_half_ball(const PlanarField& u, const DetectOptions& options = {});

struct OracleRecord {
  int ell = 0;
  std::vector<Vec2> points;
  std::vector<int> windings;
};

/// Critical set of r^ell (a cos(ell t) + b sin(ell t)): the origin with winding
/// -(ell - 1) for ell >= 2, empty for ell = 1.
OracleRecord harmonic_poly_critical(int ell);

/// Hypothesis N*(u, x0, 1/2) <= 3/2 (with the noise margin); conclusion: no
/// detected critical point within 4h of x0. Detection runs on B(x0, 1/2)
/// unless a report for a region containing B(x0, 4h) is supplied.
CheckReport check_low_index_noncritical(const PlanarField& u, const Vec2& x0, const DetectOptions& options = {},
                                        const CriticalReport* detected = nullptr, double noise = 1e-6);

}  // namespace oscilab
