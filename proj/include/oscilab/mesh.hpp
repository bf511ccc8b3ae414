#pragma once

#include "oscilab/linalg.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace oscilab {

/// Disk triangulation built from concentric rings.
///
/// Ring k (0 <= k <= m) has radius k R / m and 6k nodes at angles
/// 2 pi j / (6k); node (k, j) has index 1 + 3k(k-1) + j and the center is 0.
/// The boundary ring is therefore the last 6m nodes. Between rings k and k+1
/// each of the six sectors carries k+1 "outward" and k "inward" triangles,
/// 6 m^2 in total. Refining m -> 2m keeps every coarse node, which is what the
/// multigrid hierarchy uses.
struct DiskMesh {
  double R = 1.0;
  int m = 0;
  /// Ring counts of the multigrid levels, coarsest first; back() == m.
  std::vector<int> levels;
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;

  /// Nominal spacing pi R / (3 m): the arc length between boundary nodes.
  double h() const { return kPi * R / (3.0 * m); }
  std::size_t node_count() const { return nodes.size(); }
  std::size_t triangle_count() const { return triangles.size(); }
  std::size_t interior_count() const { return nodes.size() - 6 * static_cast<std::size_t>(m); }
  bool is_boundary(int node) const { return static_cast<std::size_t>(node) >= interior_count(); }

  double area(std::size_t t) const;
  Vec2 barycenter(std::size_t t) const;
  double diameter(std::size_t t) const;
};

struct MeshStats {
  std::size_t nodes = 0;
  std::size_t triangles = 0;
  std::size_t boundary_nodes = 0;
  double h = 0.0;
  double min_area = 0.0;
  double min_diameter = 0.0;
  double max_diameter = 0.0;
  /// Largest | |x| - R | over boundary nodes.
  double boundary_radius_error = 0.0;
};

/// Index of node (k, j) of a ring mesh; j is taken modulo 6k.
int ring_node(int k, int j);

/// Ring count used for radius R and requested spacing h: the smallest
/// m0 * 2^j >= pi R / (3h) with 16 <= m0 <= 32 (plain ceiling below 16).
int ring_count_for(double R, double h);

/// pre: 0 < h <= R / 8. Throws BudgetError when 6 m^2 exceeds `max_triangles`.
DiskMesh triangulate_disk(double R, double h, double max_triangles = 2e7);
/// Mesh with an explicit ring count (used when reloading saved solutions).
DiskMesh ring_mesh(double R, int m);

MeshStats mesh_stats(const DiskMesh& mesh);

/// Interpolation from the interior nodes of the m_coarse ring mesh to the
/// interior nodes of the 2 m_coarse ring mesh (boundary parents dropped).
SparseMatrix ring_prolongation(int m_coarse);

/// Point location through a uniform background grid of bins.
class MeshLocator {
 public:
  MeshLocator() = default;
  explicit MeshLocator(const DiskMesh& mesh);

  struct Hit {
    int triangle = -1;
    std::array<double, 3> bary{0.0, 0.0, 0.0};
  };

  /// Triangle containing x. Points in the thin slivers between the boundary
  /// polygon and the circle |x| = R resolve to the nearest boundary triangle
  /// (mild extrapolation); anything farther out returns triangle = -1.
  Hit locate(const Vec2& x) const;

 private:
  const DiskMesh* mesh_ = nullptr;
  int bins_ = 0;
  double lo_ = 0.0;
  double width_ = 0.0;
  std::vector<int> start_;
  std::vector<int> items_;
};

std::array<double, 3> barycentric(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c);

}  // namespace oscilab
