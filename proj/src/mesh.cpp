#include "oscilab/mesh.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace oscilab {

int ring_node(int k, int j) {
  if (k == 0) return 0;
  const int n = 6 * k;
  j = ((j % n) + n) % n;
  return 1 + 3 * k * (k - 1) + j;
}

double DiskMesh::area(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec2 e1 = nodes[tri[1]] - nodes[tri[0]];
  const Vec2 e2 = nodes[tri[2]] - nodes[tri[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

Vec2 DiskMesh::barycenter(std::size_t t) const {
  const auto& tri = triangles[t];
  return (nodes[tri[0]] + nodes[tri[1]] + nodes[tri[2]]) / 3.0;
}

double DiskMesh::diameter(std::size_t t) const {
  const auto& tri = triangles[t];
  return std::max({(nodes[tri[0]] - nodes[tri[1]]).norm(), (nodes[tri[1]] - nodes[tri[2]]).norm(),
                   (nodes[tri[2]] - nodes[tri[0]]).norm()});
}

int ring_count_for(double R, double h) {
  // Small slack so that h = pi R / (3 m) maps back to m despite rounding.
  const double target = std::ceil(kPi * R / (3.0 * h) - 1e-9);
  if (target > 1e8) throw BudgetError("ring count overflow for h = " + std::to_string(h));
  const int t = static_cast<int>(target);
  if (t < 16) return t;
  int scale = 1;
  while (t / (2 * scale) >= 16) scale *= 2;
  const int m0 = (t + scale - 1) / scale;
  return m0 * scale;
}

DiskMesh ring_mesh(double R, int m) {
  if (!(R > 0.0) || m < 1) throw ConfigError("ring mesh needs R > 0 and m >= 1");
  DiskMesh mesh;
  mesh.R = R;
  mesh.m = m;
  // Nested levels: halve while the result stays an integer >= 16.
  for (int level = m; ; level /= 2) {
    mesh.levels.insert(mesh.levels.begin(), level);
    if (level % 2 != 0 || level / 2 < 16) break;
  }

  const std::size_t nn = 1 + 3 * static_cast<std::size_t>(m) * (m + 1);
  mesh.nodes.resize(nn);
  mesh.nodes[0] = Vec2::Zero();
  for (int k = 1; k <= m; ++k) {
    const double r = (k == m) ? R : R * k / m;
    for (int j = 0; j < 6 * k; ++j) {
      const double th = kTwoPi * j / (6.0 * k);
      mesh.nodes[ring_node(k, j)] = Vec2(r * std::cos(th), r * std::sin(th));
    }
  }

  mesh.triangles.reserve(6 * static_cast<std::size_t>(m) * m);
  for (int k = 0; k < m; ++k) {
    for (int s = 0; s < 6; ++s) {
      for (int a = 0; a <= k; ++a) {
        mesh.triangles.push_back({ring_node(k, s * k + a), ring_node(k + 1, s * (k + 1) + a),
                                  ring_node(k + 1, s * (k + 1) + a + 1)});
      }
      for (int a = 0; a < k; ++a) {
        mesh.triangles.push_back({ring_node(k, s * k + a), ring_node(k + 1, s * (k + 1) + a + 1),
                                  ring_node(k, s * k + a + 1)});
      }
    }
  }
  return mesh;
}

DiskMesh triangulate_disk(double R, double h, double max_triangles) {
  if (!(R > 0.0) || !std::isfinite(R)) throw ConfigError("disk radius must be positive");
  if (!(h > 0.0) || h > R / 8.0) throw ConfigError("mesh size must satisfy 0 < h <= R/8");
  const int m = ring_count_for(R, h);
  const double estimate = 6.0 * m * static_cast<double>(m);
  if (estimate > max_triangles) {
    throw BudgetError("disk mesh R=" + std::to_string(R) + " h=" + std::to_string(h) + " needs " +
                      std::to_string(static_cast<long long>(estimate)) + " triangles (budget " +
                      std::to_string(static_cast<long long>(max_triangles)) + ")");
  }
  return ring_mesh(R, m);
}

MeshStats mesh_stats(const DiskMesh& mesh) {
  MeshStats s;
  s.nodes = mesh.node_count();
  s.triangles = mesh.triangle_count();
  s.boundary_nodes = 6 * static_cast<std::size_t>(mesh.m);
  s.h = mesh.h();
  s.min_area = std::numeric_limits<double>::infinity();
  s.min_diameter = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    s.min_area = std::min(s.min_area, mesh.area(t));
    const double d = mesh.diameter(t);
    s.min_diameter = std::min(s.min_diameter, d);
    s.max_diameter = std::max(s.max_diameter, d);
  }
  for (std::size_t v = mesh.interior_count(); v < mesh.node_count(); ++v) {
    s.boundary_radius_error = std::max(s.boundary_radius_error, std::abs(mesh.nodes[v].norm() - mesh.R));
  }
  return s;
}

SparseMatrix ring_prolongation(int m_coarse) {
  const int mf = 2 * m_coarse;
  const int n_fine = 1 + 3 * mf * (mf - 1);
  const int n_coarse = 1 + 3 * m_coarse * (m_coarse - 1);
  // Sector-local lattice coordinates (A, B) = (k - b, b) of node b in sector s
  // of ring k; coarse nodes are the fine nodes with both coordinates even.
  auto coarse_index = [&](int s, int a, int b) { return ring_node(a + b, s * (a + b) + b); };
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(n_fine) * 2);
  auto add = [&](int row, int col, double w) {
    if (col < n_coarse) t.emplace_back(row, col, w);
  };
  t.emplace_back(0, 0, 1.0);
  for (int k = 1; k < mf; ++k) {
    for (int j = 0; j < 6 * k; ++j) {
      const int row = ring_node(k, j);
      const int s = j / k;
      const int b = j % k;
      const int a = k - b;
      const bool odd_a = a % 2 != 0;
      const bool odd_b = b % 2 != 0;
      if (!odd_a && !odd_b) {
        add(row, coarse_index(s, a / 2, b / 2), 1.0);
      } else if (odd_a && !odd_b) {
        add(row, coarse_index(s, (a - 1) / 2, b / 2), 0.5);
        add(row, coarse_index(s, (a + 1) / 2, b / 2), 0.5);
      } else if (!odd_a && odd_b) {
        add(row, coarse_index(s, a / 2, (b - 1) / 2), 0.5);
        add(row, coarse_index(s, a / 2, (b + 1) / 2), 0.5);
      } else {
        add(row, coarse_index(s, (a + 1) / 2, (b - 1) / 2), 0.5);
        add(row, coarse_index(s, (a - 1) / 2, (b + 1) / 2), 0.5);
      }
    }
  }
  SparseMatrix p(n_fine, n_coarse);
  p.setFromTriplets(t.begin(), t.end());
  return p;
}

std::array<double, 3> barycentric(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 v0 = b - a;
  const Vec2 v1 = c - a;
  const Vec2 v2 = p - a;
  const double det = v0.x() * v1.y() - v0.y() * v1.x();
  const double l1 = (v2.x() * v1.y() - v2.y() * v1.x()) / det;
  const double l2 = (v0.x() * v2.y() - v0.y() * v2.x()) / det;
  return {1.0 - l1 - l2, l1, l2};
}

MeshLocator::MeshLocator(const DiskMesh& mesh) : mesh_(&mesh) {
  lo_ = -mesh.R;
  bins_ = static_cast<int>(std::clamp(std::ceil(2.0 * mesh.R / (2.0 * mesh.h())), 1.0, 2048.0));
  width_ = 2.0 * mesh.R / bins_;
  auto bin_of = [&](double v) {
    return std::clamp(static_cast<int>(std::floor((v - lo_) / width_)), 0, bins_ - 1);
  };
  const std::size_t nb = static_cast<std::size_t>(bins_) * bins_;
  std::vector<int> count(nb + 1, 0);
  auto for_each_bin = [&](std::size_t t, auto&& fn) {
    const auto& tri = mesh.triangles[t];
    double x0 = mesh.nodes[tri[0]].x(), x1 = x0, y0 = mesh.nodes[tri[0]].y(), y1 = y0;
    for (int v = 1; v < 3; ++v) {
      x0 = std::min(x0, mesh.nodes[tri[v]].x());
      x1 = std::max(x1, mesh.nodes[tri[v]].x());
      y0 = std::min(y0, mesh.nodes[tri[v]].y());
      y1 = std::max(y1, mesh.nodes[tri[v]].y());
    }
    for (int j = bin_of(y0); j <= bin_of(y1); ++j) {
      for (int i = bin_of(x0); i <= bin_of(x1); ++i) fn(static_cast<std::size_t>(i) + bins_ * static_cast<std::size_t>(j));
    }
  };
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    for_each_bin(t, [&](std::size_t b) { ++count[b + 1]; });
  }
  for (std::size_t b = 0; b < nb; ++b) count[b + 1] += count[b];
  start_ = count;
  items_.resize(static_cast<std::size_t>(count[nb]));
  std::vector<int> fill(count.begin(), count.end() - 1);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    for_each_bin(t, [&](std::size_t b) { items_[fill[b]++] = static_cast<int>(t); });
  }
}

MeshLocator::Hit MeshLocator::locate(const Vec2& x) const {
  Hit best;
  if (mesh_ == nullptr) return best;
  const DiskMesh& mesh = *mesh_;
  const double rr = x.norm();
  if (!(rr <= mesh.R * (1.0 + 1e-12))) return best;
  const int bi = std::clamp(static_cast<int>(std::floor((x.x() - lo_) / width_)), 0, bins_ - 1);
  const int bj = std::clamp(static_cast<int>(std::floor((x.y() - lo_) / width_)), 0, bins_ - 1);
  double best_min = -std::numeric_limits<double>::infinity();
  // The containing triangle overlaps the point's bin; the ring of neighbours
  // is only needed for sliver points outside the boundary polygon.
  for (int radius = 0; radius <= 1; ++radius) {
    for (int j = std::max(0, bj - radius); j <= std::min(bins_ - 1, bj + radius); ++j) {
      for (int i = std::max(0, bi - radius); i <= std::min(bins_ - 1, bi + radius); ++i) {
        if (std::max(std::abs(i - bi), std::abs(j - bj)) != radius) continue;
        const std::size_t b = static_cast<std::size_t>(i) + bins_ * static_cast<std::size_t>(j);
        for (int k = start_[b]; k < start_[b + 1]; ++k) {
          const auto& tri = mesh.triangles[items_[k]];
          const auto l = barycentric(x, mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]);
          const double lmin = std::min({l[0], l[1], l[2]});
          if (lmin > best_min || (lmin == best_min && items_[k] < best.triangle)) {
            best_min = lmin;
            best.triangle = items_[k];
            best.bary = l;
          }
        }
      }
    }
    if (best_min >= -1e-12) return best;
  }
  // Outside every triangle: accept only the boundary sliver.
  if (best.triangle >= 0 && rr >= mesh.R * std::cos(kPi / (6.0 * mesh.m)) * (1.0 - 1e-12)) return best;
  return Hit{};
}

}  // namespace oscilab
