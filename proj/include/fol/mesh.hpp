#pragma once
#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "fol/errors.hpp"

namespace fol {

using Vec4 = Eigen::Matrix<double, 4, 1>;
using Mat2x4 = Eigen::Matrix<double, 2, 4>;

// Parent-space corner signs of the bilinear quad, counter-clockwise from
// bottom-left: (-1,-1), (+1,-1), (+1,+1), (-1,+1).
inline constexpr std::array<double, 4> kCornerXi{-1.0, 1.0, 1.0, -1.0};
inline constexpr std::array<double, 4> kCornerEta{-1.0, -1.0, 1.0, 1.0};

/// Structured quadrilateral grid on [0,lx] x [0,ly]. Nodes are row-major with
/// x varying fastest; elements are 4-tuples of node indices ordered
/// counter-clockwise from the bottom-left corner.
struct Mesh {
  int nx = 0;
  int ny = 0;
  double lx = 1.0;
  double ly = 1.0;
  std::vector<std::array<double, 2>> node_coords;
  std::vector<std::array<int, 4>> elements;

  int node_count() const { return nx * ny; }
  int element_count() const { return (nx - 1) * (ny - 1); }
  double hx() const { return lx / (nx - 1); }
  double hy() const { return ly / (ny - 1); }
  int node_index(int ix, int iy) const { return iy * nx + ix; }

  std::vector<int> left_edge_nodes() const {
    std::vector<int> out;
    for (int iy = 0; iy < ny; ++iy) out.push_back(node_index(0, iy));
    return out;
  }
  std::vector<int> right_edge_nodes() const {
    std::vector<int> out;
    for (int iy = 0; iy < ny; ++iy) out.push_back(node_index(nx - 1, iy));
    return out;
  }
};

inline Mesh build_mesh(int nx, int ny, double lx = 1.0, double ly = 1.0) {
  if (nx < 2 || ny < 2) throw ValidationError("build_mesh: need at least 2 nodes per axis");
  if (lx <= 0.0 || ly <= 0.0) throw ValidationError("build_mesh: domain extents must be positive");

  Mesh m;
  m.nx = nx;
  m.ny = ny;
  m.lx = lx;
  m.ly = ly;

  m.node_coords.reserve(static_cast<std::size_t>(nx) * ny);
  const double hx = lx / (nx - 1);
  const double hy = ly / (ny - 1);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix)
      m.node_coords.push_back({ix * hx, iy * hy});

  m.elements.reserve(static_cast<std::size_t>(nx - 1) * (ny - 1));
  for (int ey = 0; ey < ny - 1; ++ey)
    for (int ex = 0; ex < nx - 1; ++ex)
      m.elements.push_back({m.node_index(ex, ey), m.node_index(ex + 1, ey),
                            m.node_index(ex + 1, ey + 1), m.node_index(ex, ey + 1)});
  return m;
}

/// Bilinear shape functions N_i(xi,eta) = (1 + xi_i*xi)(1 + eta_i*eta)/4.
/// Values sum to 1 for any (xi,eta); inputs outside [-1,1] extrapolate.
inline Vec4 shape_values(double xi, double eta) {
  Vec4 n;
  for (int i = 0; i < 4; ++i)
    n(i) = 0.25 * (1.0 + kCornerXi[i] * xi) * (1.0 + kCornerEta[i] * eta);
  return n;
}

/// Parent-space gradients: row 0 = dN/dxi, row 1 = dN/deta.
inline Mat2x4 parent_shape_gradients(double xi, double eta) {
  Mat2x4 g;
  for (int i = 0; i < 4; ++i) {
    g(0, i) = 0.25 * kCornerXi[i] * (1.0 + kCornerEta[i] * eta);
    g(1, i) = 0.25 * kCornerEta[i] * (1.0 + kCornerXi[i] * xi);
  }
  return g;
}

/// 2x2 Gauss-Legendre rule on the parent square: 4 points at
/// (+-1/sqrt(3), +-1/sqrt(3)), unit weights. Exact for the bilinear
/// energy integrand.
struct GaussRule {
  std::array<std::array<double, 2>, 4> points;
  std::array<double, 4> weights;
};

inline GaussRule gauss_2x2() {
  const double g = 1.0 / std::sqrt(3.0);
  GaussRule rule;
  rule.points = {{{-g, -g}, {g, -g}, {g, g}, {-g, g}}};
  rule.weights = {1.0, 1.0, 1.0, 1.0};
  return rule;
}

struct BGradient {
  Mat2x4 b;      // physical-space shape gradients, row 0 = d/dx, row 1 = d/dy
  double det_j;  // Jacobian determinant of the parent->physical map
};

/// Physical gradients via the element Jacobian J = dX/dxi; the general path,
/// valid at any parent coordinate, not just quadrature points.
inline BGradient physical_shape_gradients(const Mesh& mesh, int element,
                                          double xi, double eta) {
  const auto& conn = mesh.elements.at(static_cast<std::size_t>(element));
  Eigen::Matrix<double, 4, 2> coords;
  for (int i = 0; i < 4; ++i) {
    const auto& p = mesh.node_coords[static_cast<std::size_t>(conn[i])];
    coords(i, 0) = p[0];
    coords(i, 1) = p[1];
  }
  const Mat2x4 g = parent_shape_gradients(xi, eta);
  const Eigen::Matrix2d jt = g * coords;  // J^T
  const double det = jt.determinant();
  if (!(det > 0.0))
    throw NumericalError("physical_shape_gradients: degenerate element (det J <= 0)");
  return {jt.inverse() * g, det};
}

/// Per-element quadrature data: detJ plus N_T and B_T at each Gauss point.
/// On the rectangular meshes produced by build_mesh, detJ = hx*hy/4 and is
/// the same at every point.
struct ElementOperators {
  double det_j = 0.0;
  std::array<Vec4, 4> shape_values;
  std::array<Mat2x4, 4> b_matrices;
};

inline ElementOperators element_operators(const Mesh& mesh, int element,
                                          const GaussRule& rule) {
  ElementOperators ops;
  for (int n = 0; n < 4; ++n) {
    const auto [xi, eta] = rule.points[static_cast<std::size_t>(n)];
    ops.shape_values[static_cast<std::size_t>(n)] = shape_values(xi, eta);
    const BGradient bg = physical_shape_gradients(mesh, element, xi, eta);
    ops.b_matrices[static_cast<std::size_t>(n)] = bg.b;
    if (n == 0) ops.det_j = bg.det_j;
  }
  return ops;
}

/// Element index and parent coordinates of a physical point; points on the
/// domain boundary clamp into the adjacent element.
struct MeshLocation {
  int element;
  double xi;
  double eta;
};

inline MeshLocation locate_point(const Mesh& mesh, double x, double y) {
  const double hx = mesh.hx();
  const double hy = mesh.hy();
  int ex = static_cast<int>(std::floor(x / hx));
  int ey = static_cast<int>(std::floor(y / hy));
  ex = std::min(std::max(ex, 0), mesh.nx - 2);
  ey = std::min(std::max(ey, 0), mesh.ny - 2);
  const double xi = 2.0 * (x - ex * hx) / hx - 1.0;
  const double eta = 2.0 * (y - ey * hy) / hy - 1.0;
  return {ey * (mesh.nx - 1) + ex, xi, eta};
}

}  // namespace fol
