// Independent reference computations used by the test suites. These must not
// share code paths with the library beyond basic types.
#pragma once
#include <Eigen/Dense>

#include "fol/mesh.hpp"

namespace fol::testing {

struct Slab1D {
  Eigen::VectorXd t;             // nodal temperatures along x
  Eigen::VectorXd element_flux;  // q_x per 1-D element
};

// 1-D linear FE for -(k(x) T')' = 0 on [0, length], T(0) = t_left,
// T(length) = t_right, with the conductivity interpolated linearly between
// nodes (element conductivity = mean of its endpoints). For a conductivity
// profile that varies only in x this is the exact reduction of the 2-D
// bilinear discretization.
inline Slab1D solve_slab_1d(const Eigen::VectorXd& k_nodes, double length,
                            double t_left = 1.0, double t_right = 0.0) {
  const auto n = k_nodes.size();
  const auto n_el = n - 1;
  const double h = length / static_cast<double>(n_el);

  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index e = 0; e < n_el; ++e) {
    const double k_e = 0.5 * (k_nodes(e) + k_nodes(e + 1)) / h;
    k(e, e) += k_e;
    k(e + 1, e + 1) += k_e;
    k(e, e + 1) -= k_e;
    k(e + 1, e) -= k_e;
  }

  Eigen::VectorXd t(n);
  t(0) = t_left;
  t(n - 1) = t_right;
  if (n > 2) {
    const Eigen::MatrixXd a = k.block(1, 1, n - 2, n - 2);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n - 2);
    rhs -= k.block(1, 0, n - 2, 1) * t_left;
    rhs -= k.block(1, n - 1, n - 2, 1) * t_right;
    t.segment(1, n - 2) = a.llt().solve(rhs);
  }

  Slab1D result;
  result.t = t;
  result.element_flux.resize(n_el);
  for (Eigen::Index e = 0; e < n_el; ++e)
    result.element_flux(e) =
        -0.5 * (k_nodes(e) + k_nodes(e + 1)) * (t(e + 1) - t(e)) / h;
  return result;
}

// Conductivity profile of a vertical two-layer slab on a structured mesh:
// k = k_left where x < split, k_right elsewhere.
inline Eigen::VectorXd slab_profile(const Mesh& mesh, double split, double k_left,
                                    double k_right) {
  Eigen::VectorXd k(mesh.node_count());
  for (int i = 0; i < mesh.node_count(); ++i)
    k(i) = mesh.node_coords[static_cast<std::size_t>(i)][0] < split ? k_left : k_right;
  return k;
}

}  // namespace fol::testing
