#pragma once
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <utility>
#include <vector>

#include "fol/errors.hpp"
#include "fol/mesh.hpp"
#include "fol/microstructure.hpp"

namespace fol {

using TemperatureField = Eigen::VectorXd;

/// Prescribed nodal temperatures; every boundary segment without one is
/// insulated (zero normal flux). The volumetric source Q is carried through
/// the assembly path but stays 0 for this problem.
struct BoundaryConditions {
  std::vector<std::pair<int, double>> dirichlet;
  double heat_source = 0.0;
};

/// The fixed boundary setup of the reference problem: left edge at t_left, right edge at t_right,
/// top/bottom insulated.
inline BoundaryConditions default_boundary_conditions(const Mesh& mesh,
                                                      double t_left = 1.0,
                                                      double t_right = 0.0) {
  BoundaryConditions bc;
  for (int node : mesh.left_edge_nodes()) bc.dirichlet.emplace_back(node, t_left);
  for (int node : mesh.right_edge_nodes()) bc.dirichlet.emplace_back(node, t_right);
  return bc;
}

/// K_e = sum_n (w_n/2) detJ (N(xi_n).k_e) B^T(xi_n) B(xi_n).
/// Note the w_n/2 convention: this matrix is half the textbook stiffness.
/// The solve is invariant to the scaling; the training loss depends on it
/// through lambda_e, so both modules share this definition.
inline Eigen::Matrix4d element_stiffness(const ElementOperators& ops,
                                         const GaussRule& rule, const Vec4& k_e) {
  if ((k_e.array() <= 0.0).any())
    throw ValidationError("element_stiffness: conductivities must be positive");
  Eigen::Matrix4d k = Eigen::Matrix4d::Zero();
  for (int n = 0; n < 4; ++n) {
    const auto idx = static_cast<std::size_t>(n);
    const double k_gp = ops.shape_values[idx].dot(k_e);
    const double w = 0.5 * rule.weights[idx] * ops.det_j;
    k.noalias() += (w * k_gp) * (ops.b_matrices[idx].transpose() * ops.b_matrices[idx]);
  }
  return k;
}

inline Vec4 gather_element(const Mesh& mesh, int element, const Eigen::VectorXd& nodal) {
  const auto& conn = mesh.elements[static_cast<std::size_t>(element)];
  Vec4 v;
  for (int i = 0; i < 4; ++i) v(i) = nodal(conn[i]);
  return v;
}

/// Scatter-add of element stiffness matrices into the global system.
inline Eigen::SparseMatrix<double> assemble_global(const Mesh& mesh,
                                                   const ConductivityField& field,
                                                   const GaussRule& rule) {
  const int n = mesh.node_count();
  if (field.values.size() != n)
    throw DataMismatchError("assemble_global: field length does not match mesh");

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.element_count()) * 16);
  for (int e = 0; e < mesh.element_count(); ++e) {
    const ElementOperators ops = element_operators(mesh, e, rule);
    const Eigen::Matrix4d k_e =
        element_stiffness(ops, rule, gather_element(mesh, e, field.values));
    const auto& conn = mesh.elements[static_cast<std::size_t>(e)];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        triplets.emplace_back(conn[i], conn[j], k_e(i, j));
  }
  Eigen::SparseMatrix<double> k(n, n);
  k.setFromTriplets(triplets.begin(), triplets.end());
  return k;
}

/// Volumetric source load vector, sum_e int N Q dV; identically zero under
/// the default Q = 0.
inline Eigen::VectorXd assemble_load(const Mesh& mesh, const GaussRule& rule,
                                     double heat_source) {
  Eigen::VectorXd load = Eigen::VectorXd::Zero(mesh.node_count());
  if (heat_source == 0.0) return load;
  for (int e = 0; e < mesh.element_count(); ++e) {
    const ElementOperators ops = element_operators(mesh, e, rule);
    const auto& conn = mesh.elements[static_cast<std::size_t>(e)];
    for (int n = 0; n < 4; ++n) {
      const auto idx = static_cast<std::size_t>(n);
      for (int i = 0; i < 4; ++i)
        load(conn[i]) += rule.weights[idx] * ops.det_j * heat_source *
                         ops.shape_values[idx](i);
    }
  }
  return load;
}

namespace detail {

// Symmetric Dirichlet elimination + dense Cholesky on the reduced system.
// Shared by the FEM solver and the loss-side direct minimizer; both pass
// their own global matrix.
inline TemperatureField solve_dirichlet(const Eigen::MatrixXd& k_global,
                                        const Eigen::VectorXd& rhs,
                                        const BoundaryConditions& bc) {
  const auto n = k_global.rows();
  if (bc.dirichlet.empty())
    throw ValidationError("solve: at least one Dirichlet node required");

  std::vector<char> is_fixed(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd t = Eigen::VectorXd::Zero(n);
  for (const auto& [node, value] : bc.dirichlet) {
    if (node < 0 || node >= n) throw ValidationError("solve: Dirichlet node out of range");
    if (is_fixed[static_cast<std::size_t>(node)])
      throw ValidationError("solve: duplicate Dirichlet node");
    is_fixed[static_cast<std::size_t>(node)] = 1;
    t(node) = value;
  }

  std::vector<Eigen::Index> free_nodes;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!is_fixed[static_cast<std::size_t>(i)]) free_nodes.push_back(i);
  const auto nf = static_cast<Eigen::Index>(free_nodes.size());
  if (nf == 0) return t;

  Eigen::MatrixXd a(nf, nf);
  Eigen::VectorXd b(nf);
  for (Eigen::Index r = 0; r < nf; ++r) {
    b(r) = rhs(free_nodes[static_cast<std::size_t>(r)]) -
           k_global.row(free_nodes[static_cast<std::size_t>(r)]).dot(t);
    for (Eigen::Index c = 0; c < nf; ++c)
      a(r, c) = k_global(free_nodes[static_cast<std::size_t>(r)],
                         free_nodes[static_cast<std::size_t>(c)]);
  }

  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericalError("solve: reduced system is not positive definite");
  const Eigen::VectorXd x = llt.solve(b);

  const double rel_residual = (a * x - b).norm() / std::max(b.norm(), 1e-300);
  if (b.norm() > 0.0 && rel_residual > 1e-10)
    throw NumericalError("solve: reduced system residual " + std::to_string(rel_residual));

  for (Eigen::Index r = 0; r < nf; ++r) t(free_nodes[static_cast<std::size_t>(r)]) = x(r);
  return t;
}

}  // namespace detail

/// Reference solution of K T = f with the prescribed temperatures eliminated
/// symmetrically. Exact oracle for the training loss.
inline TemperatureField solve(const Mesh& mesh, const ConductivityField& field,
                              const BoundaryConditions& bc) {
  const GaussRule rule = gauss_2x2();
  const Eigen::MatrixXd k = Eigen::MatrixXd(assemble_global(mesh, field, rule));
  const Eigen::VectorXd load = assemble_load(mesh, rule, bc.heat_source);
  return detail::solve_dirichlet(k, load, bc);
}

/// Heat flux q = -k grad T: evaluated at element centers (the superconvergent
/// point for bilinear quads), then averaged onto nodes.
struct FluxField {
  Eigen::MatrixX2d element;  // one (qx, qy) row per element
  Eigen::MatrixX2d nodal;    // arithmetic mean over elements sharing the node
};

inline FluxField recover_flux(const Mesh& mesh, const ConductivityField& field,
                              const TemperatureField& t) {
  const int n = mesh.node_count();
  if (field.values.size() != n || t.size() != n)
    throw DataMismatchError("recover_flux: field/temperature length mismatch");

  FluxField flux;
  flux.element.resize(mesh.element_count(), 2);
  flux.nodal = Eigen::MatrixX2d::Zero(n, 2);
  Eigen::VectorXd share_count = Eigen::VectorXd::Zero(n);

  const Vec4 n_center = shape_values(0.0, 0.0);
  for (int e = 0; e < mesh.element_count(); ++e) {
    const BGradient bg = physical_shape_gradients(mesh, e, 0.0, 0.0);
    const Vec4 k_e = gather_element(mesh, e, field.values);
    const Vec4 t_e = gather_element(mesh, e, t);
    const Eigen::Vector2d q = -(n_center.dot(k_e)) * (bg.b * t_e);
    flux.element.row(e) = q.transpose();
    for (int i : mesh.elements[static_cast<std::size_t>(e)]) {
      flux.nodal.row(i) += q.transpose();
      share_count(i) += 1.0;
    }
  }
  for (int i = 0; i < n; ++i) flux.nodal.row(i) /= share_count(i);
  return flux;
}

}  // namespace fol
