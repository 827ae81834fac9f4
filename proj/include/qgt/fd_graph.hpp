#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "qgt/graph_function.hpp"
#include "qgt/metric_graph.hpp"
#include "qgt/secular.hpp"

namespace qgt {

using SparseMat = Eigen::SparseMatrix<double>;

/// DOF layout of the 1D discretization: vertex DOFs first (graph vertex
/// order), then interior edge nodes edge by edge. edge_dofs[i] lists the
/// global indices along edge i including both endpoints, so continuity at
/// vertices is structural.
struct GraphDofMap {
  Eigen::Index n_dofs = 0;
  std::vector<std::vector<Eigen::Index>> edge_dofs;
  std::vector<int> divisions; // cells per edge

  Eigen::Index vertex_dof(const MetricGraph& g, VertexId v) const {
    return static_cast<Eigen::Index>(g.vertex_index(v));
  }
};

/// Piecewise-linear stiffness/mass pencil of the free (Kirchhoff)
/// Laplacian on a compact metric graph. A is positive semidefinite with
/// the constants in its kernel; M is the consistent mass matrix.
struct GraphPencil {
  SparseMat A;
  SparseMat M;
  GraphDofMap dofs;
};

/// Cell counts per edge for a target step h (ceil(l_e/h) cells).
std::vector<int> divisions_for_step(const MetricGraph& graph, double h);

/// Assembles the pencil with prescribed per-edge cell counts.
GraphPencil fd_discretize_divisions(const MetricGraph& graph, const std::vector<int>& divisions);

/// Assembles the pencil with target step h. Requires a compact graph and
/// h <= l0/4.
GraphPencil fd_discretize(const MetricGraph& graph, double h);

/// All generalized eigenvalues of (A, M) up to lambda_max (dense solve).
Eigen::VectorXd fd_eigenvalues(const GraphPencil& pencil, double lambda_max);

/// Eigenpairs of (A, M) up to lambda_max; vectors are M-orthonormal.
struct FdEigenpairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};
FdEigenpairs fd_eigenpairs(const GraphPencil& pencil, double lambda_max);

/// Richardson-extrapolated eigenvalues over the grids (h) and (h/2),
/// where the refined grid doubles every per-edge cell count exactly.
/// Leading O(h^2) error cancels; this is the oracle used against the
/// secular solver.
Eigen::VectorXd richardson_fd_eigenvalues(const MetricGraph& graph, double h, double lambda_max);

/// The oracle's spectrum with near-equal values clustered into
/// multiplicities (relative tolerance `cluster_tol`), tagged FdOracle.
SpectralResult richardson_fd_spectrum(const MetricGraph& graph, double h, double lambda_max,
                                      double cluster_tol = 1e-4);

/// Nodal samples of f laid out on the pencil's DOFs.
Eigen::VectorXd to_dof_vector(const GraphPencil& pencil, const GraphFunction& f);
GraphFunction from_dof_vector(const MetricGraph& graph, const GraphPencil& pencil,
                              const Eigen::VectorXd& x);

} // namespace qgt
