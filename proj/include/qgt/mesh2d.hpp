#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

namespace qgt {

using SparseMat = Eigen::SparseMatrix<double>;

/// Plain 2D triangle mesh. Coordinates are chart coordinates of one glued
/// piece; nothing global is implied by them.
struct TriMesh2D {
  Eigen::Matrix<double, Eigen::Dynamic, 2> nodes;
  Eigen::Matrix<int, Eigen::Dynamic, 3> tris;

  Eigen::Index n_nodes() const { return nodes.rows(); }
  double area() const;
};

/// Tensor-grid triangulation of [0,w] x [0,h] with nx x ny cells.
/// Node (i,j) has index i*(ny+1)+j.
TriMesh2D mesh_rectangle(double w, double h, int nx, int ny);

/// Appends P1 stiffness/mass triplets for `mesh`, mapping local node L to
/// global index global[L]. Stiffness cells are scaled by wA, mass cells by
/// wM (metric scaling of a glued piece).
void assemble_p1(const TriMesh2D& mesh, double wA, double wM,
                 const std::vector<Eigen::Index>& global,
                 std::vector<Eigen::Triplet<double>>& ta,
                 std::vector<Eigen::Triplet<double>>& tm);

/// Integral of the P1 interpolant of nodal values against 1 (row vector of
/// mass-lumped pairings would be inexact; this is the exact P1 integral).
Eigen::VectorXd p1_integral_weights(const TriMesh2D& mesh);

} // namespace qgt
