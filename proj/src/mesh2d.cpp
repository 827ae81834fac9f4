#include "qgt/mesh2d.hpp"

#include <stdexcept>

namespace qgt {

double TriMesh2D::area() const {
  double total = 0.0;
  for (Eigen::Index t = 0; t < tris.rows(); ++t) {
    const auto p0 = nodes.row(tris(t, 0));
    const auto p1 = nodes.row(tris(t, 1));
    const auto p2 = nodes.row(tris(t, 2));
    total += 0.5 * std::abs((p1(0) - p0(0)) * (p2(1) - p0(1)) - (p2(0) - p0(0)) * (p1(1) - p0(1)));
  }
  return total;
}

TriMesh2D mesh_rectangle(double w, double h, int nx, int ny) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("mesh_rectangle: need at least one cell");
  TriMesh2D mesh;
  mesh.nodes.resize((nx + 1) * (ny + 1), 2);
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j) {
      const Eigen::Index id = static_cast<Eigen::Index>(i) * (ny + 1) + j;
      mesh.nodes(id, 0) = w * i / nx;
      mesh.nodes(id, 1) = h * j / ny;
    }
  mesh.tris.resize(2 * nx * ny, 3);
  Eigen::Index t = 0;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const int a = i * (ny + 1) + j;
      const int b = (i + 1) * (ny + 1) + j;
      const int c = (i + 1) * (ny + 1) + j + 1;
      const int d = i * (ny + 1) + j + 1;
      mesh.tris.row(t++) << a, b, c;
      mesh.tris.row(t++) << a, c, d;
    }
  return mesh;
}

void assemble_p1(const TriMesh2D& mesh, double wA, double wM,
                 const std::vector<Eigen::Index>& global,
                 std::vector<Eigen::Triplet<double>>& ta,
                 std::vector<Eigen::Triplet<double>>& tm) {
  for (Eigen::Index t = 0; t < mesh.tris.rows(); ++t) {
    const int i0 = mesh.tris(t, 0), i1 = mesh.tris(t, 1), i2 = mesh.tris(t, 2);
    const Eigen::Vector2d p0 = mesh.nodes.row(i0), p1 = mesh.nodes.row(i1), p2 = mesh.nodes.row(i2);
    const double det = (p1(0) - p0(0)) * (p2(1) - p0(1)) - (p2(0) - p0(0)) * (p1(1) - p0(1));
    const double area = 0.5 * std::abs(det);
    if (area <= 0.0) throw std::runtime_error("assemble_p1: degenerate triangle");
    // Barycentric gradients.
    Eigen::Matrix<double, 3, 2> g;
    g.row(0) << (p1(1) - p2(1)) / det, (p2(0) - p1(0)) / det;
    g.row(1) << (p2(1) - p0(1)) / det, (p0(0) - p2(0)) / det;
    g.row(2) << (p0(1) - p1(1)) / det, (p1(0) - p0(0)) / det;
    const Eigen::Index gi[3] = {global[i0], global[i1], global[i2]};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        ta.emplace_back(gi[a], gi[b], wA * area * g.row(a).dot(g.row(b)));
        tm.emplace_back(gi[a], gi[b], wM * area * (a == b ? 1.0 / 6.0 : 1.0 / 12.0));
      }
  }
}

Eigen::VectorXd p1_integral_weights(const TriMesh2D& mesh) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(mesh.n_nodes());
  for (Eigen::Index t = 0; t < mesh.tris.rows(); ++t) {
    const auto p0 = mesh.nodes.row(mesh.tris(t, 0));
    const auto p1 = mesh.nodes.row(mesh.tris(t, 1));
    const auto p2 = mesh.nodes.row(mesh.tris(t, 2));
    const double area =
        0.5 * std::abs((p1(0) - p0(0)) * (p2(1) - p0(1)) - (p2(0) - p0(0)) * (p1(1) - p0(1)));
    for (int a = 0; a < 3; ++a) w(mesh.tris(t, a)) += area / 3.0;
  }
  return w;
}

} // namespace qgt
