#include "qgt/fd_graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qgt {

std::vector<int> divisions_for_step(const MetricGraph& graph, double h) {
  std::vector<int> out;
  for (const Edge& e : graph.edges()) {
    if (e.external) throw std::invalid_argument("fd_discretize: infinite edge present");
    out.push_back(std::max(1, static_cast<int>(std::ceil(e.length / h - 1e-12))));
  }
  return out;
}

GraphPencil fd_discretize_divisions(const MetricGraph& graph, const std::vector<int>& divisions) {
  const auto& edges = graph.edges();
  if (divisions.size() != edges.size())
    throw std::invalid_argument("fd_discretize: divisions size mismatch");

  GraphDofMap map;
  map.divisions = divisions;
  const Eigen::Index n_vertices = static_cast<Eigen::Index>(graph.vertices().size());
  Eigen::Index next = n_vertices;
  for (size_t ei = 0; ei < edges.size(); ++ei) {
    const Edge& e = edges[ei];
    if (e.external) throw std::invalid_argument("fd_discretize: infinite edge present");
    const int n = divisions[ei];
    std::vector<Eigen::Index> dofs(n + 1);
    dofs[0] = graph.vertex_index(e.from);
    for (int j = 1; j < n; ++j) dofs[j] = next++;
    dofs[n] = graph.vertex_index(e.to);
    map.edge_dofs.push_back(std::move(dofs));
  }
  map.n_dofs = next;

  std::vector<Eigen::Triplet<double>> ta, tm;
  for (size_t ei = 0; ei < edges.size(); ++ei) {
    const double h = edges[ei].length / divisions[ei];
    const auto& dofs = map.edge_dofs[ei];
    for (size_t j = 0; j + 1 < dofs.size(); ++j) {
      const Eigen::Index a = dofs[j], b = dofs[j + 1];
      const double k = 1.0 / h;
      ta.emplace_back(a, a, k);
      ta.emplace_back(b, b, k);
      ta.emplace_back(a, b, -k);
      ta.emplace_back(b, a, -k);
      tm.emplace_back(a, a, h / 3.0);
      tm.emplace_back(b, b, h / 3.0);
      tm.emplace_back(a, b, h / 6.0);
      tm.emplace_back(b, a, h / 6.0);
    }
  }
  GraphPencil pencil;
  pencil.dofs = std::move(map);
  pencil.A.resize(pencil.dofs.n_dofs, pencil.dofs.n_dofs);
  pencil.M.resize(pencil.dofs.n_dofs, pencil.dofs.n_dofs);
  pencil.A.setFromTriplets(ta.begin(), ta.end());
  pencil.M.setFromTriplets(tm.begin(), tm.end());
  return pencil;
}

GraphPencil fd_discretize(const MetricGraph& graph, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_discretize: h must be positive");
  if (h > graph.l0() / 4.0 + 1e-15)
    throw std::invalid_argument("fd_discretize: h too large (need h <= l0/4)");
  return fd_discretize_divisions(graph, divisions_for_step(graph, h));
}

FdEigenpairs fd_eigenpairs(const GraphPencil& pencil, double lambda_max) {
  Eigen::MatrixXd A = Eigen::MatrixXd(pencil.A);
  Eigen::MatrixXd M = Eigen::MatrixXd(pencil.M);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(A, M);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("fd_eigenpairs: dense generalized eigensolver failed");
  const Eigen::VectorXd& vals = solver.eigenvalues();
  Eigen::Index count = 0;
  while (count < vals.size() && vals(count) <= lambda_max) ++count;
  FdEigenpairs out;
  out.values = vals.head(count);
  out.vectors = solver.eigenvectors().leftCols(count);
  return out;
}

Eigen::VectorXd fd_eigenvalues(const GraphPencil& pencil, double lambda_max) {
  return fd_eigenpairs(pencil, lambda_max).values;
}

Eigen::VectorXd richardson_fd_eigenvalues(const MetricGraph& graph, double h, double lambda_max) {
  std::vector<int> coarse = divisions_for_step(graph, h);
  std::vector<int> fine = coarse;
  for (int& n : fine) n *= 2;
  // Margin above lambda_max so that indices present on one grid are present
  // on the other even when eigenvalues straddle the cut.
  const double pad = 1.0 + 0.05 * lambda_max;
  Eigen::VectorXd lc = fd_eigenvalues(fd_discretize_divisions(graph, coarse), lambda_max + pad);
  Eigen::VectorXd lf = fd_eigenvalues(fd_discretize_divisions(graph, fine), lambda_max + pad);
  const Eigen::Index n = std::min(lc.size(), lf.size());
  std::vector<double> extrapolated;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = (4.0 * lf(i) - lc(i)) / 3.0;
    if (v <= lambda_max) extrapolated.push_back(v);
  }
  return Eigen::Map<Eigen::VectorXd>(extrapolated.data(), static_cast<Eigen::Index>(extrapolated.size()));
}

SpectralResult richardson_fd_spectrum(const MetricGraph& graph, double h, double lambda_max,
                                      double cluster_tol) {
  const Eigen::VectorXd values = richardson_fd_eigenvalues(graph, h, lambda_max);
  SpectralResult out;
  out.method = SpectralMethod::FdOracle;
  Eigen::Index i = 0;
  while (i < values.size()) {
    EigenvalueEntry e;
    e.lambda = values(i);
    e.multiplicity = 1;
    Eigen::Index j = i + 1;
    while (j < values.size() &&
           values(j) - values(i) <= cluster_tol * (1.0 + std::abs(values(i)))) {
      ++e.multiplicity;
      ++j;
    }
    out.entries.push_back(e);
    i = j;
  }
  return out;
}

Eigen::VectorXd to_dof_vector(const GraphPencil& pencil, const GraphFunction& f) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(pencil.dofs.n_dofs);
  for (size_t ei = 0; ei < pencil.dofs.edge_dofs.size(); ++ei) {
    const auto& dofs = pencil.dofs.edge_dofs[ei];
    if (static_cast<size_t>(f.edge_values[ei].size()) != dofs.size())
      throw std::invalid_argument("to_dof_vector: grid mismatch");
    for (size_t j = 0; j < dofs.size(); ++j) x(dofs[j]) = f.edge_values[ei](static_cast<Eigen::Index>(j));
  }
  return x;
}

GraphFunction from_dof_vector(const MetricGraph& graph, const GraphPencil& pencil,
                              const Eigen::VectorXd& x) {
  GraphFunction f = zero_function(graph, pencil.dofs.divisions);
  for (size_t ei = 0; ei < pencil.dofs.edge_dofs.size(); ++ei) {
    const auto& dofs = pencil.dofs.edge_dofs[ei];
    for (size_t j = 0; j < dofs.size(); ++j)
      f.edge_values[ei](static_cast<Eigen::Index>(j)) = x(dofs[j]);
  }
  for (VertexId v : graph.vertices()) f.vertex_values[v] = x(graph.vertex_index(v));
  return f;
}

} // namespace qgt
