#include "qgt/dilated.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SparseLU>

namespace qgt {

namespace {

struct Assembler {
  std::vector<Eigen::Triplet<Complex>> ta, tm;

  // One uniform segment of `cells` cells and step h between global dof
  // chains; dof < 0 marks a Dirichlet-eliminated node.
  void segment(const std::vector<Eigen::Index>& dofs, double h, Complex wA, Complex wM) {
    const double m_diag = h / 3.0;
    const double m_off = h / 6.0;
    for (size_t j = 0; j + 1 < dofs.size(); ++j) {
      const Eigen::Index a = dofs[j], b = dofs[j + 1];
      const double k = 1.0 / h;
      auto add = [&](Eigen::Index r, Eigen::Index c, Complex va, Complex vm) {
        if (r < 0 || c < 0) return;
        ta.emplace_back(r, c, va);
        tm.emplace_back(r, c, vm);
      };
      add(a, a, wA * k, wM * m_diag);
      add(b, b, wA * k, wM * m_diag);
      add(a, b, -wA * k, wM * m_off);
      add(b, a, -wA * k, wM * m_off);
    }
  }
};

} // namespace

DilatedPencil dilated_fd_matrix(const MetricGraph& graph, Complex theta, double trunc_length,
                                double h) {
  if (graph.is_compact())
    throw std::invalid_argument("dilated_fd_matrix: graph has no leads");
  if (!(theta.imag() > 0.0))
    throw std::invalid_argument("dilated_fd_matrix: Im theta must be positive");
  if (trunc_length < 10.0)
    throw std::invalid_argument("dilated_fd_matrix: truncation length must be >= 10");
  if (!(h > 0.0) || h > graph.l0() / 8.0 + 1e-15)
    throw std::invalid_argument("dilated_fd_matrix: h too large (need h <= l0/8)");

  const GraphPartition part = split_external(graph);
  const auto& edges = graph.edges();

  // DOFs: vertices, then interior nodes edge piece by edge piece. Each lead
  // contributes its interior unit segment (cut node included) and the
  // truncated exterior (1, L) with the cap node eliminated.
  Eigen::Index next = static_cast<Eigen::Index>(graph.vertices().size());
  Assembler asmb;
  const Complex one(1.0, 0.0);
  const Complex wa_ext = std::exp(-theta);
  const Complex wm_ext = std::exp(theta);

  for (size_t ei = 0; ei < edges.size(); ++ei) {
    const Edge& e = edges[ei];
    if (e.external) continue;
    const int n = std::max(1, static_cast<int>(std::ceil(e.length / h - 1e-12)));
    std::vector<Eigen::Index> dofs(n + 1);
    dofs[0] = graph.vertex_index(e.from);
    for (int j = 1; j < n; ++j) dofs[j] = next++;
    dofs[n] = graph.vertex_index(e.to);
    asmb.segment(dofs, e.length / n, one, one);
  }
  for (EdgeId id : part.external_edges) {
    const Edge& e = graph.edge(id);
    const int n_int = std::max(1, static_cast<int>(std::ceil(part.cut_distance / h - 1e-12)));
    std::vector<Eigen::Index> dofs(n_int + 1);
    dofs[0] = graph.vertex_index(e.from);
    for (int j = 1; j <= n_int; ++j) dofs[j] = next++;
    asmb.segment(dofs, part.cut_distance / n_int, one, one);

    const double ext_len = trunc_length - part.cut_distance;
    const int n_ext = std::max(1, static_cast<int>(std::ceil(ext_len / h - 1e-12)));
    std::vector<Eigen::Index> ext_dofs(n_ext + 1);
    ext_dofs[0] = dofs[n_int]; // cut node is shared; continuity of the substituted variable
    for (int j = 1; j < n_ext; ++j) ext_dofs[j] = next++;
    ext_dofs[n_ext] = -1; // Dirichlet cap
    asmb.segment(ext_dofs, ext_len / n_ext, wa_ext, wm_ext);
  }

  DilatedPencil pencil;
  pencil.theta = theta;
  pencil.trunc_length = trunc_length;
  pencil.n_dofs = next;
  pencil.A.resize(next, next);
  pencil.M.resize(next, next);
  pencil.A.setFromTriplets(asmb.ta.begin(), asmb.ta.end());
  pencil.M.setFromTriplets(asmb.tm.begin(), asmb.tm.end());
  return pencil;
}

DilatedEig eigenvalue_near(const DilatedPencil& pencil, Complex shift, int max_iter, double tol) {
  SparseMatC K = pencil.A - shift * pencil.M;
  Eigen::SparseLU<SparseMatC> lu;
  lu.compute(K);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("eigenvalue_near: factorization failed (shift hits an eigenvalue?)");

  Eigen::VectorXcd x = Eigen::VectorXcd::Ones(pencil.n_dofs);
  x.normalize();
  Complex lambda = shift;
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXcd y = lu.solve(pencil.M * x);
    y.normalize();
    // Complex-symmetric Rayleigh quotient (transpose pairing).
    const Complex num = y.transpose() * (pencil.A * y);
    const Complex den = y.transpose() * (pencil.M * y);
    if (std::abs(den) < 1e-14)
      throw std::runtime_error("eigenvalue_near: quasi-null vector in Rayleigh quotient");
    const Complex lam = num / den;
    x = y;
    if (std::abs(lam - lambda) <= tol * (1.0 + std::abs(lam))) {
      lambda = lam;
      break;
    }
    lambda = lam;
  }
  DilatedEig out;
  out.lambda = lambda;
  out.residual = (pencil.A * x - lambda * (pencil.M * x)).norm() / x.norm();
  return out;
}

Eigen::VectorXcd dense_spectrum(const DilatedPencil& pencil) {
  Eigen::MatrixXcd A = Eigen::MatrixXcd(pencil.A);
  Eigen::MatrixXcd M = Eigen::MatrixXcd(pencil.M);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(lu.solve(A), false);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("dense_spectrum: eigensolver failed");
  return solver.eigenvalues();
}

DilatedEig dilated_eigenvalue(const MetricGraph& graph, Complex theta, double trunc_length,
                              double h, Complex shift, bool richardson) {
  DilatedEig coarse = eigenvalue_near(dilated_fd_matrix(graph, theta, trunc_length, h), shift);
  if (!richardson) return coarse;
  DilatedEig fine =
      eigenvalue_near(dilated_fd_matrix(graph, theta, trunc_length, h / 2.0), coarse.lambda);
  DilatedEig out;
  // The eigenvalue error is O(h^2) with a smooth expansion (grids nest with
  // junction nodes aligned); one extrapolation step removes it.
  out.lambda = (4.0 * fine.lambda - coarse.lambda) / 3.0;
  out.residual = fine.residual;
  return out;
}

Complex dilated_eigenvalue_extrapolated(const MetricGraph& graph, Complex theta,
                                        double trunc_length, double h, Complex shift,
                                        int levels) {
  // Repeated Richardson over nested grids h, h/2, h/4, ... removing
  // h^2, h^4, ... in turn.
  std::vector<Complex> lam(levels);
  Complex guess = shift;
  for (int i = 0; i < levels; ++i) {
    const DilatedEig e =
        eigenvalue_near(dilated_fd_matrix(graph, theta, trunc_length, h / std::pow(2.0, i)), guess);
    lam[i] = e.lambda;
    guess = e.lambda;
  }
  for (int order = 1; order < levels; ++order) {
    const double w = std::pow(4.0, order);
    for (int i = levels - 1; i >= order; --i) lam[i] = (w * lam[i] - lam[i - 1]) / (w - 1.0);
  }
  return lam[levels - 1];
}

ThetaIndependenceResult theta_independence(const MetricGraph& graph, Complex lambda_target,
                                           const std::vector<Complex>& thetas,
                                           const ThetaIndependenceOptions& opts) {
  ThetaIndependenceResult result;
  for (Complex theta : thetas) {
    const EssentialRay ray = essential_ray(theta, std::abs(lambda_target) + 1.0);
    if (ray.masks(lambda_target, opts.ray_mask_width)) {
      result.warnings.push_back("theta with Im = " + std::to_string(theta.imag()) +
                                " skipped: essential ray masks the target eigenvalue");
      continue;
    }
    const Complex lam =
        opts.richardson
            ? dilated_eigenvalue_extrapolated(graph, theta, opts.trunc_length, opts.h,
                                              lambda_target, opts.extrapolation_levels)
            : dilated_eigenvalue(graph, theta, opts.trunc_length, opts.h, lambda_target, false)
                  .lambda;
    result.values.push_back(lam);
    result.thetas_used.push_back(theta);
  }
  for (size_t i = 0; i < result.values.size(); ++i)
    for (size_t j = i + 1; j < result.values.size(); ++j)
      result.max_deviation =
          std::max(result.max_deviation, std::abs(result.values[i] - result.values[j]));
  return result;
}

} // namespace qgt
