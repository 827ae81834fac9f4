#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <string>
#include <vector>

#include "qgt/metric_graph.hpp"
#include "qgt/resonance.hpp"

namespace qgt {

using SparseMatC = Eigen::SparseMatrix<Complex>;

/// Discrete exterior-scaled Laplacian of a finite non-compact graph as a
/// complex-symmetric pencil (A, M). The exterior substitution
/// v_ext = e^{-theta/2} u_ext turns the jump conditions at the cut points
/// into plain continuity, leaving weighted forms: weight e^{-theta} on
/// exterior stiffness cells and e^{theta} on exterior mass cells. Leads are
/// truncated at arclength L with a Dirichlet cap. Eigenvalues near
/// resonances converge as L grows and h shrinks; the rest of the spectrum
/// collapses onto e^{-2 theta}[0, inf).
struct DilatedPencil {
  SparseMatC A;
  SparseMatC M;
  Complex theta{0.0, 0.0};
  double trunc_length = 0.0;
  Eigen::Index n_dofs = 0;
};

/// Assembles the pencil. Requires Im theta > 0, L >= 10, h <= l0/8.
/// The mass uses the averaged consistent/lumped cell rule, which makes the
/// eigenvalue dispersion error O(h^4).
DilatedPencil dilated_fd_matrix(const MetricGraph& graph, Complex theta, double trunc_length,
                                double h);

struct DilatedEig {
  Complex lambda{0.0, 0.0};
  double residual = 0.0;
};

/// Eigenvalue of the pencil closest to `shift`, by shifted inverse
/// iteration with the complex-symmetric Rayleigh quotient.
DilatedEig eigenvalue_near(const DilatedPencil& pencil, Complex shift, int max_iter = 200,
                           double tol = 1e-12);

/// Full spectrum by a dense solve; intended for small diagnostic meshes.
Eigen::VectorXcd dense_spectrum(const DilatedPencil& pencil);

/// Convenience: assemble at (h) and (h/2) with exactly doubled grids and
/// Richardson-extrapolate the tracked eigenvalue (the h^2 error term has a
/// smooth expansion on nested grids).
DilatedEig dilated_eigenvalue(const MetricGraph& graph, Complex theta, double trunc_length,
                              double h, Complex shift, bool richardson = true);

/// Repeated Richardson over `levels` nested grids h, h/2, ..., removing
/// h^2, h^4, ... successively; used where theta-drift tolerances are
/// tighter than a single extrapolation step delivers.
Complex dilated_eigenvalue_extrapolated(const MetricGraph& graph, Complex theta,
                                        double trunc_length, double h, Complex shift,
                                        int levels = 3);

struct ThetaIndependenceResult {
  double max_deviation = 0.0;
  std::vector<Complex> values;       // tracked eigenvalue per usable theta
  std::vector<Complex> thetas_used;
  std::vector<std::string> warnings; // masked thetas are skipped
};

struct ThetaIndependenceOptions {
  double trunc_length = 20.0;
  double h = 1.0 / 64.0;
  bool richardson = true;
  int extrapolation_levels = 4;
  double ray_mask_width = 0.05;
};

/// Recomputes a resonance for each theta and reports the maximum pairwise
/// deviation of the tracked eigenvalue. Thetas whose essential ray masks
/// the target are skipped with a warning.
ThetaIndependenceResult theta_independence(const MetricGraph& graph, Complex lambda_target,
                                           const std::vector<Complex>& thetas,
                                           const ThetaIndependenceOptions& opts = {});

inline ThetaIndependenceResult theta_independence(const MetricGraph& graph,
                                                  const Resonance& resonance,
                                                  const std::vector<Complex>& thetas,
                                                  const ThetaIndependenceOptions& opts = {}) {
  return theta_independence(graph, resonance.lambda, thetas, opts);
}

} // namespace qgt
