#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "qgt/graph_function.hpp"
#include "qgt/metric_graph.hpp"

namespace qgt {

using Complex = std::complex<double>;

enum class SpectralMethod { Secular, FdOracle, Fem };

struct EigenvalueEntry {
  double lambda = 0.0;
  int multiplicity = 1;
  bool flagged = false; // borderline multiplicity split or untrusted range
};

/// Ordered eigenvalue list with multiplicities. For connected compact
/// graphs the first entry is lambda = 0 with multiplicity 1.
struct SpectralResult {
  std::vector<EigenvalueEntry> entries;
  SpectralMethod method = SpectralMethod::Secular;
  std::vector<std::string> warnings;

  /// Eigenvalues repeated by multiplicity.
  std::vector<double> expanded() const;
  int total_multiplicity() const;
};

/// Secular matrix M(k) for the per-edge ansatz a_e cos(kx) + b_e sin(kx)
/// on a compact graph; unknown order (a_0, b_0, a_1, b_1, ...). Vertex
/// rows encode continuity and the Kirchhoff derivative sum (derivative
/// rows are scaled by 1/k so all entries stay O(1)). lambda = k^2 is an
/// eigenvalue iff M(k) is singular, with multiplicity dim ker M(k).
Eigen::MatrixXcd secular_matrix(const MetricGraph& graph, Complex k);

/// Same matrix together with its entrywise derivative dM/dk.
void secular_matrix_with_derivative(const MetricGraph& graph, Complex k,
                                    Eigen::MatrixXcd& S, Eigen::MatrixXcd& dS);

struct SecularOptions {
  double scan_step_factor = 4.0;   // scan step = pi / (factor * total length)
  double refine_tol = 1e-12;       // |dk| for golden-section refinement
  double multiplicity_rel_tol = 1e-8; // sigma < tol * sigma_max counts as kernel
};

/// All eigenvalues in [0, lambda_max] of the free Laplacian on a compact
/// connected metric graph via a sigma_min scan of the secular matrix.
/// lambda = 0 is handled analytically (constants, multiplicity 1).
SpectralResult eigenvalues(const MetricGraph& graph, double lambda_max,
                           const SecularOptions& opts = {});

/// Trigonometric eigenfunction in coefficient form: f_e = a_e cos(kx) +
/// b_e sin(kx) with coeffs[i] = (a_i, b_i) in graph edge order.
struct SecularMode {
  double k = 0.0;
  std::vector<Eigen::Vector2d> coeffs;
};

/// L2-orthonormal basis of the secular kernel at a refined root k.
std::vector<SecularMode> secular_kernel(const MetricGraph& graph, double k,
                                        double multiplicity_rel_tol = 1e-8);

/// Exact integrals of the trigonometric ansatz (no quadrature error).
double exact_inner(const MetricGraph& graph, const SecularMode& f, const SecularMode& g);
double exact_norm_sq(const MetricGraph& graph, const SecularMode& f);
double exact_energy(const MetricGraph& graph, const SecularMode& f, const SecularMode& g);
double exact_rayleigh(const MetricGraph& graph, const SecularMode& f);

/// Samples the kernel mode `index` at root k onto per-edge grids with the
/// given cell counts; normalized to exact unit L2 norm.
GraphFunction eigenfunction(const MetricGraph& graph, double k, int index,
                            const std::vector<int>& divisions);
GraphFunction eigenfunction(const MetricGraph& graph, double k, int index);

/// Abstract two-sided eigenvalue comparison bracket: given the limit
/// eigenvalue and form-estimate defects (delta1, delta2), returns bounds
/// such that lambda_k(eps) - lambda_k(0) lies in [lower, upper]. Throws
/// when a denominator is non-positive ("bound not applicable").
struct ComparisonBracket {
  double lower = 0.0;
  double upper = 0.0;
};
ComparisonBracket comparison_bounds(double lambda_k0, double delta1, double delta2);

} // namespace qgt
