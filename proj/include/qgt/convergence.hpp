#pragma once

#include <string>
#include <vector>

#include "qgt/coupling.hpp"
#include "qgt/metric_graph.hpp"

namespace qgt {

struct ConvergenceOptions {
  std::vector<double> eps_list; // decreasing
  int k_max = 4;
  double h_divisor = 8.0;        // h_mesh = eps / h_divisor
  bool refinement_gate = true;   // also solve at h/2 and report stability
  bool compute_defects = true;
  bool compute_projection = true; // projection/eigenfunction defect around lambda_2
  int defect_modes = 6;
};

struct StudyRow {
  double eps = 0.0;
  int k = 0;                  // 1-based eigenvalue index
  double lambda0 = 0.0;       // secular value
  double lambda_eps = 0.0;    // finest mesh value
  double lambda_eps_coarse = 0.0;
  double diff = 0.0;          // lambda_eps - lambda0
  double gate_ratio = 0.0;    // |d(h) - d(h/2)| / |d(h/2)|
};

struct DefectRow {
  double eps = 0.0;
  double quasi = 0.0, quasi_coarse = 0.0;
  double sandwich = 0.0, sandwich_coarse = 0.0;
  double proj = 0.0, eigfun = 0.0;
  int modes_used = 0; // low-energy subspace dimension behind the delta values
};

struct ConvergenceStudy {
  std::vector<StudyRow> rows;
  std::vector<DefectRow> defects;
  std::vector<double> slope_per_k; // index k-1; +inf marks differences at solver noise level
  double slope_quasi = 0.0;
  double slope_sandwich = 0.0;
  double slope_eigfun = 0.0;
  TemplateSummary templates;
  std::vector<std::string> warnings;
};

/// Least-squares slope of log(y) against log(x); requires y > 0.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Runs the eps-sweep: secular reference spectrum, fat-graph eigenvalues at
/// h = eps/h_divisor (and h/2 when gated), defect functionals, and per-k
/// log-log slopes of |lambda_k(eps) - lambda_k(0)|. Differences below the
/// solver noise floor (1e-9) report an infinite slope (already converged).
ConvergenceStudy run_convergence_study(const MetricGraph& graph, const ConvergenceOptions& opts);

} // namespace qgt
